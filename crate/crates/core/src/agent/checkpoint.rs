//! Line-oriented text dump of a frozen policy.
//!
//! ```text
//! twinsync-policy 1
//! tool_version <semver>
//! config_hash <hex>
//! policy_hash <hex>
//! seed <u64>
//! states <B>
//! actions <A>
//! edges <B-1 floats>
//! lambda <float>
//! q <state> <A floats>          (B lines)
//! visits <state> <A integers>   (B lines)
//! end
//! ```
//!
//! Floats use Rust's shortest round-trip formatting, so a dump parses back to
//! bit-identical values.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use super::{QTable, StateEncoder, ACTION_COUNT};
use crate::config::short_digest;
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &str = "twinsync-policy";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyCheckpoint {
    pub tool_version: String,
    /// Content hash of the training config.
    pub config_hash: String,
    /// Policy hash of the training config; evaluation requires a match.
    pub policy_hash: String,
    pub seed: u64,
    pub encoder: StateEncoder,
    pub q: QTable,
    pub lambda: f64,
}

fn join<T: ToString>(values: &[T]) -> String {
    values
        .iter()
        .map(T::to_string)
        .collect::<Vec<_>>()
        .join(" ")
}

impl PolicyCheckpoint {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let states = self.q.states();
        // writes into a String never fail
        let _ = writeln!(out, "{CHECKPOINT_MAGIC} {CHECKPOINT_VERSION}");
        let _ = writeln!(out, "tool_version {}", self.tool_version);
        let _ = writeln!(out, "config_hash {}", self.config_hash);
        let _ = writeln!(out, "policy_hash {}", self.policy_hash);
        let _ = writeln!(out, "seed {}", self.seed);
        let _ = writeln!(out, "states {states}");
        let _ = writeln!(out, "actions {ACTION_COUNT}");
        let _ = writeln!(out, "edges {}", join(self.encoder.edges()));
        let _ = writeln!(out, "lambda {}", self.lambda);
        for (s, row) in self.q.values().chunks(ACTION_COUNT).enumerate() {
            let _ = writeln!(out, "q {s} {}", join(row));
        }
        for (s, row) in self.q.visit_counts().chunks(ACTION_COUNT).enumerate() {
            let _ = writeln!(out, "visits {s} {}", join(row));
        }
        out.push_str("end\n");
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = Lines {
            inner: text.lines().enumerate(),
        };

        let header = lines.expect(CHECKPOINT_MAGIC)?;
        let version: u32 = parse_one(&header)?;
        if version != CHECKPOINT_VERSION {
            return Err(bad(format!("unsupported checkpoint version {version}")));
        }
        let tool_version = lines.expect("tool_version")?.trim().to_string();
        let config_hash = lines.expect("config_hash")?.trim().to_string();
        let policy_hash = lines.expect("policy_hash")?.trim().to_string();
        let seed: u64 = parse_one(&lines.expect("seed")?)?;
        let states: usize = parse_one(&lines.expect("states")?)?;
        let actions: usize = parse_one(&lines.expect("actions")?)?;
        if actions != ACTION_COUNT {
            return Err(bad(format!(
                "checkpoint has {actions} actions, expected {ACTION_COUNT}"
            )));
        }
        let edges: Vec<f64> = parse_all(&lines.expect("edges")?)?;
        if edges.len() + 1 != states {
            return Err(bad(format!(
                "{} bin edges for {states} states",
                edges.len()
            )));
        }
        let encoder = StateEncoder::from_edges(edges)?;
        let lambda: f64 = parse_one(&lines.expect("lambda")?)?;

        let mut values = Vec::with_capacity(states * ACTION_COUNT);
        for s in 0..states {
            values.extend(lines.row::<f64>("q", s)?);
        }
        let mut visits = Vec::with_capacity(states * ACTION_COUNT);
        for s in 0..states {
            visits.extend(lines.row::<u64>("visits", s)?);
        }
        lines.expect("end")?;

        Ok(Self {
            tool_version,
            config_hash,
            policy_hash,
            seed,
            encoder,
            q: QTable::from_parts(states, values, visits)?,
            lambda,
        })
    }

    /// Short digest of the serialized checkpoint.
    pub fn digest(&self) -> String {
        short_digest(self.to_text().as_bytes())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }
}

fn bad(msg: String) -> Error {
    Error::Checkpoint(msg)
}

fn parse_one<T: FromStr>(field: &str) -> Result<T> {
    field
        .trim()
        .parse()
        .map_err(|_| bad(format!("cannot parse `{}`", field.trim())))
}

fn parse_all<T: FromStr>(fields: &str) -> Result<Vec<T>> {
    fields.split_whitespace().map(parse_one).collect()
}

struct Lines<'a, I: Iterator<Item = (usize, &'a str)>> {
    inner: I,
}

impl<'a, I: Iterator<Item = (usize, &'a str)>> Lines<'a, I> {
    /// Next line, which must start with `key`; returns the remainder.
    fn expect(&mut self, key: &str) -> Result<String> {
        let (n, line) = self
            .inner
            .next()
            .ok_or_else(|| bad(format!("truncated checkpoint, expected `{key}`")))?;
        let rest = line
            .strip_prefix(key)
            .filter(|r| r.is_empty() || r.starts_with(' '))
            .ok_or_else(|| bad(format!("line {}: expected `{key}`", n + 1)))?;
        Ok(rest.to_string())
    }

    fn row<T: FromStr>(&mut self, key: &str, state: usize) -> Result<Vec<T>> {
        let rest = self.expect(key)?;
        let mut fields = rest.split_whitespace();
        let idx: usize = parse_one(fields.next().unwrap_or(""))?;
        if idx != state {
            return Err(bad(format!(
                "{key} row {idx} out of order, expected {state}"
            )));
        }
        let row: Vec<T> = fields.map(parse_one).collect::<Result<_>>()?;
        if row.len() != ACTION_COUNT {
            return Err(bad(format!("{key} row {state} has {} entries", row.len())));
        }
        Ok(row)
    }
}
