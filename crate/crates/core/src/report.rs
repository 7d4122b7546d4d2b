//! CSV artifacts. Every file starts with one provenance comment line
//! (`# twinsync <version> config_hash=<hex> seed=<u64>`, plus
//! `checkpoint=<hex>` for evaluations) followed by a fixed header; floats
//! carry 9 significant digits.

use std::fmt::Write as _;

use crate::config::TOOL_VERSION;
use crate::sim::{CurveRow, EvalSummary, FrontierPoint, TradeoffPoint};

pub const LEARNING_CURVE_HEADER: &str = "episode,avg_load,avg_mse,lambda,epsilon";
pub const TRADEOFF_HEADER: &str = "rate,horizon,p_loss,avg_mse,avg_load";
pub const FRONTIER_HEADER: &str = "e_budget,p_loss,min_load,argmin_action";
pub const EVAL_HEADER: &str = "episode,avg_load,avg_mse";

/// `x` with 9 significant digits in scientific notation.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.8e}")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
    /// Digest of the evaluated checkpoint, if any.
    pub checkpoint: Option<String>,
}

impl Provenance {
    pub fn new(config_hash: impl Into<String>, seed: u64) -> Self {
        Self {
            config_hash: config_hash.into(),
            seed,
            checkpoint: None,
        }
    }

    pub fn with_checkpoint(mut self, digest: impl Into<String>) -> Self {
        self.checkpoint = Some(digest.into());
        self
    }

    fn start(&self, header: &str) -> String {
        let mut line = format!(
            "# twinsync {TOOL_VERSION} config_hash={} seed={}",
            self.config_hash, self.seed
        );
        if let Some(c) = &self.checkpoint {
            let _ = write!(line, " checkpoint={c}");
        }
        format!("{line}\n{header}\n")
    }
}

pub fn learning_curve_csv(prov: &Provenance, rows: &[CurveRow]) -> String {
    let mut out = prov.start(LEARNING_CURVE_HEADER);
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.episode,
            fmt_float(r.avg_load),
            fmt_float(r.avg_mse),
            fmt_float(r.lambda),
            fmt_float(r.epsilon)
        );
    }
    out
}

pub fn tradeoff_csv(prov: &Provenance, points: &[TradeoffPoint]) -> String {
    let mut out = prov.start(TRADEOFF_HEADER);
    for p in points {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            p.action.rate.hz(),
            p.action.horizon.ms(),
            fmt_float(p.p_loss),
            fmt_float(p.avg_mse),
            fmt_float(p.avg_load)
        );
    }
    out
}

/// Infeasible budgets are written with empty `min_load` and `argmin_action`.
pub fn frontier_csv(prov: &Provenance, frontier: &[FrontierPoint]) -> String {
    let mut out = prov.start(FRONTIER_HEADER);
    for f in frontier {
        let load = f.min_load.map(fmt_float).unwrap_or_default();
        let action = f
            .argmin
            .map(|a| format!("{}Hz/{}ms", a.rate.hz(), a.horizon.ms()))
            .unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{load},{action}",
            fmt_float(f.e_budget),
            fmt_float(f.p_loss)
        );
    }
    out
}

pub fn eval_csv(prov: &Provenance, summary: &EvalSummary) -> String {
    let mut out = prov.start(EVAL_HEADER);
    for (i, (load, mse)) in summary.episodes.iter().enumerate() {
        let _ = writeln!(out, "{i},{},{}", fmt_float(*load), fmt_float(*mse));
    }
    out
}
