//! TOML config loading with dotted-path overrides.

use std::fs;
use std::path::Path;

use toml::{Table, Value};
use twinsync::RunConfig;

use crate::CliError;

/// Reads `path` (or starts from an empty table), applies `key=value`
/// overrides, and deserializes. Unknown keys are rejected by name.
pub fn load_config(path: Option<&Path>, overrides: &[String]) -> Result<RunConfig, CliError> {
    let mut table = match path {
        Some(p) => {
            let text =
                fs::read_to_string(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
            text.parse::<Table>()
                .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
        }
        None => Table::new(),
    };
    for ov in overrides {
        apply_override(&mut table, ov)?;
    }
    Value::Table(table)
        .try_into::<RunConfig>()
        .map_err(|e| CliError::Config(e.to_string().trim().to_string()))
}

/// Sets the leaf named by a dotted path, creating intermediate tables.
/// The value is read as a TOML literal, falling back to a bare string.
pub fn apply_override(table: &mut Table, assignment: &str) -> Result<(), CliError> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override `{assignment}` is not KEY=VALUE")))?;
    let path: Vec<&str> = key.trim().split('.').collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(CliError::Config(format!("bad override key `{key}`")));
    }
    let value = parse_literal(raw.trim());

    let (leaf, parents) = path.split_last().expect("non-empty path");
    let mut node = table;
    for part in parents {
        let entry = node
            .entry(part.to_string())
            .or_insert_with(|| Value::Table(Table::new()));
        node = entry
            .as_table_mut()
            .ok_or_else(|| CliError::Config(format!("`{part}` in `{key}` is not a table")))?;
    }
    node.insert(leaf.to_string(), value);
    Ok(())
}

fn parse_literal(raw: &str) -> Value {
    format!("v = {raw}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_set_nested_leaves() {
        let mut t = Table::new();
        apply_override(&mut t, "channel.p_loss=0.1").unwrap();
        apply_override(&mut t, "predictor.method=ar").unwrap();
        apply_override(&mut t, "sweep.p_loss=[0.0]").unwrap();
        apply_override(&mut t, "seed=9").unwrap();
        let cfg: RunConfig = Value::Table(t).try_into().unwrap();
        assert_eq!(cfg.channel.p_loss, 0.1);
        assert_eq!(cfg.predictor.method, "ar");
        assert_eq!(cfg.sweep.p_loss, vec![0.0]);
        assert_eq!(cfg.seed, 9);
    }

    #[test]
    fn unknown_keys_are_named() {
        let err = load_config(None, &["channel.bogus_knob=3".into()]).unwrap_err();
        assert!(matches!(err, CliError::Config(_)));
        assert!(err.to_string().contains("bogus_knob"), "{err}");
    }

    #[test]
    fn malformed_override() {
        assert!(load_config(None, &["no_equals_sign".into()]).is_err());
        assert!(load_config(None, &["seed.x=1".into()]).is_err());
    }
}
