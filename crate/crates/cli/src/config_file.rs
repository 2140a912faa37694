//! Config file handling: TOML loading, `--set key=value` overrides and
//! unknown-key detection with nearest-name suggestions.
//!
//! Precedence: command-line flags > file values > built-in defaults. The
//! valid key set is derived from the serialized default config, so it can
//! never drift from the schema.

use anyhow::{anyhow, bail, Context, Result};
use nocgate::SimConfig;
use std::path::Path;

/// Load the config: optional file, then `--set` overrides, then flag
/// overrides applied by the caller.
pub fn load(path: Option<&Path>, sets: &[String]) -> Result<SimConfig> {
    let mut value: toml::Value = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("cannot read config {}", p.display()))?;
            text.parse::<toml::Value>()
                .with_context(|| format!("cannot parse {}", p.display()))?
        }
        None => toml::Value::Table(toml::map::Map::new()),
    };

    for set in sets {
        apply_set(&mut value, set)?;
    }

    check_unknown_keys(&value)?;

    let cfg: SimConfig = value
        .try_into()
        .map_err(|e| anyhow!("invalid config: {e}"))?;
    Ok(cfg)
}

/// Apply one `section.key=value` override. The value is parsed as TOML, so
/// numbers, booleans, strings and arrays all work.
fn apply_set(root: &mut toml::Value, set: &str) -> Result<()> {
    let (path, raw) = set
        .split_once('=')
        .ok_or_else(|| anyhow!("--set expects key=value, got '{set}'"))?;
    let parsed: toml::Value = format!("v = {raw}")
        .parse::<toml::Value>()
        .or_else(|_| format!("v = \"{raw}\"").parse::<toml::Value>())
        .map_err(|e| anyhow!("cannot parse value '{raw}': {e}"))?;
    let parsed = parsed
        .get("v")
        .cloned()
        .ok_or_else(|| anyhow!("cannot parse value '{raw}'"))?;

    let segments: Vec<&str> = path.split('.').collect();
    if segments.is_empty() || segments.iter().any(|s| s.is_empty()) {
        bail!("bad key path '{path}'");
    }
    let mut cursor = root;
    for segment in &segments[..segments.len() - 1] {
        let table = cursor
            .as_table_mut()
            .ok_or_else(|| anyhow!("'{path}' does not address a table"))?;
        cursor = table
            .entry(segment.to_string())
            .or_insert_with(|| toml::Value::Table(toml::map::Map::new()));
    }
    let table = cursor
        .as_table_mut()
        .ok_or_else(|| anyhow!("'{path}' does not address a table"))?;
    table.insert(segments[segments.len() - 1].to_string(), parsed);
    Ok(())
}

/// Paths of every valid key, derived from the default config.
fn schema_paths() -> Vec<String> {
    let default = toml::Value::try_from(SimConfig::default()).expect("default serializes");
    let mut paths = Vec::new();
    collect_paths(&default, String::new(), &mut paths);
    paths
}

fn collect_paths(value: &toml::Value, prefix: String, out: &mut Vec<String>) {
    if let toml::Value::Table(table) = value {
        for (key, sub) in table {
            let path = if prefix.is_empty() {
                key.clone()
            } else {
                format!("{prefix}.{key}")
            };
            out.push(path.clone());
            collect_paths(sub, path, out);
        }
    }
}

fn check_unknown_keys(value: &toml::Value) -> Result<()> {
    let schema = schema_paths();
    let mut given = Vec::new();
    collect_paths(value, String::new(), &mut given);
    for key in given {
        // Option-typed fields (trace_path) are absent from the serialized
        // default; accept the known optional keys explicitly.
        if key == "traffic.trace_path" {
            continue;
        }
        if !schema.contains(&key) {
            let nearest = schema
                .iter()
                .min_by_key(|cand| edit_distance(&key, cand))
                .cloned()
                .unwrap_or_default();
            bail!("unknown config key '{key}'; nearest valid name is '{nearest}'");
        }
    }
    Ok(())
}

fn edit_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for i in 1..=a.len() {
        cur[0] = i;
        for j in 1..=b.len() {
            let cost = usize::from(a[i - 1] != b[j - 1]);
            cur[j] = (prev[j] + 1).min(cur[j - 1] + 1).min(prev[j - 1] + cost);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_gives_defaults() {
        let cfg = load(None, &[]).unwrap();
        assert_eq!(cfg, SimConfig::default());
    }

    #[test]
    fn set_overrides_apply() {
        let cfg = load(
            None,
            &[
                "mesh.rows=4".into(),
                "mesh.cols=4".into(),
                "traffic.pirs=[0.001, 0.01]".into(),
                "marl.epsilon=0.1".into(),
                "run.policies=[\"no_pg\", \"cafeen_full\"]".into(),
            ],
        )
        .unwrap();
        assert_eq!(cfg.mesh.rows, 4);
        assert_eq!(cfg.traffic.pirs, vec![0.001, 0.01]);
        assert_eq!(cfg.marl.epsilon, 0.1);
        assert_eq!(cfg.run.policies.len(), 2);
    }

    #[test]
    fn unknown_key_suggests_nearest() {
        let err = load(None, &["marl.epsilom=0.2".into()]).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("unknown config key 'marl.epsilom'"), "{msg}");
        assert!(msg.contains("marl.epsilon"), "{msg}");
    }

    #[test]
    fn trace_path_is_accepted() {
        let cfg = load(None, &["traffic.trace_path=\"/tmp/t.csv\"".into()]).unwrap();
        assert_eq!(cfg.traffic.trace_path.as_deref(), Some("/tmp/t.csv"));
    }

    #[test]
    fn file_and_sets_compose() {
        let dir = std::env::temp_dir();
        let path = dir.join(format!("nocgate_cli_cfg_{}.toml", std::process::id()));
        std::fs::write(&path, "[mesh]\nrows = 4\ncols = 8\n").unwrap();
        let cfg = load(Some(&path), &["mesh.cols=4".into()]).unwrap();
        std::fs::remove_file(&path).unwrap();
        assert_eq!(cfg.mesh.rows, 4);
        assert_eq!(cfg.mesh.cols, 4);
    }
}
