//! Flat `key = value` config files, merged underneath the command line.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};

use crate::UsageError;

/// Parses `key = value` lines; `#` starts a comment. Keys may use `_` or `-`.
pub fn parse(text: &str) -> Result<Vec<(String, String)>> {
    let mut out: Vec<(String, String)> = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            bail!(UsageError(format!("config line {}: expected key = value, got '{raw}'", n + 1)));
        };
        let key = k.trim().replace('_', "-");
        if key.is_empty() || key.contains(char::is_whitespace) {
            bail!(UsageError(format!("config line {}: bad key '{}'", n + 1, k.trim())));
        }
        if out.iter().any(|(seen, _)| *seen == key) {
            bail!(UsageError(format!("config line {}: duplicate key '{key}'", n + 1)));
        }
        out.push((key, v.trim().to_string()));
    }
    Ok(out)
}

fn given(args: &[String], key: &str) -> bool {
    let flag = format!("--{key}");
    let prefix = format!("--{key}=");
    args.iter().any(|a| *a == flag || a.starts_with(&prefix))
}

fn config_path(args: &[String]) -> Option<String> {
    args.iter().enumerate().find_map(|(i, a)| {
        if a == "--config" {
            args.get(i + 1).cloned()
        } else {
            a.strip_prefix("--config=").map(str::to_string)
        }
    })
}

/// Appends every config entry not already given as a flag. Booleans in the
/// file are written `key = true` / `key = false`.
pub fn merge(args: Vec<String>) -> Result<Vec<String>> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let text = fs::read_to_string(Path::new(&path))
        .with_context(|| format!("reading config {path}"))
        .map_err(|e| UsageError(format!("{e:#}")))?;
    let mut merged = args.clone();
    for (key, value) in parse(&text)? {
        if key == "config" || given(&args, &key) {
            continue;
        }
        match value.as_str() {
            "true" => merged.push(format!("--{key}")),
            "false" => {}
            _ => merged.push(format!("--{key}={value}")),
        }
    }
    Ok(merged)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn argv(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    #[test]
    fn parses_comments_and_underscores() {
        let kv = parse("# run\naplus = 1\n\neps_list = 0.1,0.05  # three\nstrict=true\n").unwrap();
        assert_eq!(
            kv,
            vec![
                ("aplus".into(), "1".into()),
                ("eps-list".into(), "0.1,0.05".into()),
                ("strict".into(), "true".into())
            ]
        );
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(parse("aplus 1").is_err());
        assert!(parse("a = 1\na = 2").is_err());
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        fs::write(&path, "aplus = 3\naminus = -1\nstrict = true\nquiet = false\n").unwrap();
        let args = argv(&format!("smectic jumpcost --config {} --aplus 2", path.display()));
        let merged = merge(args).unwrap();
        assert!(merged.contains(&"--aplus".to_string()) && merged.contains(&"2".to_string()));
        assert!(!merged.iter().any(|a| a == "--aplus=3"));
        assert!(merged.contains(&"--aminus=-1".to_string()));
        assert!(merged.contains(&"--strict".to_string()));
        assert!(!merged.iter().any(|a| a.contains("quiet")));
    }
}
