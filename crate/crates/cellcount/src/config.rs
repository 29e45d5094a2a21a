//! `key = value` configuration files. Each key names a long flag of the
//! chosen subcommand; flags given on the command line win.

use std::ffi::OsString;
use std::fs;
use std::path::Path;

use crate::error::{CliError, CliResult};

/// Parses lines of `key = value`; blank lines and `#` comments are skipped.
pub fn parse(text: &str) -> CliResult<Vec<(String, String)>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| {
            let l = l.trim();
            !l.is_empty() && !l.starts_with('#')
        })
        .map(|(i, l)| {
            let (k, v) = l
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("config line {}: expected key = value", i + 1)))?;
            let k = k.trim().trim_start_matches("--");
            if k.is_empty() {
                return Err(CliError::Usage(format!("config line {}: empty key", i + 1)));
            }
            Ok((k.to_string(), v.trim().to_string()))
        })
        .collect()
}

/// Removes `--config PATH` (or `--config=PATH`) from `args` and splices the
/// file's settings in right after the subcommand, ahead of the user's own
/// flags so those take precedence.
pub fn expand(args: Vec<OsString>) -> CliResult<Vec<OsString>> {
    let mut rest = Vec::with_capacity(args.len());
    let mut path = None;
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            path = Some(it.next().ok_or_else(|| CliError::Usage("--config needs a path".into()))?);
        } else if let Some(p) = s.strip_prefix("--config=") {
            path = Some(OsString::from(p));
        } else {
            rest.push(a);
        }
    }
    let Some(path) = path else { return Ok(rest) };
    let path = Path::new(&path);
    let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let settings = parse(&text)?;
    // program name, then the first non-flag argument is the subcommand
    let sub = rest
        .iter()
        .skip(1)
        .position(|a| !a.to_string_lossy().starts_with('-'))
        .map(|i| i + 2)
        .unwrap_or(rest.len());
    let injected = settings
        .into_iter()
        .flat_map(|(k, v)| [OsString::from(format!("--{k}")), OsString::from(v)]);
    rest.splice(sub..sub, injected);
    Ok(rest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_pairs_and_comments() {
        let p = parse("# comment\n\nthreshold = 0.6\n--cell-radius=20\n").unwrap();
        assert_eq!(p, [("threshold".into(), "0.6".into()), ("cell-radius".into(), "20".into())]);
        assert!(parse("oops\n").is_err());
    }

    #[test]
    fn injects_after_subcommand() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.conf");
        fs::write(&cfg, "threshold = 0.6\n").unwrap();
        let args: Vec<OsString> = ["cellcount", "count", "--config", cfg.to_str().unwrap(), "--heatmap", "h.png"]
            .iter()
            .map(OsString::from)
            .collect();
        let out: Vec<String> = expand(args).unwrap().iter().map(|a| a.to_string_lossy().into()).collect();
        assert_eq!(out, ["cellcount", "count", "--threshold", "0.6", "--heatmap", "h.png"]);
    }
}
