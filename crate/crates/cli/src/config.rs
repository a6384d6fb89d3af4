//! `key = value` config files and resolved-config output.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context};
use clap::parser::ValueSource;
use clap::ArgMatches;

/// Reads a config file. Keys are long flag names (`c`, `pairwise-mode`,
/// ...); `#` starts a comment.
pub fn read_config(path: &Path) -> anyhow::Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> anyhow::Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            bail!("config line {}: expected key = value", i + 1);
        };
        let key = k.trim().replace('_', "-");
        if key.is_empty() {
            bail!("config line {}: empty key", i + 1);
        }
        out.push((key, v.trim().to_string()));
    }
    Ok(out)
}

fn flag_given(args: &[OsString], key: &str) -> bool {
    let long = format!("--{key}");
    let with_eq = format!("--{key}=");
    args.iter().any(|a| {
        a.to_str()
            .is_some_and(|a| a == long || a.starts_with(&with_eq))
    })
}

/// Expands `--config FILE` by inserting the file's settings right after the
/// subcommand name, skipping keys already given as flags.
pub fn inject_config(args: Vec<OsString>) -> anyhow::Result<Vec<OsString>> {
    let pos = args.iter().position(|a| a == "--config");
    let path = match pos {
        Some(i) => match args.get(i + 1) {
            Some(p) => p.clone(),
            None => return Ok(args),
        },
        None => match args
            .iter()
            .find_map(|a| a.to_str().and_then(|s| s.strip_prefix("--config=")))
        {
            Some(p) => OsString::from(p),
            None => return Ok(args),
        },
    };
    let entries = read_config(Path::new(&path))?;
    // the subcommand is the first argument after the program name that is
    // not a global option
    let mut sub = None;
    let mut i = 1;
    while i < args.len() {
        let a = args[i].to_string_lossy();
        if a == "--jobs" || a == "-j" || a == "--config" {
            i += 2;
            continue;
        }
        if a.starts_with('-') {
            i += 1;
            continue;
        }
        sub = Some(i);
        break;
    }
    let Some(sub) = sub else { return Ok(args) };
    let mut extra = Vec::new();
    for (k, v) in entries {
        if k == "config" || flag_given(&args, &k) {
            continue;
        }
        extra.push(OsString::from(format!("--{k}")));
        extra.push(OsString::from(v));
    }
    let mut out = args[..=sub].to_vec();
    out.extend(extra);
    out.extend_from_slice(&args[sub + 1..]);
    Ok(out)
}

/// Every argument of the subcommand with its effective value, as a config
/// file that reproduces the run.
pub fn resolved_config(command: &str, matches: &ArgMatches) -> String {
    let mut out = format!("# ctxcrf {command}\n");
    let mut ids: Vec<&str> = matches.ids().map(|id| id.as_str()).collect();
    ids.sort_unstable();
    for id in ids {
        if id == "config" || matches.value_source(id).is_none() {
            continue;
        }
        let Ok(Some(raw)) = matches.try_get_raw(id) else {
            continue;
        };
        let values: Vec<String> = raw.map(|v| v.to_string_lossy().into_owned()).collect();
        let origin = match matches.value_source(id) {
            Some(ValueSource::DefaultValue) => "  # default",
            _ => "",
        };
        let _ = writeln!(
            out,
            "{} = {}{origin}",
            id.replace('_', "-"),
            values.join(",")
        );
    }
    out
}
