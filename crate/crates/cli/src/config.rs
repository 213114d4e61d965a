//! Flag defaults from `URLLC_*` environment variables and `--config` files.
//!
//! Precedence: command line, then environment, then config file, then the
//! built-in default. Missing flags are appended to the argument list before
//! the real parse, so clap still validates every value.

use std::collections::{BTreeMap, HashSet};
use std::ffi::OsString;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Arg, ArgAction, Command, CommandFactory};
use serde_json::Value;

use crate::args::Cli;

pub const ENV_PREFIX: &str = "URLLC_";

/// Environment variable consulted for the flag `--long`.
pub fn env_name(long: &str) -> String {
    format!("{ENV_PREFIX}{}", long.replace('-', "_").to_uppercase())
}

fn takes_value(arg: &Arg) -> bool {
    !matches!(
        arg.get_action(),
        ArgAction::SetTrue | ArgAction::SetFalse | ArgAction::Count | ArgAction::Help | ArgAction::Version
    )
}

fn value_count(arg: &Arg) -> usize {
    arg.get_num_args().map_or(1, |r| r.min_values().max(1))
}

struct Scan {
    leaf: Command,
    seen: HashSet<String>,
    config: Option<PathBuf>,
}

fn find_long<'a>(cmd: &'a Command, long: &str) -> Option<&'a Arg> {
    cmd.get_arguments().find(|a| a.get_long() == Some(long))
}

/// Walks the raw arguments to find the subcommand and the flags given.
fn scan(raw: &[OsString]) -> Scan {
    let mut cmd = Cli::command();
    cmd.build();
    let mut seen = HashSet::new();
    let mut config = None;
    let mut i = 1;
    while i < raw.len() {
        let tok = raw[i].to_string_lossy().into_owned();
        if tok == "--" {
            break;
        }
        if let Some(body) = tok.strip_prefix("--") {
            let (long, inline) = match body.split_once('=') {
                Some((l, v)) => (l.to_string(), Some(v.to_string())),
                None => (body.to_string(), None),
            };
            let arg = find_long(&cmd, &long).cloned();
            let mut value = inline;
            if let Some(arg) = &arg {
                if takes_value(arg) && value.is_none() {
                    let count = value_count(arg);
                    if count == 1 {
                        value = raw.get(i + 1).map(|v| v.to_string_lossy().into_owned());
                    }
                    i += count;
                }
            }
            if long == "config" {
                config = value.map(PathBuf::from);
            }
            seen.insert(long);
        } else if let Some(sub) = cmd.find_subcommand(&tok).cloned() {
            cmd = sub;
        }
        i += 1;
    }
    Scan { leaf: cmd, seen, config }
}

fn tokens_for(arg: &Arg, long: &str, v: &Value) -> Result<Vec<OsString>> {
    let flag = OsString::from(format!("--{long}"));
    if !takes_value(arg) {
        let on = match v {
            Value::Bool(b) => *b,
            Value::String(s) => matches!(s.as_str(), "1" | "true" | "yes"),
            Value::Number(n) => n.as_f64() != Some(0.0),
            _ => bail!("config value for --{long} must be a boolean"),
        };
        return Ok(if on { vec![flag] } else { vec![] });
    }
    let scalar = |v: &Value| -> Result<String> {
        match v {
            Value::String(s) => Ok(s.clone()),
            Value::Number(n) => Ok(n.to_string()),
            Value::Bool(b) => Ok(b.to_string()),
            _ => bail!("config value for --{long} must be a scalar or a list of scalars"),
        }
    };
    let mut out = vec![flag];
    match v {
        Value::Array(items) if value_count(arg) > 1 => {
            for it in items {
                out.push(scalar(it)?.into());
            }
        }
        Value::Array(items) => {
            let parts: Vec<String> = items.iter().map(scalar).collect::<Result<_>>()?;
            out.push(parts.join(",").into());
        }
        other => out.push(scalar(other)?.into()),
    }
    Ok(out)
}

/// Appends flags supplied by the environment or a config file.
pub fn expand_args(raw: Vec<OsString>) -> Result<Vec<OsString>> {
    let Scan { leaf, seen, config } = scan(&raw);
    let config = config.or_else(|| std::env::var_os(env_name("config")).map(PathBuf::from));
    let mut file: BTreeMap<String, Value> = match &config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("--config: cannot read {}", path.display()))?;
            let parsed: BTreeMap<String, Value> = serde_json::from_str(&text)
                .with_context(|| format!("--config: {} is not a JSON object", path.display()))?;
            parsed.into_iter().map(|(k, v)| (k.replace('_', "-"), v)).collect()
        }
        None => BTreeMap::new(),
    };
    file.remove("config");

    let mut out = raw;
    for arg in leaf.get_arguments() {
        let Some(long) = arg.get_long() else { continue };
        if matches!(long, "help" | "version" | "config") {
            file.remove(long);
            continue;
        }
        let from_file = file.remove(long);
        if seen.contains(long) {
            continue;
        }
        if let Ok(v) = std::env::var(env_name(long)) {
            let value = if value_count(arg) > 1 {
                Value::Array(v.split_whitespace().map(|s| Value::String(s.into())).collect())
            } else {
                Value::String(v)
            };
            out.extend(tokens_for(arg, long, &value)?);
        } else if let Some(v) = from_file {
            out.extend(tokens_for(arg, long, &v)?);
        }
    }
    if let Some(key) = file.keys().next() {
        bail!(
            "--config: unknown key {key:?} for `{}`",
            leaf.get_bin_name().unwrap_or(leaf.get_name())
        );
    }
    Ok(out)
}
