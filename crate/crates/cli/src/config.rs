//! Merging a JSON file of flag values into the command line.
//!
//! Top-level keys apply to every subcommand that has a flag of that name;
//! an object under a subcommand's name applies to that subcommand only.
//! Keys may use `_` or `-`. A flag already on the command line is left alone.

use clap::CommandFactory;
use serde_json::Value;
use std::ffi::OsString;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config {path}: {message}")]
    Read { path: String, message: String },
    #[error("config key {0:?} matches no flag")]
    UnknownKey(String),
    #[error("config key {key:?}: unsupported value {value}")]
    BadValue { key: String, value: String },
}

fn config_path(args: &[OsString]) -> Option<OsString> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(v) = s.strip_prefix("--config=") {
            return Some(v.into());
        }
    }
    None
}

fn subcommand_position(args: &[OsString], names: &[String]) -> Option<usize> {
    args.iter().position(|a| names.iter().any(|n| a.to_string_lossy() == *n))
}

struct Flag {
    takes_value: bool,
}

fn flag(sub: &clap::Command, long: &str) -> Option<Flag> {
    sub.get_arguments()
        .find(|a| a.get_long() == Some(long) && a.get_id() != "config")
        .map(|a| Flag { takes_value: a.get_action().takes_values() })
}

fn present(args: &[OsString], long: &str) -> bool {
    let bare = format!("--{long}");
    let eq = format!("--{long}=");
    args.iter().any(|a| {
        let s = a.to_string_lossy();
        s == bare || s.starts_with(&eq)
    })
}

fn render(key: &str, value: &Value) -> Result<Option<String>, ConfigError> {
    let bad = || ConfigError::BadValue { key: key.to_string(), value: value.to_string() };
    Ok(Some(match value {
        Value::Null => return Ok(None),
        Value::String(s) => s.clone(),
        Value::Number(n) => n.to_string(),
        Value::Array(items) => items
            .iter()
            .map(|v| match v {
                Value::String(s) => Ok(s.clone()),
                Value::Number(n) => Ok(n.to_string()),
                _ => Err(bad()),
            })
            .collect::<Result<Vec<_>, _>>()?
            .join(","),
        Value::Bool(_) | Value::Object(_) => return Err(bad()),
    }))
}

/// `args` with the config file's values inserted after the subcommand name.
pub fn merge_config(args: Vec<OsString>) -> Result<Vec<OsString>, ConfigError> {
    let Some(path) = config_path(&args) else { return Ok(args) };
    let path_str = Path::new(&path).display().to_string();
    let text = std::fs::read_to_string(&path)
        .map_err(|e| ConfigError::Read { path: path_str.clone(), message: e.to_string() })?;
    let root: serde_json::Map<String, Value> =
        serde_json::from_str(&text).map_err(|e| ConfigError::Read { path: path_str, message: e.to_string() })?;

    let cmd = crate::args::Cli::command();
    let names: Vec<String> = cmd.get_subcommands().map(|s| s.get_name().to_string()).collect();
    let Some(pos) = subcommand_position(&args, &names) else { return Ok(args) };
    let sub_name = args[pos].to_string_lossy().to_string();
    let sub = cmd.find_subcommand(&sub_name).expect("listed subcommand");

    let mut entries: Vec<(String, Value)> = Vec::new();
    for (key, value) in &root {
        let long = key.replace('_', "-");
        if let Value::Object(section) = value {
            if !names.contains(&long) {
                return Err(ConfigError::UnknownKey(key.clone()));
            }
            if long == sub_name {
                entries.extend(section.iter().map(|(k, v)| (k.replace('_', "-"), v.clone())));
            }
            continue;
        }
        if !cmd.get_subcommands().any(|s| flag(s, &long).is_some()) {
            return Err(ConfigError::UnknownKey(key.clone()));
        }
        if flag(sub, &long).is_some() {
            entries.push((long, value.clone()));
        }
    }

    let mut extra: Vec<OsString> = Vec::new();
    for (long, value) in entries {
        let f = flag(sub, &long).ok_or_else(|| ConfigError::UnknownKey(long.clone()))?;
        if present(&args, &long) {
            continue;
        }
        if !f.takes_value {
            match value {
                Value::Bool(true) => extra.push(format!("--{long}").into()),
                Value::Bool(false) => {}
                other => return Err(ConfigError::BadValue { key: long, value: other.to_string() }),
            }
            continue;
        }
        if let Some(v) = render(&long, &value)? {
            extra.push(format!("--{long}").into());
            extra.push(v.into());
        }
    }
    let mut out = args;
    out.splice(pos + 1..pos + 1, extra);
    Ok(out)
}
