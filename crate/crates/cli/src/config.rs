//! JSON config files: a flat object whose keys are long flag names of the
//! subcommand. Values are spliced in ahead of the command-line flags, and the
//! last occurrence of a flag wins.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::Command;
use serde_json::Value;

use crate::error::{CliError, CliResult};

/// Finds `--config <path>` or `--config=<path>` in raw arguments.
pub fn find_config(argv: &[OsString]) -> Option<PathBuf> {
    let mut it = argv.iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(rest) = s.strip_prefix("--config=") {
            return Some(PathBuf::from(rest));
        }
        if s == "--" {
            break;
        }
    }
    None
}

/// Reads `path` and returns it as flag tokens for `sub`.
pub fn config_tokens(path: &Path, sub: &Command) -> CliResult<Vec<OsString>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::read(&path.display().to_string(), &e))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::config(format!("{}: not valid JSON: {e}", path.display())))?;
    tokens_from_value(&value, sub).map_err(|msg| CliError::config(format!("{}: {msg}", path.display())))
}

pub fn tokens_from_value(value: &Value, sub: &Command) -> Result<Vec<OsString>, String> {
    let Value::Object(map) = value else {
        return Err("expected a JSON object of flag values".into());
    };
    let mut out = Vec::new();
    for (key, v) in map {
        let long = key.replace('_', "-");
        if long == "config" {
            return Err("config files cannot nest".into());
        }
        let arg = sub
            .get_arguments()
            .find(|a| a.get_long() == Some(long.as_str()))
            .ok_or_else(|| format!("unknown key {key:?} for `{}`", sub.get_name()))?;
        let flag = OsString::from(format!("--{}", arg.get_long().unwrap_or(&long)));
        if !arg.get_action().takes_values() {
            match v {
                Value::Bool(true) => out.push(flag),
                Value::Bool(false) => {}
                _ => return Err(format!("key {key:?} is a switch and needs true or false")),
            }
            continue;
        }
        let text = match v {
            Value::String(s) => s.clone(),
            Value::Number(n) => n.to_string(),
            Value::Array(items) => items
                .iter()
                .map(|item| match item {
                    Value::String(s) => Ok(s.clone()),
                    Value::Number(n) => Ok(n.to_string()),
                    _ => Err(format!("key {key:?}: list entries must be numbers or strings")),
                })
                .collect::<Result<Vec<_>, _>>()?
                .join(","),
            _ => return Err(format!("key {key:?} needs a string, number or list")),
        };
        out.push(flag);
        out.push(OsString::from(text));
    }
    Ok(out)
}
