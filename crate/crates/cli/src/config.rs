//! Config-file layering. Keys from the file become flags inserted right
//! after the subcommand name, so anything given on the command line (which
//! comes later and overrides) wins. Keys whose flag has an environment
//! variable set are skipped so the environment also wins.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::CommandFactory;

use crate::args::Cli;
use crate::error::CliError;

/// Value of `--config` in raw arguments, if present.
fn config_path(raw: &[OsString]) -> Option<PathBuf> {
    let mut it = raw.iter().skip(1);
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--" {
            return None;
        }
        if s == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(v) = s.strip_prefix("--config=") {
            return Some(PathBuf::from(v));
        }
    }
    None
}

/// Index of the subcommand name in raw arguments.
fn subcommand_index(raw: &[OsString]) -> Option<usize> {
    let mut i = 1;
    while i < raw.len() {
        let s = raw[i].to_string_lossy();
        if s == "--config" || s == "--manifest" {
            i += 2;
            continue;
        }
        if !s.starts_with('-') {
            return Some(i);
        }
        i += 1;
    }
    None
}

fn scalar(v: &toml::Value) -> Option<String> {
    match v {
        toml::Value::String(s) => Some(s.clone()),
        toml::Value::Integer(i) => Some(i.to_string()),
        toml::Value::Float(f) => Some(f.to_string()),
        toml::Value::Boolean(b) => Some(b.to_string()),
        _ => None,
    }
}

pub fn expand(raw: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let Some(path) = config_path(&raw) else {
        return Ok(raw);
    };
    let Some(sub_at) = subcommand_index(&raw) else {
        return Ok(raw);
    };
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let table: toml::Table = text
        .parse()
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;

    let name = raw[sub_at].to_string_lossy().into_owned();
    let mut root = Cli::command();
    root.build();
    let Some(sub) = root.find_subcommand(&name) else {
        return Ok(raw);
    };
    let arg = |key: &str| sub.get_arguments().find(|a| a.get_long() == Some(key)).cloned();

    let mut pairs: Vec<(String, toml::Value, bool)> = Vec::new();
    for (k, v) in &table {
        match v {
            toml::Value::Table(_) => {}
            _ => pairs.push((k.clone(), v.clone(), false)),
        }
    }
    if let Some(toml::Value::Table(t)) = table.get(&name) {
        for (k, v) in t {
            pairs.push((k.clone(), v.clone(), true));
        }
    }

    let mut injected = Vec::new();
    for (key, value, specific) in pairs {
        let Some(a) = arg(&key) else {
            if specific {
                return Err(CliError::Usage(format!(
                    "{}: `{name}` has no flag --{key}",
                    path.display()
                )));
            }
            continue;
        };
        if a.get_env().is_some_and(|e| std::env::var_os(e).is_some()) {
            continue;
        }
        let values = match &value {
            toml::Value::Array(items) => items.clone(),
            other => vec![other.clone()],
        };
        let takes_value = a.get_action().takes_values();
        for v in values {
            let s = scalar(&v).ok_or_else(|| {
                CliError::Usage(format!("{}: value of `{key}` must be a scalar", path.display()))
            })?;
            if !takes_value {
                if s == "true" {
                    injected.push(OsString::from(format!("--{key}")));
                }
            } else {
                injected.push(OsString::from(format!("--{key}={s}")));
            }
        }
    }

    let mut out = raw;
    out.splice(sub_at + 1..sub_at + 1, injected);
    Ok(out)
}
