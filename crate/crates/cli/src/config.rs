//! TOML run configuration.
//!
//! A file holds one table per command (`[train]`, `[serve]`, ...). Values
//! are resolved as flags, then the file, then built-in defaults.

use std::path::Path;

use anyhow::{Context, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use crate::exit::usage;

pub type Table = toml::Table;

pub fn load(path: Option<&Path>) -> Result<Table> {
    let Some(path) = path else {
        return Ok(Table::new());
    };
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.parse::<Table>()
        .map_err(|e| usage(format!("{}: {e}", path.display())))
}

/// Sub-table `name` of `table`, if present.
pub fn section<'a>(table: &'a Table, name: &str) -> Result<Option<&'a Table>> {
    match table.get(name) {
        None => Ok(None),
        Some(toml::Value::Table(t)) => Ok(Some(t)),
        Some(_) => Err(usage(format!("`{name}` must be a table"))),
    }
}

/// Typed value of `key` in an optional table.
pub fn value<T: DeserializeOwned>(table: Option<&Table>, key: &str) -> Result<Option<T>> {
    match table.and_then(|t| t.get(key)) {
        None => Ok(None),
        Some(v) => v
            .clone()
            .try_into()
            .map(Some)
            .map_err(|e| usage(format!("`{key}`: {e}"))),
    }
}

fn merge(base: &mut Value, patch: Value, path: &str) -> Result<()> {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                let here = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
                let slot = b.get_mut(&k).ok_or_else(|| usage(format!("unknown setting `{here}`")))?;
                merge(slot, v, &here)?;
            }
            Ok(())
        }
        (b, p) => {
            *b = p;
            Ok(())
        }
    }
}

/// `base` with every key of `patch` replaced; unknown keys are errors.
pub fn overlay<T: Serialize + DeserializeOwned>(base: &T, patch: Option<&Table>, path: &str) -> Result<T> {
    let Some(patch) = patch else {
        return Ok(serde_json::from_value(serde_json::to_value(base)?)?);
    };
    let mut v = serde_json::to_value(base)?;
    merge(&mut v, serde_json::to_value(patch)?, path)?;
    serde_json::from_value(v).map_err(|e| usage(format!("[{path}]: {e}")))
}
