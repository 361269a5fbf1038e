//! `key=value` overrides on a resolved scenario.
//!
//! A key is either a dotted path (`fdi.t_s`, `faults.0.weight`) or a leaf
//! name that is unique in the scenario (`T_s`, `u_max`). Matching ignores
//! case. Values are TOML literals; anything that does not parse as one is
//! taken as a string.

use std::fmt;
use std::str::FromStr;

use toml::Value;

use crate::config::ScenarioConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct Override {
    /// As given, for the provenance record.
    pub text: String,
    pub key: String,
    pub value: Value,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseOverrideError(String);

impl fmt::Display for ParseOverrideError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "override `{}` is not of the form KEY=VALUE", self.0)
    }
}

impl std::error::Error for ParseOverrideError {}

impl FromStr for Override {
    type Err = ParseOverrideError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (key, raw) = s
            .split_once('=')
            .ok_or_else(|| ParseOverrideError(s.into()))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(ParseOverrideError(s.into()));
        }
        let raw = raw.trim();
        let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| Value::String(raw.into()));
        Ok(Override {
            text: s.into(),
            key: key.into(),
            value,
        })
    }
}

fn leaves(value: &Value, prefix: &str, out: &mut Vec<String>) {
    let join = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match value {
        Value::Table(t) => {
            for (k, v) in t {
                leaves(v, &join(k), out);
            }
        }
        Value::Array(items) if !items.is_empty() && items.iter().all(Value::is_table) => {
            for (i, v) in items.iter().enumerate() {
                leaves(v, &join(&i.to_string()), out);
            }
        }
        _ => out.push(prefix.to_string()),
    }
}

/// Every overridable key of `value`, as dotted paths.
pub fn keys(value: &Value) -> Vec<String> {
    let mut out = Vec::new();
    leaves(value, "", &mut out);
    out
}

/// Resolves `key` to exactly one dotted path.
pub fn resolve_key(key: &str, paths: &[String]) -> Result<String, String> {
    let key_lc = key.to_ascii_lowercase();
    if let Some(p) = paths.iter().find(|p| p.to_ascii_lowercase() == key_lc) {
        return Ok(p.clone());
    }
    let suffix = format!(".{key_lc}");
    let hits: Vec<&String> = paths
        .iter()
        .filter(|p| p.to_ascii_lowercase().ends_with(&suffix))
        .collect();
    match hits.as_slice() {
        [one] => Ok((*one).clone()),
        [] => Err(format!(
            "override key `{key}` does not name a scenario setting"
        )),
        many => Err(format!(
            "override key `{key}` is ambiguous: {}",
            many.iter()
                .map(|s| s.as_str())
                .collect::<Vec<_>>()
                .join(", ")
        )),
    }
}

fn slot<'a>(root: &'a mut Value, path: &str) -> Option<&'a mut Value> {
    path.split('.').try_fold(root, |v, part| match v {
        Value::Table(t) => t.get_mut(part),
        Value::Array(a) => part.parse::<usize>().ok().and_then(|i| a.get_mut(i)),
        _ => None,
    })
}

/// Applies `overrides` in order and re-checks the schema.
pub fn apply(config: &ScenarioConfig, overrides: &[Override]) -> Result<ScenarioConfig, String> {
    let mut value = Value::try_from(config).map_err(|e| e.to_string())?;
    let paths = keys(&value);
    for o in overrides {
        let path = resolve_key(&o.key, &paths)?;
        let target =
            slot(&mut value, &path).ok_or_else(|| format!("override key `{}` not found", o.key))?;
        *target = match (&*target, &o.value) {
            (Value::Float(_), Value::Integer(i)) => Value::Float(*i as f64),
            _ => o.value.clone(),
        };
    }
    value
        .try_into()
        .map_err(|e: toml::de::Error| format!("after overrides: {}", e.message().trim()))
}
