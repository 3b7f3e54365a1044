//! Run configuration: a line-oriented `key = value` format with `[section]`
//! headers, or the same structure as JSON. Both are flattened into dotted
//! keys (`params.eps1.mu_h`, `sweep.steps`) before interpretation.

use std::collections::BTreeMap;

use serde_json::Value;
use sfgsim::protocols::ExperimentParams;

use crate::ConfigError;

/// Sections a dotted key may start with. Anything else given to `--set` is
/// taken as a parameter override.
pub const SECTIONS: &[&str] = &[
    "params",
    "sweep",
    "bell",
    "keyrate",
    "teleport",
    "qfc",
    "efficiency",
];
pub const TOP_LEVEL: &[&str] = &["experiment", "preset", "seed", "jobs", "format", "out"];

/// Parameters that set several fields at once.
pub const VIRTUAL_PARAMS: &[&str] = &["loss", "transmittance", "gain"];

#[derive(Debug, Default, Clone)]
pub struct RawConfig {
    entries: BTreeMap<String, String>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        if text.trim_start().starts_with('{') {
            Self::parse_json(text)
        } else {
            Self::parse_ini(text)
        }
    }

    fn parse_ini(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = RawConfig::default();
        let mut section = String::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| ConfigError::Syntax {
                        line: n + 1,
                        text: raw.to_string(),
                    })?
                    .trim();
                if !SECTIONS.contains(&name) {
                    return Err(ConfigError::UnknownKey(format!("[{name}]")));
                }
                section = name.to_string();
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: n + 1,
                text: raw.to_string(),
            })?;
            let key = if section.is_empty() {
                k.trim().to_string()
            } else {
                format!("{section}.{}", k.trim())
            };
            cfg.insert(&key, v.trim())?;
        }
        Ok(cfg)
    }

    fn parse_json(text: &str) -> Result<Self, ConfigError> {
        let value: Value =
            serde_json::from_str(text).map_err(|e| ConfigError::Json(e.to_string()))?;
        let mut cfg = RawConfig::default();
        flatten("", &value, &mut cfg)?;
        Ok(cfg)
    }

    fn insert(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        if key.is_empty() {
            return Err(ConfigError::UnknownKey(String::new()));
        }
        self.entries.insert(key.to_string(), value.to_string());
        Ok(())
    }

    /// Apply a `--set key=value`. Bare keys name parameters.
    pub fn set(&mut self, assignment: &str) -> Result<(), ConfigError> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| ConfigError::Syntax {
                line: 0,
                text: assignment.to_string(),
            })?;
        let k = k.trim();
        let head = k.split('.').next().unwrap_or("");
        let key = if SECTIONS.contains(&head) || TOP_LEVEL.contains(&k) {
            k.to_string()
        } else {
            format!("params.{k}")
        };
        self.insert(&key, v.trim())
    }

    pub fn put(&mut self, key: &str, value: &str) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn number(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        self.get(key).map(|v| parse_number(key, v)).transpose()
    }

    pub fn number_or(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        Ok(self.number(key)?.unwrap_or(default))
    }

    pub fn flag(&self, key: &str, default: bool) -> Result<bool, ConfigError> {
        match self.get(key) {
            None => Ok(default),
            Some("true" | "yes" | "1") => Ok(true),
            Some("false" | "no" | "0") => Ok(false),
            Some(v) => Err(ConfigError::Value {
                key: key.to_string(),
                value: v.to_string(),
            }),
        }
    }

    /// Overrides under `params.`, in key order.
    pub fn param_overrides(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries
            .iter()
            .filter_map(|(k, v)| k.strip_prefix("params.").map(|p| (p, v.as_str())))
    }

    /// Reject keys that no part of the run reads.
    pub fn check_known(&self, allowed_sections: &[&str]) -> Result<(), ConfigError> {
        for k in self.entries.keys() {
            let head = k.split('.').next().unwrap_or("");
            let ok = if k.contains('.') {
                head == "params" || allowed_sections.contains(&head)
            } else {
                TOP_LEVEL.contains(&k.as_str())
            };
            if !ok {
                return Err(ConfigError::UnknownKey(k.clone()));
            }
        }
        Ok(())
    }
}

fn flatten(prefix: &str, value: &Value, cfg: &mut RawConfig) -> Result<(), ConfigError> {
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten(&key, v, cfg)?;
            }
            Ok(())
        }
        Value::String(s) => cfg.insert(prefix, s),
        Value::Number(n) => cfg.insert(prefix, &n.to_string()),
        Value::Bool(b) => cfg.insert(prefix, &b.to_string()),
        Value::Null | Value::Array(_) => Err(ConfigError::Value {
            key: prefix.to_string(),
            value: value.to_string(),
        }),
    }
}

pub fn parse_number(key: &str, v: &str) -> Result<f64, ConfigError> {
    v.parse::<f64>().map_err(|_| ConfigError::Value {
        key: key.to_string(),
        value: v.to_string(),
    })
}

/// Set one dotted field, or a virtual parameter, on a parameter bundle.
pub fn apply_param(
    params: &ExperimentParams,
    path: &str,
    value: f64,
) -> Result<ExperimentParams, ConfigError> {
    match path {
        "loss" => return Ok(params.with_uniform_transmittance(1.0 - value)),
        "transmittance" => return Ok(params.with_uniform_transmittance(value)),
        "gain" => {
            return params.with_sfg_gain(value).map_err(|e| ConfigError::Value {
                key: path.to_string(),
                value: format!("{value} ({e})"),
            })
        }
        _ => {}
    }
    let mut tree = serde_json::to_value(params).expect("parameters serialize");
    let slot = lookup(&mut tree, path)?;
    *slot = if slot.is_u64() {
        if value < 0.0 || value.fract() != 0.0 {
            return Err(ConfigError::Value {
                key: path.to_string(),
                value: value.to_string(),
            });
        }
        Value::from(value as u64)
    } else if slot.is_number() {
        serde_json::Number::from_f64(value)
            .map(Value::Number)
            .ok_or_else(|| ConfigError::Value {
                key: path.to_string(),
                value: value.to_string(),
            })?
    } else {
        return Err(ConfigError::Value {
            key: path.to_string(),
            value: value.to_string(),
        });
    };
    serde_json::from_value(tree).map_err(|e| ConfigError::Value {
        key: path.to_string(),
        value: e.to_string(),
    })
}

/// Set a field from its textual value; numeric fields parse as numbers,
/// the others must match a serialized variant name.
pub fn apply_param_text(
    params: &ExperimentParams,
    path: &str,
    text: &str,
) -> Result<ExperimentParams, ConfigError> {
    if VIRTUAL_PARAMS.contains(&path) {
        return apply_param(params, path, parse_number(path, text)?);
    }
    let mut tree = serde_json::to_value(params).expect("parameters serialize");
    if lookup(&mut tree, path)?.is_number() {
        return apply_param(params, path, parse_number(path, text)?);
    }
    *lookup(&mut tree, path)? = Value::String(text.to_string());
    serde_json::from_value(tree).map_err(|_| ConfigError::Value {
        key: path.to_string(),
        value: text.to_string(),
    })
}

/// Whether `path` names a numeric parameter that a sweep can vary.
pub fn is_sweepable(params: &ExperimentParams, path: &str) -> bool {
    if VIRTUAL_PARAMS.contains(&path) {
        return true;
    }
    let mut tree = serde_json::to_value(params).expect("parameters serialize");
    lookup(&mut tree, path)
        .map(|v| v.is_number())
        .unwrap_or(false)
}

fn lookup<'a>(tree: &'a mut Value, path: &str) -> Result<&'a mut Value, ConfigError> {
    let mut node = tree;
    for part in path.split('.') {
        node = match node {
            Value::Object(map) => map.get_mut(part),
            _ => None,
        }
        .ok_or_else(|| ConfigError::UnknownParameter(path.to_string()))?;
    }
    if node.is_object() {
        return Err(ConfigError::UnknownParameter(path.to_string()));
    }
    Ok(node)
}
