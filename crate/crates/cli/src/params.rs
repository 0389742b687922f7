use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};

/// A typed parameter value; the default fixes the type of every override.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Int(i64),
    Float(f64),
    Ints(Vec<i64>),
    Floats(Vec<f64>),
}

impl Value {
    /// Parses `text` as a value of the same type as `self`.
    pub fn parse_like(&self, text: &str) -> Result<Value> {
        let t = text.trim();
        let list = || -> Vec<&str> {
            t.trim_start_matches('[')
                .trim_end_matches(']')
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .collect()
        };
        Ok(match self {
            Value::Int(_) => Value::Int(
                t.parse()
                    .with_context(|| format!("expected an integer, got {t:?}"))?,
            ),
            Value::Float(_) => Value::Float(parse_f64(t)?),
            Value::Ints(_) => Value::Ints(
                list()
                    .into_iter()
                    .map(|s| {
                        s.parse()
                            .with_context(|| format!("expected integers, got {t:?}"))
                    })
                    .collect::<Result<_>>()?,
            ),
            Value::Floats(_) => {
                Value::Floats(list().into_iter().map(parse_f64).collect::<Result<_>>()?)
            }
        })
    }

    fn json_like(&self, v: &serde_json::Value) -> Result<Value> {
        let text = match v {
            serde_json::Value::Array(items) => items
                .iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(","),
            serde_json::Value::String(s) => s.clone(),
            other => other.to_string(),
        };
        self.parse_like(&text)
    }
}

fn parse_f64(t: &str) -> Result<f64> {
    let v: f64 = t
        .parse()
        .with_context(|| format!("expected a number, got {t:?}"))?;
    if !v.is_finite() {
        bail!("parameter values must be finite, got {t:?}");
    }
    Ok(v)
}

pub fn normalize_key(key: &str) -> String {
    key.trim().trim_start_matches("--").replace('-', "_")
}

/// Resolved parameters of one experiment.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Params(pub BTreeMap<String, Value>);

impl Params {
    pub fn from_defaults(defaults: &[(&str, Value)]) -> Self {
        Params(
            defaults
                .iter()
                .map(|(k, v)| (k.to_string(), v.clone()))
                .collect(),
        )
    }

    /// Applies a textual override; unknown keys are rejected.
    pub fn set(&mut self, key: &str, text: &str) -> Result<()> {
        let key = normalize_key(key);
        let known: Vec<&String> = self.0.keys().collect();
        let slot = self.0.get(&key).ok_or_else(|| {
            anyhow!(
                "unknown parameter {key:?}; known: {}",
                known
                    .iter()
                    .map(|s| s.as_str())
                    .collect::<Vec<_>>()
                    .join(", ")
            )
        })?;
        let v = slot
            .parse_like(text)
            .with_context(|| format!("parameter {key}"))?;
        self.0.insert(key, v);
        Ok(())
    }

    pub fn set_json(&mut self, key: &str, v: &serde_json::Value) -> Result<()> {
        let slot = self
            .0
            .get(key)
            .ok_or_else(|| anyhow!("unknown parameter {key:?}"))?;
        let parsed = slot
            .json_like(v)
            .with_context(|| format!("parameter {key}"))?;
        self.0.insert(key.to_string(), parsed);
        Ok(())
    }

    fn get(&self, key: &str) -> &Value {
        self.0
            .get(key)
            .unwrap_or_else(|| panic!("experiment reads undeclared parameter {key}"))
    }

    pub fn f64(&self, key: &str) -> f64 {
        match self.get(key) {
            Value::Float(v) => *v,
            Value::Int(v) => *v as f64,
            other => panic!("parameter {key} is {other:?}, not a number"),
        }
    }

    pub fn int(&self, key: &str) -> i64 {
        match self.get(key) {
            Value::Int(v) => *v,
            other => panic!("parameter {key} is {other:?}, not an integer"),
        }
    }

    /// Non-negative integer parameter.
    pub fn usize(&self, key: &str) -> Result<usize> {
        usize::try_from(self.int(key)).map_err(|_| anyhow!("parameter {key} must be non-negative"))
    }

    pub fn ints(&self, key: &str) -> Vec<i64> {
        match self.get(key) {
            Value::Ints(v) => v.clone(),
            other => panic!("parameter {key} is {other:?}, not an integer list"),
        }
    }

    pub fn floats(&self, key: &str) -> Vec<f64> {
        match self.get(key) {
            Value::Floats(v) => v.clone(),
            other => panic!("parameter {key} is {other:?}, not a number list"),
        }
    }
}

/// Splits `key=value`, `--key value` and `--key=value` tokens into pairs.
pub fn parse_overrides(tokens: &[String]) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        let tok = &tokens[i];
        if let Some(rest) = tok.strip_prefix("--") {
            if let Some((k, v)) = rest.split_once('=') {
                out.push((k.to_string(), v.to_string()));
            } else {
                let v = tokens
                    .get(i + 1)
                    .ok_or_else(|| anyhow!("missing value after {tok}"))?;
                out.push((rest.to_string(), v.clone()));
                i += 1;
            }
        } else if let Some((k, v)) = tok.split_once('=') {
            out.push((k.to_string(), v.to_string()));
        } else {
            bail!("cannot parse override {tok:?}; use key=value or --key value");
        }
        i += 1;
    }
    Ok(out)
}

/// Reads a flat `key = value` config file; `#` starts a comment.
pub fn read_config(path: &Path) -> Result<Vec<(String, String)>> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("{}:{}: expected key = value", path.display(), n + 1))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}
