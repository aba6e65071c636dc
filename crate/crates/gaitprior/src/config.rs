//! Run configuration and `key=value` overrides.

use gaitprior_core::reflib::CurationConfig;
use gaitprior_core::rewards::RewardConfig;
use gaitprior_core::train::TrainConfig;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Every tunable a subcommand may read. Override keys are dotted paths into
/// this structure, e.g. `train.learning_rate` or `reward.table.alive`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunConfig {
    pub train: TrainConfig,
    pub reward: RewardConfig,
    pub curation: CurationConfig,
}

impl RunConfig {
    /// Applies `key=value` overrides in order. Values are parsed as JSON and
    /// fall back to a plain string.
    pub fn with_overrides<S: AsRef<str>>(mut self, overrides: &[S]) -> Result<Self> {
        if overrides.is_empty() {
            return Ok(self);
        }
        let mut tree = serde_json::to_value(&self).expect("config serializes");
        let keys = leaf_keys(&tree);
        for item in overrides {
            let item = item.as_ref();
            let (key, raw) = item
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override `{item}` is not of the form key=value")))?;
            let key = key.trim();
            let slot = lookup(&mut tree, key).ok_or_else(|| {
                Error::Config(format!("unknown config key `{key}`; valid keys are: {}", keys.join(", ")))
            })?;
            let value = serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.to_string()));
            if !same_kind(slot, &value) {
                return Err(Error::Config(format!("`{key}` expects a value like {slot}, got `{raw}`")));
            }
            *slot = value;
        }
        self = serde_json::from_value(tree).map_err(|e| Error::Config(format!("invalid override: {e}")))?;
        self.train.validate()?;
        self.reward.validate()?;
        Ok(self)
    }

    /// Every key accepted by [`RunConfig::with_overrides`].
    pub fn keys() -> Vec<String> {
        leaf_keys(&serde_json::to_value(RunConfig::default()).expect("config serializes"))
    }

    /// Hex SHA-256 of the canonical JSON form, identifying a configuration
    /// in reports.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }
}

fn same_kind(old: &Value, new: &Value) -> bool {
    match (old, new) {
        (Value::Number(_), Value::Number(_)) | (Value::Bool(_), Value::Bool(_)) | (Value::String(_), Value::String(_)) => true,
        (Value::Array(_), Value::Array(_)) => true,
        // optional fields; deserialization decides
        (Value::Null, _) | (_, Value::Null) => true,
        _ => false,
    }
}

fn lookup<'a>(tree: &'a mut Value, key: &str) -> Option<&'a mut Value> {
    let mut node = tree;
    for part in key.split('.') {
        node = node.as_object_mut()?.get_mut(part)?;
    }
    (!node.is_object()).then_some(node)
}

fn leaf_keys(tree: &Value) -> Vec<String> {
    fn walk(prefix: &str, node: &Value, out: &mut Vec<String>) {
        match node {
            Value::Object(map) => {
                for (k, v) in map {
                    let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                    walk(&key, v, out);
                }
            }
            _ => out.push(prefix.to_string()),
        }
    }
    let mut out = Vec::new();
    walk("", tree, &mut out);
    out
}
