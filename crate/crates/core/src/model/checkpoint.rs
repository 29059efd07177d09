use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::ModelConfig;
use super::params::ModelParams;
use super::Model;
use crate::corpus::Vocabularies;
use crate::error::{Error, Result};
use crate::grad::Tensor;

pub const FORMAT_VERSION: u64 = 1;

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    format_version: u64,
    config: ModelConfig,
    vocabularies: Vocabularies,
    tensors: Vec<TensorRecord>,
}

#[derive(Serialize, Deserialize)]
struct TensorRecord {
    name: String,
    shape: Vec<usize>,
    values: Vec<f64>,
}

/// Canonical checkpoint text: JSON with keys in sorted order and floats
/// printed with shortest round-trip precision.
pub fn to_checkpoint_string(model: &Model) -> Result<String> {
    if let Some((_, name, _)) = model
        .params
        .set
        .iter()
        .find(|(_, _, t)| t.data().iter().any(|x| !x.is_finite()))
    {
        return Err(Error::Invalid(format!("tensor `{name}` holds non-finite values")));
    }
    let file = CheckpointFile {
        format_version: FORMAT_VERSION,
        config: model.config.clone(),
        vocabularies: model.vocabularies.clone(),
        tensors: model
            .params
            .set
            .iter()
            .map(|(_, name, t)| TensorRecord {
                name: name.to_string(),
                shape: t.shape().to_vec(),
                values: t.data().to_vec(),
            })
            .collect(),
    };
    // serde_json::Value keeps object keys in a BTreeMap, which sorts them.
    let value = serde_json::to_value(&file).map_err(|e| Error::Invalid(e.to_string()))?;
    let mut text = serde_json::to_string_pretty(&value).map_err(|e| Error::Invalid(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

/// First 16 hex digits of the SHA-256 of the canonical checkpoint text.
pub fn fingerprint(model: &Model) -> Result<String> {
    let digest = Sha256::digest(to_checkpoint_string(model)?.as_bytes());
    Ok(hex::encode(&digest[..8]))
}

pub fn from_checkpoint_str(text: &str, expected: Option<&ModelConfig>) -> Result<Model> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Error::Corrupted(format!("not valid JSON: {e}")))?;
    let version = value
        .get("format_version")
        .ok_or_else(|| Error::Corrupted("missing format_version".into()))?
        .as_u64()
        .ok_or_else(|| Error::Corrupted("format_version is not an integer".into()))?;
    if version != FORMAT_VERSION {
        return Err(Error::Version {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let file: CheckpointFile =
        serde_json::from_value(value).map_err(|e| Error::Corrupted(e.to_string()))?;
    let config = expected.cloned().unwrap_or(file.config);
    let tensors = file
        .tensors
        .into_iter()
        .map(|r| {
            let name = r.name;
            let t = Tensor::new(r.shape, r.values)
                .map_err(|_| Error::Corrupted(format!("tensor `{name}` has inconsistent shape and values")))?;
            Ok((name, t))
        })
        .collect::<Result<Vec<_>>>()?;
    let params = ModelParams::from_tensors(&config, tensors)?;
    Model::new(config, params, file.vocabularies)
}

pub fn save(model: &Model, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, to_checkpoint_string(model)?).map_err(|e| Error::io(path, e))
}

pub fn load(path: impl AsRef<Path>) -> Result<Model> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_checkpoint_str(&text, None)
}

/// Loads a checkpoint and checks its tensors against `config` instead of
/// the configuration stored in the file.
pub fn load_for_config(path: impl AsRef<Path>, config: &ModelConfig) -> Result<Model> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_checkpoint_str(&text, Some(config))
}
