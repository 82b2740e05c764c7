//! Versioned checkpoint container: a JSON document holding the config echo
//! plus every named tensor with its shape and row-major values. Field names
//! are the stable identifiers listed by [`ModelParams::tensors`].

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::config::ModelConfig;
use super::params::ModelParams;
use super::{Scorer, ScorerError};

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct TensorRecord {
    name: String,
    shape: Vec<usize>,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    format_version: u32,
    config: ModelConfig,
    tensors: Vec<TensorRecord>,
}

impl Scorer {
    /// Serializes config and parameters. The output is byte-stable for
    /// identical inputs.
    pub fn save(&self, mut writer: impl Write) -> Result<(), ScorerError> {
        let tensors = self
            .params()
            .tensors()
            .into_iter()
            .map(|(name, shape, values)| TensorRecord {
                name,
                shape,
                values: values.to_vec(),
            })
            .collect();
        let file = CheckpointFile {
            format_version: CHECKPOINT_VERSION,
            config: self.config().clone(),
            tensors,
        };
        let body = serde_json::to_string(&file)
            .map_err(|e| ScorerError::Checkpoint(e.to_string()))?;
        writer.write_all(body.as_bytes())?;
        writer.write_all(b"\n")?;
        Ok(())
    }

    /// Loads a checkpoint, validating version, tensor names and shapes.
    pub fn load(mut reader: impl Read) -> Result<Scorer, ScorerError> {
        let mut body = String::new();
        reader.read_to_string(&mut body)?;
        let file: CheckpointFile =
            serde_json::from_str(&body).map_err(|e| ScorerError::Checkpoint(e.to_string()))?;
        if file.format_version != CHECKPOINT_VERSION {
            return Err(ScorerError::Checkpoint(format!(
                "unsupported format version {}, expected {}",
                file.format_version, CHECKPOINT_VERSION
            )));
        }
        let mut params = ModelParams::zeros(&file.config);
        {
            let mut views = params.tensors_mut();
            if views.len() != file.tensors.len() {
                return Err(ScorerError::Checkpoint(format!(
                    "checkpoint has {} tensors, config implies {}",
                    file.tensors.len(),
                    views.len()
                )));
            }
            for (view, record) in views.iter_mut().zip(&file.tensors) {
                if view.0 != record.name || view.1 != record.shape {
                    return Err(ScorerError::Checkpoint(format!(
                        "tensor mismatch: expected {} {:?}, found {} {:?}",
                        view.0, view.1, record.name, record.shape
                    )));
                }
                if record.values.len() != view.2.len() {
                    return Err(ScorerError::Checkpoint(format!(
                        "tensor {} has {} values, shape implies {}",
                        record.name,
                        record.values.len(),
                        view.2.len()
                    )));
                }
                view.2.copy_from_slice(&record.values);
            }
        }
        Scorer::from_parts(file.config, params)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config() -> ModelConfig {
        ModelConfig {
            dim: 4,
            max_len: 6,
            vocab: vec!["<unk>".into(), "a".into(), "b".into()],
            types: vec!["ADE".into()],
            use_cln: true,
            use_inner_lstm: true,
            use_length_embedding: true,
        }
    }

    #[test]
    fn save_load_roundtrip_is_exact() {
        let scorer = Scorer::new(config(), 17).unwrap();
        let mut buffer = Vec::new();
        scorer.save(&mut buffer).unwrap();
        let loaded = Scorer::load(buffer.as_slice()).unwrap();
        assert_eq!(loaded.config(), scorer.config());
        assert_eq!(loaded.params(), scorer.params());
    }

    #[test]
    fn save_is_byte_stable() {
        let scorer = Scorer::new(config(), 17).unwrap();
        let mut a = Vec::new();
        scorer.save(&mut a).unwrap();
        let mut b = Vec::new();
        scorer.save(&mut b).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn version_and_shape_mismatches_are_rejected() {
        let scorer = Scorer::new(config(), 17).unwrap();
        let mut buffer = Vec::new();
        scorer.save(&mut buffer).unwrap();
        let text = String::from_utf8(buffer).unwrap();

        let bad_version = text.replace("\"format_version\":1", "\"format_version\":9");
        assert!(matches!(
            Scorer::load(bad_version.as_bytes()),
            Err(ScorerError::Checkpoint(_))
        ));

        let bad_name = text.replace("\"token_emb\"", "\"token_embedding\"");
        assert!(matches!(
            Scorer::load(bad_name.as_bytes()),
            Err(ScorerError::Checkpoint(_))
        ));

        assert!(matches!(
            Scorer::load(&b"not json"[..]),
            Err(ScorerError::Checkpoint(_))
        ));
    }
}
