//! Model and training configuration.

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::entity::EntityType;
use crate::tags::{ConfigError, TagAlphabet};

/// Token string reserved for out-of-vocabulary words; always id 0.
pub const UNK_TOKEN: &str = "<unk>";

/// Architecture description. Together with the tensor values this fully
/// determines the scorer, so it is echoed into every checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Model width `d`.
    pub dim: usize,
    /// Maximum sentence length; also sizes the position and length
    /// embedding tables.
    pub max_len: usize,
    /// Token inventory; index is the token id and `vocab[0]` is [`UNK_TOKEN`].
    pub vocab: Vec<String>,
    /// Entity type inventory, in tag-alphabet order.
    pub types: Vec<String>,
    /// Fuse cell features with conditional layer normalization (true) or
    /// concatenation plus a linear map (false).
    pub use_cln: bool,
    /// Add the inner-token LSTM representation to segment cells.
    pub use_inner_lstm: bool,
    /// Add the segment-length embedding to segment cells.
    pub use_length_embedding: bool,
}

impl ModelConfig {
    /// Builds a config whose vocabulary is the sorted token set of `corpus`
    /// plus the UNK sentinel.
    pub fn from_corpus(corpus: &Corpus, dim: usize, max_len: usize) -> Self {
        let mut tokens: Vec<String> = corpus
            .sentences()
            .iter()
            .flat_map(|(s, _)| s.tokens().iter().cloned())
            .collect();
        tokens.sort();
        tokens.dedup();
        tokens.retain(|t| t != UNK_TOKEN);
        let mut vocab = vec![UNK_TOKEN.to_string()];
        vocab.extend(tokens);
        Self {
            dim,
            max_len,
            vocab,
            types: corpus.types().iter().map(|t| t.name().to_string()).collect(),
            use_cln: true,
            use_inner_lstm: true,
            use_length_embedding: true,
        }
    }

    pub fn alphabet(&self) -> Result<TagAlphabet, ConfigError> {
        let types = self
            .types
            .iter()
            .map(|t| EntityType::new(t).map_err(|_| ConfigError::DuplicateType(t.clone())))
            .collect::<Result<Vec<_>, _>>()?;
        TagAlphabet::new(types)
    }

    pub fn segment_tags(&self) -> usize {
        3 * self.types.len()
    }

    pub fn edge_tags(&self) -> usize {
        2 * self.types.len()
    }
}

/// Optimization hyperparameters. `dim`, `max_len` and the three architecture
/// flags shape the model built by `train`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub dim: usize,
    pub max_len: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Candidate thresholds for dev-set tuning.
    pub threshold_grid: Vec<f64>,
    pub use_cln: bool,
    pub use_inner_lstm: bool,
    pub use_length_embedding: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            dim: 32,
            max_len: 64,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            epochs: 50,
            batch_size: 8,
            seed: 42,
            threshold_grid: (1..=9).map(|v| v as f64 / 10.0).collect(),
            use_cln: true,
            use_inner_lstm: true,
            use_length_embedding: true,
        }
    }
}
