//! The three-channel convolution/deconvolution classifier.

mod checkpoint;
mod config;
mod forward;
mod params;
mod train;

pub use checkpoint::{fingerprint, from_checkpoint_str, load, load_for_config, save, to_checkpoint_string, FORMAT_VERSION};
pub use config::{Channel, ChannelConfig, ModelConfig};
pub use forward::{argmax, forward, segment_gradients, segment_loss, ChannelFeatures, ForwardTrace};
pub use params::{ChannelParams, DenseHead, ModelParams};
pub use train::{
    evaluate_loss, train, train_with_validator, EarlyStopping, EpochRecord, StopDecision, TrainHistory,
    TrainOptions,
};

use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;

use crate::corpus::{Segment, TaggedToken, Vocabularies};
use crate::error::{Error, Result};

/// Frozen parameters bundled with their configuration and vocabularies.
///
/// Every forward pass increments an evaluation counter so explainers can
/// report how many model evaluations they cost.
#[derive(Debug)]
pub struct Model {
    pub config: ModelConfig,
    pub params: ModelParams,
    pub vocabularies: Vocabularies,
    evaluations: AtomicUsize,
}

impl Clone for Model {
    fn clone(&self) -> Self {
        Model {
            config: self.config.clone(),
            params: self.params.clone(),
            vocabularies: self.vocabularies.clone(),
            evaluations: AtomicUsize::new(self.evaluations()),
        }
    }
}

impl Model {
    pub fn new(config: ModelConfig, params: ModelParams, vocabularies: Vocabularies) -> Result<Self> {
        config.validate()?;
        for c in config.enabled_channels() {
            let expected = config.channel(c).vocab_size;
            let found = vocabularies.get(c).len();
            if expected != found {
                return Err(Error::Invalid(format!(
                    "{c:?} vocabulary has {found} entries but the model expects {expected}"
                )));
            }
        }
        Ok(Model {
            config,
            params,
            vocabularies,
            evaluations: AtomicUsize::new(0),
        })
    }

    pub fn init(config: ModelConfig, vocabularies: Vocabularies) -> Result<Self> {
        let params = ModelParams::init(&config)?;
        Model::new(config, params, vocabularies)
    }

    pub fn encode(&self, tokens: &[TaggedToken]) -> Vec<[usize; 3]> {
        self.vocabularies.encode_tokens(tokens)
    }

    pub fn forward(&self, encoded: &[[usize; 3]]) -> Result<ForwardTrace> {
        self.evaluations.fetch_add(1, Ordering::Relaxed);
        forward(&self.params, &self.config, encoded)
    }

    /// Forward pass on a segment, encoding it first if needed.
    pub fn forward_segment(&self, segment: &Segment) -> Result<ForwardTrace> {
        if segment.is_encoded() {
            self.forward(&segment.encoded)
        } else {
            self.forward(&self.encode(&segment.tokens))
        }
    }

    pub fn predict(&self, encoded: &[[usize; 3]]) -> Result<usize> {
        Ok(self.forward(encoded)?.predicted())
    }

    /// Fraction of segments whose predicted class matches the label.
    pub fn evaluate(&self, segments: &[Segment]) -> Result<f64> {
        if segments.is_empty() {
            return Err(Error::InsufficientData("cannot evaluate on zero segments".into()));
        }
        let hits = segments
            .par_iter()
            .map(|s| Ok(self.forward_segment(s)?.predicted() == s.class_index))
            .collect::<Result<Vec<bool>>>()?;
        Ok(hits.iter().filter(|&&h| h).count() as f64 / segments.len() as f64)
    }

    pub fn evaluations(&self) -> usize {
        self.evaluations.load(Ordering::Relaxed)
    }

    pub fn reset_evaluations(&self) {
        self.evaluations.store(0, Ordering::Relaxed);
    }

    pub fn fingerprint(&self) -> Result<String> {
        fingerprint(self)
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        save(self, path)
    }
}
