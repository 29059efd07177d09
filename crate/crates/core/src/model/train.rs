use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::ModelConfig;
use super::forward::{argmax, build, one_hot};
use super::params::ModelParams;
use crate::corpus::{CorpusSplit, Segment, PAD_INDEX};
use crate::error::{Error, Result};
use crate::grad::{AdamConfig, AdamState, Gradients, Tape};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainOptions {
    pub epochs: usize,
    pub batch_size: usize,
    pub patience: usize,
    pub adam: AdamConfig,
    /// Seeds the per-epoch shuffle.
    pub seed: u64,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            epochs: 20,
            batch_size: 32,
            patience: 3,
            adam: AdamConfig::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub val_loss: f64,
    pub val_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
    /// Last epoch run (1-based).
    pub stopped_epoch: usize,
    /// Epoch with the lowest validation loss (1-based).
    pub best_epoch: usize,
}

impl TrainHistory {
    pub fn best(&self) -> Option<&EpochRecord> {
        self.epochs.iter().find(|e| e.epoch == self.best_epoch)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopDecision {
    Improved,
    Continue,
    Stop,
}

/// Patience-based early stopping on a monitored loss.
#[derive(Debug, Clone)]
pub struct EarlyStopping {
    patience: usize,
    best: f64,
    best_epoch: usize,
    wait: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Result<Self> {
        if patience == 0 {
            return Err(Error::Config("patience must be at least 1".into()));
        }
        Ok(EarlyStopping {
            patience,
            best: f64::INFINITY,
            best_epoch: 0,
            wait: 0,
        })
    }

    pub fn observe(&mut self, epoch: usize, loss: f64) -> StopDecision {
        if loss < self.best {
            self.best = loss;
            self.best_epoch = epoch;
            self.wait = 0;
            return StopDecision::Improved;
        }
        self.wait += 1;
        if self.wait >= self.patience {
            StopDecision::Stop
        } else {
            StopDecision::Continue
        }
    }

    pub fn best_epoch(&self) -> usize {
        self.best_epoch
    }
}

fn ensure_encoded(segments: &[Segment]) -> Result<()> {
    match segments.iter().find(|s| !s.is_encoded()) {
        Some(s) => Err(Error::Invalid(format!("segment {} is not encoded", s.id))),
        None => Ok(()),
    }
}

/// Mean cross-entropy and accuracy over `segments`.
pub fn evaluate_loss(params: &ModelParams, config: &ModelConfig, segments: &[Segment]) -> Result<(f64, f64)> {
    if segments.is_empty() {
        return Err(Error::InsufficientData("cannot evaluate on zero segments".into()));
    }
    let mut loss = 0.0;
    let mut correct = 0usize;
    for s in segments {
        let mut tape = Tape::new(&params.set);
        let vars = build(&mut tape, params, config, &s.encoded)?;
        let l = tape.softmax_cross_entropy(vars.logits, &one_hot(config.num_classes, s.class_index)?)?;
        loss += tape.value(l).data()[0];
        if argmax(tape.value(vars.logits).data()) == s.class_index {
            correct += 1;
        }
    }
    let n = segments.len() as f64;
    Ok((loss / n, correct as f64 / n))
}

/// PAD rows never receive updates, so a padded position embeds to zero.
fn freeze_padding(params: &ModelParams, config: &ModelConfig, grads: &mut Gradients) {
    for c in config.enabled_channels() {
        if let Some(ch) = params.channel(c) {
            let dim = config.channel(c).embed_dim;
            grads.get_mut(ch.embedding).data_mut()[PAD_INDEX * dim..(PAD_INDEX + 1) * dim].fill(0.0);
        }
    }
}

/// Adam over shuffled mini-batches with early stopping on validation loss.
/// Returns the parameters from the best validation epoch.
pub fn train(
    params: &ModelParams,
    config: &ModelConfig,
    split: &CorpusSplit,
    options: &TrainOptions,
) -> Result<(ModelParams, TrainHistory)> {
    if split.validation.is_empty() {
        return Err(Error::InsufficientData("empty validation set".into()));
    }
    ensure_encoded(&split.validation)?;
    train_with_validator(params, config, &split.train, options, |p| {
        evaluate_loss(p, config, &split.validation)
    })
}

/// Training loop with a caller-supplied validation step returning
/// `(loss, accuracy)` for the current parameters.
pub fn train_with_validator(
    params: &ModelParams,
    config: &ModelConfig,
    train_set: &[Segment],
    options: &TrainOptions,
    mut validate: impl FnMut(&ModelParams) -> Result<(f64, f64)>,
) -> Result<(ModelParams, TrainHistory)> {
    if train_set.is_empty() {
        return Err(Error::InsufficientData("empty training set".into()));
    }
    if options.batch_size == 0 || options.epochs == 0 {
        return Err(Error::Config("epochs and batch size must be at least 1".into()));
    }
    ensure_encoded(train_set)?;
    let mut stopper = EarlyStopping::new(options.patience)?;
    let mut current = params.clone();
    let mut best = params.clone();
    let mut adam = AdamState::new(&current.set, options.adam);
    let mut grads = Gradients::zeros_like(&current.set);
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut history = TrainHistory {
        epochs: Vec::new(),
        stopped_epoch: 0,
        best_epoch: 0,
    };

    for epoch in 1..=options.epochs {
        order.shuffle(&mut rng);
        let mut total_loss = 0.0;
        let mut correct = 0usize;
        for batch in order.chunks(options.batch_size) {
            grads.zero();
            let scale = 1.0 / batch.len() as f64;
            for &i in batch {
                let s = &train_set[i];
                let mut tape = Tape::new(&current.set);
                let vars = build(&mut tape, &current, config, &s.encoded)?;
                let loss = tape.softmax_cross_entropy(vars.logits, &one_hot(config.num_classes, s.class_index)?)?;
                total_loss += tape.value(loss).data()[0];
                if argmax(tape.value(vars.logits).data()) == s.class_index {
                    correct += 1;
                }
                tape.backward_into(loss, &mut grads, scale)?;
            }
            freeze_padding(&current, config, &mut grads);
            adam.step(&mut current.set, &grads)?;
        }
        let (val_loss, val_accuracy) = validate(&current)?;
        let n = train_set.len() as f64;
        history.epochs.push(EpochRecord {
            epoch,
            train_loss: total_loss / n,
            train_accuracy: correct as f64 / n,
            val_loss,
            val_accuracy,
        });
        history.stopped_epoch = epoch;
        match stopper.observe(epoch, val_loss) {
            StopDecision::Improved => best = current.clone(),
            StopDecision::Continue => {}
            StopDecision::Stop => break,
        }
    }
    history.best_epoch = stopper.best_epoch();
    if history.best_epoch == 0 {
        // validation loss never finite-improved (e.g. NaN); keep the last state
        history.best_epoch = history.stopped_epoch;
        best = current;
    }
    Ok((best, history))
}
