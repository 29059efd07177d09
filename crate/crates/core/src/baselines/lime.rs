use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::agreement::{agreement, Agreement};
use crate::corpus::{Segment, PAD_INDEX};
use crate::error::{Error, Result};
use crate::model::Model;
use crate::saliency::explain_segment;
use crate::saliency::ThresholdRule;

/// Anything that maps an encoded segment to class probabilities.
pub trait ProbabilityModel: Sync {
    fn probabilities(&self, encoded: &[[usize; 3]]) -> Result<Vec<f64>>;
}

impl ProbabilityModel for Model {
    fn probabilities(&self, encoded: &[[usize; 3]]) -> Result<Vec<f64>> {
        Ok(self.forward(encoded)?.probs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimeOptions {
    pub samples: usize,
    pub kernel_width: f64,
    /// Ridge penalty on the token weights; the intercept is not penalized.
    pub ridge: f64,
    pub seed: u64,
}

impl Default for LimeOptions {
    fn default() -> Self {
        LimeOptions {
            samples: 1000,
            kernel_width: 0.75,
            ridge: 1.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalExplanation {
    pub segment_id: usize,
    pub target_class: usize,
    /// One coefficient per token position.
    pub weights: Vec<f64>,
    pub intercept: f64,
    /// Weighted coefficient of determination of the surrogate fit.
    pub r_squared: f64,
    pub samples: usize,
}

/// Cosine between a binary mask and the all-ones mask.
fn cosine_to_full(kept: usize, len: usize) -> f64 {
    if kept == 0 {
        0.0
    } else {
        (kept as f64 / len as f64).sqrt()
    }
}

/// Fits a weighted ridge surrogate of the target-class probability on
/// random token-presence masks. Masked tokens become PAD on every channel.
///
/// Needs `samples` model evaluations; they run concurrently and are reduced
/// in sample order, so the result depends only on the seed.
pub fn lime_explain(
    model: &impl ProbabilityModel,
    segment: &Segment,
    target: usize,
    options: &LimeOptions,
) -> Result<LocalExplanation> {
    let m = segment.encoded.len();
    if !segment.is_encoded() || m == 0 {
        return Err(Error::Invalid(format!("segment {} is not encoded", segment.id)));
    }
    if options.samples < m + 1 {
        return Err(Error::InsufficientData(format!(
            "{} samples cannot determine {} token weights and an intercept",
            options.samples, m
        )));
    }
    if !(options.ridge > 0.0) || !(options.kernel_width > 0.0) {
        return Err(Error::Config("ridge penalty and kernel width must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let masks: Vec<Vec<bool>> = (0..options.samples)
        .map(|_| (0..m).map(|_| rng.gen_bool(0.5)).collect())
        .collect();
    let targets = masks
        .par_iter()
        .map(|mask| {
            let encoded: Vec<[usize; 3]> = segment
                .encoded
                .iter()
                .zip(mask)
                .map(|(&t, &keep)| if keep { t } else { [PAD_INDEX; 3] })
                .collect();
            let probs = model.probabilities(&encoded)?;
            probs.get(target).copied().ok_or(Error::OutOfRange {
                what: "class".into(),
                index: target,
                size: probs.len(),
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    let weights: Vec<f64> = masks
        .iter()
        .map(|mask| {
            let d = 1.0 - cosine_to_full(mask.iter().filter(|&&k| k).count(), m);
            (-(d * d) / (options.kernel_width * options.kernel_width)).exp()
        })
        .collect();
    let (coef, intercept, r_squared) = weighted_ridge(&masks, &targets, &weights, options.ridge)?;
    Ok(LocalExplanation {
        segment_id: segment.id,
        target_class: target,
        weights: coef,
        intercept,
        r_squared,
        samples: options.samples,
    })
}

/// Ridge on weighted-mean-centred data, so the intercept goes unpenalized.
pub(super) fn weighted_ridge(masks: &[Vec<bool>], y: &[f64], w: &[f64], lambda: f64) -> Result<(Vec<f64>, f64, f64)> {
    let m = masks[0].len();
    let total: f64 = w.iter().sum();
    let mut mean_x = vec![0.0; m];
    let mut mean_y = 0.0;
    for ((mask, &yi), &wi) in masks.iter().zip(y).zip(w) {
        for (j, &k) in mask.iter().enumerate() {
            if k {
                mean_x[j] += wi;
            }
        }
        mean_y += wi * yi;
    }
    mean_x.iter_mut().for_each(|x| *x /= total);
    mean_y /= total;

    let mut gram = DMatrix::<f64>::identity(m, m) * lambda;
    let mut rhs = DVector::<f64>::zeros(m);
    let mut row = vec![0.0; m];
    for ((mask, &yi), &wi) in masks.iter().zip(y).zip(w) {
        for j in 0..m {
            row[j] = if mask[j] { 1.0 } else { 0.0 } - mean_x[j];
        }
        let yc = yi - mean_y;
        for a in 0..m {
            let ra = wi * row[a];
            rhs[a] += ra * yc;
            for b in a..m {
                gram[(a, b)] += ra * row[b];
            }
        }
    }
    for a in 0..m {
        for b in 0..a {
            gram[(a, b)] = gram[(b, a)];
        }
    }
    let beta = gram
        .cholesky()
        .ok_or_else(|| Error::Invalid("surrogate normal equations are not positive definite".into()))?
        .solve(&rhs);
    let coef: Vec<f64> = beta.iter().copied().collect();
    let intercept = mean_y - coef.iter().zip(&mean_x).map(|(b, x)| b * x).sum::<f64>();

    let (mut ss_res, mut ss_tot) = (0.0, 0.0);
    for ((mask, &yi), &wi) in masks.iter().zip(y).zip(w) {
        let fit = intercept + mask.iter().zip(&coef).filter(|(&k, _)| k).map(|(_, b)| b).sum::<f64>();
        ss_res += wi * (yi - fit).powi(2);
        ss_tot += wi * (yi - mean_y).powi(2);
    }
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok((coef, intercept, r_squared))
}

/// wTDS and the sampled surrogate side by side for one segment and class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub segment_id: usize,
    pub target_class: usize,
    /// Baseline-centred `wtds[target]` summed over enabled channels.
    pub wtds: Vec<f64>,
    pub lime: LocalExplanation,
    pub agreement: Agreement,
    pub wtds_evaluations: usize,
    pub lime_evaluations: usize,
}

/// Runs both explainers on one segment and measures their agreement.
///
/// Evaluation counts are read from the model's counter, so concurrent use
/// of the same model from other threads inflates them.
pub fn compare_segment(
    model: &Model,
    segment: &Segment,
    target: usize,
    options: &LimeOptions,
    top_k: usize,
) -> Result<Comparison> {
    if target >= model.config.num_classes {
        return Err(Error::OutOfRange {
            what: "class".into(),
            index: target,
            size: model.config.num_classes,
        });
    }
    let start = model.evaluations();
    let explanation = explain_segment(model, segment, ThresholdRule::MeanStd)?;
    let after_wtds = model.evaluations();
    let lime = lime_explain(model, segment, target, options)?;
    let after_lime = model.evaluations();
    let mut wtds = vec![0.0; model.config.segment_len];
    for c in model.config.enabled_channels() {
        for (acc, s) in wtds.iter_mut().zip(explanation.centered_scores(c, target)) {
            *acc += s;
        }
    }
    let agreement = agreement(&wtds, &lime.weights, top_k)?;
    Ok(Comparison {
        segment_id: segment.id,
        target_class: target,
        wtds,
        lime,
        agreement,
        wtds_evaluations: after_wtds - start,
        lime_evaluations: after_lime - after_wtds,
    })
}
