//! Token saliency from the deconvolved features: plain TDS (sum of a
//! token's deconvolved features), per-class weighted TDS pushed through the
//! dense head via the token's column block of `A`, threshold highlights and
//! pre-softmax segment ranking.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Segment;
use crate::error::{Error, Result};
use crate::model::{Channel, ForwardTrace, Model, ModelConfig, ModelParams};

/// Sum of the deconvolved feature entries of token `m` in `channel`.
pub fn tds(trace: &ForwardTrace, m: usize, channel: Channel) -> Result<f64> {
    Ok(token_features(trace, m, channel)?.iter().sum())
}

fn token_features(trace: &ForwardTrace, m: usize, channel: Channel) -> Result<&[f64]> {
    let f = trace
        .features(channel)
        .ok_or_else(|| Error::Invalid(format!("{channel:?} channel is not enabled")))?;
    let rows = f.shape()[0];
    if m >= rows {
        return Err(Error::OutOfRange {
            what: "token position".into(),
            index: m,
            size: rows,
        });
    }
    Ok(f.row(m))
}

/// `d + C relu(b + h)` for a hidden pre-activation contribution `h`.
fn head_output(params: &ModelParams, config: &ModelConfig, contribution: &[f64]) -> Vec<f64> {
    let b = params.get(params.head.b).data();
    let c = params.get(params.head.c);
    let d = params.get(params.head.d).data();
    let e = config.hidden_size;
    let hidden: Vec<f64> = (0..e).map(|i| (b[i] + contribution[i]).max(0.0)).collect();
    (0..config.num_classes)
        .map(|k| d[k] + c.row(k).iter().zip(&hidden).map(|(w, h)| w * h).sum::<f64>())
        .collect()
}

/// `A_m^(c) x_m^(c)`: the E-vector contributed by one token of one channel.
pub fn token_contribution(
    params: &ModelParams,
    config: &ModelConfig,
    trace: &ForwardTrace,
    m: usize,
    channel: Channel,
) -> Result<Vec<f64>> {
    let x = token_features(trace, m, channel)?;
    let a = params.get(params.head.a);
    let p = a.shape()[1];
    let off = config.column_offset(channel, m);
    Ok((0..config.hidden_size)
        .map(|e| {
            a.data()[e * p + off..e * p + off + x.len()]
                .iter()
                .zip(x)
                .map(|(w, v)| w * v)
                .sum()
        })
        .collect())
}

/// Weighted TDS of token `m` in `channel`: `d + C relu(b + A_m x_m)`,
/// one entry per class.
pub fn wtds(
    params: &ModelParams,
    config: &ModelConfig,
    trace: &ForwardTrace,
    m: usize,
    channel: Channel,
) -> Result<Vec<f64>> {
    let contribution = token_contribution(params, config, trace, m, channel)?;
    Ok(head_output(params, config, &contribution))
}

/// The wTDS of an all-zero token, `d + C relu(b)`, shared by every token.
pub fn baseline(params: &ModelParams, config: &ModelConfig) -> Vec<f64> {
    head_output(params, config, &vec![0.0; config.hidden_size])
}

/// `sum_{c,m} A_m^(c) x_m^(c)`, which equals `A X` exactly in exact arithmetic.
pub fn decomposed_pre_activation(params: &ModelParams, config: &ModelConfig, trace: &ForwardTrace) -> Result<Vec<f64>> {
    let mut total = vec![0.0; config.hidden_size];
    for c in config.enabled_channels() {
        for m in 0..config.segment_len {
            for (t, v) in total.iter_mut().zip(token_contribution(params, config, trace, m, c)?) {
                *t += v;
            }
        }
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "rule", content = "value", rename_all = "lowercase")]
pub enum ThresholdRule {
    /// Mean plus one (population) standard deviation within the segment.
    #[default]
    MeanStd,
    Absolute(f64),
    /// Empirical quantile in [0, 1] with linear interpolation.
    Quantile(f64),
}

impl ThresholdRule {
    pub fn threshold(&self, scores: &[f64]) -> f64 {
        match *self {
            ThresholdRule::Absolute(x) => x,
            _ if scores.is_empty() => f64::INFINITY,
            ThresholdRule::MeanStd => {
                let n = scores.len() as f64;
                let mean = scores.iter().sum::<f64>() / n;
                let var = scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n;
                mean + var.sqrt()
            }
            ThresholdRule::Quantile(q) => quantile(scores, q),
        }
    }
}

pub(crate) fn quantile(scores: &[f64], q: f64) -> f64 {
    let mut v = scores.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

impl fmt::Display for ThresholdRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ThresholdRule::MeanStd => write!(f, "meanstd"),
            ThresholdRule::Absolute(x) => write!(f, "abs:{x}"),
            ThresholdRule::Quantile(q) => write!(f, "quantile:{q}"),
        }
    }
}

impl FromStr for ThresholdRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Invalid(format!("threshold must be meanstd, abs:X or quantile:Q, got `{s}`"));
        if s == "meanstd" {
            return Ok(ThresholdRule::MeanStd);
        }
        let (kind, value) = s.split_once(':').ok_or_else(bad)?;
        let value: f64 = value.parse().map_err(|_| bad())?;
        match kind {
            "abs" if value.is_finite() => Ok(ThresholdRule::Absolute(value)),
            "quantile" if (0.0..=1.0).contains(&value) => Ok(ThresholdRule::Quantile(value)),
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSaliency {
    pub channel: Channel,
    pub tds: f64,
    /// One entry per class.
    pub wtds: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenSaliency {
    pub position: usize,
    pub channels: Vec<ChannelSaliency>,
}

impl TokenSaliency {
    pub fn channel(&self, c: Channel) -> Option<&ChannelSaliency> {
        self.channels.iter().find(|s| s.channel == c)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Highlight {
    pub channel: Channel,
    pub threshold: f64,
    pub positions: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentExplanation {
    pub segment_id: usize,
    pub true_class: usize,
    pub predicted: usize,
    pub logits: Vec<f64>,
    pub probs: Vec<f64>,
    /// wTDS of a zero token; subtract to get centred scores.
    pub baseline: Vec<f64>,
    pub tokens: Vec<TokenSaliency>,
    pub highlights: Vec<Highlight>,
}

impl SegmentExplanation {
    /// `wtds[class]` of every token for one channel.
    pub fn class_scores(&self, channel: Channel, class: usize) -> Vec<f64> {
        self.tokens
            .iter()
            .filter_map(|t| t.channel(channel).map(|s| s.wtds[class]))
            .collect()
    }

    /// Like [`SegmentExplanation::class_scores`] with the baseline removed.
    pub fn centered_scores(&self, channel: Channel, class: usize) -> Vec<f64> {
        self.class_scores(channel, class)
            .into_iter()
            .map(|s| s - self.baseline[class])
            .collect()
    }

    pub fn highlight(&self, channel: Channel) -> Option<&Highlight> {
        self.highlights.iter().find(|h| h.channel == channel)
    }
}

/// Saliency of every token and channel from one trace.
pub fn explain_trace(
    params: &ModelParams,
    config: &ModelConfig,
    trace: &ForwardTrace,
    segment_id: usize,
    true_class: usize,
    rule: ThresholdRule,
) -> Result<SegmentExplanation> {
    let predicted = trace.predicted();
    let channels: Vec<Channel> = config.enabled_channels().collect();
    let tokens = (0..config.segment_len)
        .map(|m| {
            let channels = channels
                .iter()
                .map(|&c| {
                    Ok(ChannelSaliency {
                        channel: c,
                        tds: tds(trace, m, c)?,
                        wtds: wtds(params, config, trace, m, c)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(TokenSaliency {
                position: m,
                channels,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut explanation = SegmentExplanation {
        segment_id,
        true_class,
        predicted,
        logits: trace.logits.clone(),
        probs: trace.probs.clone(),
        baseline: baseline(params, config),
        tokens,
        highlights: Vec::new(),
    };
    explanation.highlights = channels
        .iter()
        .map(|&c| {
            let scores = explanation.class_scores(c, predicted);
            let threshold = rule.threshold(&scores);
            Highlight {
                channel: c,
                threshold,
                positions: scores
                    .iter()
                    .enumerate()
                    .filter(|(_, &s)| s > threshold)
                    .map(|(m, _)| m)
                    .collect(),
            }
        })
        .collect();
    Ok(explanation)
}

/// One forward pass plus the per-token head products.
pub fn explain_segment(model: &Model, segment: &Segment, rule: ThresholdRule) -> Result<SegmentExplanation> {
    let trace = model.forward_segment(segment)?;
    explain_trace(&model.params, &model.config, &trace, segment.id, segment.class_index, rule)
}

/// Explains many segments concurrently; output follows input order.
pub fn explain_segments(model: &Model, segments: &[Segment], rule: ThresholdRule) -> Result<Vec<SegmentExplanation>> {
    segments
        .par_iter()
        .map(|s| explain_segment(model, s, rule))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedSegment {
    pub segment_id: usize,
    pub class: usize,
    /// Pre-softmax activation `y_k`, the sort key.
    pub activation: f64,
    pub probability: f64,
    pub predicted: usize,
    pub true_class: usize,
}

/// Sorts by activation descending, ties by segment id ascending.
pub fn sort_ranking(ranking: &mut [RankedSegment]) {
    ranking.sort_by(|a, b| {
        b.activation
            .total_cmp(&a.activation)
            .then(a.segment_id.cmp(&b.segment_id))
    });
}

/// Ranks segments for class `k` by pre-softmax activation. With
/// `correct_only`, segments the model misclassifies are left out.
pub fn rank_segments(model: &Model, segments: &[Segment], k: usize, correct_only: bool) -> Result<Vec<RankedSegment>> {
    if k >= model.config.num_classes {
        return Err(Error::OutOfRange {
            what: "class".into(),
            index: k,
            size: model.config.num_classes,
        });
    }
    let mut ranking: Vec<RankedSegment> = segments
        .par_iter()
        .map(|s| {
            let tr = model.forward_segment(s)?;
            Ok(RankedSegment {
                segment_id: s.id,
                class: k,
                activation: tr.logits[k],
                probability: tr.probs[k],
                predicted: tr.predicted(),
                true_class: s.class_index,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if correct_only {
        ranking.retain(|r| r.predicted == r.true_class);
    }
    sort_ranking(&mut ranking);
    Ok(ranking)
}

#[cfg(test)]
mod tests;
