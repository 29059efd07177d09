//! Serializable reports for explanations, rankings, corpus statistics and
//! explainer comparisons, with JSON, TSV and static HTML renderings.
//!
//! Every JSON document carries [`SCHEMA_VERSION`] and the fingerprint of the
//! model it was computed with.

mod html;
mod tsv;

pub use html::{compare_html, explain_html, rank_html, stats_html};
pub use tsv::{compare_tsv, explain_tsv, rank_tsv, stats_tsv};

use std::fmt;
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::baselines::{Comparison, LimeOptions, ZScoreRow};
use crate::corpus::{CorpusStats, Segment};
use crate::error::{Error, Result};
use crate::model::{Channel, Model};
use crate::saliency::{Highlight, RankedSegment, SegmentExplanation, ThresholdRule};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Tsv,
    Html,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "tsv" => Ok(Format::Tsv),
            "html" => Ok(Format::Html),
            _ => Err(Error::Invalid(format!("format must be json, tsv or html, got `{s}`"))),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Json => "json",
            Format::Tsv => "tsv",
            Format::Html => "html",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentSummary {
    pub id: usize,
    pub doc_id: String,
    pub true_class: String,
    pub predicted: String,
    pub logits: Vec<f64>,
    pub probabilities: Vec<f64>,
    /// wTDS of an all-zero token, per class.
    pub baseline: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRecord {
    pub channel: Channel,
    pub tds: f64,
    /// One value per class, centred when the report says so.
    pub wtds: Vec<f64>,
    pub highlighted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenRecord {
    pub position: usize,
    pub surface: String,
    pub pos: String,
    pub lemma: String,
    pub saliency: Vec<ChannelRecord>,
}

/// Where the explained segment sits in the ranking of its predicted class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingContext {
    pub class: String,
    /// 1-based.
    pub rank: usize,
    pub of: usize,
    pub activation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplainReport {
    pub schema_version: u32,
    pub model_fingerprint: String,
    pub classes: Vec<String>,
    pub channels: Vec<Channel>,
    pub threshold: String,
    pub centered: bool,
    pub segment: SegmentSummary,
    pub tokens: Vec<TokenRecord>,
    /// Highlights for the predicted class.
    pub highlights: Vec<Highlight>,
    pub ranking: Option<RankingContext>,
    pub comparison: Option<Comparison>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportOptions {
    pub rule: ThresholdRule,
    /// Subtract the baseline from every wTDS value before display and
    /// thresholding.
    pub centered: bool,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions {
            rule: ThresholdRule::MeanStd,
            centered: false,
        }
    }
}

impl ExplainReport {
    /// Displayed `wtds[class]` of every token for one channel.
    pub fn scores(&self, channel: Channel, class: usize) -> Vec<f64> {
        self.tokens
            .iter()
            .filter_map(|t| t.saliency.iter().find(|s| s.channel == channel).map(|s| s.wtds[class]))
            .collect()
    }

    pub fn highlight(&self, channel: Channel) -> Option<&Highlight> {
        self.highlights.iter().find(|h| h.channel == channel)
    }
}

pub fn explain_report(
    model: &Model,
    segment: &Segment,
    explanation: &SegmentExplanation,
    options: &ReportOptions,
    ranking: Option<RankingContext>,
    comparison: Option<Comparison>,
) -> Result<ExplainReport> {
    let config = &model.config;
    if segment.tokens.len() != explanation.tokens.len() {
        return Err(Error::Shape {
            tensor: "segment tokens".into(),
            expected: vec![explanation.tokens.len()],
            found: vec![segment.tokens.len()],
        });
    }
    let channels: Vec<Channel> = config.enabled_channels().collect();
    let shift = |class: usize| if options.centered { explanation.baseline[class] } else { 0.0 };
    let predicted = explanation.predicted;
    let highlights: Vec<Highlight> = channels
        .iter()
        .map(|&c| {
            let scores: Vec<f64> = explanation
                .class_scores(c, predicted)
                .into_iter()
                .map(|s| s - shift(predicted))
                .collect();
            let threshold = options.rule.threshold(&scores);
            Highlight {
                channel: c,
                threshold,
                positions: (0..scores.len()).filter(|&m| scores[m] > threshold).collect(),
            }
        })
        .collect();
    let tokens = explanation
        .tokens
        .iter()
        .zip(&segment.tokens)
        .map(|(t, tok)| TokenRecord {
            position: t.position,
            surface: tok.surface.clone(),
            pos: tok.pos.clone(),
            lemma: tok.lemma.clone(),
            saliency: t
                .channels
                .iter()
                .map(|s| ChannelRecord {
                    channel: s.channel,
                    tds: s.tds,
                    wtds: s.wtds.iter().enumerate().map(|(k, v)| v - shift(k)).collect(),
                    highlighted: highlights
                        .iter()
                        .any(|h| h.channel == s.channel && h.positions.contains(&t.position)),
                })
                .collect(),
        })
        .collect();
    Ok(ExplainReport {
        schema_version: SCHEMA_VERSION,
        model_fingerprint: model.fingerprint()?,
        classes: (0..config.num_classes).map(|k| config.class_label(k)).collect(),
        channels,
        threshold: options.rule.to_string(),
        centered: options.centered,
        segment: SegmentSummary {
            id: segment.id,
            doc_id: segment.doc_id.clone(),
            true_class: config.class_label(explanation.true_class),
            predicted: config.class_label(predicted),
            logits: explanation.logits.clone(),
            probabilities: explanation.probs.clone(),
            baseline: explanation.baseline.clone(),
        },
        tokens,
        highlights,
        ranking,
        comparison,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankRow {
    /// 1-based.
    pub rank: usize,
    pub segment_id: usize,
    pub doc_id: String,
    pub activation: f64,
    pub probability: f64,
    pub predicted: String,
    pub true_class: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankReport {
    pub schema_version: u32,
    pub model_fingerprint: String,
    pub class: String,
    pub correct_only: bool,
    pub rows: Vec<RankRow>,
}

/// Keeps the first `top` entries of a sorted ranking. `segments` must
/// contain every ranked segment id.
pub fn rank_report(
    model: &Model,
    segments: &[Segment],
    class: usize,
    ranking: &[RankedSegment],
    top: usize,
    correct_only: bool,
) -> Result<RankReport> {
    let rows = ranking
        .iter()
        .take(top)
        .enumerate()
        .map(|(i, r)| {
            let seg = segments
                .iter()
                .find(|s| s.id == r.segment_id)
                .ok_or_else(|| Error::Invalid(format!("ranked segment {} not found", r.segment_id)))?;
            Ok(RankRow {
                rank: i + 1,
                segment_id: r.segment_id,
                doc_id: seg.doc_id.clone(),
                activation: r.activation,
                probability: r.probability,
                predicted: model.config.class_label(r.predicted),
                true_class: model.config.class_label(r.true_class),
                text: seg.tokens.iter().map(|t| t.surface.as_str()).collect::<Vec<_>>().join(" "),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RankReport {
        schema_version: SCHEMA_VERSION,
        model_fingerprint: model.fingerprint()?,
        class: model.config.class_label(class),
        correct_only,
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub schema_version: u32,
    /// Statistics are computed from the corpus alone, so this is `None`
    /// unless a model was supplied.
    pub model_fingerprint: Option<String>,
    pub stats: CorpusStats,
    pub zscores: Vec<ZScoreRow>,
}

impl StatsReport {
    pub fn new(stats: CorpusStats, zscores: Vec<ZScoreRow>, model: Option<&Model>) -> Result<Self> {
        Ok(StatsReport {
            schema_version: SCHEMA_VERSION,
            model_fingerprint: model.map(|m| m.fingerprint()).transpose()?,
            stats,
            zscores,
        })
    }
}

/// Shown in every comparison report: the sampling explainer's kernel and
/// representation are conventional defaults, not settings the wTDS method
/// prescribes.
pub const LIME_SETTINGS_NOTE: &str = "surrogate settings (token-presence mask with PAD replacement, \
exponential cosine kernel, ridge penalty) are conventional defaults";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub schema_version: u32,
    pub model_fingerprint: String,
    pub class: String,
    pub lime: LimeOptions,
    pub note: String,
    pub top_k: usize,
    pub segments: Vec<Comparison>,
    /// Averages over segments where the metric is defined.
    pub mean_sign_agreement: Option<f64>,
    pub mean_kendall_tau: Option<f64>,
}

fn mean_defined(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = values.flatten().collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

impl CompareReport {
    pub fn new(model: &Model, class: usize, lime: LimeOptions, top_k: usize, segments: Vec<Comparison>) -> Result<Self> {
        Ok(CompareReport {
            schema_version: SCHEMA_VERSION,
            model_fingerprint: model.fingerprint()?,
            class: model.config.class_label(class),
            lime,
            note: LIME_SETTINGS_NOTE.into(),
            top_k,
            mean_sign_agreement: mean_defined(segments.iter().map(|c| c.agreement.sign_agreement)),
            mean_kendall_tau: mean_defined(segments.iter().map(|c| c.agreement.kendall_tau)),
            segments,
        })
    }
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(report: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(report).map_err(|e| Error::Invalid(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn from_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Corrupted(e.to_string()))
}
