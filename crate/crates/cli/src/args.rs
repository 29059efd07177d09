use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use wtds::model::Channel;
use wtds::report::Format;
use wtds::saliency::ThresholdRule;

/// Train and explain word/POS/lemma convolutional text classifiers.
#[derive(Debug, Parser)]
#[command(name = "wtds", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a classifier on a tagged corpus and write a checkpoint.
    Train(TrainArgs),
    /// Token saliency for one segment.
    Explain(ExplainArgs),
    /// Key segments of a class, ordered by pre-softmax activation.
    Rank(RankArgs),
    /// Per-class word and sentence counts plus z-scores.
    Stats(StatsArgs),
    /// Agreement between wTDS and a sampled local surrogate.
    Compare(CompareArgs),
    /// Write a synthetic corpus with planted class markers.
    Gen(GenArgs),
}

#[derive(Debug, Clone)]
pub struct ChannelList(pub Vec<Channel>);

fn parse_channels(s: &str) -> Result<ChannelList, String> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let c: Channel = part.parse().map_err(|e: wtds::Error| e.to_string())?;
        if !out.contains(&c) {
            out.push(c);
        }
    }
    if out.is_empty() {
        return Err("at least one channel is required".into());
    }
    Ok(ChannelList(out))
}

fn parse_threshold(s: &str) -> Result<ThresholdRule, String> {
    s.parse().map_err(|e: wtds::Error| e.to_string())
}

fn parse_format(s: &str) -> Result<Format, String> {
    s.parse().map_err(|e: wtds::Error| e.to_string())
}

#[derive(Debug, Args)]
pub struct CorpusArgs {
    /// Tagged corpus: `#doc id=.. class=..` headers, then `surface<TAB>pos<TAB>lemma` lines.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Window advance in tokens; defaults to the segment length.
    #[arg(long)]
    pub stride: Option<usize>,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    #[arg(long, default_value = "json", value_parser = parse_format)]
    pub format: Format,
    /// Write here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// Checkpoint path.
    #[arg(long)]
    pub out: PathBuf,
    /// Training history path; defaults to `<out>.history.json`.
    #[arg(long)]
    pub history: Option<PathBuf>,
    /// Seeds the split, the initialization and the batch shuffle.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 50)]
    pub segment_len: usize,
    #[arg(long, default_value_t = 20)]
    pub epochs: usize,
    #[arg(long, default_value_t = 32)]
    pub batch: usize,
    #[arg(long, default_value_t = 3)]
    pub patience: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    /// Tokens seen fewer times in training become UNK.
    #[arg(long, default_value_t = 2)]
    pub min_count: usize,
    /// Enabled channels, comma separated (`w`, `pos`, `lemma`).
    #[arg(long, default_value = "w,pos,lemma", value_parser = parse_channels)]
    pub channels: ChannelList,
    /// Rewrite names, dates and class-unique forms before training.
    #[arg(long)]
    pub filter: bool,
    /// POS tags treated as proper names by `--filter`.
    #[arg(long, value_delimiter = ',', default_value = "NAM,NP,NPP")]
    pub name_tags: Vec<String>,
    /// POS tags treated as dates by `--filter`.
    #[arg(long, value_delimiter = ',', default_value = "NUM,DATE")]
    pub date_tags: Vec<String>,
    /// With `--filter`, leave class-unique forms alone.
    #[arg(long)]
    pub keep_unique: bool,
    /// Hidden units in the dense layer.
    #[arg(long, default_value_t = 128)]
    pub hidden: usize,
    #[arg(long, default_value_t = 64)]
    pub filters: usize,
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Debug, Args)]
pub struct ExplainArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub segment_id: usize,
    #[arg(long, default_value = "meanstd", value_parser = parse_threshold)]
    pub threshold: ThresholdRule,
    /// Report wTDS relative to the zero-token baseline.
    #[arg(long)]
    pub centered: bool,
    /// Also fit a sampled surrogate with this many samples and compare.
    #[arg(long)]
    pub lime_samples: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct RankArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(long)]
    pub model: PathBuf,
    /// Class name (or index for unnamed classes).
    #[arg(long)]
    pub class: String,
    #[arg(long, default_value_t = 10)]
    pub top: usize,
    /// Keep segments the model assigns to another class.
    #[arg(long)]
    pub include_misclassified: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, default_value = "SENT")]
    pub sentence_tag: String,
    /// z-scores only for words seen at least this often.
    #[arg(long, default_value_t = 5)]
    pub min_count: u64,
    /// Apply the training filters first, so counts match what a filtered model sees.
    #[arg(long)]
    pub filter: bool,
    /// Restrict the z-score table to one word.
    #[arg(long)]
    pub word: Option<String>,
    /// Checkpoint whose fingerprint to record in the report.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(long)]
    pub model: PathBuf,
    /// Target class; with `--segment-id` it defaults to the predicted class.
    #[arg(long, required_unless_present = "segment_id")]
    pub class: Option<String>,
    /// Compare a single segment.
    #[arg(long)]
    pub segment_id: Option<usize>,
    /// Number of correctly classified segments of `--class` to compare.
    #[arg(long, default_value_t = 50)]
    pub top: usize,
    #[arg(long, default_value_t = 5)]
    pub top_k: usize,
    #[arg(long, default_value_t = 1000)]
    pub lime_samples: usize,
    #[arg(long, default_value_t = 0.75)]
    pub kernel_width: f64,
    #[arg(long, default_value_t = 1.0)]
    pub ridge: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Corpus path.
    #[arg(long)]
    pub out: PathBuf,
    /// Marker ground truth (`segment_id<TAB>position<TAB>class_index`).
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, default_value_t = 4)]
    pub classes: usize,
    #[arg(long, default_value_t = 500)]
    pub segs_per_class: usize,
    #[arg(long, default_value_t = 50)]
    pub segment_len: usize,
    #[arg(long, default_value_t = 3)]
    pub markers: usize,
    #[arg(long, default_value_t = 300)]
    pub background: usize,
    #[arg(long, default_value_t = 0.15)]
    pub rate: f64,
    #[arg(long, default_value_t = 0.06)]
    pub sentence_rate: f64,
    #[arg(long, default_value_t = 0)]
    pub pos_heavy_class: usize,
    #[arg(long, default_value_t = 0)]
    pub names: usize,
    #[arg(long, default_value_t = 0.0)]
    pub name_rate: f64,
}
