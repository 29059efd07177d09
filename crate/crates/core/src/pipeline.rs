//! Corpus-to-model glue shared by the command-line tool and the tests.

use crate::corpus::{
    apply_filters, build_vocabularies, class_labels, encode, segment_corpus, split, CorpusSplit, Document,
    FilterConfig, Segment, Vocabularies,
};
use crate::error::{Error, Result};
use crate::model::{train, Channel, Model, ModelConfig, ModelParams, TrainHistory, TrainOptions};

#[derive(Debug, Clone, PartialEq)]
pub struct PrepareOptions {
    pub segment_len: usize,
    /// Defaults to the segment length (non-overlapping windows).
    pub stride: Option<usize>,
    pub min_count: usize,
    /// `None` leaves the corpus untouched.
    pub filter: Option<FilterConfig>,
    pub seed: u64,
}

impl Default for PrepareOptions {
    fn default() -> Self {
        PrepareOptions {
            segment_len: 50,
            stride: None,
            min_count: 2,
            filter: None,
            seed: 0,
        }
    }
}

/// Segmented, split and encoded corpus ready for training.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub classes: Vec<String>,
    pub vocabularies: Vocabularies,
    pub split: CorpusSplit,
}

impl Prepared {
    /// Default model configuration sized for this corpus.
    pub fn model_config(&self, segment_len: usize, seed: u64) -> ModelConfig {
        let mut config = ModelConfig::new(self.classes.len(), self.vocabularies.sizes());
        config.segment_len = segment_len;
        config.seed = seed;
        config.class_labels = self.classes.clone();
        config
    }
}

/// Filters, segments and splits the corpus, then builds vocabularies on the
/// training side only and encodes both sides with them.
pub fn prepare(documents: &[Document], options: &PrepareOptions) -> Result<Prepared> {
    let filtered;
    let docs = match &options.filter {
        Some(f) => {
            filtered = apply_filters(documents, f);
            &filtered
        }
        None => documents,
    };
    let classes = class_labels(docs);
    if classes.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "training needs at least 2 classes, found {}",
            classes.len()
        )));
    }
    let stride = options.stride.unwrap_or(options.segment_len);
    let segments = segment_corpus(docs, &classes, options.segment_len, stride)?;
    let mut split = split(&segments, options.seed)?;
    let vocabularies = build_vocabularies(&split.train, options.min_count)?;
    for s in split.train.iter_mut().chain(split.validation.iter_mut()) {
        encode(s, &vocabularies);
    }
    Ok(Prepared {
        classes,
        vocabularies,
        split,
    })
}

/// Initializes a model from `config` and trains it on `prepared`.
pub fn fit(prepared: &Prepared, config: ModelConfig, options: &TrainOptions) -> Result<(Model, TrainHistory)> {
    config.validate()?;
    let init = ModelParams::init(&config)?;
    let (params, history) = train(&init, &config, &prepared.split, options)?;
    let model = Model::new(config, params, prepared.vocabularies.clone())?;
    Ok((model, history))
}

/// Segments a corpus for an existing model, encoding with the model's
/// vocabularies. Class labels come from the model when it has them.
pub fn segments_for_model(model: &Model, documents: &[Document], stride: Option<usize>) -> Result<Vec<Segment>> {
    let classes = if model.config.class_labels.is_empty() {
        class_labels(documents)
    } else {
        model.config.class_labels.clone()
    };
    if classes.len() != model.config.num_classes {
        return Err(Error::Invalid(format!(
            "corpus has {} classes but the model was trained on {}",
            classes.len(),
            model.config.num_classes
        )));
    }
    let m = model.config.segment_len;
    let mut segments = segment_corpus(documents, &classes, m, stride.unwrap_or(m))?;
    for s in &mut segments {
        encode(s, &model.vocabularies);
    }
    Ok(segments)
}

/// Turns channels off in `config`; at least one must stay enabled.
pub fn restrict_channels(config: &mut ModelConfig, keep: &[Channel]) -> Result<()> {
    if keep.is_empty() {
        return Err(Error::Config("at least one channel must be enabled".into()));
    }
    for c in Channel::ALL {
        config.channel_mut(c).enabled = keep.contains(&c);
    }
    Ok(())
}
