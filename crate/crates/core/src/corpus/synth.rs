//! Planted-marker corpora with known ground truth, used to check that the
//! saliency scores point at the tokens that actually separate the classes.

use std::fmt::Write as _;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{parse::serialize, Document, TaggedToken};
use crate::error::{Error, Result};

const BACKGROUND_TAGS: [&str; 7] = ["NN", "VB", "DT", "JJ", "IN", "RB", "PRP"];
pub const SENTENCE_TAG: &str = "SENT";
pub const NAME_TAG: &str = "NAM";

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub classes: usize,
    pub segs_per_class: usize,
    pub segment_len: usize,
    pub markers_per_class: usize,
    pub background_vocab: usize,
    pub injection_rate: f64,
    /// Per-token probability of a sentence terminator in ordinary classes.
    pub sentence_rate: f64,
    /// Class whose terminator probability is doubled.
    pub pos_heavy_class: usize,
    /// Class-specific proper names (tagged `NAM`), zero to disable.
    pub names_per_class: usize,
    pub name_rate: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            classes: 4,
            segs_per_class: 500,
            segment_len: 50,
            markers_per_class: 3,
            background_vocab: 300,
            injection_rate: 0.15,
            sentence_rate: 0.06,
            pos_heavy_class: 0,
            names_per_class: 0,
            name_rate: 0.0,
            seed: 7,
        }
    }
}

/// One injected marker occurrence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct GroundTruth {
    pub segment_id: usize,
    pub position: usize,
    pub class_index: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    /// One document per segment, in class-major order, so segment ids after
    /// `segment_corpus(.., M, M)` equal document indices.
    pub documents: Vec<Document>,
    pub classes: Vec<String>,
    /// Marker surface forms per class.
    pub markers: Vec<Vec<String>>,
    pub truth: Vec<GroundTruth>,
}

impl SyntheticCorpus {
    pub fn corpus_text(&self) -> String {
        serialize(&self.documents)
    }

    /// `segment_id<TAB>token_position<TAB>class_index` per marker.
    pub fn truth_text(&self) -> String {
        let mut out = String::new();
        for g in &self.truth {
            let _ = writeln!(out, "{}\t{}\t{}", g.segment_id, g.position, g.class_index);
        }
        out
    }
}

pub fn parse_truth(text: &str) -> Result<Vec<GroundTruth>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let bad = || Error::Parse {
                line: i + 1,
                message: "expected segment_id<TAB>position<TAB>class_index".into(),
            };
            let f: Vec<usize> = l
                .split('\t')
                .map(|x| x.parse::<usize>().map_err(|_| bad()))
                .collect::<Result<_>>()?;
            match f[..] {
                [segment_id, position, class_index] => Ok(GroundTruth {
                    segment_id,
                    position,
                    class_index,
                }),
                _ => Err(bad()),
            }
        })
        .collect()
}

fn background_token(j: usize) -> TaggedToken {
    TaggedToken::new(
        format!("w{j}"),
        BACKGROUND_TAGS[j % BACKGROUND_TAGS.len()],
        format!("l{}", j / 2),
    )
}

pub fn gen_synthetic(config: &SyntheticConfig) -> Result<SyntheticCorpus> {
    let k = config.classes;
    if k < 2 {
        return Err(Error::Config("synthetic corpus needs at least 2 classes".into()));
    }
    if !(config.injection_rate > 0.0 && config.injection_rate <= 1.0) {
        return Err(Error::Config(format!(
            "injection rate must lie in (0, 1], got {}",
            config.injection_rate
        )));
    }
    if config.markers_per_class == 0 || config.segment_len == 0 {
        return Err(Error::Config("markers per class and segment length must be positive".into()));
    }
    if config.markers_per_class * k >= config.background_vocab {
        return Err(Error::Config(format!(
            "{} markers x {k} classes do not fit in a background vocabulary of {} (at least one non-marker word is needed)",
            config.markers_per_class, config.background_vocab
        )));
    }
    for (name, p) in [("sentence rate", config.sentence_rate), ("name rate", config.name_rate)] {
        if !(0.0..=0.5).contains(&p) {
            return Err(Error::Config(format!("{name} must lie in [0, 0.5], got {p}")));
        }
    }
    if config.pos_heavy_class >= k {
        return Err(Error::Config("POS-heavy class out of range".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let n_markers = config.markers_per_class * k;
    let classes: Vec<String> = (0..k).map(|c| format!("class{c}")).collect();
    let markers: Vec<Vec<usize>> = (0..k)
        .map(|c| (0..config.markers_per_class).map(|j| c * config.markers_per_class + j).collect())
        .collect();
    let sentence = TaggedToken::new(".", SENTENCE_TAG, ".");

    let mut documents = Vec::with_capacity(k * config.segs_per_class);
    let mut truth = Vec::new();
    for (c, class) in classes.iter().enumerate() {
        let sent_rate = if c == config.pos_heavy_class {
            2.0 * config.sentence_rate
        } else {
            config.sentence_rate
        };
        for _ in 0..config.segs_per_class {
            let segment_id = documents.len();
            let mut tokens = Vec::with_capacity(config.segment_len);
            for position in 0..config.segment_len {
                if rng.gen::<f64>() < config.injection_rate {
                    let m = markers[c][rng.gen_range(0..config.markers_per_class)];
                    tokens.push(background_token(m));
                    truth.push(GroundTruth {
                        segment_id,
                        position,
                        class_index: c,
                    });
                } else if config.names_per_class > 0 && rng.gen::<f64>() < config.name_rate {
                    let name = format!("Name{c}x{}", rng.gen_range(0..config.names_per_class));
                    tokens.push(TaggedToken::new(name.clone(), NAME_TAG, name));
                } else if rng.gen::<f64>() < sent_rate {
                    tokens.push(sentence.clone());
                } else {
                    tokens.push(background_token(rng.gen_range(n_markers..config.background_vocab)));
                }
            }
            documents.push(Document {
                id: format!("s{segment_id}"),
                class_label: class.clone(),
                tokens,
            });
        }
    }
    Ok(SyntheticCorpus {
        documents,
        classes,
        markers: markers
            .iter()
            .map(|ms| ms.iter().map(|&m| background_token(m).surface).collect())
            .collect(),
        truth,
    })
}
