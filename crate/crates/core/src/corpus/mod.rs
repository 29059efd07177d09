//! Tagged corpora: parsing, filtering, segmentation, vocabularies,
//! train/validation splitting, descriptive statistics and synthetic data.

mod filter;
mod parse;
mod split;
mod stats;
mod synth;
mod vocab;

pub use filter::{apply_filters, FilterConfig};
pub use parse::{parse_corpus, parse_str, serialize};
pub use split::{split, split_by_document, CorpusSplit};
pub use stats::{corpus_stats, ClassStats, CorpusStats, DEFAULT_SENTENCE_TAG};
pub use synth::{gen_synthetic, parse_truth, GroundTruth, SyntheticConfig, SyntheticCorpus, NAME_TAG};
pub use vocab::{
    build_vocabularies, encode, Vocabularies, Vocabulary, VocabularyKind, DATETOK, NAMETOK, PAD,
    PAD_INDEX, RESERVED, UNIQTOK, UNK, UNK_INDEX,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One token with its three textual facets.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TaggedToken {
    pub surface: String,
    pub pos: String,
    pub lemma: String,
}

impl TaggedToken {
    pub fn new(surface: impl Into<String>, pos: impl Into<String>, lemma: impl Into<String>) -> Self {
        TaggedToken {
            surface: surface.into(),
            pos: pos.into(),
            lemma: lemma.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub class_label: String,
    pub tokens: Vec<TaggedToken>,
}

/// A window of exactly `M` tokens carrying its document's class.
///
/// `encoded` is empty until [`encode`] has been applied; afterwards it holds
/// one `[word, pos, lemma]` index triple per token.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub id: usize,
    pub doc_id: String,
    pub class_index: usize,
    pub one_hot: Vec<u8>,
    pub tokens: Vec<TaggedToken>,
    pub encoded: Vec<[usize; 3]>,
}

impl Segment {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn is_encoded(&self) -> bool {
        self.encoded.len() == self.tokens.len() && !self.tokens.is_empty()
    }
}

/// Class labels in first-appearance order over the documents.
pub fn class_labels(documents: &[Document]) -> Vec<String> {
    let mut labels: Vec<String> = Vec::new();
    for doc in documents {
        if !labels.contains(&doc.class_label) {
            labels.push(doc.class_label.clone());
        }
    }
    labels
}

/// Cuts every document into windows of `segment_len` tokens advancing by
/// `stride`. A trailing incomplete window is dropped. Segment ids are dense
/// and follow document order.
pub fn segment_corpus(
    documents: &[Document],
    classes: &[String],
    segment_len: usize,
    stride: usize,
) -> Result<Vec<Segment>> {
    if segment_len == 0 {
        return Err(Error::Config("segment length must be at least 1".into()));
    }
    if stride == 0 || stride > segment_len {
        return Err(Error::Config(format!(
            "stride must lie in [1, {segment_len}], got {stride}"
        )));
    }
    let mut segments = Vec::new();
    for doc in documents {
        let class_index = classes
            .iter()
            .position(|c| *c == doc.class_label)
            .ok_or_else(|| Error::UnknownClass(doc.class_label.clone()))?;
        let mut one_hot = vec![0u8; classes.len()];
        one_hot[class_index] = 1;
        let mut start = 0;
        while start + segment_len <= doc.tokens.len() {
            segments.push(Segment {
                id: segments.len(),
                doc_id: doc.id.clone(),
                class_index,
                one_hot: one_hot.clone(),
                tokens: doc.tokens[start..start + segment_len].to_vec(),
                encoded: Vec::new(),
            });
            start += stride;
        }
    }
    Ok(segments)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(id: &str, class: &str, n: usize) -> Document {
        Document {
            id: id.into(),
            class_label: class.into(),
            tokens: (0..n)
                .map(|i| TaggedToken::new(format!("t{i}"), "NN", format!("t{i}")))
                .collect(),
        }
    }

    #[test]
    fn hundred_tokens_make_two_windows() {
        let docs = vec![doc("a", "X", 100)];
        let segs = segment_corpus(&docs, &class_labels(&docs), 50, 50).unwrap();
        assert_eq!(segs.len(), 2);
        assert!(segs.iter().all(|s| s.len() == 50));
        assert_eq!(segs[1].tokens[0].surface, "t50");
    }

    #[test]
    fn short_document_is_dropped() {
        let docs = vec![doc("a", "X", 49)];
        assert!(segment_corpus(&docs, &class_labels(&docs), 50, 50)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn classes_follow_documents() {
        let docs = vec![doc("a", "X", 50), doc("b", "Y", 50), doc("c", "Z", 50)];
        let segs = segment_corpus(&docs, &class_labels(&docs), 50, 50).unwrap();
        let idx: Vec<usize> = segs.iter().map(|s| s.class_index).collect();
        assert_eq!(idx, vec![0, 1, 2]);
        for s in &segs {
            assert_eq!(s.one_hot.iter().map(|&b| b as usize).sum::<usize>(), 1);
            assert_eq!(s.one_hot[s.class_index], 1);
        }
    }

    #[test]
    fn overlapping_stride() {
        let docs = vec![doc("a", "X", 10)];
        let segs = segment_corpus(&docs, &class_labels(&docs), 4, 2).unwrap();
        // starts 0,2,4,6
        assert_eq!(segs.len(), 4);
    }

    #[test]
    fn unknown_class_is_an_error() {
        let docs = vec![doc("a", "X", 10)];
        let err = segment_corpus(&docs, &["Y".to_string()], 5, 5).unwrap_err();
        assert!(matches!(err, Error::UnknownClass(c) if c == "X"));
    }

    #[test]
    fn bad_stride_is_rejected() {
        let docs = vec![doc("a", "X", 10)];
        let classes = class_labels(&docs);
        assert!(segment_corpus(&docs, &classes, 5, 0).is_err());
        assert!(segment_corpus(&docs, &classes, 5, 6).is_err());
        assert!(segment_corpus(&docs, &classes, 0, 1).is_err());
    }
}
