use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use super::Document;

pub const DEFAULT_SENTENCE_TAG: &str = "SENT";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassStats {
    pub words: usize,
    pub sentences: usize,
    /// Words per sentence, terminator included; 0 for a class with no tokens.
    pub avg_sentence_len: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub classes: BTreeMap<String, ClassStats>,
    pub vocabulary_size: usize,
    pub total_words: usize,
}

/// Word counts and average sentence length per class.
///
/// A sentence ends at (and includes) a token whose POS equals
/// `sentence_tag`; a trailing run without terminator at the end of a
/// document also counts as a sentence.
pub fn corpus_stats(documents: &[Document], sentence_tag: &str) -> CorpusStats {
    let mut classes: BTreeMap<String, ClassStats> = BTreeMap::new();
    let mut vocabulary: HashSet<&str> = HashSet::new();
    let mut total_words = 0;
    for doc in documents {
        let entry = classes
            .entry(doc.class_label.clone())
            .or_insert(ClassStats {
                words: 0,
                sentences: 0,
                avg_sentence_len: 0.0,
            });
        entry.words += doc.tokens.len();
        total_words += doc.tokens.len();
        let mut open = false;
        for t in &doc.tokens {
            vocabulary.insert(&t.surface);
            open = true;
            if t.pos == sentence_tag {
                entry.sentences += 1;
                open = false;
            }
        }
        if open {
            entry.sentences += 1;
        }
    }
    for c in classes.values_mut() {
        if c.sentences > 0 {
            c.avg_sentence_len = c.words as f64 / c.sentences as f64;
        }
    }
    CorpusStats {
        classes,
        vocabulary_size: vocabulary.len(),
        total_words,
    }
}
