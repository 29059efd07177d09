use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::corpus::{class_labels, Document};
use crate::error::{Error, Result};

/// Over- or under-use of one surface form in one class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZScoreRow {
    pub word: String,
    pub class: String,
    /// Occurrences of the word in the class.
    pub observed: u64,
    /// Tokens in the class.
    pub class_size: u64,
    /// Occurrences of the word in the whole corpus.
    pub corpus_count: u64,
    /// Tokens in the whole corpus.
    pub corpus_size: u64,
    pub z: f64,
}

/// Normal approximation of the hypergeometric draw of `k` occurrences in a
/// subcorpus of `n` tokens, when the word occurs `kw` times in `t` tokens.
///
/// Returns 0 when the variance vanishes.
pub fn zscore_counts(k: u64, n: u64, kw: u64, t: u64) -> Result<f64> {
    if t == 0 || n > t || kw > t || k > n.min(kw) {
        return Err(Error::Invalid(format!(
            "inconsistent counts k={k} n={n} K={kw} T={t}"
        )));
    }
    let (k, n, kw, t) = (k as f64, n as f64, kw as f64, t as f64);
    let p = kw / t;
    let mean = n * p;
    let var = if t > 1.0 {
        n * p * (1.0 - p) * (t - n) / (t - 1.0)
    } else {
        0.0
    };
    if var <= 0.0 {
        return Ok(0.0);
    }
    Ok((k - mean) / var.sqrt())
}

struct Counts {
    /// (word, class index) -> count
    cell: HashMap<(String, usize), u64>,
    word: HashMap<String, u64>,
    class: Vec<u64>,
    total: u64,
}

fn count(documents: &[Document], classes: &[String]) -> Counts {
    let index: HashMap<&str, usize> = classes.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
    let mut counts = Counts {
        cell: HashMap::new(),
        word: HashMap::new(),
        class: vec![0; classes.len()],
        total: 0,
    };
    for doc in documents {
        let c = index[doc.class_label.as_str()];
        for t in &doc.tokens {
            *counts.cell.entry((t.surface.clone(), c)).or_default() += 1;
            *counts.word.entry(t.surface.clone()).or_default() += 1;
            counts.class[c] += 1;
            counts.total += 1;
        }
    }
    counts
}

/// z-score of a surface form in one class of the corpus.
pub fn zscore(documents: &[Document], word: &str, class: &str) -> Result<f64> {
    let classes = class_labels(documents);
    let c = classes
        .iter()
        .position(|l| l == class)
        .ok_or_else(|| Error::UnknownClass(class.to_string()))?;
    let counts = count(documents, &classes);
    let kw = *counts.word.get(word).ok_or_else(|| Error::AbsentWord(word.to_string()))?;
    let k = counts.cell.get(&(word.to_string(), c)).copied().unwrap_or(0);
    zscore_counts(k, counts.class[c], kw, counts.total)
}

/// Every (word, class) pair for words seen at least `min_count` times,
/// sorted by word, then class order of first appearance.
pub fn zscore_table(documents: &[Document], min_count: u64) -> Result<Vec<ZScoreRow>> {
    let classes = class_labels(documents);
    let counts = count(documents, &classes);
    let words: BTreeMap<&String, u64> = counts
        .word
        .iter()
        .filter(|(_, &n)| n >= min_count)
        .map(|(w, &n)| (w, n))
        .collect();
    let mut rows = Vec::with_capacity(words.len() * classes.len());
    for (word, kw) in words {
        for (c, class) in classes.iter().enumerate() {
            let k = counts.cell.get(&(word.clone(), c)).copied().unwrap_or(0);
            rows.push(ZScoreRow {
                word: word.clone(),
                class: class.clone(),
                observed: k,
                class_size: counts.class[c],
                corpus_count: kw,
                corpus_size: counts.total,
                z: zscore_counts(k, counts.class[c], kw, counts.total)?,
            });
        }
    }
    Ok(rows)
}
