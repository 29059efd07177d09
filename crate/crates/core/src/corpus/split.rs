use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::Segment;
use crate::error::{Error, Result};

const TRAIN_FRACTION: f64 = 0.8;
const MIN_SEGMENTS: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusSplit {
    pub train: Vec<Segment>,
    pub validation: Vec<Segment>,
    pub seed: u64,
}

impl CorpusSplit {
    pub fn len(&self) -> usize {
        self.train.len() + self.validation.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn validation_count(n: usize) -> usize {
    ((n as f64 * (1.0 - TRAIN_FRACTION)).round() as usize).clamp(1, n - 1)
}

/// Seeded 80/20 partition at the segment level.
pub fn split(segments: &[Segment], seed: u64) -> Result<CorpusSplit> {
    if segments.len() < MIN_SEGMENTS {
        return Err(Error::InsufficientData(format!(
            "need at least {MIN_SEGMENTS} segments to split, found {}",
            segments.len()
        )));
    }
    let mut order: Vec<usize> = (0..segments.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_val = validation_count(segments.len());
    let mut validation: Vec<Segment> = order[..n_val].iter().map(|&i| segments[i].clone()).collect();
    let mut train: Vec<Segment> = order[n_val..].iter().map(|&i| segments[i].clone()).collect();
    train.sort_by_key(|s| s.id);
    validation.sort_by_key(|s| s.id);
    Ok(CorpusSplit {
        train,
        validation,
        seed,
    })
}

/// Seeded partition that keeps every document's segments on one side.
/// Documents are assigned to validation until it holds at least 20% of the
/// segments, so proportions are only approximate for uneven documents.
pub fn split_by_document(segments: &[Segment], seed: u64) -> Result<CorpusSplit> {
    if segments.len() < MIN_SEGMENTS {
        return Err(Error::InsufficientData(format!(
            "need at least {MIN_SEGMENTS} segments to split, found {}",
            segments.len()
        )));
    }
    let mut docs: Vec<&str> = Vec::new();
    for s in segments {
        if !docs.contains(&s.doc_id.as_str()) {
            docs.push(&s.doc_id);
        }
    }
    if docs.len() < 2 {
        return Err(Error::InsufficientData(
            "document-level split needs at least 2 documents".into(),
        ));
    }
    docs.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let target = validation_count(segments.len());
    let mut val_docs = Vec::new();
    let mut n_val = 0;
    for d in &docs[..docs.len() - 1] {
        if n_val >= target {
            break;
        }
        n_val += segments.iter().filter(|s| s.doc_id == *d).count();
        val_docs.push(*d);
    }
    let (validation, train) = segments
        .iter()
        .cloned()
        .partition(|s| val_docs.contains(&s.doc_id.as_str()));
    Ok(CorpusSplit {
        train,
        validation,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    fn segments(n: usize) -> Vec<Segment> {
        (0..n)
            .map(|id| Segment {
                id,
                doc_id: format!("doc{}", id / 3),
                class_index: 0,
                one_hot: vec![1],
                tokens: Vec::new(),
                encoded: Vec::new(),
            })
            .collect()
    }

    fn ids(s: &[Segment]) -> Vec<usize> {
        s.iter().map(|s| s.id).collect()
    }

    #[test]
    fn ten_segments() {
        let sp = split(&segments(10), 1).unwrap();
        assert_eq!(sp.train.len(), 8);
        assert_eq!(sp.validation.len(), 2);
    }

    #[test]
    fn same_seed_same_partition() {
        let a = split(&segments(50), 3).unwrap();
        let b = split(&segments(50), 3).unwrap();
        assert_eq!(ids(&a.validation), ids(&b.validation));
    }

    #[test]
    fn different_seeds_differ() {
        let a = split(&segments(100), 1).unwrap();
        let b = split(&segments(100), 2).unwrap();
        assert_ne!(ids(&a.validation), ids(&b.validation));
    }

    #[test]
    fn too_few_segments() {
        assert!(matches!(split(&segments(4), 0), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn document_split_keeps_documents_whole() {
        let sp = split_by_document(&segments(30), 5).unwrap();
        let tr: BTreeSet<&str> = sp.train.iter().map(|s| s.doc_id.as_str()).collect();
        let va: BTreeSet<&str> = sp.validation.iter().map(|s| s.doc_id.as_str()).collect();
        assert!(tr.is_disjoint(&va));
        assert_eq!(sp.len(), 30);
        assert_eq!(sp.validation.len(), 6);
    }

    proptest! {
        #[test]
        fn partitions(n in 5usize..200, seed in any::<u64>()) {
            let sp = split(&segments(n), seed).unwrap();
            let tr: BTreeSet<usize> = ids(&sp.train).into_iter().collect();
            let va: BTreeSet<usize> = ids(&sp.validation).into_iter().collect();
            prop_assert!(tr.is_disjoint(&va));
            prop_assert_eq!(tr.len() + va.len(), n);
            let expected = 0.8 * n as f64;
            prop_assert!((sp.train.len() as f64 - expected).abs() <= 1.0);
        }
    }
}
