//! Shared fixtures for unit tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Segment, TaggedToken, Vocabularies, Vocabulary, VocabularyKind, RESERVED};
use crate::model::{ModelConfig, ModelParams};

pub(crate) fn vocabs(sizes: [usize; 3]) -> Vocabularies {
    let make = |kind, n: usize| {
        let mut toks: Vec<String> = RESERVED.iter().map(|s| s.to_string()).collect();
        toks.extend((RESERVED.len()..n).map(|i| format!("t{i}")));
        Vocabulary::from_tokens(kind, toks).unwrap()
    };
    Vocabularies {
        word: make(VocabularyKind::Word, sizes[0]),
        pos: make(VocabularyKind::Pos, sizes[1]),
        lemma: make(VocabularyKind::Lemma, sizes[2]),
    }
}

/// M=6, D=(4,2,3), F=3, h=3, p=2, E=5, K=2.
pub(crate) fn tiny_config(seed: u64) -> ModelConfig {
    let mut c = ModelConfig::new(2, [9, 7, 8]);
    c.segment_len = 6;
    c.hidden_size = 5;
    for (ch, d) in c.channels.iter_mut().zip([4, 2, 3]) {
        ch.embed_dim = d;
        ch.filters = 3;
    }
    c.seed = seed;
    c
}

pub(crate) fn random_encoded(config: &ModelConfig, rng: &mut ChaCha8Rng) -> Vec<[usize; 3]> {
    (0..config.segment_len)
        .map(|_| [0, 1, 2].map(|i| rng.gen_range(0..config.channels[i].vocab_size)))
        .collect()
}

/// Re-draws every parameter (biases included) uniformly in [-1, 1].
pub(crate) fn randomize(params: &mut ModelParams, rng: &mut ChaCha8Rng) {
    let ids: Vec<_> = params.set.ids().collect();
    for id in ids {
        params
            .get_mut(id)
            .data_mut()
            .iter_mut()
            .for_each(|x| *x = rng.gen_range(-1.0..1.0));
    }
}

pub(crate) fn segment(id: usize, class_index: usize, k: usize, encoded: Vec<[usize; 3]>) -> Segment {
    let mut one_hot = vec![0; k];
    one_hot[class_index] = 1;
    Segment {
        id,
        doc_id: format!("d{id}"),
        class_index,
        one_hot,
        tokens: vec![TaggedToken::new("x", "X", "x"); encoded.len()],
        encoded,
    }
}

pub(crate) fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
