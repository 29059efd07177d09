use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{Segment, TaggedToken};
use crate::error::{Error, Result};

pub const PAD: &str = "<PAD>";
pub const UNK: &str = "<UNK>";
pub const NAMETOK: &str = "NAMETOK";
pub const DATETOK: &str = "DATETOK";
pub const UNIQTOK: &str = "UNIQTOK";

pub const PAD_INDEX: usize = 0;
pub const UNK_INDEX: usize = 1;

/// Tokens occupying the first indices of every vocabulary.
pub const RESERVED: [&str; 5] = [PAD, UNK, NAMETOK, DATETOK, UNIQTOK];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VocabularyKind {
    Word,
    Pos,
    Lemma,
}

impl VocabularyKind {
    pub const ALL: [VocabularyKind; 3] = [VocabularyKind::Word, VocabularyKind::Pos, VocabularyKind::Lemma];

    pub fn name(&self) -> &'static str {
        match self {
            VocabularyKind::Word => "word",
            VocabularyKind::Pos => "pos",
            VocabularyKind::Lemma => "lemma",
        }
    }

    pub fn field<'a>(&self, token: &'a TaggedToken) -> &'a str {
        match self {
            VocabularyKind::Word => &token.surface,
            VocabularyKind::Pos => &token.pos,
            VocabularyKind::Lemma => &token.lemma,
        }
    }
}

impl std::str::FromStr for VocabularyKind {
    type Err = Error;

    /// Accepts `w`/`word`, `pos` and `l`/`lemma`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "w" | "word" => Ok(VocabularyKind::Word),
            "pos" => Ok(VocabularyKind::Pos),
            "l" | "lemma" => Ok(VocabularyKind::Lemma),
            _ => Err(Error::Invalid(format!("unknown channel `{s}`"))),
        }
    }
}

/// Dense token/index bijection with the reserved tokens at the front.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawVocabulary", into = "RawVocabulary")]
pub struct Vocabulary {
    kind: VocabularyKind,
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct RawVocabulary {
    kind: VocabularyKind,
    tokens: Vec<String>,
}

impl From<Vocabulary> for RawVocabulary {
    fn from(v: Vocabulary) -> Self {
        RawVocabulary {
            kind: v.kind,
            tokens: v.tokens,
        }
    }
}

impl TryFrom<RawVocabulary> for Vocabulary {
    type Error = Error;

    fn try_from(raw: RawVocabulary) -> Result<Self> {
        Vocabulary::from_tokens(raw.kind, raw.tokens)
    }
}

impl Vocabulary {
    pub fn new(kind: VocabularyKind) -> Self {
        let tokens: Vec<String> = RESERVED.iter().map(|s| s.to_string()).collect();
        let index = tokens.iter().cloned().enumerate().map(|(i, t)| (t, i)).collect();
        Vocabulary {
            kind,
            tokens,
            index,
        }
    }

    /// Rebuilds a vocabulary from its index-ordered token list.
    pub fn from_tokens(kind: VocabularyKind, tokens: Vec<String>) -> Result<Self> {
        if tokens.len() < RESERVED.len() || tokens[..RESERVED.len()] != RESERVED {
            return Err(Error::Invalid(format!(
                "{kind:?} vocabulary does not start with the reserved tokens"
            )));
        }
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if index.insert(t.clone(), i).is_some() {
                return Err(Error::Invalid(format!("duplicate vocabulary entry `{t}`")));
            }
        }
        Ok(Vocabulary {
            kind,
            tokens,
            index,
        })
    }

    fn insert(&mut self, token: &str) -> usize {
        if let Some(&i) = self.index.get(token) {
            return i;
        }
        let i = self.tokens.len();
        self.tokens.push(token.to_string());
        self.index.insert(token.to_string(), i);
        i
    }

    pub fn kind(&self) -> VocabularyKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Index of `token`, or `UNK_INDEX` when absent.
    pub fn encode(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or(UNK_INDEX)
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn decode(&self, index: usize) -> Option<&str> {
        self.tokens.get(index).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabularies {
    pub word: Vocabulary,
    pub pos: Vocabulary,
    pub lemma: Vocabulary,
}

impl Vocabularies {
    pub fn get(&self, kind: VocabularyKind) -> &Vocabulary {
        match kind {
            VocabularyKind::Word => &self.word,
            VocabularyKind::Pos => &self.pos,
            VocabularyKind::Lemma => &self.lemma,
        }
    }

    pub fn sizes(&self) -> [usize; 3] {
        [self.word.len(), self.pos.len(), self.lemma.len()]
    }

    pub fn encode_tokens(&self, tokens: &[TaggedToken]) -> Vec<[usize; 3]> {
        tokens
            .iter()
            .map(|t| {
                [
                    self.word.encode(&t.surface),
                    self.pos.encode(&t.pos),
                    self.lemma.encode(&t.lemma),
                ]
            })
            .collect()
    }
}

/// Builds the three vocabularies. Tokens seen fewer than `min_count` times
/// are left out (and therefore encode to UNK). Indices are assigned in
/// first-appearance order after the reserved block.
pub fn build_vocabularies(segments: &[Segment], min_count: usize) -> Result<Vocabularies> {
    if min_count == 0 {
        return Err(Error::Config("min_count must be at least 1".into()));
    }
    let build = |kind: VocabularyKind| {
        let mut counts: HashMap<&str, usize> = HashMap::new();
        let mut order: Vec<&str> = Vec::new();
        for t in segments.iter().flat_map(|s| &s.tokens) {
            let key = kind.field(t);
            let c = counts.entry(key).or_insert(0);
            if *c == 0 {
                order.push(key);
            }
            *c += 1;
        }
        let mut vocab = Vocabulary::new(kind);
        for key in order {
            if counts[key] >= min_count {
                vocab.insert(key);
            }
        }
        vocab
    };
    Ok(Vocabularies {
        word: build(VocabularyKind::Word),
        pos: build(VocabularyKind::Pos),
        lemma: build(VocabularyKind::Lemma),
    })
}

pub fn encode(segment: &mut Segment, vocabularies: &Vocabularies) {
    segment.encoded = vocabularies.encode_tokens(&segment.tokens);
}
