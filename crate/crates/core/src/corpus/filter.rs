use std::collections::{BTreeSet, HashMap};

use super::vocab::{DATETOK, NAMETOK, UNIQTOK};
use super::Document;

/// Replacement rules applied before vocabulary construction.
///
/// An empty tag set disables the corresponding rule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FilterConfig {
    pub name_tags: BTreeSet<String>,
    pub date_tags: BTreeSet<String>,
    pub unique_to_class: bool,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            name_tags: ["NAM", "NP", "NPP"].iter().map(|s| s.to_string()).collect(),
            date_tags: ["NUM", "DATE"].iter().map(|s| s.to_string()).collect(),
            unique_to_class: true,
        }
    }
}

impl FilterConfig {
    pub fn disabled() -> Self {
        FilterConfig {
            name_tags: BTreeSet::new(),
            date_tags: BTreeSet::new(),
            unique_to_class: false,
        }
    }
}

/// Rewrites proper names and dates (by POS tag) to `NAMETOK`/`DATETOK` in
/// both surface and lemma, then replaces surface forms and lemmas that occur
/// in a single class only with `UNIQTOK`. Class membership is computed on the
/// unfiltered corpus. POS tags and token counts are never changed.
pub fn apply_filters(documents: &[Document], config: &FilterConfig) -> Vec<Document> {
    let n_classes = documents
        .iter()
        .map(|d| d.class_label.as_str())
        .collect::<BTreeSet<_>>()
        .len();
    let check_unique = config.unique_to_class && n_classes > 1;

    let mut surface_classes: HashMap<&str, BTreeSet<&str>> = HashMap::new();
    let mut lemma_classes: HashMap<&str, BTreeSet<&str>> = HashMap::new();
    if check_unique {
        for doc in documents {
            for t in &doc.tokens {
                surface_classes
                    .entry(&t.surface)
                    .or_default()
                    .insert(&doc.class_label);
                lemma_classes
                    .entry(&t.lemma)
                    .or_default()
                    .insert(&doc.class_label);
            }
        }
    }
    let single = |map: &HashMap<&str, BTreeSet<&str>>, key: &str| {
        check_unique && map.get(key).is_some_and(|c| c.len() == 1)
    };

    documents
        .iter()
        .map(|doc| {
            let tokens = doc
                .tokens
                .iter()
                .map(|t| {
                    let mut t = t.clone();
                    if config.name_tags.contains(&t.pos) {
                        t.surface = NAMETOK.into();
                        t.lemma = NAMETOK.into();
                    } else if config.date_tags.contains(&t.pos) {
                        t.surface = DATETOK.into();
                        t.lemma = DATETOK.into();
                    } else {
                        if single(&surface_classes, &t.surface) {
                            t.surface = UNIQTOK.into();
                        }
                        if single(&lemma_classes, &t.lemma) {
                            t.lemma = UNIQTOK.into();
                        }
                    }
                    t
                })
                .collect();
            Document {
                id: doc.id.clone(),
                class_label: doc.class_label.clone(),
                tokens,
            }
        })
        .collect()
}
