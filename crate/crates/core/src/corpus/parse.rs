use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{Document, TaggedToken};
use crate::error::{Error, Result};

const DOC_HEADER: &str = "#doc";

pub fn parse_corpus(path: impl AsRef<Path>) -> Result<Vec<Document>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_str(&text)
}

/// Parses the token-per-line corpus format:
///
/// ```text
/// #doc id=inaugural class=Trump
/// These<TAB>DT<TAB>these
/// are<TAB>VBP<TAB>be
/// ```
///
/// Blank lines and `#` lines other than `#doc` headers are ignored.
pub fn parse_str(text: &str) -> Result<Vec<Document>> {
    let mut documents: Vec<Document> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix(DOC_HEADER) {
            if rest.is_empty() || rest.starts_with(char::is_whitespace) {
                documents.push(parse_header(rest, line_no)?);
                continue;
            }
        }
        if line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected 3 tab-separated fields, found {}", fields.len()),
            });
        }
        if let Some(empty) = fields.iter().position(|f| f.is_empty()) {
            let name = ["surface", "pos", "lemma"][empty];
            return Err(Error::Parse {
                line: line_no,
                message: format!("empty {name} field"),
            });
        }
        let doc = documents.last_mut().ok_or_else(|| Error::Parse {
            line: line_no,
            message: "token line before any #doc header".into(),
        })?;
        doc.tokens.push(TaggedToken::new(fields[0], fields[1], fields[2]));
    }
    Ok(documents)
}

fn parse_header(rest: &str, line: usize) -> Result<Document> {
    let mut id = None;
    let mut class = None;
    for pair in rest.split_whitespace() {
        match pair.split_once('=') {
            Some(("id", v)) if !v.is_empty() => id = Some(v.to_string()),
            Some(("class", v)) if !v.is_empty() => class = Some(v.to_string()),
            Some((_, _)) => {}
            None => {
                return Err(Error::Parse {
                    line,
                    message: format!("malformed header field `{pair}`"),
                })
            }
        }
    }
    match (id, class) {
        (Some(id), Some(class_label)) => Ok(Document {
            id,
            class_label,
            tokens: Vec::new(),
        }),
        (None, _) => Err(Error::Parse {
            line,
            message: "#doc header without id=".into(),
        }),
        (_, None) => Err(Error::Parse {
            line,
            message: "#doc header without class=".into(),
        }),
    }
}

pub fn serialize(documents: &[Document]) -> String {
    let mut out = String::new();
    for doc in documents {
        let _ = writeln!(out, "{DOC_HEADER} id={} class={}", doc.id, doc.class_label);
        for t in &doc.tokens {
            let _ = writeln!(out, "{}\t{}\t{}", t.surface, t.pos, t.lemma);
        }
    }
    out
}
