//! Tab-separated renderings. Each starts with a header row; column order is
//! part of the output contract.

use std::fmt::Write;

use super::{CompareReport, ExplainReport, RankReport, StatsReport};

fn clean(s: &str) -> String {
    s.replace(['\t', '\n', '\r'], " ")
}

/// One row per token and channel:
/// `position surface pos lemma channel tds wtds:<class>... highlighted`.
pub fn explain_tsv(report: &ExplainReport) -> String {
    let mut out = String::from("position\tsurface\tpos\tlemma\tchannel\ttds");
    for c in &report.classes {
        write!(out, "\twtds:{}", clean(c)).unwrap();
    }
    out.push_str("\thighlighted\n");
    for t in &report.tokens {
        for s in &t.saliency {
            write!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}",
                t.position,
                clean(&t.surface),
                clean(&t.pos),
                clean(&t.lemma),
                s.channel.name(),
                s.tds
            )
            .unwrap();
            for v in &s.wtds {
                write!(out, "\t{v}").unwrap();
            }
            writeln!(out, "\t{}", s.highlighted as u8).unwrap();
        }
    }
    out
}

/// `rank segment_id doc_id activation probability predicted true_class text`.
pub fn rank_tsv(report: &RankReport) -> String {
    let mut out = String::from("rank\tsegment_id\tdoc_id\tactivation\tprobability\tpredicted\ttrue_class\ttext\n");
    for r in &report.rows {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.rank,
            r.segment_id,
            clean(&r.doc_id),
            r.activation,
            r.probability,
            clean(&r.predicted),
            clean(&r.true_class),
            clean(&r.text)
        )
        .unwrap();
    }
    out
}

/// Two blocks separated by a blank line: per-class statistics
/// (`class words sentences avg_sentence_len`), then z-scores
/// (`word class observed class_size corpus_count corpus_size z`).
pub fn stats_tsv(report: &StatsReport) -> String {
    let mut out = String::from("class\twords\tsentences\tavg_sentence_len\n");
    for (class, s) in &report.stats.classes {
        writeln!(out, "{}\t{}\t{}\t{}", clean(class), s.words, s.sentences, s.avg_sentence_len).unwrap();
    }
    out.push_str("\nword\tclass\tobserved\tclass_size\tcorpus_count\tcorpus_size\tz\n");
    for r in &report.zscores {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            clean(&r.word),
            clean(&r.class),
            r.observed,
            r.class_size,
            r.corpus_count,
            r.corpus_size,
            r.z
        )
        .unwrap();
    }
    out
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_else(|| "NA".into())
}

/// `segment_id sign_agreement sign_support kendall_tau lime_r2
/// wtds_evaluations lime_evaluations`; undefined metrics print as `NA`.
pub fn compare_tsv(report: &CompareReport) -> String {
    let mut out = String::from(
        "segment_id\tsign_agreement\tsign_support\tkendall_tau\tlime_r2\twtds_evaluations\tlime_evaluations\n",
    );
    for c in &report.segments {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            c.segment_id,
            opt(c.agreement.sign_agreement),
            c.agreement.sign_support,
            opt(c.agreement.kendall_tau),
            c.lime.r_squared,
            c.wtds_evaluations,
            c.lime_evaluations
        )
        .unwrap();
    }
    out
}
