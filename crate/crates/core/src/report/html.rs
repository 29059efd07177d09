//! Static, self-contained HTML pages. No external resources are referenced,
//! and output depends only on the report.

use std::fmt::Write;

use serde_json::json;

use super::{CompareReport, ExplainReport, RankReport, StatsReport};
use crate::model::Channel;

const STYLE: &str = "body{font-family:sans-serif;max-width:60em;margin:2em auto;color:#222}
.text{line-height:3.4em}
.tok{display:inline-block;text-align:center;margin:0 .25em;cursor:pointer;vertical-align:top}
.tok span{display:block;line-height:1.2em;color:#999}
.tok .p,.tok .l{font-size:.7em}
.tok .hl{font-weight:bold}
.w.hl,.legend .w{color:#1f5fbf}
.p.hl,.legend .p{color:#e07b00}
.l.hl,.legend .l{color:#2e8b3a}
.tok.sel{outline:1px solid #888}
#bars .row{display:flex;align-items:center;font-size:.8em}
#bars .lab{width:10em}
#bars .bar{height:.8em;margin:1px 0}
table{border-collapse:collapse}td,th{padding:.2em .6em;border-bottom:1px solid #ddd;text-align:left}";

const SCRIPT: &str = "(function(){
var data=JSON.parse(document.getElementById('wtds-data').textContent);
var colours={word:'#1f5fbf',pos:'#e07b00',lemma:'#2e8b3a'};
var bars=document.getElementById('bars');
function show(i){
document.querySelectorAll('.tok').forEach(function(t){t.classList.toggle('sel',+t.dataset.pos===i);});
var tok=data.tokens[i],max=0;
data.channels.forEach(function(c){tok.wtds[c].forEach(function(v){max=Math.max(max,Math.abs(v));});});
bars.textContent='';
var h=document.createElement('h3');h.textContent='Token '+i+': '+tok.surface;bars.appendChild(h);
data.channels.forEach(function(c){tok.wtds[c].forEach(function(v,k){
var row=document.createElement('div');row.className='row';
var lab=document.createElement('span');lab.className='lab';lab.textContent=c+' / '+data.classes[k];
var bar=document.createElement('span');bar.className='bar';
bar.style.width=(max?Math.abs(v)/max*20:0)+'em';bar.style.background=colours[c];bar.style.opacity=v<0?0.4:1;
var val=document.createElement('span');val.textContent=' '+v.toPrecision(4);
row.appendChild(lab);row.appendChild(bar);row.appendChild(val);bars.appendChild(row);});});
}
document.querySelectorAll('.tok').forEach(function(t){t.addEventListener('click',function(){show(+t.dataset.pos);});});
})();";

pub(crate) fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            _ => out.push(ch),
        }
    }
    out
}

fn page(title: &str, body: &str, script: Option<&str>) -> String {
    let mut out = String::new();
    write!(
        out,
        "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n<title>{}</title>\n<style>\n{STYLE}\n</style>\n</head>\n<body>\n{body}",
        escape(title)
    )
    .unwrap();
    if let Some(s) = script {
        write!(out, "<script>\n{s}\n</script>\n").unwrap();
    }
    out.push_str("</body>\n</html>\n");
    out
}

fn channel_class(c: Channel) -> &'static str {
    match c {
        Channel::Word => "w",
        Channel::Pos => "p",
        Channel::Lemma => "l",
    }
}

/// Tokens coloured per channel when above threshold (blue word, orange
/// POS, green lemma), with per-class wTDS bar data for every token embedded
/// as JSON and drawn on click.
pub fn explain_html(report: &ExplainReport) -> String {
    let s = &report.segment;
    let mut body = String::new();
    writeln!(body, "<h1>Segment {} <small>({})</small></h1>", s.id, escape(&s.doc_id)).unwrap();
    let k = report.classes.iter().position(|c| *c == s.predicted).unwrap_or(0);
    writeln!(
        body,
        "<p>True class <b>{}</b>, predicted <b>{}</b> (p = {:.4}, y = {:.4}). Threshold {}{}. Model {}.</p>",
        escape(&s.true_class),
        escape(&s.predicted),
        s.probabilities.get(k).copied().unwrap_or(f64::NAN),
        s.logits.get(k).copied().unwrap_or(f64::NAN),
        escape(&report.threshold),
        if report.centered { ", centred on the baseline" } else { "" },
        escape(&report.model_fingerprint)
    )
    .unwrap();
    if let Some(r) = &report.ranking {
        writeln!(
            body,
            "<p>Rank {} of {} for class {} (y = {:.4}).</p>",
            r.rank,
            r.of,
            escape(&r.class),
            r.activation
        )
        .unwrap();
    }
    body.push_str("<p class=\"legend\">");
    for c in &report.channels {
        let label = match c {
            Channel::Word => "word",
            Channel::Pos => "part of speech",
            Channel::Lemma => "lemma",
        };
        write!(body, "<span class=\"{}\">{label}</span> ", channel_class(*c)).unwrap();
    }
    body.push_str("</p>\n<div class=\"text\">\n");
    for t in &report.tokens {
        write!(body, "<span class=\"tok\" data-pos=\"{}\">", t.position).unwrap();
        for rec in &t.saliency {
            let text = match rec.channel {
                Channel::Word => &t.surface,
                Channel::Pos => &t.pos,
                Channel::Lemma => &t.lemma,
            };
            let hl = if rec.highlighted { " hl" } else { "" };
            write!(body, "<span class=\"{}{hl}\">{}</span>", channel_class(rec.channel), escape(text)).unwrap();
        }
        body.push_str("</span>\n");
    }
    body.push_str("</div>\n<div id=\"bars\"><p>Click a token to see its wTDS per class.</p></div>\n");

    let tokens: Vec<_> = report
        .tokens
        .iter()
        .map(|t| {
            let wtds: serde_json::Map<String, serde_json::Value> = t
                .saliency
                .iter()
                .map(|r| (r.channel.name().to_string(), json!(r.wtds)))
                .collect();
            json!({"position": t.position, "surface": t.surface, "wtds": wtds})
        })
        .collect();
    let data = json!({
        "classes": report.classes,
        "channels": report.channels.iter().map(|c| c.name()).collect::<Vec<_>>(),
        "tokens": tokens,
    });
    // '<' only occurs inside JSON strings, so escaping it keeps the block
    // inert without changing its value
    let data = data.to_string().replace('<', "\\u003c");
    writeln!(body, "<script type=\"application/json\" id=\"wtds-data\">{data}</script>").unwrap();
    page(&format!("Segment {} explanation", s.id), &body, Some(SCRIPT))
}

pub fn rank_html(report: &RankReport) -> String {
    let mut body = String::new();
    writeln!(
        body,
        "<h1>Key segments for class {}</h1>\n<p>Ordered by pre-softmax activation{}. Model {}.</p>",
        escape(&report.class),
        if report.correct_only { ", correctly classified only" } else { "" },
        escape(&report.model_fingerprint)
    )
    .unwrap();
    body.push_str("<table>\n<tr><th>rank</th><th>segment</th><th>document</th><th>activation</th><th>probability</th><th>predicted</th><th>true</th><th>text</th></tr>\n");
    for r in &report.rows {
        writeln!(
            body,
            "<tr><td>{}</td><td>{}</td><td>{}</td><td>{:.4}</td><td>{:.4}</td><td>{}</td><td>{}</td><td>{}</td></tr>",
            r.rank,
            r.segment_id,
            escape(&r.doc_id),
            r.activation,
            r.probability,
            escape(&r.predicted),
            escape(&r.true_class),
            escape(&r.text)
        )
        .unwrap();
    }
    body.push_str("</table>\n");
    page(&format!("Key segments for {}", report.class), &body, None)
}

pub fn stats_html(report: &StatsReport) -> String {
    let mut body = String::from("<h1>Corpus statistics</h1>\n<table>\n<tr><th>class</th><th>words</th><th>sentences</th><th>average sentence length</th></tr>\n");
    for (class, s) in &report.stats.classes {
        writeln!(
            body,
            "<tr><td>{}</td><td>{}</td><td>{}</td><td>{:.2}</td></tr>",
            escape(class),
            s.words,
            s.sentences,
            s.avg_sentence_len
        )
        .unwrap();
    }
    writeln!(
        body,
        "</table>\n<p>{} words, vocabulary of {} surface forms.</p>",
        report.stats.total_words, report.stats.vocabulary_size
    )
    .unwrap();
    body.push_str("<h2>z-scores</h2>\n<table>\n<tr><th>word</th><th>class</th><th>observed</th><th>class size</th><th>corpus count</th><th>corpus size</th><th>z</th></tr>\n");
    for r in &report.zscores {
        writeln!(
            body,
            "<tr><td>{}</td><td>{}</td><td>{}</td><td>{}</td><td>{}</td><td>{}</td><td>{:.3}</td></tr>",
            escape(&r.word),
            escape(&r.class),
            r.observed,
            r.class_size,
            r.corpus_count,
            r.corpus_size,
            r.z
        )
        .unwrap();
    }
    body.push_str("</table>\n");
    page("Corpus statistics", &body, None)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.3}")).unwrap_or_else(|| "n/a".into())
}

pub fn compare_html(report: &CompareReport) -> String {
    let mut body = String::new();
    writeln!(
        body,
        "<h1>wTDS against a sampled surrogate, class {}</h1>\n<p>Mean sign agreement {}, mean Kendall tau {} (top {}). {} samples per segment; {}. Model {}.</p>",
        escape(&report.class),
        opt(report.mean_sign_agreement),
        opt(report.mean_kendall_tau),
        report.top_k,
        report.lime.samples,
        escape(&report.note),
        escape(&report.model_fingerprint)
    )
    .unwrap();
    body.push_str("<table>\n<tr><th>segment</th><th>sign agreement</th><th>support</th><th>Kendall tau</th><th>surrogate R\u{b2}</th><th>wTDS evaluations</th><th>surrogate evaluations</th></tr>\n");
    for c in &report.segments {
        writeln!(
            body,
            "<tr><td>{}</td><td>{}</td><td>{}</td><td>{}</td><td>{:.3}</td><td>{}</td><td>{}</td></tr>",
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
    body.push_str("</table>\n");
    page(&format!("Explainer comparison for {}", report.class), &body, None)
}
