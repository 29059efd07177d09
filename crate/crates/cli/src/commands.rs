use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;
use wtds::baselines::{compare_segment, zscore_table, LimeOptions};
use wtds::corpus::{
    apply_filters, corpus_stats, gen_synthetic, parse_corpus, Document, FilterConfig, Segment, SyntheticConfig,
};
use wtds::grad::AdamConfig;
use wtds::model::{load, Model, TrainHistory, TrainOptions};
use wtds::pipeline::{fit, prepare, restrict_channels, segments_for_model, PrepareOptions};
use wtds::report::{
    self, compare_html, compare_tsv, explain_html, explain_report, explain_tsv, rank_html, rank_report, rank_tsv,
    stats_html, stats_tsv, CompareReport, Format, RankingContext, ReportOptions, StatsReport,
};
use wtds::saliency::{explain_segment, rank_segments};

use crate::args::{
    Command, CompareArgs, ExplainArgs, GenArgs, OutputArgs, RankArgs, StatsArgs, TrainArgs,
};

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Train(a) => train(a),
        Command::Explain(a) => explain(a),
        Command::Rank(a) => rank(a),
        Command::Stats(a) => stats(a),
        Command::Compare(a) => compare(a),
        Command::Gen(a) => gen(a),
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn emit(output: &OutputArgs, text: &str) -> Result<()> {
    match &output.out {
        Some(path) => write_file(path, text),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn render<T: Serialize>(
    output: &OutputArgs,
    report: &T,
    tsv: impl FnOnce(&T) -> String,
    html: impl FnOnce(&T) -> String,
) -> Result<()> {
    let text = match output.format {
        Format::Json => report::to_json(report)?,
        Format::Tsv => tsv(report),
        Format::Html => html(report),
    };
    emit(output, &text)
}

fn read_corpus(path: &Path) -> Result<Vec<Document>> {
    Ok(parse_corpus(path)?)
}

fn load_model(path: &Path) -> Result<Model> {
    load(path).with_context(|| format!("cannot load model {}", path.display()))
}

/// Written next to the checkpoint by `train`.
#[derive(Serialize)]
struct HistoryFile<'a> {
    schema_version: u32,
    model_fingerprint: String,
    classes: &'a [String],
    train_segments: usize,
    validation_segments: usize,
    /// Validation accuracy of the returned (best-epoch) weights.
    final_val_accuracy: f64,
    history: &'a TrainHistory,
}

fn train(a: TrainArgs) -> Result<()> {
    let docs = read_corpus(&a.corpus.corpus)?;
    let filter = a.filter.then(|| FilterConfig {
        name_tags: a.name_tags.iter().cloned().collect(),
        date_tags: a.date_tags.iter().cloned().collect(),
        unique_to_class: !a.keep_unique,
    });
    let prepared = prepare(
        &docs,
        &PrepareOptions {
            segment_len: a.segment_len,
            stride: a.corpus.stride,
            min_count: a.min_count,
            filter,
            seed: a.seed,
        },
    )?;
    let mut config = prepared.model_config(a.segment_len, a.seed);
    restrict_channels(&mut config, &a.channels.0)?;
    config.hidden_size = a.hidden;
    config.channels.iter_mut().for_each(|c| c.filters = a.filters);
    let options = TrainOptions {
        epochs: a.epochs,
        batch_size: a.batch,
        patience: a.patience,
        adam: AdamConfig {
            lr: a.lr,
            ..AdamConfig::default()
        },
        seed: a.seed,
    };
    if !a.quiet {
        eprintln!(
            "training on {} segments, validating on {} ({} classes)",
            prepared.split.train.len(),
            prepared.split.validation.len(),
            prepared.classes.len()
        );
    }
    let (model, history) = fit(&prepared, config, &options)?;
    model.save(&a.out)?;
    let best = history.best().context("training produced no epochs")?;
    let file = HistoryFile {
        schema_version: report::SCHEMA_VERSION,
        model_fingerprint: model.fingerprint()?,
        classes: &prepared.classes,
        train_segments: prepared.split.train.len(),
        validation_segments: prepared.split.validation.len(),
        final_val_accuracy: best.val_accuracy,
        history: &history,
    };
    let history_path = a.history.clone().unwrap_or_else(|| {
        let mut p = a.out.clone().into_os_string();
        p.push(".history.json");
        PathBuf::from(p)
    });
    write_file(&history_path, &report::to_json(&file)?)?;
    if !a.quiet {
        for e in &history.epochs {
            eprintln!(
                "epoch {:>3}  train loss {:.4} acc {:.4}  val loss {:.4} acc {:.4}",
                e.epoch, e.train_loss, e.train_accuracy, e.val_loss, e.val_accuracy
            );
        }
        eprintln!(
            "best epoch {} (val acc {:.4}), stopped after {}; wrote {}",
            history.best_epoch,
            best.val_accuracy,
            history.stopped_epoch,
            a.out.display()
        );
    }
    Ok(())
}

fn select<'a>(segments: &'a [Segment], id: usize) -> Result<&'a Segment> {
    segments
        .iter()
        .find(|s| s.id == id)
        .with_context(|| format!("segment id {id} out of range (corpus has {} segments)", segments.len()))
}

fn explain(a: ExplainArgs) -> Result<()> {
    let model = load_model(&a.model)?;
    let docs = read_corpus(&a.corpus.corpus)?;
    let segments = segments_for_model(&model, &docs, a.corpus.stride)?;
    let segment = select(&segments, a.segment_id)?;
    let explanation = explain_segment(&model, segment, a.threshold)?;
    let k = explanation.predicted;
    let ranking = rank_segments(&model, &segments, k, false)?;
    let rank = ranking.iter().position(|r| r.segment_id == segment.id).map(|i| RankingContext {
        class: model.config.class_label(k),
        rank: i + 1,
        of: ranking.len(),
        activation: ranking[i].activation,
    });
    let comparison = match a.lime_samples {
        Some(samples) => {
            let options = LimeOptions {
                samples,
                seed: a.seed,
                ..LimeOptions::default()
            };
            Some(compare_segment(&model, segment, k, &options, 5)?)
        }
        None => None,
    };
    let options = ReportOptions {
        rule: a.threshold,
        centered: a.centered,
    };
    let report = explain_report(&model, segment, &explanation, &options, rank, comparison)?;
    render(&a.output, &report, explain_tsv, explain_html)
}

fn rank(a: RankArgs) -> Result<()> {
    let model = load_model(&a.model)?;
    let k = model.config.class_index(&a.class)?;
    let docs = read_corpus(&a.corpus.corpus)?;
    let segments = segments_for_model(&model, &docs, a.corpus.stride)?;
    if a.top == 0 {
        // nothing was asked for, so nothing is printed
        return emit(&a.output, "");
    }
    let correct_only = !a.include_misclassified;
    let ranking = rank_segments(&model, &segments, k, correct_only)?;
    let report = rank_report(&model, &segments, k, &ranking, a.top, correct_only)?;
    render(&a.output, &report, rank_tsv, rank_html)
}

fn stats(a: StatsArgs) -> Result<()> {
    let mut docs = read_corpus(&a.corpus)?;
    if a.filter {
        docs = apply_filters(&docs, &FilterConfig::default());
    }
    let stats = corpus_stats(&docs, &a.sentence_tag);
    let zscores = match &a.word {
        Some(w) => {
            let rows: Vec<_> = zscore_table(&docs, 1)?.into_iter().filter(|r| &r.word == w).collect();
            if rows.is_empty() {
                return Err(wtds::Error::AbsentWord(w.clone()).into());
            }
            rows
        }
        None => zscore_table(&docs, a.min_count)?,
    };
    let model = a.model.as_deref().map(load_model).transpose()?;
    let report = StatsReport::new(stats, zscores, model.as_ref())?;
    render(&a.output, &report, stats_tsv, stats_html)
}

fn compare(a: CompareArgs) -> Result<()> {
    let model = load_model(&a.model)?;
    let docs = read_corpus(&a.corpus.corpus)?;
    let segments = segments_for_model(&model, &docs, a.corpus.stride)?;
    let class = a.class.as_deref().map(|c| model.config.class_index(c)).transpose()?;
    let options = LimeOptions {
        samples: a.lime_samples,
        kernel_width: a.kernel_width,
        ridge: a.ridge,
        seed: a.seed,
    };
    let (target, chosen): (usize, Vec<&Segment>) = match a.segment_id {
        Some(id) => {
            let s = select(&segments, id)?;
            let k = match class {
                Some(k) => k,
                None => model.forward_segment(s)?.predicted(),
            };
            (k, vec![s])
        }
        None => {
            let Some(k) = class else { bail!("--class is required without --segment-id") };
            let mut picked = Vec::new();
            for s in segments.iter().filter(|s| s.class_index == k) {
                if picked.len() == a.top {
                    break;
                }
                if model.forward_segment(s)?.predicted() == k {
                    picked.push(s);
                }
            }
            (k, picked)
        }
    };
    let comparisons = chosen
        .into_iter()
        .map(|s| compare_segment(&model, s, target, &options, a.top_k))
        .collect::<wtds::Result<Vec<_>>>()?;
    let report = CompareReport::new(&model, target, options, a.top_k, comparisons)?;
    render(&a.output, &report, compare_tsv, compare_html)
}

fn gen(a: GenArgs) -> Result<()> {
    let config = SyntheticConfig {
        classes: a.classes,
        segs_per_class: a.segs_per_class,
        segment_len: a.segment_len,
        markers_per_class: a.markers,
        background_vocab: a.background,
        injection_rate: a.rate,
        sentence_rate: a.sentence_rate,
        pos_heavy_class: a.pos_heavy_class,
        names_per_class: a.names,
        name_rate: a.name_rate,
        seed: a.seed,
    };
    let corpus = gen_synthetic(&config)?;
    write_file(&a.out, &corpus.corpus_text())?;
    if let Some(path) = &a.truth {
        write_file(path, &corpus.truth_text())?;
    }
    Ok(())
}
