use proptest::prelude::*;
use rand::Rng;

use super::*;
use crate::grad::Tensor;
use crate::model::{forward, ChannelFeatures, ModelParams};
use crate::testutil::*;

fn word_only(segment_len: usize, dim: usize, k: usize) -> ModelConfig {
    let mut c = ModelConfig::new(k, [9, 7, 8]);
    c.segment_len = segment_len;
    c.hidden_size = 5;
    c.kernel_size = 1;
    c.pool_size = 1;
    c.channel_mut(Channel::Pos).enabled = false;
    c.channel_mut(Channel::Lemma).enabled = false;
    let w = c.channel_mut(Channel::Word);
    w.embed_dim = dim;
    w.filters = 3;
    c
}

fn trace_with(features: Tensor) -> ForwardTrace {
    ForwardTrace {
        channels: vec![ChannelFeatures {
            channel: Channel::Word,
            features,
        }],
        global: Vec::new(),
        hidden: Vec::new(),
        logits: vec![0.0, 0.0],
        probs: vec![0.5, 0.5],
    }
}

#[test]
fn tds_of_zero_and_ones() {
    let tr = trace_with(Tensor::new(vec![2, 4], vec![0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0]).unwrap());
    assert_eq!(tds(&tr, 0, Channel::Word).unwrap(), 0.0);
    assert_eq!(tds(&tr, 1, Channel::Word).unwrap(), 4.0);
    assert!(matches!(tds(&tr, 2, Channel::Word), Err(Error::OutOfRange { .. })));
    assert!(tds(&tr, 0, Channel::Pos).is_err());
}

#[test]
fn tds_matches_direct_sum() {
    let mut r = rng(1);
    let v: Vec<f64> = (0..7).map(|_| r.gen_range(-1.0..1.0)).collect();
    let tr = trace_with(Tensor::new(vec![1, 7], v.clone()).unwrap());
    let mut direct = 0.0;
    for x in &v {
        direct += x;
    }
    assert!((tds(&tr, 0, Channel::Word).unwrap() - direct).abs() < 1e-15);
}

#[test]
fn zero_features_give_baseline() {
    let cfg = tiny_config(2);
    let mut p = ModelParams::init(&cfg).unwrap();
    randomize(&mut p, &mut rng(2));
    let mut tr = forward(&p, &cfg, &random_encoded(&cfg, &mut rng(3))).unwrap();
    for f in &mut tr.channels {
        f.features.fill(0.0);
    }
    let b = p.by_name("head.b").unwrap().data();
    let c = p.by_name("head.C").unwrap();
    let d = p.by_name("head.d").unwrap().data();
    let expected: Vec<f64> = (0..cfg.num_classes)
        .map(|k| d[k] + (0..cfg.hidden_size).map(|e| c.data()[k * cfg.hidden_size + e] * b[e].max(0.0)).sum::<f64>())
        .collect();
    for ch in cfg.enabled_channels() {
        for m in 0..cfg.segment_len {
            assert_eq!(wtds(&p, &cfg, &tr, m, ch).unwrap(), expected);
        }
    }
    assert_eq!(baseline(&p, &cfg), expected);
}

#[test]
fn decomposition_matches_dense_product() {
    for seed in 0..10 {
        let cfg = tiny_config(seed);
        let mut p = ModelParams::init(&cfg).unwrap();
        randomize(&mut p, &mut rng(seed));
        let tr = forward(&p, &cfg, &random_encoded(&cfg, &mut rng(seed + 100))).unwrap();
        let a = p.by_name("head.A").unwrap();
        let cols = a.shape()[1];
        let dense: Vec<f64> = (0..cfg.hidden_size)
            .map(|e| (0..cols).map(|j| a.data()[e * cols + j] * tr.global[j]).sum())
            .collect();
        let summed = decomposed_pre_activation(&p, &cfg, &tr).unwrap();
        for (x, y) in dense.iter().zip(&summed) {
            assert!((x - y).abs() < 1e-9);
        }
    }
}

/// Single channel: `A_m` is columns `D(m-1)+1 ..= D(m-1)+D` (1-based).
#[test]
fn single_channel_block_is_contiguous_columns() {
    let cfg = word_only(4, 3, 2);
    let mut p = ModelParams::init(&cfg).unwrap();
    randomize(&mut p, &mut rng(4));
    let tr = forward(&p, &cfg, &random_encoded(&cfg, &mut rng(5))).unwrap();
    let a = p.by_name("head.A").unwrap();
    let dim = 3;
    for m1 in 1..=4usize {
        let x = tr.features(Channel::Word).unwrap().row(m1 - 1);
        let first = dim * (m1 - 1) + 1;
        let h: Vec<f64> = (0..cfg.hidden_size)
            .map(|e| (0..dim).map(|j| a.data()[e * 12 + first - 1 + j] * x[j]).sum())
            .collect();
        let got = token_contribution(&p, &cfg, &tr, m1 - 1, Channel::Word).unwrap();
        for (u, v) in got.iter().zip(&h) {
            assert!((u - v).abs() < 1e-15);
        }
    }
}

#[test]
fn degenerate_config_ignores_other_tokens() {
    let cfg = word_only(5, 3, 3);
    let mut p = ModelParams::init(&cfg).unwrap();
    randomize(&mut p, &mut rng(6));
    let mut enc = random_encoded(&cfg, &mut rng(7));
    let before = wtds(&p, &cfg, &forward(&p, &cfg, &enc).unwrap(), 2, Channel::Word).unwrap();
    for m in [0, 1, 3, 4] {
        enc[m][0] = (enc[m][0] + 1) % 9;
    }
    let after = wtds(&p, &cfg, &forward(&p, &cfg, &enc).unwrap(), 2, Channel::Word).unwrap();
    assert_eq!(before, after);
}

fn tiny_model(seed: u64) -> Model {
    let cfg = tiny_config(seed);
    let mut p = ModelParams::init(&cfg).unwrap();
    randomize(&mut p, &mut rng(seed));
    Model::new(cfg, p, vocabs([9, 7, 8])).unwrap()
}

#[test]
fn infinite_thresholds() {
    let model = tiny_model(8);
    let seg = segment(0, 1, 2, random_encoded(&model.config, &mut rng(8)));
    let none = explain_segment(&model, &seg, ThresholdRule::Absolute(f64::INFINITY)).unwrap();
    assert!(none.highlights.iter().all(|h| h.positions.is_empty()));
    let all = explain_segment(&model, &seg, ThresholdRule::Absolute(f64::NEG_INFINITY)).unwrap();
    assert_eq!(all.highlights.len(), 3);
    assert!(all.highlights.iter().all(|h| h.positions == (0..6).collect::<Vec<_>>()));
    assert_eq!(all.tokens.len(), 6);
    assert!(all.tokens.iter().all(|t| t.channels.iter().all(|c| c.wtds.len() == 2)));
}

#[test]
fn explanation_is_one_forward_pass() {
    let model = tiny_model(9);
    let seg = segment(0, 0, 2, random_encoded(&model.config, &mut rng(9)));
    model.reset_evaluations();
    let e = explain_segment(&model, &seg, ThresholdRule::MeanStd).unwrap();
    assert_eq!(model.evaluations(), 1);
    let again = explain_segment(&model, &seg, ThresholdRule::MeanStd).unwrap();
    assert_eq!(e, again);
    for h in &e.highlights {
        let scores = e.class_scores(h.channel, e.predicted);
        for (m, s) in scores.iter().enumerate() {
            assert_eq!(h.positions.contains(&m), *s > h.threshold);
        }
    }
}

#[test]
fn threshold_rules() {
    let s = [1.0, 2.0, 3.0, 4.0];
    let t = ThresholdRule::MeanStd.threshold(&s);
    assert!((t - (2.5 + 1.25f64.sqrt())).abs() < 1e-15);
    assert_eq!(ThresholdRule::Quantile(0.5).threshold(&s), 2.5);
    assert_eq!(ThresholdRule::Quantile(1.0).threshold(&s), 4.0);
    assert_eq!(ThresholdRule::Absolute(0.3).threshold(&s), 0.3);
    assert_eq!("meanstd".parse::<ThresholdRule>().unwrap(), ThresholdRule::MeanStd);
    assert_eq!("abs:-1.5".parse::<ThresholdRule>().unwrap(), ThresholdRule::Absolute(-1.5));
    assert_eq!("quantile:0.9".parse::<ThresholdRule>().unwrap(), ThresholdRule::Quantile(0.9));
    assert!("quantile:1.5".parse::<ThresholdRule>().is_err());
    assert!("median".parse::<ThresholdRule>().is_err());
    for r in [ThresholdRule::MeanStd, ThresholdRule::Absolute(2.0), ThresholdRule::Quantile(0.25)] {
        assert_eq!(r.to_string().parse::<ThresholdRule>().unwrap(), r);
    }
}

#[test]
fn ranking_edge_cases() {
    let model = tiny_model(10);
    assert!(rank_segments(&model, &[], 0, false).unwrap().is_empty());
    assert!(matches!(rank_segments(&model, &[], 2, false), Err(Error::OutOfRange { .. })));
}

/// One-token word model whose class-0 logit is `10 * embedding`, so the
/// softmax saturates to exactly 1.0 for both test tokens.
pub(super) fn saturation_model() -> Model {
    let mut cfg = word_only(1, 1, 2);
    cfg.hidden_size = 1;
    cfg.channel_mut(Channel::Word).filters = 1;
    let mut p = ModelParams::init(&cfg).unwrap();
    let set = |p: &mut ModelParams, name: &str, v: Vec<f64>| {
        let shape = p.by_name(name).unwrap().shape().to_vec();
        *p.by_name_mut(name).unwrap() = Tensor::new(shape, v).unwrap();
    };
    let mut emb = vec![0.0; 9];
    emb[5] = 1.0;
    emb[6] = 2.0;
    set(&mut p, "word.embedding", emb);
    set(&mut p, "word.conv.weight", vec![1.0]);
    set(&mut p, "word.deconv.weight", vec![1.0]);
    set(&mut p, "head.A", vec![1.0]);
    set(&mut p, "head.C", vec![10.0, 0.0]);
    set(&mut p, "head.d", vec![0.0, -30.0]);
    Model::new(cfg, p, vocabs([9, 7, 8])).unwrap()
}

#[test]
fn saturated_probabilities_rank_by_activation() {
    let model = saturation_model();
    let segs = vec![segment(0, 0, 2, vec![[5, 0, 0]]), segment(1, 0, 2, vec![[6, 0, 0]])];
    let ranking = rank_segments(&model, &segs, 0, false).unwrap();
    assert_eq!(ranking[0].segment_id, 1);
    assert_eq!(ranking[0].activation, 20.0);
    assert_eq!(ranking[1].activation, 10.0);
    assert!(ranking.iter().all(|r| r.probability >= 1.0 - 1e-9));
}

proptest! {
    #[test]
    fn ranking_is_sorted_permutation(acts in prop::collection::vec(-5i32..5, 0..30)) {
        let mut ranking: Vec<RankedSegment> = acts
            .iter()
            .enumerate()
            .map(|(i, &a)| RankedSegment {
                segment_id: i,
                class: 0,
                activation: a as f64,
                probability: 0.5,
                predicted: 0,
                true_class: 0,
            })
            .collect();
        sort_ranking(&mut ranking);
        let mut ids: Vec<usize> = ranking.iter().map(|r| r.segment_id).collect();
        for w in ranking.windows(2) {
            prop_assert!(w[0].activation > w[1].activation
                || (w[0].activation == w[1].activation && w[0].segment_id < w[1].segment_id));
        }
        ids.sort();
        prop_assert_eq!(ids, (0..acts.len()).collect::<Vec<_>>());
    }
}
