use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::error::Error;

fn random(shape: &[usize], rng: &mut ChaCha8Rng) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

// --- brute-force oracles -------------------------------------------------

fn conv_oracle(x: &Tensor, w: &Tensor, b: &Tensor) -> Vec<f64> {
    let (m_len, depth) = (x.shape()[0], x.shape()[1]);
    let (nf, h) = (w.shape()[0], w.shape()[1]);
    let half = (h as isize - 1) / 2;
    let mut out = vec![0.0; m_len * nf];
    for m in 0..m_len {
        for f in 0..nf {
            let mut s = b.data()[f];
            for j in 0..h {
                let src = m as isize + j as isize - half;
                if src < 0 || src >= m_len as isize {
                    continue;
                }
                for d in 0..depth {
                    s += w.data()[(f * h + j) * depth + d] * x.data()[src as usize * depth + d];
                }
            }
            out[m * nf + f] = s;
        }
    }
    out
}

/// Scatter formulation: input position n feeds output n + j - half.
fn conv_transpose_oracle(x: &Tensor, w: &Tensor, b: &Tensor) -> Vec<f64> {
    let (m_len, nf) = (x.shape()[0], x.shape()[1]);
    let (h, depth) = (w.shape()[1], w.shape()[2]);
    let half = (h as isize - 1) / 2;
    let mut out = vec![0.0; m_len * depth];
    for m in 0..m_len {
        out[m * depth..(m + 1) * depth].copy_from_slice(b.data());
    }
    for n in 0..m_len {
        for j in 0..h {
            let dst = n as isize + j as isize - half;
            if dst < 0 || dst >= m_len as isize {
                continue;
            }
            for f in 0..nf {
                for d in 0..depth {
                    out[dst as usize * depth + d] += w.data()[(f * h + j) * depth + d] * x.data()[n * nf + f];
                }
            }
        }
    }
    out
}

fn assert_close(a: &[f64], b: &[f64], tol: f64) {
    assert_eq!(a.len(), b.len());
    for (i, (x, y)) in a.iter().zip(b).enumerate() {
        assert!((x - y).abs() <= tol, "entry {i}: {x} vs {y}");
    }
}

// --- embedding ----------------------------------------------------------

#[test]
fn embedding_zero_row() {
    let mut p = ParamSet::new();
    let mut t = Tensor::zeros(&[3, 2]);
    t.data_mut()[0..2].copy_from_slice(&[1.0, 2.0]);
    let id = p.add("table", t);
    let mut tape = Tape::new(&p);
    let out = tape.embedding(Var::Param(id), &[1]).unwrap();
    assert_eq!(tape.value(out).data(), &[0.0, 0.0]);
}

#[test]
fn embedding_shared_row_accumulates() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut p = ParamSet::new();
    let id = p.add("table", random(&[4, 3], &mut rng));
    let mut tape = Tape::new(&p);
    let out = tape.embedding(Var::Param(id), &[2, 2]).unwrap();
    assert_eq!(tape.value(out).row(0), p.get(id).row(2));
    assert_eq!(tape.value(out).row(1), p.get(id).row(2));
    let ones = tape.constant(Tensor::new(vec![2, 3], vec![1.0; 6]).unwrap());
    let loss = tape.dot(out, ones).unwrap();
    let g = tape.backward(loss).unwrap();
    assert_eq!(g.get(id).row(2), &[2.0, 2.0, 2.0]);
    assert_eq!(g.get(id).row(0), &[0.0, 0.0, 0.0]);
}

#[test]
fn embedding_matches_gather() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut p = ParamSet::new();
    let table = random(&[5, 3], &mut rng);
    let id = p.add("table", table.clone());
    let mut tape = Tape::new(&p);
    let out = tape.embedding(Var::Param(id), &[4, 0, 1]).unwrap();
    let mut expected = Vec::new();
    for r in [4, 0, 1] {
        for c in 0..3 {
            expected.push(table.data()[r * 3 + c]);
        }
    }
    assert_eq!(tape.value(out).data(), &expected[..]);
    assert!(matches!(
        tape.embedding(Var::Param(id), &[5]),
        Err(Error::OutOfRange { index: 5, size: 5, .. })
    ));
}

// --- convolution ----------------------------------------------------------

fn conv_setup(m: usize, d: usize, f: usize, h: usize, seed: u64) -> (ParamSet, [ParamId; 3]) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = ParamSet::new();
    let x = p.add("x", random(&[m, d], &mut rng));
    let w = p.add("w", random(&[f, h, d], &mut rng));
    let b = p.add("b", random(&[f], &mut rng));
    (p, [x, w, b])
}

#[test]
fn conv_row_sum_with_unit_filter() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut p = ParamSet::new();
    let x = p.add("x", random(&[4, 3], &mut rng));
    let w = p.add("w", Tensor::new(vec![1, 1, 3], vec![1.0; 3]).unwrap());
    let b = p.add("b", Tensor::zeros(&[1]));
    let mut tape = Tape::new(&p);
    let out = tape.conv1d_same(Var::Param(x), Var::Param(w), Var::Param(b)).unwrap();
    let sums: Vec<f64> = (0..4).map(|m| p.get(x).row(m).iter().sum()).collect();
    assert_close(tape.value(out).data(), &sums, 1e-15);
}

#[test]
fn conv_zero_input_gives_bias() {
    let (mut p, [x, w, b]) = conv_setup(5, 3, 2, 3, 4);
    p.set(x, Tensor::zeros(&[5, 3])).unwrap();
    let mut tape = Tape::new(&p);
    let out = tape.conv1d_same(Var::Param(x), Var::Param(w), Var::Param(b)).unwrap();
    for m in 0..5 {
        assert_eq!(tape.value(out).row(m), p.get(b).data());
    }
}

#[test]
fn conv_matches_triple_loop() {
    let (p, [x, w, b]) = conv_setup(6, 3, 2, 3, 5);
    let mut tape = Tape::new(&p);
    let out = tape.conv1d_same(Var::Param(x), Var::Param(w), Var::Param(b)).unwrap();
    assert_eq!(tape.value(out).shape(), &[6, 2]);
    assert_close(tape.value(out).data(), &conv_oracle(p.get(x), p.get(w), p.get(b)), 1e-12);
}

#[test]
fn even_kernel_rejected() {
    let (p, [x, w, b]) = conv_setup(6, 3, 2, 2, 6);
    let mut tape = Tape::new(&p);
    assert!(matches!(
        tape.conv1d_same(Var::Param(x), Var::Param(w), Var::Param(b)),
        Err(Error::Config(_))
    ));
}

#[test]
fn transpose_zero_input_gives_bias() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut p = ParamSet::new();
    let x = p.add("x", Tensor::zeros(&[4, 2]));
    let w = p.add("w", random(&[2, 3, 5], &mut rng));
    let b = p.add("b", random(&[5], &mut rng));
    let mut tape = Tape::new(&p);
    let out = tape
        .conv1d_transpose_same(Var::Param(x), Var::Param(w), Var::Param(b))
        .unwrap();
    for m in 0..4 {
        assert_eq!(tape.value(out).row(m), p.get(b).data());
    }
}

#[test]
fn transpose_kernel_one_is_affine() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut p = ParamSet::new();
    let x = p.add("x", random(&[3, 2], &mut rng));
    let w = p.add("w", random(&[2, 1, 4], &mut rng));
    let b = p.add("b", random(&[4], &mut rng));
    let mut tape = Tape::new(&p);
    let out = tape
        .conv1d_transpose_same(Var::Param(x), Var::Param(w), Var::Param(b))
        .unwrap();
    for m in 0..3 {
        for d in 0..4 {
            let mut s = p.get(b).data()[d];
            for f in 0..2 {
                s += p.get(x).data()[m * 2 + f] * p.get(w).data()[f * 4 + d];
            }
            assert!((tape.value(out).data()[m * 4 + d] - s).abs() < 1e-15);
        }
    }
}

#[test]
fn transpose_matches_scatter_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut p = ParamSet::new();
    let x = p.add("x", random(&[6, 2], &mut rng));
    let w = p.add("w", random(&[2, 3, 3], &mut rng));
    let b = p.add("b", random(&[3], &mut rng));
    let mut tape = Tape::new(&p);
    let out = tape
        .conv1d_transpose_same(Var::Param(x), Var::Param(w), Var::Param(b))
        .unwrap();
    assert_eq!(tape.value(out).shape(), &[6, 3]);
    assert_close(
        tape.value(out).data(),
        &conv_transpose_oracle(p.get(x), p.get(w), p.get(b)),
        1e-12,
    );
}

proptest! {
    /// <conv(x), y> == <x, conv^T(y)> for shared filters and zero biases.
    #[test]
    fn transpose_is_adjoint(seed in any::<u64>(), m in 1usize..8, d in 1usize..4, f in 1usize..4, hh in 0usize..3) {
        let h = 2 * hh + 1;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = ParamSet::new();
        let x = p.add("x", random(&[m, d], &mut rng));
        let y = p.add("y", random(&[m, f], &mut rng));
        let w = p.add("w", random(&[f, h, d], &mut rng));
        let bf = p.add("bf", Tensor::zeros(&[f]));
        let bd = p.add("bd", Tensor::zeros(&[d]));
        let mut tape = Tape::new(&p);
        let cx = tape.conv1d_same(Var::Param(x), Var::Param(w), Var::Param(bf)).unwrap();
        let cty = tape.conv1d_transpose_same(Var::Param(y), Var::Param(w), Var::Param(bd)).unwrap();
        let lhs: f64 = tape.value(cx).data().iter().zip(p.get(y).data()).map(|(a, b)| a * b).sum();
        let rhs: f64 = tape.value(cty).data().iter().zip(p.get(x).data()).map(|(a, b)| a * b).sum();
        prop_assert!((lhs - rhs).abs() < 1e-10);
        prop_assert_eq!(tape.value(cx).shape()[0], m);
        prop_assert_eq!(tape.value(cty).shape()[0], m);
    }

    #[test]
    fn pool_and_relu_commute(seed in any::<u64>(), rows in 1usize..6, p in 1usize..4, f in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut ps = ParamSet::new();
        let x = ps.add("x", random(&[rows * p, f], &mut rng));
        let mut tape = Tape::new(&ps);
        let r = tape.relu(Var::Param(x));
        let a = tape.maxpool1d(r, p).unwrap();
        let q = tape.maxpool1d(Var::Param(x), p).unwrap();
        let b = tape.relu(q);
        prop_assert_eq!(tape.value(a).data(), tape.value(b).data());
        let u = tape.upsample(q, p).unwrap();
        prop_assert_eq!(tape.value(u).shape(), &[rows * p, f][..]);
    }

    #[test]
    fn softmax_properties(logits in prop::collection::vec(-50.0f64..50.0, 1..8), shift in -100.0f64..100.0) {
        let p = softmax(&logits);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(p.iter().all(|&x| (0.0..=1.0).contains(&x)));
        let shifted: Vec<f64> = logits.iter().map(|y| y + shift).collect();
        for (a, b) in p.iter().zip(softmax(&shifted)) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }
}

// --- pooling ------------------------------------------------------------

#[test]
fn maxpool_and_upsample_examples() {
    let mut p = ParamSet::new();
    let x = p.add("x", Tensor::new(vec![4, 1], vec![1.0, 3.0, 2.0, 4.0]).unwrap());
    let mut tape = Tape::new(&p);
    let pooled = tape.maxpool1d(Var::Param(x), 2).unwrap();
    assert_eq!(tape.value(pooled).data(), &[3.0, 4.0]);
    let up = tape.upsample(pooled, 2).unwrap();
    assert_eq!(tape.value(up).data(), &[3.0, 3.0, 4.0, 4.0]);
    assert!(matches!(tape.maxpool1d(Var::Param(x), 3), Err(Error::Config(_))));
}

#[test]
fn maxpool_routes_gradient_to_argmax() {
    let mut p = ParamSet::new();
    // ties at positions 2,3 go to 2
    let x = p.add("x", Tensor::new(vec![4, 2], vec![1.0, 5.0, 3.0, 0.0, 2.0, -1.0, 2.0, -2.0]).unwrap());
    let mut tape = Tape::new(&p);
    let pooled = tape.maxpool1d(Var::Param(x), 2).unwrap();
    let r = tape.constant(Tensor::new(vec![2, 2], vec![10.0, 20.0, 30.0, 40.0]).unwrap());
    let loss = tape.dot(pooled, r).unwrap();
    let g = tape.backward(loss).unwrap();
    assert_eq!(g.get(x).data(), &[0.0, 20.0, 10.0, 0.0, 30.0, 40.0, 0.0, 0.0]);
    assert_eq!(g.get(x).data().iter().sum::<f64>(), 100.0);
}

// --- dense / softmax / loss --------------------------------------------------

#[test]
fn uniform_logits_loss_is_ln2() {
    let mut p = ParamSet::new();
    let y = p.add("y", Tensor::from_vec(vec![0.0, 0.0]));
    let mut tape = Tape::new(&p);
    let loss = tape.softmax_cross_entropy(Var::Param(y), &[1.0, 0.0]).unwrap();
    assert!((tape.value(loss).data()[0] - std::f64::consts::LN_2).abs() < 1e-15);
    assert_eq!(softmax(&[0.0, 0.0]), vec![0.5, 0.5]);
}

#[test]
fn extreme_logits_stay_finite() {
    let p0 = softmax(&[1000.0, 0.0]);
    assert_eq!(p0[0], 1.0);
    let mut p = ParamSet::new();
    let y = p.add("y", Tensor::from_vec(vec![1000.0, 0.0]));
    let mut tape = Tape::new(&p);
    let right = tape.softmax_cross_entropy(Var::Param(y), &[1.0, 0.0]).unwrap();
    let wrong = tape.softmax_cross_entropy(Var::Param(y), &[0.0, 1.0]).unwrap();
    assert!(tape.value(right).data()[0].abs() < 1e-300);
    assert_eq!(tape.value(wrong).data()[0], -LOG_FLOOR);
}

#[test]
fn softmax_and_loss_match_direct_formula() {
    let y = [0.3, -1.2, 2.5, 0.0];
    let p = softmax(&y);
    let denom: f64 = y.iter().map(|v: &f64| v.exp()).sum();
    for (pk, yk) in p.iter().zip(y) {
        assert!((pk - yk.exp() / denom).abs() < 1e-12);
    }
    let mut ps = ParamSet::new();
    let yid = ps.add("y", Tensor::from_vec(y.to_vec()));
    let mut tape = Tape::new(&ps);
    let loss = tape.softmax_cross_entropy(Var::Param(yid), &[0.0, 0.0, 1.0, 0.0]).unwrap();
    assert!((tape.value(loss).data()[0] + (y[2].exp() / denom).ln()).abs() < 1e-12);
    let g = tape.backward(loss).unwrap();
    let expected: Vec<f64> = p.iter().enumerate().map(|(k, pk)| pk - if k == 2 { 1.0 } else { 0.0 }).collect();
    assert_close(g.get(yid).data(), &expected, 1e-15);
}

#[test]
fn linear_gradient_is_input() {
    let mut p = ParamSet::new();
    let x = p.add("x", Tensor::from_vec(vec![1.5, -2.0, 0.25]));
    let w = p.add("w", Tensor::from_vec(vec![0.1, 0.2, 0.3]));
    let mut tape = Tape::new(&p);
    let f = tape.dot(Var::Param(x), Var::Param(w)).unwrap();
    let g = tape.backward(f).unwrap();
    assert_eq!(g.get(w).data(), p.get(x).data());
}

#[test]
fn relu_gradient_is_zero_for_negative_input() {
    let mut p = ParamSet::new();
    let x = p.add("x", Tensor::from_vec(vec![-1.0, 0.0, 2.0]));
    let mut tape = Tape::new(&p);
    let r = tape.relu(Var::Param(x));
    let ones = tape.constant(Tensor::from_vec(vec![1.0; 3]));
    let f = tape.dot(r, ones).unwrap();
    let g = tape.backward(f).unwrap();
    assert_eq!(g.get(x).data(), &[0.0, 0.0, 1.0]);
}

#[test]
fn backward_rejects_non_scalar() {
    let mut p = ParamSet::new();
    let x = p.add("x", Tensor::from_vec(vec![1.0, 2.0]));
    let mut tape = Tape::new(&p);
    let r = tape.relu(Var::Param(x));
    assert!(matches!(tape.backward(r), Err(Error::Invalid(_))));
}

// --- gradient checks for every layer ------------------------------------------

/// Contracts an arbitrary output with a fixed random tensor so that
/// the check sees a scalar with a non-trivial gradient everywhere.
fn project(tape: &mut Tape<'_>, out: Var, seed: u64) -> Var {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shape = tape.value(out).shape().to_vec();
    let r = tape.constant(random(&shape, &mut rng));
    tape.dot(out, r).unwrap()
}

fn check_layer(params: &ParamSet, build: impl Fn(&mut Tape<'_>) -> Var) {
    let mut tape = Tape::new(params);
    let out = build(&mut tape);
    let loss = project(&mut tape, out, 99);
    let analytic = tape.backward(loss).unwrap();
    let numeric = finite_diff(
        |ps| {
            let mut t = Tape::new(ps);
            let out = build(&mut t);
            let l = project(&mut t, out, 99);
            t.value(l).data()[0]
        },
        params,
        DEFAULT_DELTA,
    );
    let err = max_relative_error(&analytic, &numeric);
    assert!(err < 1e-4, "max relative error {err}");
}

#[test]
fn gradcheck_conv() {
    let (p, [x, w, b]) = conv_setup(6, 3, 2, 3, 11);
    check_layer(&p, |t| t.conv1d_same(Var::Param(x), Var::Param(w), Var::Param(b)).unwrap());
}

#[test]
fn gradcheck_conv_transpose() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut p = ParamSet::new();
    let x = p.add("x", random(&[6, 2], &mut rng));
    let w = p.add("w", random(&[2, 5, 3], &mut rng));
    let b = p.add("b", random(&[3], &mut rng));
    check_layer(&p, |t| {
        t.conv1d_transpose_same(Var::Param(x), Var::Param(w), Var::Param(b))
            .unwrap()
    });
}

#[test]
fn gradcheck_pool_relu_upsample() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut p = ParamSet::new();
    let x = p.add("x", random(&[6, 3], &mut rng));
    check_layer(&p, |t| {
        let r = t.relu(Var::Param(x));
        let q = t.maxpool1d(r, 2).unwrap();
        t.upsample(q, 2).unwrap()
    });
}

#[test]
fn gradcheck_embedding_dense_softmax() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let mut p = ParamSet::new();
    let table = p.add("table", random(&[5, 2], &mut rng));
    let w = p.add("w", random(&[3, 6], &mut rng));
    let b = p.add("b", random(&[3], &mut rng));
    let build = |t: &mut Tape<'_>| {
        let e = t.embedding(Var::Param(table), &[3, 1, 3]).unwrap();
        let flat = t.concat(&[e]).unwrap();
        let y = t.dense(flat, Var::Param(w), Var::Param(b)).unwrap();
        t.softmax_cross_entropy(y, &[0.0, 1.0, 0.0]).unwrap()
    };
    let mut tape = Tape::new(&p);
    let loss = build(&mut tape);
    let analytic = tape.backward(loss).unwrap();
    let numeric = finite_diff(
        |ps| {
            let mut t = Tape::new(ps);
            let l = build(&mut t);
            t.value(l).data()[0]
        },
        &p,
        DEFAULT_DELTA,
    );
    assert!(max_relative_error(&analytic, &numeric) < 1e-4);
}

#[test]
fn scaled_accumulation() {
    let mut p = ParamSet::new();
    let x = p.add("x", Tensor::from_vec(vec![2.0]));
    let w = p.add("w", Tensor::from_vec(vec![3.0]));
    let mut tape = Tape::new(&p);
    let f = tape.dot(Var::Param(x), Var::Param(w)).unwrap();
    let mut g = Gradients::zeros_like(&p);
    tape.backward_into(f, &mut g, 0.5).unwrap();
    tape.backward_into(f, &mut g, 0.5).unwrap();
    assert_eq!(g.get(w).data(), &[2.0]);
}

#[test]
fn deterministic_forward_and_backward() {
    let run = || {
        let (p, [x, w, b]) = conv_setup(6, 3, 2, 3, 21);
        let mut tape = Tape::new(&p);
        let out = tape.conv1d_same(Var::Param(x), Var::Param(w), Var::Param(b)).unwrap();
        let loss = project(&mut tape, out, 5);
        (tape.value(out).clone(), tape.backward(loss).unwrap())
    };
    assert_eq!(run(), run());
}
