use super::{Gradients, ParamSet};

pub const DEFAULT_DELTA: f64 = 1e-5;

/// Denominator floor for [`relative_error`]; keeps exact zeros comparable.
const REL_FLOOR: f64 = 1e-8;

/// Central differences `(f(θ+δ) - f(θ-δ)) / 2δ` for every parameter entry.
pub fn finite_diff(f: impl Fn(&ParamSet) -> f64, params: &ParamSet, delta: f64) -> Gradients {
    assert!(delta > 0.0, "finite-difference step must be positive");
    let mut work = params.clone();
    let mut grads = Gradients::zeros_like(params);
    for id in params.ids() {
        for i in 0..params.get(id).len() {
            let orig = params.get(id).data()[i];
            work.get_mut(id).data_mut()[i] = orig + delta;
            let plus = f(&work);
            work.get_mut(id).data_mut()[i] = orig - delta;
            let minus = f(&work);
            work.get_mut(id).data_mut()[i] = orig;
            grads.get_mut(id).data_mut()[i] = (plus - minus) / (2.0 * delta);
        }
    }
    grads
}

/// `|a - b| / max(|a|, |b|, 1e-8)`.
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(REL_FLOOR)
}

pub fn max_relative_error(a: &Gradients, b: &Gradients) -> f64 {
    a.iter()
        .zip(b.iter())
        .flat_map(|((_, x), (_, y))| x.data().iter().zip(y.data()).map(|(&p, &q)| relative_error(p, q)))
        .fold(0.0, f64::max)
}
