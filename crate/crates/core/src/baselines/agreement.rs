use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agreement {
    /// Share of confidently scored tokens on which both methods agree in
    /// sign; `None` when no token clears both medians.
    pub sign_agreement: Option<f64>,
    /// Tokens that entered the sign comparison.
    pub sign_support: usize,
    /// Kendall tau-b over the union of both top-k sets; `None` when it is
    /// undefined (fewer than two tokens or a constant ranking).
    pub kendall_tau: Option<f64>,
    pub top_k: usize,
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Positions of the `k` highest scores, ties to the earlier position.
pub fn top_k_positions(scores: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order.truncate(k);
    order
}

/// Kendall tau-b between two paired samples.
pub fn kendall_tau_b(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len().min(b.len());
    let (mut concordant, mut discordant, mut ties_a, mut ties_b) = (0i64, 0i64, 0i64, 0i64);
    for i in 0..n {
        for j in i + 1..n {
            let da = (a[i] - a[j]).signum() * if a[i] == a[j] { 0.0 } else { 1.0 };
            let db = (b[i] - b[j]).signum() * if b[i] == b[j] { 0.0 } else { 1.0 };
            if da == 0.0 {
                ties_a += 1;
            }
            if db == 0.0 {
                ties_b += 1;
            }
            let s = da * db;
            if s > 0.0 {
                concordant += 1;
            } else if s < 0.0 {
                discordant += 1;
            }
        }
    }
    let pairs = (n * n.saturating_sub(1) / 2) as i64;
    let denom = (((pairs - ties_a) * (pairs - ties_b)) as f64).sqrt();
    if denom == 0.0 {
        None
    } else {
        Some((concordant - discordant) as f64 / denom)
    }
}

/// Compares two per-token score vectors of the same segment and class.
///
/// Signs are compared on tokens whose magnitude strictly exceeds the
/// median magnitude under both methods. Ranks are compared on the union of
/// each method's `top_k` highest-scoring tokens.
pub fn agreement(a: &[f64], b: &[f64], top_k: usize) -> Result<Agreement> {
    if top_k < 1 {
        return Err(Error::Invalid("top_k must be at least 1".into()));
    }
    if a.len() != b.len() {
        return Err(Error::Shape {
            tensor: "explanation".into(),
            expected: vec![a.len()],
            found: vec![b.len()],
        });
    }
    if a.is_empty() {
        return Ok(Agreement {
            sign_agreement: None,
            sign_support: 0,
            kendall_tau: None,
            top_k,
        });
    }
    let abs_a: Vec<f64> = a.iter().map(|x| x.abs()).collect();
    let abs_b: Vec<f64> = b.iter().map(|x| x.abs()).collect();
    let (med_a, med_b) = (median(&abs_a), median(&abs_b));
    let confident: Vec<usize> = (0..a.len()).filter(|&i| abs_a[i] > med_a && abs_b[i] > med_b).collect();
    let agree = confident.iter().filter(|&&i| (a[i] > 0.0) == (b[i] > 0.0)).count();
    let sign_agreement = (!confident.is_empty()).then(|| agree as f64 / confident.len() as f64);

    let mut union = top_k_positions(a, top_k);
    union.extend(top_k_positions(b, top_k));
    union.sort_unstable();
    union.dedup();
    let ua: Vec<f64> = union.iter().map(|&i| a[i]).collect();
    let ub: Vec<f64> = union.iter().map(|&i| b[i]).collect();
    Ok(Agreement {
        sign_agreement,
        sign_support: confident.len(),
        kendall_tau: kendall_tau_b(&ua, &ub),
        top_k,
    })
}
