//! Reference explainers to compare wTDS against: lexicometric z-scores and
//! a perturbation-sampling local linear surrogate, plus agreement metrics.

mod agreement;
mod lime;
mod zscore;

pub use agreement::{agreement, kendall_tau_b, top_k_positions, Agreement};
#[cfg(test)]
use lime::weighted_ridge;
pub use lime::{compare_segment, lime_explain, Comparison, LimeOptions, LocalExplanation, ProbabilityModel};
pub use zscore::{zscore, zscore_counts, zscore_table, ZScoreRow};
