//! Reverse-mode differentiation over the handful of dense layers the
//! classifier uses, plus Adam and a central finite-difference oracle.
//!
//! Parameters live in a [`ParamSet`] that a [`Tape`] borrows immutably;
//! the tape records every operation together with its output value, and
//! [`Tape::backward`] walks the record in reverse, accumulating parameter
//! gradients into a [`Gradients`] buffer.

mod adam;
mod check;
mod params;
mod tape;
mod tensor;

pub use adam::{AdamConfig, AdamState};
pub use check::{finite_diff, max_relative_error, relative_error, DEFAULT_DELTA};
pub use params::{Gradients, ParamId, ParamSet};
pub use tape::{softmax, Tape, Var, LOG_FLOOR};
pub use tensor::Tensor;

#[cfg(test)]
mod tests;
