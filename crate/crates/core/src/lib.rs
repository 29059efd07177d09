//! Multi-channel convolution/deconvolution text classifier with
//! deconvolution-based explanations.
//!
//! The crate covers the whole pipeline: tagged corpus ingestion
//! ([`corpus`]), a small reverse-mode differentiation engine ([`grad`]),
//! the word/POS/lemma classifier ([`model`]), token saliency and segment
//! ranking ([`saliency`]), reference explainers ([`baselines`]) and report
//! emission ([`report`]).

pub mod baselines;
pub mod corpus;
pub mod error;
pub mod grad;
pub mod model;
pub mod pipeline;
pub mod report;
pub mod saliency;

#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
