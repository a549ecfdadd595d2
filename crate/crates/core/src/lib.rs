//! Multilingual RNN-T toolkit.
//!
//! The crate is organised around the pieces of a desk-scale multilingual
//! transducer experiment:
//!
//! * [`tokenize`] builds character, subword (BPE) and hybrid vocabularies and
//!   reports tokens-per-second statistics for each strategy.
//! * [`transducer`] holds the log-space forward-backward loss, its gradient and
//!   greedy/beam decoding.
//! * [`model`] is a small trainable encoder/predictor/joiner with shared or
//!   per-language heads, Adam and the warmup/decay schedule.
//! * [`data`] generates deterministic synthetic multilingual corpora, language
//!   re-sampling and SpecAugment-style masking.
//! * [`eval`] scores hypotheses (WER/CER with an error breakdown) and compares
//!   experiments.

pub mod data;
pub mod error;
pub mod eval;
pub mod math;
pub mod model;
pub mod tokenize;
pub mod transducer;

pub use error::{Error, Result};
