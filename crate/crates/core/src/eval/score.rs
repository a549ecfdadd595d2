use serde::{Deserialize, Serialize};

use super::align::{align, EditOp};
use crate::error::{Error, Result};
use crate::tokenize::WORD_SEPARATOR;

/// Scoring granularity: words for most languages, characters for
/// large-alphabet ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Unit {
    Word,
    Char,
}

/// Words split on the separator; characters keep the separator as a token.
pub fn split_units(text: &str, unit: Unit) -> Vec<String> {
    match unit {
        Unit::Word => text.split(WORD_SEPARATOR).filter(|w| !w.is_empty()).map(str::to_string).collect(),
        Unit::Char => text.chars().map(String::from).collect(),
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorCounts {
    pub insertions: usize,
    pub deletions: usize,
    pub substitutions: usize,
    pub reference_length: usize,
}

impl ErrorCounts {
    pub fn from_ops(ops: &[EditOp]) -> Self {
        let mut c = Self::default();
        for op in ops {
            match op {
                EditOp::Match => c.reference_length += 1,
                EditOp::Substitution => {
                    c.substitutions += 1;
                    c.reference_length += 1;
                }
                EditOp::Deletion => {
                    c.deletions += 1;
                    c.reference_length += 1;
                }
                EditOp::Insertion => c.insertions += 1,
            }
        }
        c
    }

    pub fn add(&mut self, other: &ErrorCounts) {
        self.insertions += other.insertions;
        self.deletions += other.deletions;
        self.substitutions += other.substitutions;
        self.reference_length += other.reference_length;
    }

    pub fn errors(&self) -> usize {
        self.insertions + self.deletions + self.substitutions
    }
}

/// Counts and percentage rates. `wer_percent` is the sum of the three
/// unrounded rates, so the decomposition is exact.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorBreakdown {
    pub counts: ErrorCounts,
    pub ins_rate: f64,
    pub del_rate: f64,
    pub sub_rate: f64,
    pub wer_percent: f64,
}

impl ErrorBreakdown {
    /// Rates are relative to the reference length (at least 1).
    pub fn from_counts(counts: ErrorCounts) -> Self {
        let denom = counts.reference_length.max(1) as f64;
        let rate = |c: usize| c as f64 / denom * 100.0;
        let (ins_rate, del_rate, sub_rate) = (rate(counts.insertions), rate(counts.deletions), rate(counts.substitutions));
        Self { counts, ins_rate, del_rate, sub_rate, wer_percent: ins_rate + del_rate + sub_rate }
    }
}

/// Corpus-level error rates; counts are pooled over all pairs before the
/// rates are taken.
pub fn word_error_rate<R: AsRef<str>, H: AsRef<str>>(refs: &[R], hyps: &[H], unit: Unit) -> Result<ErrorBreakdown> {
    if refs.len() != hyps.len() {
        return Err(Error::LengthMismatch { refs: refs.len(), hyps: hyps.len() });
    }
    let mut total = ErrorCounts::default();
    for (r, h) in refs.iter().zip(hyps) {
        let ops = align(&split_units(r.as_ref(), unit), &split_units(h.as_ref(), unit));
        total.add(&ErrorCounts::from_ops(&ops));
    }
    Ok(ErrorBreakdown::from_counts(total))
}

/// Relative improvement of `wer_a` over the baseline `wer_b`, in percent.
pub fn relative_improvement(wer_a: f64, wer_b: f64) -> Result<f64> {
    if !(wer_b > 0.0) {
        return Err(Error::NonPositiveBaseline(wer_b));
    }
    Ok((wer_b - wer_a) / wer_b * 100.0)
}

/// Unweighted mean of per-language rates.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MeanRates {
    pub ins_rate: f64,
    pub del_rate: f64,
    pub sub_rate: f64,
    pub wer_percent: f64,
}

/// Macro average: each language counts once regardless of its size.
pub fn macro_average(items: &[ErrorBreakdown]) -> MeanRates {
    let n = items.len().max(1) as f64;
    let mean = |f: fn(&ErrorBreakdown) -> f64| items.iter().map(f).sum::<f64>() / n;
    MeanRates {
        ins_rate: mean(|b| b.ins_rate),
        del_rate: mean(|b| b.del_rate),
        sub_rate: mean(|b| b.sub_rate),
        wer_percent: mean(|b| b.wer_percent),
    }
}
