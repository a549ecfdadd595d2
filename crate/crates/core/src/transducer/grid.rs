use crate::error::{Error, Result};
use crate::math::{log_softmax_in_place, log_sum_exp};

/// Normalised log-probabilities indexed `(t, u, k)`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct JointLogGrid {
    frames: usize,
    target_len: usize,
    vocab: usize,
    values: Vec<f64>,
}

impl JointLogGrid {
    fn check_shape(frames: usize, target_len: usize, vocab: usize, len: usize) -> Result<()> {
        if frames == 0 {
            return Err(Error::EmptyLattice);
        }
        if vocab == 0 {
            return Err(Error::Shape("vocabulary size must be positive".into()));
        }
        let want = frames * (target_len + 1) * vocab;
        if len != want {
            return Err(Error::Shape(format!(
                "grid buffer has {len} values, expected {frames}x{}x{vocab} = {want}",
                target_len + 1
            )));
        }
        Ok(())
    }

    /// Applies a log-softmax to every `(t, u)` slice of raw logits.
    pub fn from_logits(frames: usize, target_len: usize, vocab: usize, mut logits: Vec<f64>) -> Result<Self> {
        Self::check_shape(frames, target_len, vocab, logits.len())?;
        for slice in logits.chunks_exact_mut(vocab) {
            log_softmax_in_place(slice);
        }
        Ok(Self {
            frames,
            target_len,
            vocab,
            values: logits,
        })
    }

    /// Wraps already-normalised log-probabilities; every slice must
    /// log-sum-exp to zero within 1e-6.
    pub fn from_log_probs(frames: usize, target_len: usize, vocab: usize, values: Vec<f64>) -> Result<Self> {
        Self::check_shape(frames, target_len, vocab, values.len())?;
        for (i, slice) in values.chunks_exact(vocab).enumerate() {
            let norm = log_sum_exp(slice);
            if !(norm.abs() < 1e-6) {
                return Err(Error::Shape(format!(
                    "slice ({}, {}) is not normalised (logsumexp = {norm})",
                    i / (target_len + 1),
                    i % (target_len + 1)
                )));
            }
        }
        Ok(Self {
            frames,
            target_len,
            vocab,
            values,
        })
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn target_len(&self) -> usize {
        self.target_len
    }

    pub fn vocab(&self) -> usize {
        self.vocab
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn offset(&self, t: usize, u: usize) -> usize {
        (t * (self.target_len + 1) + u) * self.vocab
    }

    #[inline]
    pub fn get(&self, t: usize, u: usize, k: usize) -> f64 {
        self.values[self.offset(t, u) + k]
    }

    pub fn slice(&self, t: usize, u: usize) -> &[f64] {
        let o = self.offset(t, u);
        &self.values[o..o + self.vocab]
    }
}
