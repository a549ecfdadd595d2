use serde::{Deserialize, Serialize};

use super::backprop::accumulate_utterance;
use super::config::{lr_schedule, TrainConfig};
use super::params::ModelParams;
use crate::data::FeatureMatrix;
use crate::error::{Error, Result};
use crate::tokenize::{LanguageId, BLANK_ID};
use crate::transducer::{rnnt_nll, JointLogGrid};

/// One training utterance: features plus blank-free target ids in the
/// vocabulary of its language's head.
#[derive(Debug, Clone, Copy)]
pub struct TrainExample<'a> {
    pub id: &'a str,
    pub language: &'a LanguageId,
    pub features: &'a FeatureMatrix,
    pub targets: &'a [u32],
}

/// Adam moments with a per-tensor update count, so that a language head that
/// sat out some batches gets the right bias correction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub step: u64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub tensor_steps: Vec<u64>,
}

impl AdamState {
    pub fn new(params: &ModelParams) -> Self {
        Self {
            step: 0,
            m: vec![0.0; params.num_params()],
            v: vec![0.0; params.num_params()],
            tensor_steps: vec![0; params.tensors().len()],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    pub step: u64,
    pub mean_nll: f64,
    pub grad_norm: f64,
    pub lr: f64,
}

fn check_finite(id: &str, nll: f64) -> Result<f64> {
    if nll.is_finite() {
        Ok(nll)
    } else {
        Err(Error::NonFiniteLoss { utterance: id.to_string(), loss: nll })
    }
}

/// Negative log-likelihood of one utterance and its gradient with respect to
/// every parameter (flat, in layout order).
pub fn utterance_loss_and_grad(params: &ModelParams, example: &TrainExample<'_>) -> Result<(f64, Vec<f64>)> {
    let mut grad = vec![0.0; params.num_params()];
    let head = params.head_index(example.language)?;
    let enc = params.encode(example.features)?;
    let pred = params.predict(head, example.targets)?;
    let nll = accumulate_utterance(params, &enc, &pred, head, example.targets, 1.0, &mut grad)?;
    Ok((check_finite(example.id, nll)?, grad))
}

impl ModelParams {
    /// Negative log-likelihood of one utterance (forward pass only).
    pub fn utterance_nll(&self, example: &TrainExample<'_>) -> Result<f64> {
        let head = self.head_index(example.language)?;
        let enc = self.encode(example.features)?;
        let pred = self.predict(head, example.targets)?;
        let vocab = self.head_vocab(head);
        let mut logits = Vec::with_capacity(enc.frames * pred.positions * vocab);
        for t in 0..enc.frames {
            for u in 0..pred.positions {
                logits.extend(self.joint_logits(head, enc.row(t), pred.row(u)));
            }
        }
        let grid = JointLogGrid::from_logits(enc.frames, example.targets.len(), vocab, logits)?;
        rnnt_nll(&grid, example.targets, BLANK_ID)
    }

    /// Mean negative log-likelihood over `batch`.
    pub fn mean_nll(&self, batch: &[TrainExample<'_>]) -> Result<f64> {
        let mut total = 0.0;
        for ex in batch {
            total += self.utterance_nll(ex)?;
        }
        Ok(total / batch.len().max(1) as f64)
    }
}

/// One Adam step on the mean loss of `batch`.
///
/// Utterances are processed in order, so a step is bit-for-bit reproducible.
/// A non-finite loss aborts the step before any parameter changes. Tensors of
/// language heads absent from the batch are left untouched, moments included.
pub fn train_step(
    params: &mut ModelParams,
    opt: &mut AdamState,
    batch: &[TrainExample<'_>],
    config: &TrainConfig,
) -> Result<StepReport> {
    if batch.is_empty() {
        return Err(Error::Config("empty training batch".into()));
    }
    let mut grad = vec![0.0; params.num_params()];
    let mut touched = vec![false; params.head_count()];
    let scale = 1.0 / batch.len() as f64;
    let mut total = 0.0;
    for ex in batch {
        let head = params.head_index(ex.language)?;
        touched[head] = true;
        let enc = params.encode(ex.features)?;
        let pred = params.predict(head, ex.targets)?;
        let nll = accumulate_utterance(params, &enc, &pred, head, ex.targets, scale, &mut grad)?;
        total += check_finite(ex.id, nll)?;
    }

    let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    if !norm.is_finite() {
        return Err(Error::NonFiniteLoss { utterance: batch[0].id.to_string(), loss: norm });
    }
    if let Some(clip) = config.clip_norm {
        if norm > clip {
            let k = clip / norm;
            grad.iter_mut().for_each(|g| *g *= k);
        }
    }

    opt.step += 1;
    let lr = lr_schedule(opt.step, config);
    let trunk = params.trunk_params();
    let head_ranges: Vec<_> = (0..params.head_count()).map(|h| params.head_range(h)).collect();
    for (ti, spec) in params.layout.tensors.clone().iter().enumerate() {
        let active = spec.offset < trunk
            || head_ranges.iter().zip(&touched).any(|(r, &t)| t && r.contains(&spec.offset));
        if !active {
            continue;
        }
        opt.tensor_steps[ti] += 1;
        let n = opt.tensor_steps[ti] as i32;
        let c1 = 1.0 - config.beta1.powi(n);
        let c2 = 1.0 - config.beta2.powi(n);
        for i in spec.range() {
            let g = grad[i];
            opt.m[i] = config.beta1 * opt.m[i] + (1.0 - config.beta1) * g;
            opt.v[i] = config.beta2 * opt.v[i] + (1.0 - config.beta2) * g * g;
            let m_hat = opt.m[i] / c1;
            let v_hat = opt.v[i] / c2;
            params.values[i] -= lr * m_hat / (v_hat.sqrt() + config.epsilon);
        }
    }
    Ok(StepReport { step: opt.step, mean_nll: total * scale, grad_norm: norm, lr })
}
