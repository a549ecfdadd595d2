use std::fmt::Write as _;

use super::grid::JointLogGrid;
use crate::error::{Error, Result};
use crate::math::log_add;

/// Forward (alpha) and backward (beta) variables over the `T x (U+1)` lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentLattice {
    frames: usize,
    target_len: usize,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    /// Blank log-probability at the final node, needed for the forward total.
    final_blank: f64,
}

impl AlignmentLattice {
    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn target_len(&self) -> usize {
        self.target_len
    }

    #[inline]
    pub fn alpha(&self, t: usize, u: usize) -> f64 {
        self.alpha[t * (self.target_len + 1) + u]
    }

    #[inline]
    pub fn beta(&self, t: usize, u: usize) -> f64 {
        self.beta[t * (self.target_len + 1) + u]
    }

    /// `log P(y|x)` from the forward pass.
    pub fn forward_total(&self) -> f64 {
        self.alpha(self.frames - 1, self.target_len) + self.final_blank
    }

    /// `log P(y|x)` from the backward pass.
    pub fn total_log_prob(&self) -> f64 {
        self.beta(0, 0)
    }

    /// One `t u alpha beta` line per lattice node, row-major.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for t in 0..self.frames {
            for u in 0..=self.target_len {
                writeln!(out, "{t} {u} {:?} {:?}", self.alpha(t, u), self.beta(t, u)).unwrap();
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossResult {
    pub nll: f64,
    /// d nll / d logit, laid out like the grid.
    pub grad: Vec<f64>,
}

/// Number of joint values a batch holds at once: `B * T * (U+1) * V`.
pub fn joint_workspace_len(batch: usize, frames: usize, target_len: usize, vocab: usize) -> usize {
    batch * frames * (target_len + 1) * vocab
}

fn validate(grid: &JointLogGrid, targets: &[u32], blank: u32) -> Result<()> {
    if grid.frames() == 0 {
        return Err(Error::EmptyLattice);
    }
    if targets.len() != grid.target_len() {
        return Err(Error::Shape(format!(
            "{} targets for a grid built with U = {}",
            targets.len(),
            grid.target_len()
        )));
    }
    if blank as usize >= grid.vocab() {
        return Err(Error::TargetOutOfRange {
            id: blank,
            vocab: grid.vocab(),
        });
    }
    for (position, &y) in targets.iter().enumerate() {
        if y == blank {
            return Err(Error::BlankInTargets { blank, position });
        }
        if y as usize >= grid.vocab() {
            return Err(Error::TargetOutOfRange {
                id: y,
                vocab: grid.vocab(),
            });
        }
    }
    Ok(())
}

fn forward(grid: &JointLogGrid, targets: &[u32], blank: usize) -> Vec<f64> {
    let (frames, width) = (grid.frames(), grid.target_len() + 1);
    let mut alpha = vec![f64::NEG_INFINITY; frames * width];
    alpha[0] = 0.0;
    for t in 0..frames {
        for u in 0..width {
            if t == 0 && u == 0 {
                continue;
            }
            let mut acc = f64::NEG_INFINITY;
            if t > 0 {
                acc = alpha[(t - 1) * width + u] + grid.get(t - 1, u, blank);
            }
            if u > 0 {
                let label = targets[u - 1] as usize;
                acc = log_add(acc, alpha[t * width + u - 1] + grid.get(t, u - 1, label));
            }
            alpha[t * width + u] = acc;
        }
    }
    alpha
}

fn backward(grid: &JointLogGrid, targets: &[u32], blank: usize) -> Vec<f64> {
    let (frames, width) = (grid.frames(), grid.target_len() + 1);
    let last_u = width - 1;
    let mut beta = vec![f64::NEG_INFINITY; frames * width];
    for t in (0..frames).rev() {
        for u in (0..width).rev() {
            let value = if t == frames - 1 && u == last_u {
                grid.get(t, u, blank)
            } else {
                let mut acc = f64::NEG_INFINITY;
                if t + 1 < frames {
                    acc = beta[(t + 1) * width + u] + grid.get(t, u, blank);
                }
                if u < last_u {
                    let label = targets[u] as usize;
                    acc = log_add(acc, beta[t * width + u + 1] + grid.get(t, u, label));
                }
                acc
            };
            beta[t * width + u] = value;
        }
    }
    beta
}

/// Runs both recursions.
pub fn rnnt_lattice(grid: &JointLogGrid, targets: &[u32], blank: u32) -> Result<AlignmentLattice> {
    validate(grid, targets, blank)?;
    let b = blank as usize;
    let alpha = forward(grid, targets, b);
    let beta = backward(grid, targets, b);
    Ok(AlignmentLattice {
        frames: grid.frames(),
        target_len: grid.target_len(),
        alpha,
        beta,
        final_blank: grid.get(grid.frames() - 1, grid.target_len(), b),
    })
}

/// `-log P(y|x)` summed over every monotone alignment, via the alpha recursion.
pub fn rnnt_nll(grid: &JointLogGrid, targets: &[u32], blank: u32) -> Result<f64> {
    validate(grid, targets, blank)?;
    let alpha = forward(grid, targets, blank as usize);
    let width = grid.target_len() + 1;
    let last = (grid.frames() - 1) * width + grid.target_len();
    Ok(-(alpha[last] + grid.get(grid.frames() - 1, grid.target_len(), blank as usize)))
}

/// Loss and its gradient with respect to the pre-softmax logits.
///
/// For node `(t, u)` with occupancy `g = sum_k occ_k`, the gradient is
/// `p_k * g - occ_k`, where `occ_k` is the posterior mass of leaving the node
/// through class `k`.
pub fn rnnt_grad(grid: &JointLogGrid, targets: &[u32], blank: u32) -> Result<LossResult> {
    let lattice = rnnt_lattice(grid, targets, blank)?;
    let log_p = lattice.total_log_prob();
    let (frames, last_u) = (grid.frames(), grid.target_len());
    let b = blank as usize;
    let mut grad = vec![0.0; grid.values().len()];
    for t in 0..frames {
        for u in 0..=last_u {
            let a = lattice.alpha(t, u);
            if a == f64::NEG_INFINITY {
                continue;
            }
            let occ_blank = if t + 1 < frames {
                (a + grid.get(t, u, b) + lattice.beta(t + 1, u) - log_p).exp()
            } else if u == last_u {
                (a + grid.get(t, u, b) - log_p).exp()
            } else {
                0.0
            };
            let (label, occ_label) = if u < last_u {
                let y = targets[u] as usize;
                (y, (a + grid.get(t, u, y) + lattice.beta(t, u + 1) - log_p).exp())
            } else {
                (usize::MAX, 0.0)
            };
            let occupancy = occ_blank + occ_label;
            let base = grid.offset(t, u);
            for (k, g) in grad[base..base + grid.vocab()].iter_mut().enumerate() {
                *g = grid.get(t, u, k).exp() * occupancy;
            }
            grad[base + b] -= occ_blank;
            if label != usize::MAX {
                grad[base + label] -= occ_label;
            }
        }
    }
    Ok(LossResult { nll: -log_p, grad })
}

/// Losses for a batch, evaluated in order.
pub fn batch_nll(items: &[(JointLogGrid, Vec<u32>)], blank: u32) -> Result<Vec<f64>> {
    items.iter().map(|(g, y)| rnnt_nll(g, y, blank)).collect()
}
