//! Transducer loss and decoding.
//!
//! The loss is computed on a [`JointLogGrid`]: for every encoder frame `t` in
//! `[0, T)` and target position `u` in `[0, U]`, a normalised log
//! distribution over `V` classes (blank included). Alignments are monotone
//! paths from `(0, 0)` that take a blank step to advance `t` and a label step
//! to advance `u`, ending with a blank emitted at `(T-1, U)`.

mod decode;
mod grid;
mod lattice;

pub use decode::{beam_decode, greedy_decode, BeamConfig, Hypothesis, Joiner, Predictor, DEFAULT_MAX_SYMBOLS_PER_FRAME};
pub use grid::JointLogGrid;
pub use lattice::{
    batch_nll, joint_workspace_len, rnnt_grad, rnnt_lattice, rnnt_nll, AlignmentLattice, LossResult,
};
