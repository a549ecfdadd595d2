use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tokenize::LanguageId;

/// Output-side topology.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum HeadLayout {
    /// One embedding and one output layer for every language.
    Shared { vocab_size: usize },
    /// Embedding `E_l` and output `(W_l, b_l)` per language, each sized to that
    /// language's blank-augmented vocabulary.
    PerLanguage { heads: Vec<(LanguageId, usize)> },
}

impl HeadLayout {
    pub fn vocab_sizes(&self) -> Vec<usize> {
        match self {
            HeadLayout::Shared { vocab_size } => vec![*vocab_size],
            HeadLayout::PerLanguage { heads } => heads.iter().map(|(_, v)| *v).collect(),
        }
    }

    /// Head serving `language`. Any language maps to head 0 under a shared
    /// layout.
    pub fn head_index(&self, language: &LanguageId) -> Result<usize> {
        match self {
            HeadLayout::Shared { .. } => Ok(0),
            HeadLayout::PerLanguage { heads } => heads
                .iter()
                .position(|(l, _)| l == language)
                .ok_or_else(|| Error::UnknownLanguage(language.to_string())),
        }
    }
}

/// Architecture hyper-parameters. The large-scale recipe uses dropout 0.1 in
/// the encoder and 0.3 in the predictor; the toy model runs without dropout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub feature_dim: usize,
    /// Frames stacked into one encoder input.
    pub subsample_factor: usize,
    /// Number of tanh layers before the linear encoder output.
    pub encoder_layers: usize,
    pub encoder_dim: usize,
    /// Embedding width `d_emb`.
    pub embed_dim: usize,
    /// LSTM width `d_hid`; must equal `encoder_dim` for the additive joiner.
    pub predictor_dim: usize,
    pub heads: HeadLayout,
    pub seed: u64,
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.encoder_dim != self.predictor_dim {
            return fail(format!(
                "encoder_dim {} must equal predictor_dim {}",
                self.encoder_dim, self.predictor_dim
            ));
        }
        if self.subsample_factor < 1 {
            return fail("subsample_factor must be at least 1".into());
        }
        if self.encoder_layers < 1 {
            return fail("encoder_layers must be at least 1".into());
        }
        if self.feature_dim == 0 || self.encoder_dim == 0 || self.embed_dim == 0 {
            return fail("dimensions must be positive".into());
        }
        let sizes = self.heads.vocab_sizes();
        if sizes.is_empty() || sizes.iter().any(|&v| v < 2) {
            return fail("every head needs blank plus at least one token".into());
        }
        Ok(())
    }
}

/// Optimiser and schedule settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub peak_lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub warmup_steps: u64,
    pub total_steps: u64,
    /// Learning rate at `total_steps` as a fraction of the peak.
    pub final_lr_fraction: f64,
    pub batch_size: usize,
    /// Global gradient-norm clip; `None` disables clipping.
    pub clip_norm: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            peak_lr: 4e-4,
            beta1: 0.9,
            beta2: 0.98,
            epsilon: 1e-8,
            warmup_steps: 20_000,
            total_steps: 700_000,
            final_lr_fraction: 0.1,
            batch_size: 8,
            clip_norm: Some(5.0),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.final_lr_fraction > 0.0 && self.final_lr_fraction <= 1.0) {
            return fail("final_lr_fraction must be in (0, 1]");
        }
        if self.warmup_steps >= self.total_steps {
            return fail("warmup_steps must be below total_steps");
        }
        if self.batch_size == 0 {
            return fail("batch_size must be at least 1");
        }
        if !(self.peak_lr >= 0.0) {
            return fail("peak_lr must be non-negative");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return fail("Adam betas must be in [0, 1)");
        }
        Ok(())
    }
}

/// Linear warmup from 0 to the peak over `warmup_steps`, then exponential
/// decay reaching `peak * final_lr_fraction` at `total_steps`.
pub fn lr_schedule(step: u64, config: &TrainConfig) -> f64 {
    let step = step.min(config.total_steps);
    if step < config.warmup_steps {
        return config.peak_lr * step as f64 / config.warmup_steps as f64;
    }
    let span = (config.total_steps - config.warmup_steps) as f64;
    let progress = (step - config.warmup_steps) as f64 / span;
    config.peak_lr * config.final_lr_fraction.powf(progress)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_anchor_points() {
        let cfg = TrainConfig::default();
        assert_eq!(lr_schedule(20_000, &cfg), 4e-4);
        assert!((lr_schedule(700_000, &cfg) - 4e-5).abs() < 1e-18);
        assert_eq!(lr_schedule(10_000, &cfg), 2e-4);
        assert_eq!(lr_schedule(0, &cfg), 0.0);
        assert!(lr_schedule(400_000, &cfg) < 4e-4 && lr_schedule(400_000, &cfg) > 4e-5);
    }

    #[test]
    fn schedule_is_monotone_in_each_phase() {
        let cfg = TrainConfig {
            warmup_steps: 10,
            total_steps: 50,
            ..TrainConfig::default()
        };
        for s in 1..10 {
            assert!(lr_schedule(s, &cfg) > lr_schedule(s - 1, &cfg));
        }
        for s in 11..=50 {
            assert!(lr_schedule(s, &cfg) < lr_schedule(s - 1, &cfg));
        }
    }

    #[test]
    fn train_config_validation() {
        let mut cfg = TrainConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.final_lr_fraction = 0.0;
        assert!(cfg.validate().is_err());
        let cfg = TrainConfig {
            warmup_steps: 10,
            total_steps: 10,
            ..TrainConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn head_lookup() {
        let shared = HeadLayout::Shared { vocab_size: 5 };
        assert_eq!(shared.head_index(&"anything".into()).unwrap(), 0);
        let multi = HeadLayout::PerLanguage {
            heads: vec![("a".into(), 3), ("b".into(), 4)],
        };
        assert_eq!(multi.head_index(&"b".into()).unwrap(), 1);
        assert!(matches!(multi.head_index(&"c".into()), Err(Error::UnknownLanguage(_))));
    }
}
