//! Experiment configuration: one TOML file per experiment. Every field has a
//! default, so an empty file (or no file) gives the shipped toy recipe.

use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use polyglot_core::data::{standard_languages, standard_test_counts, standard_train_counts, AugmentConfig, SyntheticLanguageSpec};
use polyglot_core::model::{DecodeMode, TrainConfig};
use polyglot_core::tokenize::{Strategy, DEFAULT_THRESHOLD};
use polyglot_core::transducer::DEFAULT_MAX_SYMBOLS_PER_FRAME;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Master seed; every other seed is derived from it.
    pub seed: u64,
    pub out_dir: PathBuf,
    pub corpus: CorpusSection,
    pub vocab: VocabSection,
    pub model: ModelSection,
    pub train: TrainSection,
    pub sampler: SamplerSection,
    pub augment: AugmentConfig,
    pub decode: DecodeSection,
    pub systems: Vec<SystemSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusSection {
    pub feature_dim: usize,
    /// Custom languages; empty means the standard four-language registry.
    pub languages: Vec<SyntheticLanguageSpec>,
    pub train_counts: Vec<usize>,
    pub test_counts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VocabSection {
    pub threshold: usize,
    pub subword_cap: usize,
    pub with_unk: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub subsample_factor: usize,
    pub encoder_layers: usize,
    /// Width of the encoder output and of the predictor LSTM.
    pub hidden_dim: usize,
    pub embed_dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub steps: u64,
    pub warmup_steps: u64,
    pub peak_lr: f64,
    pub final_lr_fraction: f64,
    pub batch_size: usize,
    pub clip_norm: Option<f64>,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub checkpoint_every: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerSection {
    pub alpha: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchKind {
    Greedy,
    Beam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecodeSection {
    pub search: SearchKind,
    pub beam_width: usize,
    pub max_symbols_per_frame: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HeadKind {
    Shared,
    PerLanguage,
}

/// One model to train: a vocabulary strategy plus an output topology.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub name: String,
    pub strategy: Strategy,
    #[serde(default)]
    pub heads: Option<HeadKind>,
}

impl SystemSection {
    /// Per-language heads go with language-specific vocabularies unless set.
    pub fn head_kind(&self) -> HeadKind {
        self.heads.unwrap_or(match self.strategy {
            Strategy::LanguageSpecific => HeadKind::PerLanguage,
            _ => HeadKind::Shared,
        })
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 20240901,
            out_dir: PathBuf::from("runs/default"),
            corpus: CorpusSection::default(),
            vocab: VocabSection::default(),
            model: ModelSection::default(),
            train: TrainSection::default(),
            sampler: SamplerSection::default(),
            augment: toy_augment(),
            decode: DecodeSection::default(),
            systems: vec![
                SystemSection { name: "ML-SC".into(), strategy: Strategy::SharedChar, heads: None },
                SystemSection { name: "ML-SCW".into(), strategy: Strategy::SharedCharSubword, heads: None },
                SystemSection { name: "ML-IO".into(), strategy: Strategy::LanguageSpecific, heads: None },
            ],
        }
    }
}

/// Mask sizes scaled to toy utterances (tens of frames, a few bins).
fn toy_augment() -> AugmentConfig {
    AugmentConfig {
        freq_mask_width: 2,
        freq_mask_count: 1,
        time_mask_width: 4,
        time_mask_count: 2,
        apply_prob: 0.5,
        time_warp: 0,
    }
}

impl Default for CorpusSection {
    fn default() -> Self {
        Self {
            feature_dim: 16,
            languages: Vec::new(),
            train_counts: standard_train_counts(),
            test_counts: standard_test_counts(),
        }
    }
}

impl Default for VocabSection {
    fn default() -> Self {
        Self { threshold: DEFAULT_THRESHOLD, subword_cap: 512, with_unk: false }
    }
}

impl Default for ModelSection {
    fn default() -> Self {
        Self { subsample_factor: 2, encoder_layers: 2, hidden_dim: 32, embed_dim: 32 }
    }
}

impl Default for TrainSection {
    fn default() -> Self {
        Self {
            steps: 1500,
            warmup_steps: 100,
            peak_lr: 1e-2,
            final_lr_fraction: 0.1,
            batch_size: 8,
            clip_norm: Some(5.0),
            beta1: 0.9,
            beta2: 0.98,
            epsilon: 1e-8,
            checkpoint_every: 250,
        }
    }
}

impl Default for SamplerSection {
    fn default() -> Self {
        Self { alpha: 0.5 }
    }
}

impl Default for DecodeSection {
    fn default() -> Self {
        Self { search: SearchKind::Beam, beam_width: 4, max_symbols_per_frame: DEFAULT_MAX_SYMBOLS_PER_FRAME }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn languages(&self) -> Vec<SyntheticLanguageSpec> {
        if self.corpus.languages.is_empty() {
            standard_languages(self.corpus.feature_dim)
        } else {
            self.corpus.languages.clone()
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        let t = &self.train;
        TrainConfig {
            peak_lr: t.peak_lr,
            beta1: t.beta1,
            beta2: t.beta2,
            epsilon: t.epsilon,
            warmup_steps: t.warmup_steps,
            total_steps: t.steps,
            final_lr_fraction: t.final_lr_fraction,
            batch_size: t.batch_size,
            clip_norm: t.clip_norm,
        }
    }

    pub fn decode_mode(&self) -> DecodeMode {
        match self.decode.search {
            SearchKind::Greedy => DecodeMode::Greedy,
            SearchKind::Beam => DecodeMode::Beam { width: self.decode.beam_width },
        }
    }

    pub fn system(&self, name: Option<&str>) -> Result<&SystemSection> {
        match name {
            None => self.systems.first().context("config defines no systems"),
            Some(n) => match self.systems.iter().find(|s| s.name == n) {
                Some(s) => Ok(s),
                None => bail!("no system named {n:?} in config"),
            },
        }
    }

    /// Checks everything that can be checked without touching the disk.
    pub fn validate(&self) -> Result<()> {
        let languages = self.languages();
        ensure!(!languages.is_empty(), "no languages configured");
        for spec in &languages {
            spec.validate()?;
            ensure!(
                spec.feature_dim == self.corpus.feature_dim,
                "language {} has feature_dim {} but corpus.feature_dim is {}",
                spec.language_id,
                spec.feature_dim,
                self.corpus.feature_dim
            );
        }
        ensure!(
            self.corpus.train_counts.len() == languages.len() && self.corpus.test_counts.len() == languages.len(),
            "train_counts and test_counts need one entry per language ({})",
            languages.len()
        );
        ensure!(self.corpus.train_counts.iter().all(|&n| n > 0), "every language needs training data");
        ensure!(self.vocab.threshold > 0, "vocab.threshold must be positive");
        ensure!(self.vocab.subword_cap > 0, "vocab.subword_cap must be positive");
        let m = &self.model;
        ensure!(m.subsample_factor >= 1 && m.encoder_layers >= 1, "subsample_factor and encoder_layers must be >= 1");
        ensure!(m.hidden_dim > 0 && m.embed_dim > 0, "model dimensions must be positive");
        self.train_config().validate()?;
        ensure!(self.train.checkpoint_every > 0, "train.checkpoint_every must be positive");
        ensure!(self.sampler.alpha.is_finite() && self.sampler.alpha >= 0.0, "sampler.alpha must be >= 0");
        ensure!((0.0..=1.0).contains(&self.augment.apply_prob), "augment.apply_prob must be in [0, 1]");
        ensure!(self.decode.beam_width >= 1, "decode.beam_width must be >= 1");
        ensure!(self.decode.max_symbols_per_frame >= 1, "decode.max_symbols_per_frame must be >= 1");
        ensure!(!self.systems.is_empty(), "config defines no systems");
        for (i, s) in self.systems.iter().enumerate() {
            ensure!(
                !s.name.is_empty() && s.name.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c)),
                "system name {:?} must be non-empty ASCII letters, digits, '-', '_' or '.'",
                s.name
            );
            ensure!(self.systems[..i].iter().all(|o| o.name != s.name), "duplicate system name {:?}", s.name);
            ensure!(
                !(s.head_kind() == HeadKind::PerLanguage && s.strategy != Strategy::LanguageSpecific),
                "system {}: per-language heads need the lang-specific strategy",
                s.name
            );
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let cfg = ExperimentConfig::default();
        cfg.validate().unwrap();
        let text = toml::to_string(&cfg).unwrap();
        let back: ExperimentConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn partial_files_fill_defaults() {
        let cfg: ExperimentConfig = toml::from_str("seed = 7\n[train]\nsteps = 50\nwarmup_steps = 5\n").unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.train.steps, 50);
        assert_eq!(cfg.train.batch_size, TrainSection::default().batch_size);
        assert_eq!(cfg.systems.len(), 3);
    }

    #[test]
    fn unknown_fields_and_bad_values_rejected() {
        assert!(toml::from_str::<ExperimentConfig>("sed = 1").is_err());
        let mut cfg = ExperimentConfig::default();
        cfg.corpus.train_counts.pop();
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::default();
        cfg.systems[0].heads = Some(HeadKind::PerLanguage);
        assert!(cfg.validate().is_err());
    }
}
