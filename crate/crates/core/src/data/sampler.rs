use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::manifest::{CorpusManifest, Utterance};
use crate::error::{Error, Result};
use crate::math::mix_seed;
use crate::tokenize::LanguageId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    /// Example count per language.
    pub counts: Vec<(LanguageId, usize)>,
    pub alpha: f64,
    pub seed: u64,
}

impl SamplerConfig {
    pub fn from_manifest(manifest: &CorpusManifest, alpha: f64, seed: u64) -> Self {
        let counts = manifest
            .languages()
            .into_iter()
            .map(|l| {
                let n = manifest.for_language(&l).count();
                (l, n)
            })
            .collect();
        Self { counts, alpha, seed }
    }
}

/// `p_l = (n_l/N)^alpha / sum_m (n_m/N)^alpha`.
pub fn language_distribution(config: &SamplerConfig) -> Result<Vec<f64>> {
    if config.counts.is_empty() {
        return Err(Error::Config("sampler needs at least one language".into()));
    }
    if let Some((lang, _)) = config.counts.iter().find(|(_, n)| *n == 0) {
        return Err(Error::Config(format!("language {lang} has no examples")));
    }
    if !config.alpha.is_finite() || config.alpha < 0.0 {
        return Err(Error::Config(format!("alpha must be finite and >= 0, got {}", config.alpha)));
    }
    let total: usize = config.counts.iter().map(|(_, n)| n).sum();
    let weights: Vec<f64> = config
        .counts
        .iter()
        .map(|(_, n)| (*n as f64 / total as f64).powf(config.alpha))
        .collect();
    let norm: f64 = weights.iter().sum();
    Ok(weights.into_iter().map(|w| w / norm).collect())
}

/// Draws batches: a language per slot from [`language_distribution`], then an
/// utterance uniformly within it. Batch `k` depends only on the seed and `k`,
/// so a resumed run reproduces the same batches.
#[derive(Debug, Clone)]
pub struct BatchSampler<'a> {
    groups: Vec<Vec<&'a Utterance>>,
    probabilities: Vec<f64>,
    picker: WeightedIndex<f64>,
    seed: u64,
}

impl<'a> BatchSampler<'a> {
    pub fn new(manifest: &'a CorpusManifest, alpha: f64, seed: u64) -> Result<Self> {
        let config = SamplerConfig::from_manifest(manifest, alpha, seed);
        let probabilities = language_distribution(&config)?;
        let groups = config
            .counts
            .iter()
            .map(|(l, _)| manifest.utterances.iter().filter(|u| &u.language == l).collect())
            .collect();
        let picker = WeightedIndex::new(&probabilities).map_err(|e| Error::Config(e.to_string()))?;
        Ok(Self {
            groups,
            probabilities,
            picker,
            seed,
        })
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn batch(&self, index: u64, batch_size: usize) -> Vec<&'a Utterance> {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(self.seed, index));
        (0..batch_size)
            .map(|_| {
                let group = &self.groups[self.picker.sample(&mut rng)];
                group[rng.random_range(0..group.len())]
            })
            .collect()
    }
}

/// One batch drawn with the config's seed and alpha.
pub fn sample_batch<'a>(
    manifest: &'a CorpusManifest,
    config: &SamplerConfig,
    batch_size: usize,
) -> Result<Vec<&'a Utterance>> {
    if batch_size == 0 {
        return Err(Error::Config("batch_size must be at least 1".into()));
    }
    Ok(BatchSampler::new(manifest, config.alpha, config.seed)?.batch(0, batch_size))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::FeatureMatrix;

    fn config(counts: &[usize], alpha: f64) -> SamplerConfig {
        SamplerConfig {
            counts: counts
                .iter()
                .enumerate()
                .map(|(i, &n)| (LanguageId::new(format!("l{i}")), n))
                .collect(),
            alpha,
            seed: 0,
        }
    }

    fn manifest(counts: &[usize]) -> CorpusManifest {
        let mut utterances = Vec::new();
        for (i, &n) in counts.iter().enumerate() {
            for j in 0..n {
                utterances.push(Utterance {
                    id: format!("l{i}-{j}"),
                    language: LanguageId::new(format!("l{i}")),
                    transcript: "a".into(),
                    features: FeatureMatrix::zeros(1, 1),
                });
            }
        }
        CorpusManifest { utterances }
    }

    #[test]
    fn exponent_identities() {
        let p = language_distribution(&config(&[100, 300], 1.0)).unwrap();
        assert!((p[0] - 0.25).abs() < 1e-15 && (p[1] - 0.75).abs() < 1e-15);
        let p = language_distribution(&config(&[1, 50, 900], 0.0)).unwrap();
        assert!(p.iter().all(|&x| (x - 1.0 / 3.0).abs() < 1e-15));
        let p = language_distribution(&config(&[100, 400], 0.5)).unwrap();
        assert!((p[0] - 1.0 / 3.0).abs() < 1e-12 && (p[1] - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_empty_and_zero_counts() {
        assert!(language_distribution(&config(&[], 0.5)).is_err());
        assert!(language_distribution(&config(&[3, 0], 0.5)).is_err());
        assert!(language_distribution(&config(&[3], -1.0)).is_err());
    }

    #[test]
    fn single_language_batches() {
        let m = manifest(&[5]);
        let batch = sample_batch(&m, &config(&[5], 0.5), 16).unwrap();
        assert_eq!(batch.len(), 16);
        assert!(batch.iter().all(|u| u.language.as_str() == "l0"));
        assert!(sample_batch(&m, &config(&[5], 0.5), 0).is_err());
    }

    #[test]
    fn batches_are_reproducible() {
        let m = manifest(&[10, 20, 5]);
        let a = BatchSampler::new(&m, 0.5, 7).unwrap();
        let b = BatchSampler::new(&m, 0.5, 7).unwrap();
        for k in 0..5 {
            let ida: Vec<_> = a.batch(k, 8).iter().map(|u| u.id.clone()).collect();
            let idb: Vec<_> = b.batch(k, 8).iter().map(|u| u.id.clone()).collect();
            assert_eq!(ida, idb);
        }
    }
}
