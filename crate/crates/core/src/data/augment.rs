use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::manifest::FeatureMatrix;

/// SpecAugment parameters. Defaults are the large-scale recipe values
/// (W=80, F=27, m_F=1, T=100, p=1.0, m_T=2). Time warping is carried for
/// config fidelity only and never applied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentConfig {
    pub freq_mask_width: usize,
    pub freq_mask_count: usize,
    pub time_mask_width: usize,
    pub time_mask_count: usize,
    pub apply_prob: f64,
    pub time_warp: usize,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            freq_mask_width: 27,
            freq_mask_count: 1,
            time_mask_width: 100,
            time_mask_count: 2,
            apply_prob: 1.0,
            time_warp: 80,
        }
    }
}

impl AugmentConfig {
    pub fn disabled() -> Self {
        Self {
            apply_prob: 0.0,
            ..Self::default()
        }
    }
}

/// Mask bands chosen for one utterance.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MaskPlan {
    pub freq: Vec<Range<usize>>,
    pub time: Vec<Range<usize>>,
}

impl MaskPlan {
    pub fn covers(&self, frame: usize, bin: usize) -> bool {
        self.freq.iter().any(|r| r.contains(&bin)) || self.time.iter().any(|r| r.contains(&frame))
    }
}

/// Draws mask bands. Widths are uniform in `[0, width]`, clamped to the
/// matrix dimension.
pub fn plan_masks(frames: usize, dim: usize, config: &AugmentConfig, seed: u64) -> MaskPlan {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if config.apply_prob <= 0.0 || rng.random::<f64>() >= config.apply_prob {
        return MaskPlan::default();
    }
    let mut band = |limit: usize, max_width: usize| {
        let width = rng.random_range(0..=max_width.min(limit));
        let start = rng.random_range(0..=limit - width);
        start..start + width
    };
    let freq = (0..config.freq_mask_count)
        .map(|_| band(dim, config.freq_mask_width))
        .collect();
    let time = (0..config.time_mask_count)
        .map(|_| band(frames, config.time_mask_width))
        .collect();
    MaskPlan { freq, time }
}

/// Frequency and time masking; masked cells take the utterance mean.
pub fn spec_augment(features: &FeatureMatrix, config: &AugmentConfig, seed: u64) -> FeatureMatrix {
    let plan = plan_masks(features.frames(), features.dim(), config, seed);
    let mut out = features.clone();
    if plan.freq.iter().all(Range::is_empty) && plan.time.iter().all(Range::is_empty) {
        return out;
    }
    let fill = features.mean();
    let dim = features.dim();
    for (i, v) in out.data_mut().iter_mut().enumerate() {
        if plan.covers(i / dim, i % dim) {
            *v = fill;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(frames: usize, dim: usize) -> FeatureMatrix {
        FeatureMatrix::new(frames, dim, (0..frames * dim).map(|i| i as f32 * 0.5 + 1.0).collect()).unwrap()
    }

    #[test]
    fn probability_zero_is_identity() {
        let x = ramp(50, 8);
        assert_eq!(spec_augment(&x, &AugmentConfig::disabled(), 3), x);
    }

    #[test]
    fn zero_widths_are_identity() {
        let x = ramp(50, 8);
        let cfg = AugmentConfig {
            freq_mask_width: 0,
            time_mask_width: 0,
            ..AugmentConfig::default()
        };
        for seed in 0..20 {
            assert_eq!(spec_augment(&x, &cfg, seed), x);
        }
    }

    #[test]
    fn only_masked_cells_change() {
        let x = ramp(120, 80);
        let cfg = AugmentConfig::default();
        for seed in 0..20 {
            let plan = plan_masks(120, 80, &cfg, seed);
            let y = spec_augment(&x, &cfg, seed);
            let mean = x.mean();
            for t in 0..120 {
                for f in 0..80 {
                    let (a, b) = (x.row(t)[f], y.row(t)[f]);
                    if plan.covers(t, f) {
                        assert_eq!(b, mean);
                    } else {
                        assert_eq!(a.to_bits(), b.to_bits());
                    }
                }
            }
        }
    }

    #[test]
    fn widths_are_clamped_to_small_inputs() {
        let plan = plan_masks(5, 3, &AugmentConfig::default(), 1);
        assert!(plan.time.iter().all(|r| r.end <= 5));
        assert!(plan.freq.iter().all(|r| r.end <= 3));
    }
}
