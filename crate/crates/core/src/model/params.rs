use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::ModelConfig;
use crate::error::{Error, Result};
use crate::math::mix_seed_str;
use crate::tokenize::LanguageId;

/// Name, shape and position of one tensor inside the flat parameter buffer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorSpec {
    pub name: String,
    pub shape: Vec<usize>,
    pub offset: usize,
}

impl TensorSpec {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct DenseIdx {
    pub w: usize,
    pub b: usize,
    pub rows: usize,
    pub cols: usize,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct LstmIdx {
    pub wx: usize,
    pub wh: usize,
    pub b: usize,
    pub gain: usize,
    pub shift: usize,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct HeadIdx {
    pub embed: usize,
    pub out: DenseIdx,
    pub vocab: usize,
}

#[derive(Debug, Clone)]
pub(crate) struct Layout {
    pub tensors: Vec<TensorSpec>,
    pub encoder: Vec<DenseIdx>,
    pub lstm: LstmIdx,
    pub heads: Vec<HeadIdx>,
    pub total: usize,
}

impl Layout {
    fn new(config: &ModelConfig) -> Self {
        let mut tensors: Vec<TensorSpec> = Vec::new();
        let mut total = 0;
        let mut push = |name: String, shape: Vec<usize>| {
            let spec = TensorSpec { name, shape, offset: total };
            total += spec.len();
            tensors.push(spec);
            tensors.len() - 1
        };
        let dense = |push: &mut dyn FnMut(String, Vec<usize>) -> usize, name: &str, rows, cols| DenseIdx {
            w: push(format!("{name}.weight"), vec![rows, cols]),
            b: push(format!("{name}.bias"), vec![rows]),
            rows,
            cols,
        };

        let h = config.encoder_dim;
        let mut encoder = Vec::new();
        let mut fan_in = config.feature_dim * config.subsample_factor;
        for l in 0..config.encoder_layers {
            encoder.push(dense(&mut push, &format!("encoder.layer{l}"), h, fan_in));
            fan_in = h;
        }
        encoder.push(dense(&mut push, "encoder.output", h, h));

        let p = config.predictor_dim;
        let lstm = LstmIdx {
            wx: push("predictor.lstm.input_weight".into(), vec![4 * p, config.embed_dim]),
            wh: push("predictor.lstm.hidden_weight".into(), vec![4 * p, p]),
            b: push("predictor.lstm.bias".into(), vec![4 * p]),
            gain: push("predictor.lstm.norm_gain".into(), vec![4 * p]),
            shift: push("predictor.lstm.norm_shift".into(), vec![4 * p]),
        };

        let heads = config
            .heads
            .vocab_sizes()
            .into_iter()
            .enumerate()
            .map(|(i, v)| HeadIdx {
                embed: push(format!("head{i}.embedding"), vec![v, config.embed_dim]),
                out: dense(&mut push, &format!("head{i}.output"), v, p),
                vocab: v,
            })
            .collect();

        Layout { tensors, encoder, lstm, heads, total }
    }
}

/// All trainable weights in one flat `f64` buffer.
#[derive(Debug, Clone)]
pub struct ModelParams {
    config: ModelConfig,
    pub(crate) layout: Layout,
    pub(crate) values: Vec<f64>,
}

impl PartialEq for ModelParams {
    fn eq(&self, other: &Self) -> bool {
        self.config == other.config && self.values == other.values
    }
}

impl ModelParams {
    /// Weight matrices are drawn from `U(-1/sqrt(fan_in), 1/sqrt(fan_in))`
    /// with an RNG derived from the seed and the tensor name, so adding a
    /// language head never changes the trunk. Biases start at zero and the
    /// layer-norm gain at one.
    pub fn init(config: &ModelConfig) -> Result<Self> {
        config.validate()?;
        let layout = Layout::new(config);
        let mut values = vec![0.0; layout.total];
        for spec in &layout.tensors {
            let slot = &mut values[spec.range()];
            if spec.name.ends_with("norm_gain") {
                slot.fill(1.0);
            } else if spec.shape.len() == 2 {
                let bound = 1.0 / (spec.shape[1] as f64).sqrt();
                let mut rng = ChaCha8Rng::seed_from_u64(mix_seed_str(config.seed, &spec.name));
                for x in slot.iter_mut() {
                    *x = rng.random_range(-bound..bound);
                }
            }
        }
        Ok(Self { config: config.clone(), layout, values })
    }

    /// Rebuilds parameters from named tensors (as stored in a checkpoint).
    pub fn from_tensors(config: &ModelConfig, tensors: &[(String, Vec<usize>, Vec<f64>)]) -> Result<Self> {
        let mut params = Self::init(config)?;
        if tensors.len() != params.layout.tensors.len() {
            return Err(Error::Shape(format!(
                "expected {} tensors, found {}",
                params.layout.tensors.len(),
                tensors.len()
            )));
        }
        for (spec, (name, shape, data)) in params.layout.tensors.iter().zip(tensors) {
            if &spec.name != name || &spec.shape != shape || data.len() != spec.len() {
                return Err(Error::Shape(format!("tensor {name} does not match layout entry {}", spec.name)));
            }
            params.values[spec.range()].copy_from_slice(data);
        }
        Ok(params)
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn tensors(&self) -> &[TensorSpec] {
        &self.layout.tensors
    }

    pub fn tensor(&self, name: &str) -> Option<&[f64]> {
        self.layout
            .tensors
            .iter()
            .find(|s| s.name == name)
            .map(|s| &self.values[s.range()])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn num_params(&self) -> usize {
        self.layout.total
    }

    /// Parameters shared by every language.
    pub fn trunk_params(&self) -> usize {
        self.layout
            .heads
            .first()
            .map_or(self.layout.total, |h| self.layout.tensors[h.embed].offset)
    }

    pub fn head_count(&self) -> usize {
        self.layout.heads.len()
    }

    pub fn head_index(&self, language: &LanguageId) -> Result<usize> {
        self.config.heads.head_index(language)
    }

    pub fn head_vocab(&self, head: usize) -> usize {
        self.layout.heads[head].vocab
    }

    /// Flat range covering the embedding and output layer of `head`.
    pub fn head_range(&self, head: usize) -> std::ops::Range<usize> {
        head_extent(&self.layout, &self.layout.heads[head])
    }

    pub(crate) fn slice(&self, tensor: usize) -> &[f64] {
        &self.values[self.layout.tensors[tensor].range()]
    }
}

fn head_extent(layout: &Layout, head: &HeadIdx) -> std::ops::Range<usize> {
    let start = layout.tensors[head.embed].offset;
    let end = layout.tensors[head.out.b].range().end;
    start..end
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::config::HeadLayout;

    fn config(heads: HeadLayout) -> ModelConfig {
        ModelConfig {
            feature_dim: 5,
            subsample_factor: 3,
            encoder_layers: 2,
            encoder_dim: 7,
            embed_dim: 4,
            predictor_dim: 7,
            heads,
            seed: 11,
        }
    }

    #[test]
    fn parameter_count_matches_formula() {
        let (f, s, h, e) = (5, 3, 7, 4);
        let encoder = (f * s * h + h) + (h * h + h) + (h * h + h);
        let lstm = 4 * h * e + 4 * h * h + 3 * 4 * h;
        let head = |v: usize| v * e + h * v + v;

        let shared = ModelParams::init(&config(HeadLayout::Shared { vocab_size: 9 })).unwrap();
        assert_eq!(shared.num_params(), encoder + lstm + head(9));
        assert_eq!(shared.trunk_params(), encoder + lstm);

        let multi = ModelParams::init(&config(HeadLayout::PerLanguage {
            heads: vec![("a".into(), 6), ("b".into(), 3), ("c".into(), 11)],
        }))
        .unwrap();
        assert_eq!(multi.num_params(), encoder + lstm + head(6) + head(3) + head(11));
        assert_eq!(multi.head_range(1).len(), head(3));
    }

    #[test]
    fn init_is_seeded_and_trunk_is_head_independent() {
        let a = ModelParams::init(&config(HeadLayout::Shared { vocab_size: 9 })).unwrap();
        let b = ModelParams::init(&config(HeadLayout::Shared { vocab_size: 9 })).unwrap();
        assert_eq!(a, b);
        let c = ModelParams::init(&config(HeadLayout::Shared { vocab_size: 20 })).unwrap();
        let trunk = a.trunk_params();
        assert_eq!(a.values()[..trunk], c.values()[..trunk]);
        assert!(a.tensor("predictor.lstm.norm_gain").unwrap().iter().all(|&g| g == 1.0));
        assert!(a.tensor("encoder.output.bias").unwrap().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn mismatched_dims_rejected() {
        let mut cfg = config(HeadLayout::Shared { vocab_size: 9 });
        cfg.predictor_dim = 8;
        assert!(matches!(ModelParams::init(&cfg), Err(Error::Config(_))));
    }
}
