use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{ModelConfig, TrainConfig};
use super::optim::AdamState;
use super::params::ModelParams;
use crate::error::{Error, Result};

const FORMAT: &str = "polyglot-checkpoint-1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct NamedTensor {
    name: String,
    shape: Vec<usize>,
    values: Vec<f64>,
}

/// Everything needed to resume training exactly: configuration, step count,
/// weights and optimiser moments. Stored as JSON with round-trip floats.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    format: String,
    pub model: ModelConfig,
    pub train: TrainConfig,
    tensors: Vec<NamedTensor>,
    pub optimizer: AdamState,
}

impl Checkpoint {
    pub fn new(params: &ModelParams, train: &TrainConfig, optimizer: &AdamState) -> Self {
        let tensors = params
            .tensors()
            .iter()
            .map(|s| NamedTensor {
                name: s.name.clone(),
                shape: s.shape.clone(),
                values: params.values()[s.range()].to_vec(),
            })
            .collect();
        Self {
            format: FORMAT.to_string(),
            model: params.config().clone(),
            train: train.clone(),
            tensors,
            optimizer: optimizer.clone(),
        }
    }

    pub fn step(&self) -> u64 {
        self.optimizer.step
    }

    pub fn params(&self) -> Result<ModelParams> {
        let named: Vec<_> = self
            .tensors
            .iter()
            .map(|t| (t.name.clone(), t.shape.clone(), t.values.clone()))
            .collect();
        let params = ModelParams::from_tensors(&self.model, &named)?;
        if self.optimizer.m.len() != params.num_params()
            || self.optimizer.v.len() != params.num_params()
            || self.optimizer.tensor_steps.len() != params.tensors().len()
        {
            return Err(Error::Shape("optimizer state does not match parameters".into()));
        }
        Ok(params)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let ckpt: Self = serde_json::from_str(&text)?;
        if ckpt.format != FORMAT {
            return Err(Error::Config(format!("unsupported checkpoint format {:?}", ckpt.format)));
        }
        Ok(ckpt)
    }
}
