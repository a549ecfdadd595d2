use std::rc::Rc;

use serde::{Deserialize, Serialize};

use super::params::ModelParams;
use crate::data::FeatureMatrix;
use crate::error::Result;
use crate::math::log_softmax_in_place;
use crate::tokenize::{LanguageId, BLANK_ID};
use crate::transducer::{beam_decode, greedy_decode, BeamConfig, Joiner, Predictor};

/// Search used at inference time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum DecodeMode {
    Greedy,
    Beam { width: usize },
}

impl Default for DecodeMode {
    fn default() -> Self {
        DecodeMode::Beam { width: 4 }
    }
}

/// LSTM state after some label prefix; `h` is also the predictor output.
#[derive(Debug, Clone)]
pub struct PredictorState {
    pub h: Rc<Vec<f64>>,
    pub c: Rc<Vec<f64>>,
}

/// The model restricted to one output head, usable by the generic searches.
#[derive(Debug, Clone, Copy)]
pub struct HeadDecoder<'a> {
    pub params: &'a ModelParams,
    pub head: usize,
}

impl HeadDecoder<'_> {
    fn advance(&self, state: &PredictorState, token: u32) -> PredictorState {
        let (h, c, _) = self.params.lstm_step(self.head, token, &state.h, &state.c);
        PredictorState { h: Rc::new(h), c: Rc::new(c) }
    }
}

impl Predictor for HeadDecoder<'_> {
    type State = PredictorState;

    fn start(&self) -> PredictorState {
        let zeros = Rc::new(vec![0.0; self.params.config().predictor_dim]);
        self.advance(&PredictorState { h: zeros.clone(), c: zeros }, BLANK_ID)
    }

    fn step(&self, state: &PredictorState, token: u32) -> PredictorState {
        self.advance(state, token)
    }
}

impl Joiner<Vec<f64>, PredictorState> for HeadDecoder<'_> {
    fn log_probs(&self, frame: &Vec<f64>, state: &PredictorState) -> Vec<f64> {
        let mut z = self.params.joint_logits(self.head, frame, &state.h);
        log_softmax_in_place(&mut z);
        z
    }
}

/// Decodes one utterance into token ids of its language's head.
pub fn decode_utterance(
    params: &ModelParams,
    features: &FeatureMatrix,
    language: &LanguageId,
    mode: DecodeMode,
    max_symbols_per_frame: usize,
) -> Result<Vec<u32>> {
    let head = params.head_index(language)?;
    let frames = params.encode(features)?.rows();
    let dec = HeadDecoder { params, head };
    Ok(match mode {
        DecodeMode::Greedy => greedy_decode(&frames, &dec, &dec, BLANK_ID, max_symbols_per_frame),
        DecodeMode::Beam { width } => {
            let cfg = BeamConfig { max_symbols_per_frame, ..BeamConfig::new(width) };
            beam_decode(&frames, &dec, &dec, BLANK_ID, cfg)
                .into_iter()
                .next()
                .map(|h| h.tokens)
                .unwrap_or_default()
        }
    })
}
