//! Toy transducer: frame-stacking feed-forward encoder, layer-normalised LSTM
//! predictor, additive joiner, and either one shared head or one head per
//! language.

mod backprop;
mod checkpoint;
mod config;
mod decoding;
mod forward;
mod optim;
mod params;

pub use checkpoint::Checkpoint;
pub use config::{lr_schedule, HeadLayout, ModelConfig, TrainConfig};
pub use decoding::{decode_utterance, DecodeMode, HeadDecoder, PredictorState};
pub use forward::{EncoderOutput, PredictorOutput};
pub use optim::{train_step, utterance_loss_and_grad, AdamState, StepReport, TrainExample};
pub use params::{ModelParams, TensorSpec};
