use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("subword size cap {cap} is below the alphabet size {alphabet}")]
    CapBelowAlphabet { cap: usize, alphabet: usize },

    #[error("character {ch:?} is not in the vocabulary for language {language}")]
    OutOfVocabulary { ch: char, language: String },

    #[error("token id {id} out of range for a vocabulary of {size} tokens")]
    TokenIdOutOfRange { id: u32, size: usize },

    #[error("unknown language {0:?}")]
    UnknownLanguage(String),

    #[error("duplicate language id {0:?}")]
    DuplicateLanguage(String),

    #[error("language {0:?} has an empty corpus")]
    EmptyCorpus(String),

    #[error("utterance {id} has non-positive duration {duration}")]
    NonPositiveDuration { id: String, duration: f64 },

    #[error("target sequence contains the blank id {blank} at position {position}")]
    BlankInTargets { blank: u32, position: usize },

    #[error("target id {id} is outside a joint grid with {vocab} classes")]
    TargetOutOfRange { id: u32, vocab: usize },

    #[error("joint grid needs at least one frame")]
    EmptyLattice,

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite loss {loss} for utterance {utterance}")]
    NonFiniteLoss { utterance: String, loss: f64 },

    #[error("character {ch:?} is outside the alphabet of language {language}")]
    OutsideAlphabet { ch: char, language: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("reference and hypothesis lists differ in length ({refs} vs {hyps})")]
    LengthMismatch { refs: usize, hyps: usize },

    #[error("relative improvement needs a positive baseline, got {0}")]
    NonPositiveBaseline(f64),

    #[error("malformed {what} at line {line}: {reason}")]
    Parse {
        what: &'static str,
        line: usize,
        reason: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
