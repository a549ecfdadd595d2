//! Synthetic multilingual corpora, language re-sampling and feature masking.

mod augment;
mod manifest;
mod sampler;
mod synth;

pub use augment::{plan_masks, spec_augment, AugmentConfig, MaskPlan};
pub use manifest::{CorpusManifest, FeatureMatrix, ManifestRecord, Utterance, FRAME_SHIFT_SECONDS};
pub use sampler::{language_distribution, sample_batch, BatchSampler, SamplerConfig};
pub use synth::{
    generate_corpus, standard_languages, standard_test_counts, standard_train_counts,
    synthesize_features, LanguageModel, Script, SyntheticLanguageSpec, MAX_UTTERANCE_FRAMES,
};
