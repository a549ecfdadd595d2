use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Normal, Poisson};
use serde::{Deserialize, Serialize};

use super::manifest::{CorpusManifest, FeatureMatrix, Utterance};
use crate::error::{Error, Result};
use crate::math::{mix_seed, mix_seed_str};
use crate::tokenize::{LanguageId, WORD_SEPARATOR};

/// Segmentation cap: 10 s at a 10 ms hop.
pub const MAX_UTTERANCE_FRAMES: usize = 1000;

const MAX_WORD_LENGTH: usize = 12;

/// Code-point family used for a synthetic alphabet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Script {
    /// `a..z`, then Latin-1 and Latin Extended-A letters.
    Latin,
    /// CJK unified ideographs from U+4E00.
    Cjk,
}

impl Script {
    fn symbol(self, index: usize) -> char {
        let cp = match self {
            Script::Latin if index < 26 => 'a' as u32 + index as u32,
            Script::Latin => 0xE0 + (index as u32 - 26),
            Script::Cjk => 0x4E00 + index as u32,
        };
        char::from_u32(cp).expect("alphabet code point is valid")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticLanguageSpec {
    pub language_id: LanguageId,
    pub script: Script,
    pub alphabet_size: usize,
    pub bigram_seed: u64,
    /// Log-normal sigma of bigram weights; larger is peakier.
    pub bigram_sharpness: f64,
    pub mean_word_length: f64,
    pub words_per_utterance: (usize, usize),
    /// Inclusive range of frames emitted per character.
    pub frames_per_token: (usize, usize),
    pub feature_dim: usize,
    pub noise_std: f64,
    pub prototype_seed: u64,
}

impl SyntheticLanguageSpec {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(format!("language {}: {m}", self.language_id)));
        if self.alphabet_size < 2 {
            return fail("alphabet_size must be at least 2");
        }
        if self.script == Script::Latin && self.alphabet_size > 26 + 0x17F - 0xE0 {
            return fail("latin alphabet too large");
        }
        if self.frames_per_token.0 < 1 || self.frames_per_token.1 < self.frames_per_token.0 {
            return fail("frames_per_token must satisfy 1 <= min <= max");
        }
        if self.words_per_utterance.0 < 1 || self.words_per_utterance.1 < self.words_per_utterance.0 {
            return fail("words_per_utterance must satisfy 1 <= min <= max");
        }
        if !(self.noise_std >= 0.0) {
            return fail("noise_std must be non-negative");
        }
        if !(self.mean_word_length >= 1.0) {
            return fail("mean_word_length must be at least 1");
        }
        if self.feature_dim == 0 {
            return fail("feature_dim must be positive");
        }
        Ok(())
    }
}

/// Derived tables for one synthetic language: alphabet, bigram sampler and
/// per-symbol acoustic prototypes.
#[derive(Debug, Clone)]
pub struct LanguageModel {
    spec: SyntheticLanguageSpec,
    alphabet: Vec<char>,
    start: WeightedIndex<f64>,
    transitions: Vec<WeightedIndex<f64>>,
    // alphabet_size + 1 rows; the last row is the separator (silence).
    prototypes: Vec<Vec<f32>>,
}

impl LanguageModel {
    pub fn new(spec: &SyntheticLanguageSpec) -> Result<Self> {
        spec.validate()?;
        let n = spec.alphabet_size;
        let alphabet: Vec<char> = (0..n).map(|i| spec.script.symbol(i)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(spec.bigram_seed);
        let lognormal = Normal::new(0.0, spec.bigram_sharpness.max(0.0))
            .map_err(|e| Error::Config(e.to_string()))?;
        let row = |rng: &mut ChaCha8Rng| {
            let weights: Vec<f64> = (0..n).map(|_| lognormal.sample(rng).exp()).collect();
            WeightedIndex::new(weights).expect("positive weights")
        };
        let start = row(&mut rng);
        let transitions = (0..n).map(|_| row(&mut rng)).collect();

        let mut prng = ChaCha8Rng::seed_from_u64(spec.prototype_seed);
        let unit = Normal::new(0.0f32, 1.0).unwrap();
        let mut prototypes: Vec<Vec<f32>> = (0..n)
            .map(|_| (0..spec.feature_dim).map(|_| unit.sample(&mut prng)).collect())
            .collect();
        prototypes.push(vec![0.0; spec.feature_dim]);
        Ok(Self {
            spec: spec.clone(),
            alphabet,
            start,
            transitions,
            prototypes,
        })
    }

    pub fn spec(&self) -> &SyntheticLanguageSpec {
        &self.spec
    }

    pub fn alphabet(&self) -> &[char] {
        &self.alphabet
    }

    fn symbol_index(&self, ch: char) -> Option<usize> {
        if ch == WORD_SEPARATOR {
            return Some(self.alphabet.len());
        }
        let idx = match self.spec.script {
            Script::Latin if ch.is_ascii_lowercase() => ch as usize - 'a' as usize,
            Script::Latin if (ch as u32) >= 0xE0 => ch as usize - 0xE0 + 26,
            Script::Cjk if (ch as u32) >= 0x4E00 => ch as usize - 0x4E00,
            _ => return None,
        };
        (idx < self.alphabet.len() && self.alphabet[idx] == ch).then_some(idx)
    }

    fn sample_word(&self, rng: &mut impl Rng) -> String {
        let extra = if self.spec.mean_word_length > 1.0 {
            Poisson::new(self.spec.mean_word_length - 1.0)
                .unwrap()
                .sample(rng) as usize
        } else {
            0
        };
        let len = (1 + extra).min(MAX_WORD_LENGTH);
        let mut word = String::new();
        let mut prev = self.start.sample(rng);
        word.push(self.alphabet[prev]);
        for _ in 1..len {
            prev = self.transitions[prev].sample(rng);
            word.push(self.alphabet[prev]);
        }
        word
    }

    pub fn sample_transcript(&self, rng: &mut impl Rng) -> String {
        let (lo, hi) = self.spec.words_per_utterance;
        let count = rng.random_range(lo..=hi);
        let words: Vec<String> = (0..count).map(|_| self.sample_word(rng)).collect();
        words.join(&WORD_SEPARATOR.to_string())
    }
}

/// Features for a transcript: every character emits `k` frames (k uniform in
/// the spec's `frames_per_token` range), each equal to the character's
/// prototype plus Gaussian noise.
pub fn synthesize_features(transcript: &str, model: &LanguageModel, seed: u64) -> Result<FeatureMatrix> {
    let spec = model.spec();
    let symbols: Vec<usize> = transcript
        .chars()
        .map(|ch| {
            model.symbol_index(ch).ok_or_else(|| Error::OutsideAlphabet {
                ch,
                language: spec.language_id.to_string(),
            })
        })
        .collect::<Result<_>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0f32, spec.noise_std as f32).map_err(|e| Error::Config(e.to_string()))?;
    let (lo, hi) = spec.frames_per_token;
    let mut data = Vec::new();
    let mut frames = 0;
    for s in symbols {
        let k = rng.random_range(lo..=hi);
        for _ in 0..k {
            for &p in &model.prototypes[s] {
                let n = if spec.noise_std > 0.0 { noise.sample(&mut rng) } else { 0.0 };
                data.push(p + n);
            }
        }
        frames += k;
    }
    FeatureMatrix::new(frames, spec.feature_dim, data)
}

/// Generates `counts[i]` utterances of language `specs[i]`. Every utterance
/// draws from its own seed, derived from `seed`, the language id and the
/// utterance index. Utterances over [`MAX_UTTERANCE_FRAMES`] lose trailing
/// words until they fit.
pub fn generate_corpus(specs: &[SyntheticLanguageSpec], counts: &[usize], seed: u64) -> Result<CorpusManifest> {
    if specs.len() != counts.len() {
        return Err(Error::Config(format!(
            "{} language specs but {} utterance counts",
            specs.len(),
            counts.len()
        )));
    }
    let mut utterances = Vec::new();
    for (spec, &count) in specs.iter().zip(counts) {
        let model = LanguageModel::new(spec)?;
        let lang_seed = mix_seed_str(seed, spec.language_id.as_str());
        for index in 0..count {
            let utt_seed = mix_seed(lang_seed, index as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(utt_seed);
            let mut transcript = model.sample_transcript(&mut rng);
            let feature_seed = mix_seed(utt_seed, 1);
            let mut features = synthesize_features(&transcript, &model, feature_seed)?;
            while features.frames() > MAX_UTTERANCE_FRAMES {
                transcript = match transcript.rfind(WORD_SEPARATOR) {
                    Some(cut) => transcript[..cut].to_string(),
                    None => {
                        let mut chars: Vec<char> = transcript.chars().collect();
                        chars.pop();
                        chars.into_iter().collect()
                    }
                };
                features = synthesize_features(&transcript, &model, feature_seed)?;
            }
            utterances.push(Utterance {
                id: format!("{}-{index:05}", spec.language_id),
                language: spec.language_id.clone(),
                transcript,
                features,
            });
        }
    }
    Ok(CorpusManifest { utterances })
}

/// The shipped registry: three latin-like languages (alphabets 26, 20, 30) and
/// one cjk-like language with 600 symbols.
pub fn standard_languages(feature_dim: usize) -> Vec<SyntheticLanguageSpec> {
    let latin = |id: &str, alphabet_size: usize, seed: u64| SyntheticLanguageSpec {
        language_id: id.into(),
        script: Script::Latin,
        alphabet_size,
        bigram_seed: 100 + seed,
        bigram_sharpness: 1.5,
        mean_word_length: 4.0,
        words_per_utterance: (2, 4),
        frames_per_token: (2, 4),
        feature_dim,
        noise_std: 0.3,
        prototype_seed: 200 + seed,
    };
    vec![
        latin("lat1", 26, 1),
        latin("lat2", 20, 2),
        latin("lat3", 30, 3),
        SyntheticLanguageSpec {
            language_id: "cjk1".into(),
            script: Script::Cjk,
            alphabet_size: 600,
            bigram_seed: 104,
            bigram_sharpness: 0.5,
            mean_word_length: 2.0,
            words_per_utterance: (2, 3),
            frames_per_token: (8, 12),
            feature_dim,
            noise_std: 0.3,
            prototype_seed: 204,
        },
    ]
}

/// Skewed per-language training counts for [`standard_languages`].
pub fn standard_train_counts() -> Vec<usize> {
    vec![600, 300, 150, 500]
}

pub fn standard_test_counts() -> Vec<usize> {
    vec![40, 40, 40, 40]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_spec() -> SyntheticLanguageSpec {
        SyntheticLanguageSpec {
            language_id: "t".into(),
            script: Script::Latin,
            alphabet_size: 5,
            bigram_seed: 1,
            bigram_sharpness: 1.0,
            mean_word_length: 3.0,
            words_per_utterance: (1, 3),
            frames_per_token: (3, 3),
            feature_dim: 4,
            noise_std: 0.0,
            prototype_seed: 2,
        }
    }

    #[test]
    fn zero_noise_frames_equal_prototypes() {
        let model = LanguageModel::new(&tiny_spec()).unwrap();
        let feats = synthesize_features("ab a", &model, 9).unwrap();
        assert_eq!(feats.frames(), 3 * 4);
        for t in 0..3 {
            assert_eq!(feats.row(t), model.prototypes[0].as_slice());
            assert_eq!(feats.row(3 + t), model.prototypes[1].as_slice());
            assert_eq!(feats.row(6 + t), model.prototypes[5].as_slice());
        }
    }

    #[test]
    fn characters_outside_alphabet_are_rejected() {
        let model = LanguageModel::new(&tiny_spec()).unwrap();
        assert!(matches!(
            synthesize_features("az", &model, 0),
            Err(Error::OutsideAlphabet { ch: 'z', .. })
        ));
    }

    #[test]
    fn features_are_seeded() {
        let mut spec = tiny_spec();
        spec.noise_std = 0.5;
        spec.frames_per_token = (1, 4);
        let model = LanguageModel::new(&spec).unwrap();
        let a = synthesize_features("abc", &model, 3).unwrap();
        let b = synthesize_features("abc", &model, 3).unwrap();
        let c = synthesize_features("abc", &model, 4).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn corpus_is_deterministic_and_skips_empty_languages() {
        let mut other = tiny_spec();
        other.language_id = "u".into();
        let specs = [tiny_spec(), other];
        let a = generate_corpus(&specs, &[3, 0], 11).unwrap();
        let b = generate_corpus(&specs, &[3, 0], 11).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 3);
        assert_eq!(a.languages(), vec![LanguageId::new("t")]);
        for u in &a.utterances {
            assert!(!u.transcript.is_empty());
            assert!((u.duration_seconds() - u.features.frames() as f64 * 0.01).abs() < 1e-12);
        }
    }

    #[test]
    fn long_utterances_are_capped() {
        let mut spec = tiny_spec();
        spec.words_per_utterance = (40, 40);
        spec.frames_per_token = (10, 10);
        let corpus = generate_corpus(&[spec], &[2], 5).unwrap();
        for u in &corpus.utterances {
            assert!(u.features.frames() <= MAX_UTTERANCE_FRAMES);
            assert!(u.duration_seconds() <= 10.0 + 1e-9);
        }
    }

    #[test]
    fn latin_alphabet_extends_past_z() {
        assert_eq!(Script::Latin.symbol(25), 'z');
        assert_eq!(Script::Latin.symbol(26), 'à');
        assert_eq!(Script::Cjk.symbol(0), '\u{4E00}');
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let mut spec = tiny_spec();
        spec.alphabet_size = 1;
        assert!(spec.validate().is_err());
        let mut spec = tiny_spec();
        spec.frames_per_token = (0, 2);
        assert!(spec.validate().is_err());
        let mut spec = tiny_spec();
        spec.noise_std = -1.0;
        assert!(spec.validate().is_err());
    }
}
