use serde::{Deserialize, Serialize};

use super::registry::LanguageId;
use super::vocab::Vocabulary;
use crate::data::CorpusManifest;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanguageRate {
    pub language: LanguageId,
    pub utterances: usize,
    /// Mean tokens per second over the language's utterances.
    pub mean_rate: f64,
}

/// Tokens-per-second summary across languages (population std).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsSummary {
    pub mean: f64,
    pub std: f64,
    pub max: f64,
    pub min: f64,
    pub per_language: Vec<LanguageRate>,
}

impl StatsSummary {
    /// Summary over per-language mean rates.
    pub fn from_rates(per_language: Vec<LanguageRate>) -> Self {
        let rates: Vec<f64> = per_language.iter().map(|r| r.mean_rate).collect();
        let n = rates.len().max(1) as f64;
        let mean = rates.iter().sum::<f64>() / n;
        let var = rates.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n;
        Self {
            mean,
            std: var.sqrt(),
            max: rates.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            min: rates.iter().copied().fold(f64::INFINITY, f64::min),
            per_language,
        }
    }
}

/// Tokenizes every transcript and reports tokens per second. Characters
/// outside the vocabulary count as one token each. Rates are
/// averaged per language first; the summary is taken over those language
/// means.
pub fn tokens_per_second_stats(manifest: &CorpusManifest, vocab: &Vocabulary) -> Result<StatsSummary> {
    let mut per_language = Vec::new();
    for language in manifest.languages() {
        let mut sum = 0.0;
        let mut n = 0usize;
        for u in manifest.for_language(&language) {
            let duration = u.duration_seconds();
            if !(duration > 0.0) {
                return Err(Error::NonPositiveDuration {
                    id: u.id.clone(),
                    duration,
                });
            }
            let tokens = vocab.token_count(&u.transcript, &language)?;
            sum += tokens as f64 / duration;
            n += 1;
        }
        per_language.push(LanguageRate {
            language,
            utterances: n,
            mean_rate: sum / n as f64,
        });
    }
    Ok(StatsSummary::from_rates(per_language))
}
