use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::score::{macro_average, relative_improvement, word_error_rate, ErrorBreakdown, MeanRates, Unit};
use crate::data::CorpusManifest;
use crate::error::{Error, Result};
use crate::model::{decode_utterance, DecodeMode, ModelParams};
use crate::tokenize::{tokens_per_second_stats, LanguageId, LanguageRegistry, StatsSummary, Strategy, Vocabulary};

/// Column label used for the macro average over languages.
pub const MEAN_COLUMN: &str = "mean";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodedUtterance {
    pub utterance_id: String,
    pub language: LanguageId,
    pub text: String,
}

/// Error rate of one system on one language (or one precomputed column).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanguageScore {
    pub language: String,
    pub unit: Option<Unit>,
    pub breakdown: Option<ErrorBreakdown>,
    pub wer_percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemScores {
    pub name: String,
    pub strategy: Option<Strategy>,
    pub languages: Vec<LanguageScore>,
    /// Macro average of the per-language breakdowns, when they are known.
    pub mean: Option<MeanRates>,
    pub mean_wer: f64,
}

impl SystemScores {
    pub fn new(name: String, strategy: Option<Strategy>, languages: Vec<LanguageScore>) -> Self {
        let breakdowns: Option<Vec<ErrorBreakdown>> = languages.iter().map(|l| l.breakdown).collect();
        let mean = breakdowns.map(|b| macro_average(&b));
        let mean_wer = languages.iter().map(|l| l.wer_percent).sum::<f64>() / languages.len().max(1) as f64;
        Self { name, strategy, languages, mean, mean_wer }
    }

    pub fn wer(&self, column: &str) -> Option<f64> {
        if column == MEAN_COLUMN {
            return Some(self.mean_wer);
        }
        self.languages.iter().find(|l| l.language == column).map(|l| l.wer_percent)
    }
}

/// `(baseline - system) / baseline` in percent; `None` when the baseline is 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Improvement {
    pub column: String,
    pub system: String,
    pub baseline: String,
    pub system_wer: f64,
    pub baseline_wer: f64,
    pub relative_percent: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyRates {
    pub strategy: Strategy,
    pub summary: StatsSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub systems: Vec<SystemScores>,
    pub token_rates: Vec<StrategyRates>,
    pub improvements: Vec<Improvement>,
}

fn pairwise(systems: &[SystemScores]) -> Vec<Improvement> {
    let mut columns: Vec<String> = Vec::new();
    for s in systems {
        for l in &s.languages {
            if !columns.contains(&l.language) {
                columns.push(l.language.clone());
            }
        }
    }
    columns.push(MEAN_COLUMN.to_string());
    let mut out = Vec::new();
    for column in &columns {
        for a in systems {
            for b in systems {
                if a.name == b.name {
                    continue;
                }
                let (Some(wa), Some(wb)) = (a.wer(column), b.wer(column)) else {
                    continue;
                };
                out.push(Improvement {
                    column: column.clone(),
                    system: a.name.clone(),
                    baseline: b.name.clone(),
                    system_wer: wa,
                    baseline_wer: wb,
                    relative_percent: relative_improvement(wa, wb).ok(),
                });
            }
        }
    }
    out
}

impl ExperimentReport {
    pub fn new(systems: Vec<SystemScores>, token_rates: Vec<StrategyRates>) -> Self {
        let improvements = pairwise(&systems);
        Self { systems, token_rates, improvements }
    }

    pub fn system(&self, name: &str) -> Option<&SystemScores> {
        self.systems.iter().find(|s| s.name == name)
    }

    pub fn improvement(&self, system: &str, baseline: &str, column: &str) -> Option<&Improvement> {
        self.improvements
            .iter()
            .find(|i| i.system == system && i.baseline == baseline && i.column == column)
    }

    /// One JSON object per line, tagged by `record`; full precision.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        let mut line = |v: serde_json::Value| {
            out.push_str(&v.to_string());
            out.push('\n');
        };
        for s in &self.systems {
            for l in &s.languages {
                let mut v = json!({
                    "record": "score",
                    "system": s.name,
                    "strategy": s.strategy,
                    "language": l.language,
                    "unit": l.unit,
                    "wer_percent": l.wer_percent,
                });
                if let Some(b) = &l.breakdown {
                    v["insertions"] = json!(b.counts.insertions);
                    v["deletions"] = json!(b.counts.deletions);
                    v["substitutions"] = json!(b.counts.substitutions);
                    v["reference_length"] = json!(b.counts.reference_length);
                    v["ins_rate"] = json!(b.ins_rate);
                    v["del_rate"] = json!(b.del_rate);
                    v["sub_rate"] = json!(b.sub_rate);
                }
                line(v);
            }
            let mut v = json!({"record": "mean", "system": s.name, "wer_percent": s.mean_wer});
            if let Some(m) = &s.mean {
                v["ins_rate"] = json!(m.ins_rate);
                v["del_rate"] = json!(m.del_rate);
                v["sub_rate"] = json!(m.sub_rate);
            }
            line(v);
        }
        for r in &self.token_rates {
            line(json!({
                "record": "token_rate",
                "strategy": r.strategy,
                "mean": r.summary.mean,
                "std": r.summary.std,
                "min": r.summary.min,
                "max": r.summary.max,
                "per_language": r.summary.per_language,
            }));
        }
        for i in &self.improvements {
            line(json!({
                "record": "improvement",
                "column": i.column,
                "system": i.system,
                "baseline": i.baseline,
                "system_wer": i.system_wer,
                "baseline_wer": i.baseline_wer,
                "relative_percent": i.relative_percent,
            }));
        }
        out
    }

    /// Human-readable tables; rates rounded to 0.1.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let mut columns: Vec<&str> = Vec::new();
        for s in &self.systems {
            for l in &s.languages {
                if !columns.contains(&l.language.as_str()) {
                    columns.push(&l.language);
                }
            }
        }
        let fmt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.1}"));

        let _ = writeln!(out, "Error rate (%) by language");
        let _ = write!(out, "{:<12}", "language");
        for s in &self.systems {
            let _ = write!(out, " {:>12}", s.name);
        }
        out.push('\n');
        for c in columns.iter().copied().chain([MEAN_COLUMN]) {
            let _ = write!(out, "{c:<12}");
            for s in &self.systems {
                let _ = write!(out, " {:>12}", fmt(s.wer(c)));
            }
            out.push('\n');
        }

        if self.systems.iter().any(|s| s.mean.is_some()) {
            let _ = writeln!(out, "\nError breakdown (%), macro average over languages");
            let _ = writeln!(out, "{:<12} {:>8} {:>8} {:>8} {:>8}", "system", "ins", "del", "sub", "total");
            for s in &self.systems {
                if let Some(m) = &s.mean {
                    let _ = writeln!(
                        out,
                        "{:<12} {:>8.1} {:>8.1} {:>8.1} {:>8.1}",
                        s.name, m.ins_rate, m.del_rate, m.sub_rate, m.wer_percent
                    );
                }
            }
        }

        if !self.token_rates.is_empty() {
            let _ = writeln!(out, "\nTokens per second");
            let _ = writeln!(out, "{:<20} {:>8} {:>8} {:>8} {:>8}", "strategy", "mean", "std", "min", "max");
            for r in &self.token_rates {
                let s = &r.summary;
                let _ = writeln!(
                    out,
                    "{:<20} {:>8.1} {:>8.1} {:>8.1} {:>8.1}",
                    r.strategy.name(),
                    s.mean,
                    s.std,
                    s.min,
                    s.max
                );
            }
        }

        let _ = writeln!(out, "\nRelative improvement (%) of system over baseline");
        let _ = writeln!(out, "{:<12} {:<12} {:<12} {:>10}", "column", "system", "baseline", "relative");
        for i in &self.improvements {
            let _ = writeln!(
                out,
                "{:<12} {:<12} {:<12} {:>10}",
                i.column,
                i.system,
                i.baseline,
                fmt(i.relative_percent)
            );
        }
        out
    }
}

/// A trained model with the vocabulary it was trained on.
#[derive(Debug, Clone, Copy)]
pub struct SystemUnderTest<'a> {
    pub name: &'a str,
    pub params: &'a ModelParams,
    pub vocab: &'a Vocabulary,
}

/// Decodes every utterance of `manifest` to text, in manifest order.
pub fn decode_manifest(
    params: &ModelParams,
    vocab: &Vocabulary,
    manifest: &CorpusManifest,
    mode: DecodeMode,
    max_symbols_per_frame: usize,
) -> Result<Vec<DecodedUtterance>> {
    for language in manifest.languages() {
        params.head_index(&language)?;
        vocab.table_index(&language)?;
    }
    manifest
        .utterances
        .iter()
        .map(|u| {
            let ids = decode_utterance(params, &u.features, &u.language, mode, max_symbols_per_frame)?;
            Ok(DecodedUtterance {
                utterance_id: u.id.clone(),
                language: u.language.clone(),
                text: vocab.decode(&ids, &u.language)?,
            })
        })
        .collect()
}

/// Per-language breakdowns of `hyps` against the manifest transcripts. The
/// unit is characters for large-alphabet languages and words otherwise.
pub fn score_hypotheses(
    manifest: &CorpusManifest,
    registry: &LanguageRegistry,
    hyps: &[DecodedUtterance],
) -> Result<Vec<LanguageScore>> {
    let by_id: HashMap<&str, &DecodedUtterance> = hyps.iter().map(|h| (h.utterance_id.as_str(), h)).collect();
    let mut scores = Vec::new();
    for language in manifest.languages() {
        let entry = registry
            .get(&language)
            .ok_or_else(|| Error::UnknownLanguage(language.to_string()))?;
        let unit = if entry.large_alphabet { Unit::Char } else { Unit::Word };
        let mut refs = Vec::new();
        let mut outs = Vec::new();
        for u in manifest.for_language(&language) {
            let h = by_id
                .get(u.id.as_str())
                .ok_or_else(|| Error::Config(format!("no hypothesis for utterance {}", u.id)))?;
            refs.push(u.transcript.as_str());
            outs.push(h.text.as_str());
        }
        let breakdown = word_error_rate(&refs, &outs, unit)?;
        scores.push(LanguageScore {
            language: language.to_string(),
            unit: Some(unit),
            wer_percent: breakdown.wer_percent,
            breakdown: Some(breakdown),
        });
    }
    Ok(scores)
}

/// Decodes and scores every system on the same test manifest, adds the
/// tokens-per-second summary for each distinct strategy, and lists all
/// pairwise relative improvements.
pub fn compare_experiments(
    test: &CorpusManifest,
    registry: &LanguageRegistry,
    systems: &[SystemUnderTest<'_>],
    mode: DecodeMode,
    max_symbols_per_frame: usize,
) -> Result<ExperimentReport> {
    let mut scores = Vec::new();
    let mut token_rates: Vec<StrategyRates> = Vec::new();
    for sys in systems {
        let hyps = decode_manifest(sys.params, sys.vocab, test, mode, max_symbols_per_frame)?;
        let languages = score_hypotheses(test, registry, &hyps)?;
        let strategy = sys.vocab.strategy();
        scores.push(SystemScores::new(sys.name.to_string(), Some(strategy), languages));
        if !token_rates.iter().any(|r| r.strategy == strategy) {
            token_rates.push(StrategyRates { strategy, summary: tokens_per_second_stats(test, sys.vocab)? });
        }
    }
    Ok(ExperimentReport::new(scores, token_rates))
}

/// Externally supplied error rates: one value per column (language or test
/// set) per system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrecomputedResults {
    pub columns: Vec<String>,
    pub systems: Vec<PrecomputedSystem>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrecomputedSystem {
    pub name: String,
    pub wer: Vec<f64>,
}

/// Report over precomputed rates (no decoding, no breakdowns).
pub fn precomputed_report(results: &PrecomputedResults) -> Result<ExperimentReport> {
    let mut systems = Vec::new();
    for s in &results.systems {
        if s.wer.len() != results.columns.len() {
            return Err(Error::Config(format!(
                "system {} has {} values for {} columns",
                s.name,
                s.wer.len(),
                results.columns.len()
            )));
        }
        if let Some(bad) = s.wer.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::Config(format!("system {} has invalid error rate {bad}", s.name)));
        }
        let languages = results
            .columns
            .iter()
            .zip(&s.wer)
            .map(|(c, &w)| LanguageScore { language: c.clone(), unit: None, breakdown: None, wer_percent: w })
            .collect();
        systems.push(SystemScores::new(s.name.clone(), None, languages));
    }
    Ok(ExperimentReport::new(systems, Vec::new()))
}
