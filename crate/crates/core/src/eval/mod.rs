//! Scoring: edit-distance alignment, error-rate breakdowns, relative
//! improvements and the multi-system comparison report.

mod align;
mod report;
mod score;

pub use align::{align, edit_distance, EditOp};
pub use report::{
    compare_experiments, decode_manifest, precomputed_report, score_hypotheses, ExperimentReport, DecodedUtterance,
    Improvement, LanguageScore, PrecomputedResults, PrecomputedSystem, SystemScores, SystemUnderTest, StrategyRates,
};
pub use score::{macro_average, relative_improvement, split_units, word_error_rate, ErrorBreakdown, ErrorCounts, MeanRates, Unit};
