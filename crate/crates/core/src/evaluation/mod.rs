//! Answer extraction, per-question scoring and report aggregation.

mod extract;
mod llm_extractor;
mod report;
mod score;

use num_rational::Ratio;
use thiserror::Error;

pub use extract::{
    extract_answer, extract_answer_with, extract_path, json_candidates, records_from_value, schema_fields,
    AnswerExtractor, ExtractedAnswer, ExtractionMethod,
};
pub use llm_extractor::LlmExtractor;
pub use report::{aggregate, score_transcript, CategoryMatrix, EpisodeScore, Layout, MatrixRow, Report, SummaryRow};
pub use score::{judge, score, Judgement, PrfScores, QuestionScore};

/// Scores in floating point, as reported.
pub type Metrics = PrfScores<f64>;
/// Scores over exact rationals, for fixtures.
pub type ExactMetrics = PrfScores<Ratio<i64>>;

#[derive(Debug, Error)]
pub enum EvaluationError {
    #[error("no episodes to aggregate")]
    Empty,
    #[error("episode {0} has no scorable task")]
    Unscorable(String),
    #[error("unknown layout {0:?}; expected table1, table2 or maze")]
    UnknownLayout(String),
}
