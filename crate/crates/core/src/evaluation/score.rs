use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::benchmark::{CompareMode, GoldAnswer, Record};
use crate::scalar::MetricScalar;

/// Precision, recall and their harmonic mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrfScores<S> {
    pub precision: S,
    pub recall: S,
    pub f1: S,
}

impl<S: MetricScalar> PrfScores<S> {
    pub fn new(precision: S, recall: S) -> Self {
        let sum = precision + recall;
        let f1 = if sum == S::zero() { S::zero() } else { S::from_count(2) * precision * recall / sum };
        Self { precision, recall, f1 }
    }

    pub fn perfect() -> Self {
        Self::new(S::one(), S::one())
    }

    pub fn zero() -> Self {
        Self::new(S::zero(), S::zero())
    }

    pub fn to_f64(self) -> PrfScores<f64> {
        PrfScores {
            precision: self.precision.to_f64_lossy(),
            recall: self.recall.to_f64_lossy(),
            f1: self.f1.to_f64_lossy(),
        }
    }
}

/// Outcome of comparing one prediction with its gold answer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Judgement<S> {
    pub correct: bool,
    pub scores: PrfScores<S>,
    pub false_positives: usize,
}

/// Compares predicted records with the gold answer under its mode.
pub fn judge<S: MetricScalar>(predicted: &BTreeSet<Record>, gold: &GoldAnswer) -> Judgement<S> {
    let hits = predicted.intersection(&gold.records).count();
    let false_positives = predicted.len() - hits;
    let precision = S::ratio(hits, predicted.len());
    match gold.mode {
        CompareMode::ExactSet => Judgement {
            correct: *predicted == gold.records,
            scores: PrfScores::new(precision, S::ratio(hits, gold.records.len())),
            false_positives,
        },
        CompareMode::SingleCount => {
            let correct = *predicted == gold.records;
            let scores = if correct { PrfScores::perfect() } else { PrfScores::zero() };
            Judgement { correct, scores, false_positives }
        }
        CompareMode::ArgmaxMembership | CompareMode::ValueMembership => {
            let correct = !predicted.is_empty() && false_positives == 0;
            let recall = if hits > 0 { S::one() } else { S::zero() };
            Judgement { correct, scores: PrfScores::new(precision, recall), false_positives }
        }
    }
}

/// Per-question metrics as reported.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuestionScore {
    pub correct: bool,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub false_positives: usize,
    pub tool_calls: usize,
    /// Seconds spent waiting for the model.
    pub inference_time: f64,
}

impl QuestionScore {
    pub fn from_judgement<S: MetricScalar>(j: &Judgement<S>, tool_calls: usize, inference_time: f64) -> Self {
        let s = j.scores.to_f64();
        Self {
            correct: j.correct,
            precision: s.precision,
            recall: s.recall,
            f1: s.f1,
            false_positives: j.false_positives,
            tool_calls,
            inference_time,
        }
    }
}

/// Scores one extracted answer, without episode metadata.
pub fn score(predicted: &BTreeSet<Record>, gold: &GoldAnswer) -> QuestionScore {
    QuestionScore::from_judgement(&judge::<f64>(predicted, gold), 0, 0.0)
}

#[cfg(test)]
mod tests {
    use num_rational::Ratio;

    use super::*;

    fn keys(ks: &[&str]) -> BTreeSet<Record> {
        ks.iter().map(|k| Record::from([("node_key".to_owned(), k.to_string())])).collect()
    }

    fn gold(mode: CompareMode, ks: &[&str]) -> GoldAnswer {
        GoldAnswer { mode, fields: vec!["node_key".into()], records: keys(ks) }
    }

    #[test]
    fn partial_overlap_is_two_thirds() {
        let j = judge::<Ratio<i64>>(&keys(&["a", "b", "c"]), &gold(CompareMode::ExactSet, &["a", "b", "d"]));
        let two_thirds = Ratio::new(2, 3);
        assert!(!j.correct);
        assert_eq!(j.scores, PrfScores { precision: two_thirds, recall: two_thirds, f1: two_thirds });
        assert_eq!(j.false_positives, 1);
    }

    #[test]
    fn identity_and_empty_prediction() {
        let g = gold(CompareMode::ExactSet, &["a", "b"]);
        let s = score(&keys(&["b", "a"]), &g);
        assert!(s.correct);
        assert_eq!((s.precision, s.recall, s.f1, s.false_positives), (1.0, 1.0, 1.0, 0));
        let s = score(&BTreeSet::new(), &g);
        assert!(!s.correct);
        assert_eq!((s.precision, s.recall, s.f1, s.false_positives), (0.0, 0.0, 0.0, 0));
    }

    #[test]
    fn membership_modes() {
        let g = gold(CompareMode::ValueMembership, &["a", "b"]);
        assert!(score(&keys(&["b"]), &g).correct);
        let s = score(&keys(&["b", "z"]), &g);
        assert!(!s.correct);
        assert_eq!((s.precision, s.recall, s.false_positives), (0.5, 1.0, 1));
        assert!(!score(&BTreeSet::new(), &g).correct);
    }

    #[test]
    fn count_mode_is_all_or_nothing() {
        let count = |n: &str| BTreeSet::from([Record::from([("count".to_owned(), n.to_owned())])]);
        let g = GoldAnswer { mode: CompareMode::SingleCount, fields: vec!["count".into()], records: count("4") };
        assert_eq!(score(&count("4"), &g).f1, 1.0);
        let s = score(&count("5"), &g);
        assert_eq!((s.correct, s.precision, s.recall, s.false_positives), (false, 0.0, 0.0, 1));
    }
}
