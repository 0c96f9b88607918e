use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::extract::{extract_answer_with, extract_path, AnswerExtractor, ExtractionMethod};
use super::score::{judge, Judgement, PrfScores, QuestionScore};
use super::EvaluationError;
use crate::agent::{EpisodeStatus, Setting, Task, Transcript};
use crate::benchmark::QueryTemplate;

/// One scored episode with the metadata the reports group by.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeScore {
    pub episode_id: String,
    pub model: String,
    pub setting: Setting,
    /// `None` for maze episodes.
    pub template: Option<QueryTemplate>,
    pub status: EpisodeStatus,
    pub extraction: ExtractionMethod,
    pub score: QuestionScore,
}

/// Scores a transcript against the task recorded in its header. Tool calls
/// and inference time are recomputed from the events.
pub fn score_transcript(
    transcript: &Transcript,
    fallback: Option<&dyn AnswerExtractor>,
) -> Result<EpisodeScore, EvaluationError> {
    let text = transcript.final_answer().unwrap_or_default();
    let tool_calls = transcript.tool_call_count();
    let inference_time = transcript.inference_time();
    let header = &transcript.header;
    let (template, extraction, score) = match &header.task {
        Task::Query { instance, gold } => {
            let extracted = extract_answer_with(text, &instance.output_schema, fallback);
            let judgement: Judgement<f64> = judge(&extracted.records, gold);
            (
                Some(instance.template()),
                extracted.method,
                QuestionScore::from_judgement(&judgement, tool_calls, inference_time),
            )
        }
        Task::Maze { maze } => {
            let (path, method) = extract_path(text, fallback);
            let valid = path.is_some_and(|p| maze.validate_path(&p).valid);
            let scores: PrfScores<f64> = if valid { PrfScores::perfect() } else { PrfScores::zero() };
            let judgement = Judgement { correct: valid, scores, false_positives: 0 };
            (None, method, QuestionScore::from_judgement(&judgement, tool_calls, inference_time))
        }
        Task::Other => return Err(EvaluationError::Unscorable(header.episode_id.clone())),
    };
    Ok(EpisodeScore {
        episode_id: header.episode_id.clone(),
        model: header.model.clone(),
        setting: header.setting,
        template,
        status: transcript.status(),
        extraction,
        score,
    })
}

/// Which table a report is rendered as.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Layout {
    /// One row per model and setting: C, A, P, R, F1, FP, total tool calls.
    Table1,
    /// Maze runs: Correct as k/n, Accuracy, average inference time and tool calls.
    Maze,
    /// Correct counts per template, one column per model and setting.
    Table2,
}

impl std::str::FromStr for Layout {
    type Err = EvaluationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "table1" => Ok(Self::Table1),
            "maze" => Ok(Self::Maze),
            "table2" => Ok(Self::Table2),
            other => Err(EvaluationError::UnknownLayout(other.to_owned())),
        }
    }
}

/// Aggregates of one model in one setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub model: String,
    pub setting: Setting,
    pub questions: usize,
    pub correct: usize,
    /// `100 * correct / questions`.
    pub accuracy: f64,
    /// Macro averages over questions.
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Summed over questions.
    pub false_positives: usize,
    pub tool_calls: usize,
    pub avg_tool_calls: f64,
    pub avg_inference_time: f64,
    pub extraction_failures: usize,
    pub incomplete_episodes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixRow {
    pub label: String,
    /// Correct answers summed over all columns.
    pub total: usize,
    /// Correct answers per column, aligned with `CategoryMatrix::columns`.
    pub correct: Vec<usize>,
}

/// Correct counts per template (rows) and model/setting (columns).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryMatrix {
    pub columns: Vec<(String, Setting)>,
    pub rows: Vec<MatrixRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub layout: Layout,
    pub rows: Vec<SummaryRow>,
    pub categories: CategoryMatrix,
}

fn mean(values: impl Iterator<Item = f64>, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        values.sum::<f64>() / n as f64
    }
}

pub fn aggregate(scores: &[EpisodeScore], layout: Layout) -> Result<Report, EvaluationError> {
    if scores.is_empty() {
        return Err(EvaluationError::Empty);
    }
    let mut groups: BTreeMap<(String, Setting), Vec<&EpisodeScore>> = BTreeMap::new();
    for s in scores {
        groups.entry((s.model.clone(), s.setting)).or_default().push(s);
    }
    let rows: Vec<SummaryRow> = groups
        .iter()
        .map(|((model, setting), group)| {
            let n = group.len();
            let correct = group.iter().filter(|s| s.score.correct).count();
            let tool_calls = group.iter().map(|s| s.score.tool_calls).sum();
            SummaryRow {
                model: model.clone(),
                setting: *setting,
                questions: n,
                correct,
                accuracy: 100.0 * correct as f64 / n as f64,
                precision: mean(group.iter().map(|s| s.score.precision), n),
                recall: mean(group.iter().map(|s| s.score.recall), n),
                f1: mean(group.iter().map(|s| s.score.f1), n),
                false_positives: group.iter().map(|s| s.score.false_positives).sum(),
                tool_calls,
                avg_tool_calls: tool_calls as f64 / n as f64,
                avg_inference_time: mean(group.iter().map(|s| s.score.inference_time), n),
                extraction_failures: group.iter().filter(|s| s.extraction == ExtractionMethod::Failed).count(),
                incomplete_episodes: group.iter().filter(|s| s.status != EpisodeStatus::Completed).count(),
            }
        })
        .collect();

    let columns: Vec<(String, Setting)> = groups.keys().cloned().collect();
    let mut labels: Vec<Option<QueryTemplate>> = QueryTemplate::ALL.iter().copied().map(Some).collect();
    if scores.iter().any(|s| s.template.is_none()) {
        labels.push(None);
    }
    let matrix_rows = labels
        .into_iter()
        .map(|template| {
            let correct: Vec<usize> = groups
                .values()
                .map(|g| g.iter().filter(|s| s.template == template && s.score.correct).count())
                .collect();
            MatrixRow {
                label: template.map_or("Maze", QueryTemplate::title).to_owned(),
                total: correct.iter().sum(),
                correct,
            }
        })
        .collect();
    Ok(Report { layout, rows, categories: CategoryMatrix { columns, rows: matrix_rows } })
}

fn tools_flag(setting: Setting) -> &'static str {
    match setting {
        Setting::WithTools => "True",
        Setting::NoTools => "False",
    }
}

fn short_setting(setting: Setting) -> &'static str {
    match setting {
        Setting::WithTools => "T",
        Setting::NoTools => "NT",
    }
}

impl Report {
    /// The report in its layout's table shape.
    pub fn to_csv(&self) -> String {
        match self.layout {
            Layout::Table1 => self.summary_csv(),
            Layout::Maze => self.maze_csv(),
            Layout::Table2 => self.category_csv(),
        }
    }

    /// One row per model and setting; tool calls are `-` without tools.
    pub fn summary_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["Model", "T", "C", "A", "P", "R", "F1", "FP", "TC", "N", "Avg IT"]).expect("in-memory write");
        for r in &self.rows {
            let tc = match r.setting {
                Setting::WithTools => r.tool_calls.to_string(),
                Setting::NoTools => "-".into(),
            };
            w.write_record([
                r.model.clone(),
                tools_flag(r.setting).into(),
                r.correct.to_string(),
                format!("{:.2}", r.accuracy),
                format!("{:.2}", r.precision),
                format!("{:.2}", r.recall),
                format!("{:.2}", r.f1),
                r.false_positives.to_string(),
                tc,
                r.questions.to_string(),
                format!("{:.3}", r.avg_inference_time),
            ])
            .expect("in-memory write");
        }
        finish(w)
    }

    pub fn maze_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["Model", "Tools", "Correct", "Accuracy", "Avg IT", "Avg TC"]).expect("in-memory write");
        for r in &self.rows {
            let avg_tc = match r.setting {
                Setting::WithTools => format!("{}", (r.avg_tool_calls * 1000.0).round() / 1000.0),
                Setting::NoTools => "-".into(),
            };
            w.write_record([
                r.model.clone(),
                tools_flag(r.setting).into(),
                format!("{}/{}", r.correct, r.questions),
                format!("{:.2}", r.accuracy),
                format!("{:.3}", r.avg_inference_time),
                avg_tc,
            ])
            .expect("in-memory write");
        }
        finish(w)
    }

    /// Per-template correct counts with a leading Total column.
    pub fn category_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["Category".to_owned(), "Total".to_owned()];
        header.extend(self.categories.columns.iter().map(|(m, s)| format!("{m} {}", short_setting(*s))));
        w.write_record(&header).expect("in-memory write");
        for row in &self.categories.rows {
            let mut record = vec![row.label.clone(), row.total.to_string()];
            record.extend(row.correct.iter().map(usize::to_string));
            w.write_record(&record).expect("in-memory write");
        }
        finish(w)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn finish(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
}
