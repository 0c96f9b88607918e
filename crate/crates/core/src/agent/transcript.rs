use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::Usage;
use crate::benchmark::{GoldAnswer, QueryInstance};
use crate::maze::MazeState;
use crate::tools::{ToolCall, ToolResult};

#[derive(Debug, Error)]
pub enum TranscriptError {
    #[error("line {line}: {source}")]
    Json { line: usize, source: serde_json::Error },
    #[error("line {line}: event before any episode header")]
    Orphan { line: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Setting {
    WithTools,
    NoTools,
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::WithTools => "with-tools",
            Self::NoTools => "no-tools",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EpisodeStatus {
    Completed,
    IterationCap,
    BackendError,
}

/// What an episode was asked to solve, with everything needed to score it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
#[allow(clippy::large_enum_variant)]
pub enum Task {
    Query {
        instance: QueryInstance,
        gold: GoldAnswer,
    },
    /// The maze before any exploration.
    Maze {
        maze: Box<MazeState>,
    },
    Other,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeHeader {
    pub episode_id: String,
    pub model: String,
    pub setting: Setting,
    pub task: Task,
}

impl EpisodeHeader {
    pub fn new(episode_id: impl Into<String>, model: impl Into<String>, setting: Setting, task: Task) -> Self {
        Self { episode_id: episode_id.into(), model: model.into(), setting, task }
    }
}

/// One JSON line of a transcript file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
#[allow(clippy::large_enum_variant)]
pub enum Event {
    Episode(EpisodeHeader),
    Prompt { system: String, user: String },
    ModelMessage { turn: usize, content: Option<String>, tool_calls: usize, elapsed_ms: f64, usage: Option<Usage> },
    ToolCall { turn: usize, call: ToolCall },
    ToolResult { turn: usize, result: ToolResult },
    FinalAnswer { text: String },
    Status { status: EpisodeStatus, detail: Option<String>, turns: usize, tool_calls: usize, elapsed_ms: f64 },
}

/// Ordered record of one episode.
#[derive(Debug, Clone, PartialEq)]
pub struct Transcript {
    pub header: EpisodeHeader,
    /// Everything after the header, ending with a `Status` event.
    pub events: Vec<Event>,
}

impl Transcript {
    pub fn new(header: EpisodeHeader, events: Vec<Event>) -> Self {
        Self { header, events }
    }

    pub fn status(&self) -> EpisodeStatus {
        self.events
            .iter()
            .rev()
            .find_map(|e| match e {
                Event::Status { status, .. } => Some(*status),
                _ => None,
            })
            .unwrap_or(EpisodeStatus::BackendError)
    }

    pub fn final_answer(&self) -> Option<&str> {
        self.events.iter().find_map(|e| match e {
            Event::FinalAnswer { text } => Some(text.as_str()),
            _ => None,
        })
    }

    /// Counted from the events, not from any backend counter.
    pub fn tool_call_count(&self) -> usize {
        self.events.iter().filter(|e| matches!(e, Event::ToolCall { .. })).count()
    }

    pub fn turns(&self) -> usize {
        self.events.iter().filter(|e| matches!(e, Event::ModelMessage { .. })).count()
    }

    /// Total time spent waiting for the backend, in seconds.
    pub fn inference_time(&self) -> f64 {
        self.events
            .iter()
            .map(|e| match e {
                Event::ModelMessage { elapsed_ms, .. } => *elapsed_ms / 1e3,
                _ => 0.0,
            })
            .sum()
    }

    pub fn tool_results(&self) -> Vec<&ToolResult> {
        self.events
            .iter()
            .filter_map(|e| match e {
                Event::ToolResult { result, .. } => Some(result),
                _ => None,
            })
            .collect()
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        let header = Event::Episode(self.header.clone());
        for e in std::iter::once(&header).chain(&self.events) {
            out.push_str(&serde_json::to_string(e).expect("events serialize"));
            out.push('\n');
        }
        out
    }

    /// Parses any number of concatenated transcripts.
    pub fn parse_jsonl(text: &str) -> Result<Vec<Transcript>, TranscriptError> {
        let mut out: Vec<Transcript> = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let event: Event =
                serde_json::from_str(line).map_err(|source| TranscriptError::Json { line: i + 1, source })?;
            match event {
                Event::Episode(header) => out.push(Transcript::new(header, Vec::new())),
                other => out.last_mut().ok_or(TranscriptError::Orphan { line: i + 1 })?.events.push(other),
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmark::{gold_answer, Query, QueryInstance};
    use crate::graph::{props, GraphBuilder, PropertyValue};

    #[test]
    fn jsonl_round_trip_with_query_task() {
        let mut b = GraphBuilder::default();
        b.add_node("A", props([("key", "k1"), ("p", "v")])).unwrap();
        let g = b.build();
        let q = Query::NodeByProperty {
            label: "A".into(),
            prop_name: "p".into(),
            prop_value: PropertyValue::Text("v".into()),
        };
        let gold = gold_answer(&q, &g);
        let header = EpisodeHeader::new(
            "run0-node_by_property",
            "scripted",
            Setting::WithTools,
            Task::Query { instance: QueryInstance::new(q), gold },
        );
        let t = Transcript::new(
            header,
            vec![
                Event::FinalAnswer { text: "[]".into() },
                Event::Status {
                    status: EpisodeStatus::Completed,
                    detail: None,
                    turns: 1,
                    tool_calls: 0,
                    elapsed_ms: 0.5,
                },
            ],
        );
        let text = format!("{}{}", t.to_jsonl(), t.to_jsonl());
        let back = Transcript::parse_jsonl(&text).unwrap();
        assert_eq!(back, vec![t.clone(), t]);
    }

    #[test]
    fn orphan_events_are_rejected() {
        let line = r#"{"event":"final_answer","text":"x"}"#;
        assert!(matches!(Transcript::parse_jsonl(line), Err(TranscriptError::Orphan { line: 1 })));
    }
}
