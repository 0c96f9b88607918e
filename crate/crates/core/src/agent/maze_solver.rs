use std::collections::{BTreeMap, HashMap, HashSet};

use serde_json::{json, Value};

use super::{AgentBackend, BackendError, Message, ModelTurn};
use crate::tools::{ToolCall, ToolDescriptor};

/// Cells expanded per turn while the goal is still unseen.
pub const MAZE_BATCH: usize = 3;

/// Greedy best-first maze agent using only the two maze tools.
///
/// Expands the open frontier cells closest to the goal, a few per turn.
/// Once the goal appears it is expanded alone, so it is the last marked
/// cell, and the path is then read back with `get_connected_path`.
pub struct MazeSolver {
    start: String,
    goal: String,
    expanded: HashSet<String>,
    frontier: BTreeMap<String, f64>,
    pending: HashMap<String, Pending>,
    calls_made: usize,
    phase: Phase,
}

#[derive(Debug, Clone)]
enum Pending {
    Expand,
    Path,
}

#[derive(Debug, Clone, PartialEq)]
enum Phase {
    Exploring,
    GoalExpanded,
    PathRequested,
    Done(Vec<String>),
}

impl MazeSolver {
    pub fn new(start: impl Into<String>, goal: impl Into<String>) -> Self {
        Self {
            start: start.into(),
            goal: goal.into(),
            expanded: HashSet::new(),
            frontier: BTreeMap::new(),
            pending: HashMap::new(),
            calls_made: 0,
            phase: Phase::Exploring,
        }
    }

    fn call(&mut self, name: &str, arguments: Value, pending: Pending) -> ToolCall {
        self.calls_made += 1;
        let call_id = format!("call_{}", self.calls_made);
        self.pending.insert(call_id.clone(), pending);
        ToolCall { call_id, name: name.into(), arguments }
    }

    fn expand(&mut self, key: String) -> ToolCall {
        self.frontier.remove(&key);
        self.expanded.insert(key.clone());
        self.call("get_possible_next_cells", json!({"node_id": key}), Pending::Expand)
    }

    fn ingest(&mut self, pending: Pending, content: &str) {
        let parsed: Option<Vec<Value>> = serde_json::from_str::<Value>(content).ok().and_then(|v| match v {
            Value::Array(items) => Some(items),
            _ => None,
        });
        match pending {
            Pending::Expand => {
                for cell in parsed.unwrap_or_default() {
                    let (Some(key), Some(distance)) = (cell["key"].as_str(), cell["euclidean_distance"].as_f64())
                    else {
                        continue;
                    };
                    if !self.expanded.contains(key) {
                        self.frontier.insert(key.to_owned(), distance);
                    }
                }
            }
            Pending::Path => {
                let path = parsed.unwrap_or_default().iter().filter_map(|k| k.as_str().map(str::to_owned)).collect();
                self.phase = Phase::Done(path);
            }
        }
    }

    fn closest(&self, n: usize) -> Vec<String> {
        let mut open: Vec<(&String, f64)> = self.frontier.iter().map(|(k, d)| (k, *d)).collect();
        open.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(b.0)));
        open.into_iter().take(n).map(|(k, _)| k.clone()).collect()
    }
}

impl AgentBackend for MazeSolver {
    fn respond(&mut self, conversation: &[Message], _: &[ToolDescriptor]) -> Result<ModelTurn, BackendError> {
        for message in conversation {
            if let Message::Tool { call_id, content } = message {
                if let Some(p) = self.pending.remove(call_id) {
                    self.ingest(p, content);
                }
            }
        }
        let calls = match self.phase.clone() {
            Phase::Done(path) => return Ok(ModelTurn::answer(json!({ "path": path }).to_string())),
            Phase::GoalExpanded => {
                self.phase = Phase::PathRequested;
                vec![self.call("get_connected_path", json!({}), Pending::Path)]
            }
            Phase::PathRequested => {
                return Err(BackendError::Other("connected path result was not returned".into()));
            }
            Phase::Exploring if self.expanded.is_empty() => {
                let start = self.start.clone();
                if start == self.goal {
                    self.phase = Phase::GoalExpanded;
                }
                vec![self.expand(start)]
            }
            Phase::Exploring if self.frontier.contains_key(&self.goal) => {
                self.phase = Phase::GoalExpanded;
                let goal = self.goal.clone();
                vec![self.expand(goal)]
            }
            Phase::Exploring => {
                let next = self.closest(MAZE_BATCH);
                if next.is_empty() {
                    return Ok(ModelTurn::answer(json!({ "path": [] }).to_string()));
                }
                next.into_iter().map(|k| self.expand(k)).collect()
            }
        };
        Ok(ModelTurn::calls(calls))
    }
}
