//! The act-observe loop: prompts, pluggable backends (scripted solvers,
//! an HTTP chat-completions client, transcript replay) and transcripts.

mod llm;
mod maze_solver;
pub mod mock;
mod prompt;
mod replay;
mod scripted;
mod transcript;

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use llm::{
    message_from_wire, message_to_wire, parse_response, LlmBackend, LlmConfig, API_BASE_ENV, API_BASE_FALLBACK_ENV,
    API_KEY_ENV, DEFAULT_API_BASE, DEFAULT_MODEL, MODEL_ENV,
};
pub use maze_solver::{MazeSolver, MAZE_BATCH};
pub use prompt::{
    build_maze_prompt_no_tools, build_maze_prompt_with_tools, build_prompt_no_tools, build_prompt_with_tools,
    maze_output_schema, maze_user_message, MAZE_TOOL_HISTORY_NOTE,
};
pub use replay::ReplayBackend;
pub use scripted::ScriptedSolver;
pub use transcript::{EpisodeHeader, EpisodeStatus, Event, Setting, Task, Transcript, TranscriptError};

use crate::tools::{ToolCall, ToolDescriptor, Toolbox};

/// Default cap on backend turns per episode.
pub const MAX_ITERATIONS: usize = 30;

/// Fixed timestamp injected into prompts unless configured otherwise.
pub const DEFAULT_SYSTEM_TIME: &str = "2025-01-01T00:00:00Z";

/// One entry of the conversation sent to a backend.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "role", rename_all = "lowercase")]
pub enum Message {
    System { content: String },
    User { content: String },
    Assistant { content: Option<String>, tool_calls: Vec<ToolCall> },
    Tool { call_id: String, content: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

/// One model response: tool calls to run, or a final message.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ModelTurn {
    pub content: Option<String>,
    pub tool_calls: Vec<ToolCall>,
    pub usage: Option<Usage>,
}

impl ModelTurn {
    pub fn answer(text: impl Into<String>) -> Self {
        Self { content: Some(text.into()), ..Self::default() }
    }

    pub fn calls(tool_calls: Vec<ToolCall>) -> Self {
        Self { tool_calls, ..Self::default() }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BackendError {
    #[error("transport error after {attempts} attempt(s): {message}")]
    Transport { attempts: usize, message: String },
    #[error("endpoint returned HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("malformed response: {0}")]
    Protocol(String),
    #[error("{0}")]
    Other(String),
}

/// Produces the next turn from the conversation so far. Must not touch
/// the environment except through the tool calls it returns.
pub trait AgentBackend {
    fn respond(&mut self, conversation: &[Message], tools: &[ToolDescriptor]) -> Result<ModelTurn, BackendError>;
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub with_tools: bool,
    pub max_iterations: usize,
    pub system_time: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self { with_tools: true, max_iterations: MAX_ITERATIONS, system_time: DEFAULT_SYSTEM_TIME.into() }
    }
}

/// Runs one episode: backend turns until a final message or the cap.
///
/// Panics if `config.with_tools` disagrees with the presence of `toolbox`.
pub fn run_episode(
    backend: &mut dyn AgentBackend,
    mut toolbox: Option<&mut dyn Toolbox>,
    header: EpisodeHeader,
    system_prompt: &str,
    question: &str,
    config: &RunConfig,
) -> Transcript {
    assert_eq!(config.with_tools, toolbox.is_some(), "with_tools must match the toolbox");
    assert!(config.max_iterations >= 1, "max_iterations must be >= 1");
    let started = Instant::now();
    let mut events = vec![Event::Prompt { system: system_prompt.to_owned(), user: question.to_owned() }];
    let mut conversation =
        vec![Message::System { content: system_prompt.to_owned() }, Message::User { content: question.to_owned() }];
    let descriptors: Vec<ToolDescriptor> = toolbox.as_ref().map(|t| t.descriptors().to_vec()).unwrap_or_default();
    let mut status = EpisodeStatus::IterationCap;
    let mut detail = None;
    let mut turns = 0;
    let mut tool_calls = 0;

    for turn in 0..config.max_iterations {
        turns = turn + 1;
        let t0 = Instant::now();
        let response = backend.respond(&conversation, &descriptors);
        let elapsed_ms = t0.elapsed().as_secs_f64() * 1e3;
        let response = match response {
            Ok(r) => r,
            Err(e) => {
                status = EpisodeStatus::BackendError;
                detail = Some(e.to_string());
                break;
            }
        };
        events.push(Event::ModelMessage {
            turn,
            content: response.content.clone(),
            tool_calls: response.tool_calls.len(),
            elapsed_ms,
            usage: response.usage,
        });
        match toolbox.as_deref_mut() {
            Some(tools) if !response.tool_calls.is_empty() => {
                conversation.push(Message::Assistant {
                    content: response.content.clone(),
                    tool_calls: response.tool_calls.clone(),
                });
                for call in &response.tool_calls {
                    let result = tools.dispatch(call);
                    tool_calls += 1;
                    events.push(Event::ToolCall { turn, call: call.clone() });
                    conversation
                        .push(Message::Tool { call_id: result.call_id.clone(), content: result.content.clone() });
                    events.push(Event::ToolResult { turn, result });
                }
            }
            None if !response.tool_calls.is_empty() && response.content.is_none() => {
                status = EpisodeStatus::BackendError;
                detail = Some("backend requested tools in the no-tools setting".into());
                break;
            }
            _ => {
                let text = response.content.unwrap_or_default();
                events.push(Event::FinalAnswer { text });
                status = EpisodeStatus::Completed;
                break;
            }
        }
    }
    events.push(Event::Status { status, detail, turns, tool_calls, elapsed_ms: started.elapsed().as_secs_f64() * 1e3 });
    Transcript::new(header, events)
}

#[cfg(test)]
mod tests {
    use serde_json::json;

    use super::*;
    use crate::tools::ToolRegistry;

    struct AlwaysThink;

    impl AgentBackend for AlwaysThink {
        fn respond(&mut self, conversation: &[Message], _: &[ToolDescriptor]) -> Result<ModelTurn, BackendError> {
            Ok(ModelTurn::calls(vec![ToolCall {
                call_id: format!("c{}", conversation.len()),
                name: "think".into(),
                arguments: json!({"thought": "hmm"}),
            }]))
        }
    }

    struct Fixed(&'static str);

    impl AgentBackend for Fixed {
        fn respond(&mut self, _: &[Message], _: &[ToolDescriptor]) -> Result<ModelTurn, BackendError> {
            Ok(ModelTurn::answer(self.0))
        }
    }

    struct Broken;

    impl AgentBackend for Broken {
        fn respond(&mut self, _: &[Message], _: &[ToolDescriptor]) -> Result<ModelTurn, BackendError> {
            Err(BackendError::Http { status: 401, body: "no".into() })
        }
    }

    fn think_box() -> ToolRegistry<()> {
        let mut r = ToolRegistry::new(());
        r.register(
            ToolDescriptor { name: "think".into(), description: "t".into(), params: vec![], deterministic: false },
            |_, args| Ok(crate::tools::ToolOutput::Text(args["thought"].as_str().unwrap_or("").to_owned())),
        );
        r
    }

    fn header() -> EpisodeHeader {
        EpisodeHeader::new("e", "test", Setting::WithTools, Task::Other)
    }

    #[test]
    fn iteration_cap() {
        let mut tools = think_box();
        let t = run_episode(&mut AlwaysThink, Some(&mut tools), header(), "sys", "q", &RunConfig::default());
        assert_eq!(t.status(), EpisodeStatus::IterationCap);
        assert_eq!(t.turns(), 30);
        assert_eq!(t.tool_call_count(), 30);
        assert!(t.final_answer().is_none());
    }

    #[test]
    fn no_tools_run_has_no_tool_events() {
        let config = RunConfig { with_tools: false, ..RunConfig::default() };
        let t = run_episode(&mut Fixed("[]"), None, header(), "sys", "q", &config);
        assert_eq!(t.status(), EpisodeStatus::Completed);
        assert_eq!(t.final_answer(), Some("[]"));
        assert!(t.events.iter().all(|e| !matches!(e, Event::ToolCall { .. } | Event::ToolResult { .. })));
    }

    #[test]
    fn backend_failure_keeps_partial_transcript() {
        let mut tools = think_box();
        let t = run_episode(&mut Broken, Some(&mut tools), header(), "sys", "q", &RunConfig::default());
        assert_eq!(t.status(), EpisodeStatus::BackendError);
        assert!(matches!(t.events[0], Event::Prompt { .. }));
        assert!(t.final_answer().is_none());
    }
}
