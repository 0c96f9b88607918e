use super::{AgentBackend, BackendError, Event, Message, ModelTurn, Transcript};
use crate::tools::ToolDescriptor;

/// Re-issues the model turns recorded in a transcript, ignoring the
/// conversation it is given. Running it against a fresh environment
/// reproduces the recorded tool results when the tools are deterministic.
pub struct ReplayBackend {
    turns: Vec<ModelTurn>,
    next: usize,
}

impl ReplayBackend {
    pub fn new(transcript: &Transcript) -> Self {
        let mut turns: Vec<ModelTurn> = Vec::new();
        for event in &transcript.events {
            match event {
                Event::ModelMessage { content, usage, .. } => {
                    turns.push(ModelTurn { content: content.clone(), tool_calls: Vec::new(), usage: *usage })
                }
                Event::ToolCall { call, .. } => {
                    if let Some(last) = turns.last_mut() {
                        last.tool_calls.push(call.clone());
                    }
                }
                _ => {}
            }
        }
        Self { turns, next: 0 }
    }

    pub fn remaining(&self) -> usize {
        self.turns.len() - self.next
    }
}

impl AgentBackend for ReplayBackend {
    fn respond(&mut self, _: &[Message], _: &[ToolDescriptor]) -> Result<ModelTurn, BackendError> {
        let turn = self
            .turns
            .get(self.next)
            .cloned()
            .ok_or_else(|| BackendError::Other("replay exhausted: no recorded turn left".into()))?;
        self.next += 1;
        Ok(turn)
    }
}
