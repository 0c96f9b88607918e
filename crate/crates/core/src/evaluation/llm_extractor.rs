use std::sync::Mutex;

use super::extract::AnswerExtractor;
use crate::agent::{AgentBackend, LlmBackend, LlmConfig, Message};

const INSTRUCTION: &str = "Extract the final answer from the response below and return it as JSON in the \
format {output_schema}. Copy values exactly as written in the response. Return only the JSON, or [] if the \
response contains no answer.";

/// Fallback extractor that asks a chat model to restate an answer as JSON.
pub struct LlmExtractor {
    backend: Mutex<LlmBackend>,
}

impl LlmExtractor {
    pub fn new(config: LlmConfig) -> Self {
        Self { backend: Mutex::new(LlmBackend::new(config)) }
    }
}

impl AnswerExtractor for LlmExtractor {
    fn extract(&self, final_text: &str, output_schema: &str) -> Option<String> {
        let conversation = [
            Message::System { content: INSTRUCTION.replace("{output_schema}", output_schema) },
            Message::User { content: final_text.to_owned() },
        ];
        let mut backend = self.backend.lock().ok()?;
        backend.respond(&conversation, &[]).ok()?.content
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::mock::{completion, MockReply, MockServer};
    use crate::evaluation::{extract_answer_with, ExtractionMethod};

    #[test]
    fn recovers_answers_from_prose_via_endpoint() {
        let server =
            MockServer::sequence(vec![MockReply::json(&completion(Some(r#"[{"node_key": "ab12"}]"#), &[]))]).unwrap();
        let extractor = LlmExtractor::new(LlmConfig { base_url: server.base_url(), ..LlmConfig::default() });
        let a = extract_answer_with("It is ab12.", r#"[{"node_key": "string"}]"#, Some(&extractor));
        assert_eq!(a.method, ExtractionMethod::LlmFallback);
        assert_eq!(a.records.len(), 1);
        let request = &server.requests()[0];
        assert_eq!(request["messages"][1]["content"], "It is ab12.");
    }
}
