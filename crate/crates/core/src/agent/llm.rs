use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{AgentBackend, BackendError, Message, ModelTurn, Usage};
use crate::tools::{ToolCall, ToolDescriptor};

/// Base URL of an OpenAI-compatible endpoint, e.g. `https://api.openai.com/v1`.
pub const API_BASE_ENV: &str = "GRAPHWALK_API_BASE";
/// Fallback for the base URL.
pub const API_BASE_FALLBACK_ENV: &str = "OPENAI_BASE_URL";
pub const API_KEY_ENV: &str = "OPENAI_API_KEY";
pub const MODEL_ENV: &str = "GRAPHWALK_MODEL";

pub const DEFAULT_API_BASE: &str = "https://api.openai.com/v1";
pub const DEFAULT_MODEL: &str = "gpt-4o-mini";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LlmConfig {
    pub base_url: String,
    #[serde(skip_serializing)]
    pub api_key: Option<String>,
    pub model: String,
    pub temperature: f64,
    pub timeout_secs: f64,
    /// Total attempts per request, including the first.
    pub max_attempts: usize,
    /// Delay before the first retry; doubled for each later one.
    pub backoff_ms: u64,
}

impl Default for LlmConfig {
    fn default() -> Self {
        Self {
            base_url: DEFAULT_API_BASE.into(),
            api_key: None,
            model: DEFAULT_MODEL.into(),
            temperature: 0.0,
            timeout_secs: 120.0,
            max_attempts: 3,
            backoff_ms: 500,
        }
    }
}

impl LlmConfig {
    /// Defaults overridden by whichever environment variables are set.
    pub fn from_env() -> Self {
        let var = |name: &str| std::env::var(name).ok().filter(|v| !v.is_empty());
        let defaults = Self::default();
        Self {
            base_url: var(API_BASE_ENV).or_else(|| var(API_BASE_FALLBACK_ENV)).unwrap_or(defaults.base_url),
            api_key: var(API_KEY_ENV),
            model: var(MODEL_ENV).unwrap_or(defaults.model),
            ..defaults
        }
    }

    pub fn endpoint(&self) -> String {
        format!("{}/chat/completions", self.base_url.trim_end_matches('/'))
    }
}

/// Client for an OpenAI-compatible chat-completions endpoint.
pub struct LlmBackend {
    config: LlmConfig,
    agent: ureq::Agent,
}

impl LlmBackend {
    pub fn new(config: LlmConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs_f64(config.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        Self { config, agent }
    }

    pub fn config(&self) -> &LlmConfig {
        &self.config
    }

    pub fn request_body(&self, conversation: &[Message], tools: &[ToolDescriptor]) -> Value {
        let mut body = json!({
            "model": self.config.model,
            "temperature": self.config.temperature,
            "messages": conversation.iter().map(message_to_wire).collect::<Vec<_>>(),
        });
        if !tools.is_empty() {
            body["tools"] = tools.iter().map(ToolDescriptor::to_function_json).collect();
            body["tool_choice"] = "auto".into();
        }
        body
    }

    fn send_once(&self, body: &Value) -> Result<Result<Value, BackendError>, String> {
        let mut request = self.agent.post(self.config.endpoint()).header("Content-Type", "application/json");
        if let Some(key) = &self.config.api_key {
            request = request.header("Authorization", format!("Bearer {key}"));
        }
        let mut response = request.send_json(body).map_err(|e| e.to_string())?;
        let status = response.status().as_u16();
        let text = response.body_mut().read_to_string().map_err(|e| e.to_string())?;
        if status == 429 || status >= 500 {
            return Err(format!("HTTP {status}: {}", truncate(&text)));
        }
        if !(200..300).contains(&status) {
            return Ok(Err(BackendError::Http { status, body: truncate(&text) }));
        }
        Ok(serde_json::from_str(&text).map_err(|e| BackendError::Protocol(format!("response is not JSON: {e}"))))
    }
}

impl AgentBackend for LlmBackend {
    fn respond(&mut self, conversation: &[Message], tools: &[ToolDescriptor]) -> Result<ModelTurn, BackendError> {
        let body = self.request_body(conversation, tools);
        let attempts = self.config.max_attempts.max(1);
        let mut last = String::new();
        for attempt in 1..=attempts {
            match self.send_once(&body) {
                Ok(result) => return parse_response(&result?),
                Err(message) => last = message,
            }
            if attempt < attempts {
                thread::sleep(Duration::from_millis(self.config.backoff_ms << (attempt - 1)));
            }
        }
        Err(BackendError::Transport { attempts, message: last })
    }
}

fn truncate(text: &str) -> String {
    const LIMIT: usize = 2000;
    match text.char_indices().nth(LIMIT) {
        Some((i, _)) => format!("{}...", &text[..i]),
        None => text.to_owned(),
    }
}

pub fn message_to_wire(message: &Message) -> Value {
    match message {
        Message::System { content } => json!({"role": "system", "content": content}),
        Message::User { content } => json!({"role": "user", "content": content}),
        Message::Assistant { content, tool_calls } => {
            let mut m = json!({"role": "assistant", "content": content});
            if !tool_calls.is_empty() {
                m["tool_calls"] = tool_calls
                    .iter()
                    .map(|c| {
                        let arguments = match &c.arguments {
                            Value::String(raw) => raw.clone(),
                            other => other.to_string(),
                        };
                        json!({"id": c.call_id, "type": "function",
                               "function": {"name": c.name, "arguments": arguments}})
                    })
                    .collect();
            }
            m
        }
        Message::Tool { call_id, content } => json!({"role": "tool", "tool_call_id": call_id, "content": content}),
    }
}

/// Inverse of [`message_to_wire`], for servers that speak the same protocol.
pub fn message_from_wire(value: &Value) -> Option<Message> {
    let content = value["content"].as_str().map(str::to_owned);
    Some(match value["role"].as_str()? {
        "system" => Message::System { content: content? },
        "user" => Message::User { content: content? },
        "tool" => Message::Tool { call_id: value["tool_call_id"].as_str()?.to_owned(), content: content? },
        "assistant" => Message::Assistant {
            content,
            tool_calls: value["tool_calls"]
                .as_array()
                .map(|calls| calls.iter().filter_map(|c| tool_call_from_wire(c).ok()).collect())
                .unwrap_or_default(),
        },
        _ => return None,
    })
}

fn tool_call_from_wire(call: &Value) -> Result<ToolCall, BackendError> {
    let function = &call["function"];
    let name =
        function["name"].as_str().ok_or_else(|| BackendError::Protocol("tool call without a function name".into()))?;
    // Unparseable argument strings are passed through; the tool layer reports them.
    let arguments = match &function["arguments"] {
        Value::String(raw) => serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.clone())),
        Value::Null => json!({}),
        other => other.clone(),
    };
    Ok(ToolCall { call_id: call["id"].as_str().unwrap_or_default().to_owned(), name: name.to_owned(), arguments })
}

pub fn parse_response(body: &Value) -> Result<ModelTurn, BackendError> {
    let message = body["choices"]
        .get(0)
        .map(|c| &c["message"])
        .filter(|m| m.is_object())
        .ok_or_else(|| BackendError::Protocol("no choices[0].message in response".into()))?;
    let tool_calls = match &message["tool_calls"] {
        Value::Array(calls) => calls.iter().map(tool_call_from_wire).collect::<Result<_, _>>()?,
        _ => Vec::new(),
    };
    let usage = body["usage"].as_object().map(|u| Usage {
        prompt_tokens: u.get("prompt_tokens").and_then(Value::as_u64).unwrap_or(0),
        completion_tokens: u.get("completion_tokens").and_then(Value::as_u64).unwrap_or(0),
    });
    Ok(ModelTurn { content: message["content"].as_str().map(str::to_owned), tool_calls, usage })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wire_round_trip() {
        let messages = vec![
            Message::System { content: "s".into() },
            Message::User { content: "u".into() },
            Message::Assistant {
                content: None,
                tool_calls: vec![ToolCall {
                    call_id: "c1".into(),
                    name: "think".into(),
                    arguments: json!({"thought": "x"}),
                }],
            },
            Message::Tool { call_id: "c1".into(), content: "x".into() },
        ];
        let back: Vec<Message> = messages.iter().map(|m| message_from_wire(&message_to_wire(m)).unwrap()).collect();
        assert_eq!(back, messages);
    }

    #[test]
    fn parses_tool_calls_and_usage() {
        let body = json!({"choices": [{"message": {"content": null, "tool_calls": [
            {"id": "a", "type": "function", "function": {"name": "think", "arguments": "{\"thought\":\"t\"}"}},
            {"id": "b", "type": "function", "function": {"name": "think", "arguments": "{oops"}}
        ]}}], "usage": {"prompt_tokens": 10, "completion_tokens": 3}});
        let turn = parse_response(&body).unwrap();
        assert_eq!(turn.tool_calls[0].arguments, json!({"thought": "t"}));
        assert_eq!(turn.tool_calls[1].arguments, json!("{oops"));
        assert_eq!(turn.usage, Some(Usage { prompt_tokens: 10, completion_tokens: 3 }));
        assert!(parse_response(&json!({"choices": []})).is_err());
    }

    #[test]
    fn config_endpoint() {
        let c = LlmConfig { base_url: "http://x/v1/".into(), ..LlmConfig::default() };
        assert_eq!(c.endpoint(), "http://x/v1/chat/completions");
    }
}
