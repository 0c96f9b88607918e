//! Minimal chat-completions server for exercising the HTTP backend offline.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::Duration;

use serde_json::{json, Value};

use super::llm::message_from_wire;
use super::{AgentBackend, Message};
use crate::tools::ToolDescriptor;

#[derive(Debug, Clone, PartialEq)]
pub struct MockReply {
    pub status: u16,
    pub body: String,
    pub delay: Duration,
}

impl MockReply {
    pub fn json(body: &Value) -> Self {
        Self { status: 200, body: body.to_string(), delay: Duration::ZERO }
    }

    pub fn status(status: u16, body: impl Into<String>) -> Self {
        Self { status, body: body.into(), delay: Duration::ZERO }
    }

    pub fn delayed(mut self, delay: Duration) -> Self {
        self.delay = delay;
        self
    }
}

/// A completion whose message carries `content` and the given tool calls.
/// Each call is `(id, name, raw arguments string)`.
pub fn completion(content: Option<&str>, tool_calls: &[(&str, &str, &str)]) -> Value {
    let mut message = json!({"role": "assistant", "content": content});
    if !tool_calls.is_empty() {
        message["tool_calls"] = tool_calls
            .iter()
            .map(
                |(id, name, args)| json!({"id": id, "type": "function", "function": {"name": name, "arguments": args}}),
            )
            .collect();
    }
    json!({
        "id": "mock",
        "object": "chat.completion",
        "choices": [{"index": 0, "message": message, "finish_reason": if tool_calls.is_empty() { "stop" } else { "tool_calls" }}],
        "usage": {"prompt_tokens": 1, "completion_tokens": 1, "total_tokens": 2},
    })
}

type Handler = dyn Fn(usize, &Value) -> MockReply + Send + Sync;

/// HTTP/1.1 server on an ephemeral localhost port. The handler receives
/// the zero-based request index and the parsed request body. Shuts down
/// when dropped.
pub struct MockServer {
    addr: SocketAddr,
    requests: Arc<Mutex<Vec<Value>>>,
    stop: Arc<AtomicBool>,
    thread: Option<JoinHandle<()>>,
}

impl MockServer {
    pub fn start(handler: impl Fn(usize, &Value) -> MockReply + Send + Sync + 'static) -> std::io::Result<Self> {
        let listener = TcpListener::bind("127.0.0.1:0")?;
        let addr = listener.local_addr()?;
        let requests = Arc::new(Mutex::new(Vec::new()));
        let stop = Arc::new(AtomicBool::new(false));
        let handler: Arc<Handler> = Arc::new(handler);
        let thread = {
            let requests = Arc::clone(&requests);
            let stop = Arc::clone(&stop);
            thread::spawn(move || {
                for stream in listener.incoming() {
                    if stop.load(Ordering::SeqCst) {
                        break;
                    }
                    let Ok(stream) = stream else { continue };
                    let requests = Arc::clone(&requests);
                    let handler = Arc::clone(&handler);
                    thread::spawn(move || {
                        let _ = serve(stream, &requests, handler.as_ref());
                    });
                }
            })
        };
        Ok(Self { addr, requests, stop, thread: Some(thread) })
    }

    /// Replies with the given bodies in order, repeating the last one.
    pub fn sequence(replies: Vec<MockReply>) -> std::io::Result<Self> {
        assert!(!replies.is_empty(), "at least one reply");
        Self::start(move |i, _| replies[i.min(replies.len() - 1)].clone())
    }

    /// Serves completions produced by a local backend, so a scripted agent
    /// can drive the HTTP client end to end.
    pub fn backed_by(backend: impl AgentBackend + Send + 'static) -> std::io::Result<Self> {
        let backend = Mutex::new(backend);
        Self::start(move |_, request| {
            let conversation: Vec<Message> = request["messages"]
                .as_array()
                .map(|ms| ms.iter().filter_map(message_from_wire).collect())
                .unwrap_or_default();
            let mut backend = backend.lock().expect("backend lock");
            match backend.respond(&conversation, &[] as &[ToolDescriptor]) {
                Ok(turn) => {
                    let args: Vec<(String, String, String)> = turn
                        .tool_calls
                        .iter()
                        .map(|c| (c.call_id.clone(), c.name.clone(), c.arguments.to_string()))
                        .collect();
                    let refs: Vec<(&str, &str, &str)> =
                        args.iter().map(|(a, b, c)| (a.as_str(), b.as_str(), c.as_str())).collect();
                    MockReply::json(&completion(turn.content.as_deref(), &refs))
                }
                Err(e) => MockReply::status(500, e.to_string()),
            }
        })
    }

    pub fn base_url(&self) -> String {
        format!("http://{}/v1", self.addr)
    }

    /// Request bodies received so far, in arrival order.
    pub fn requests(&self) -> Vec<Value> {
        self.requests.lock().expect("request log").clone()
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        let _ = TcpStream::connect(self.addr);
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

fn serve(stream: TcpStream, requests: &Mutex<Vec<Value>>, handler: &Handler) -> std::io::Result<()> {
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut content_length = 0;
    let mut line = String::new();
    reader.read_line(&mut line)?;
    if line.is_empty() {
        return Ok(());
    }
    loop {
        line.clear();
        if reader.read_line(&mut line)? == 0 || line.trim().is_empty() {
            break;
        }
        if let Some((name, value)) = line.split_once(':') {
            if name.trim().eq_ignore_ascii_case("content-length") {
                content_length = value.trim().parse().unwrap_or(0);
            }
        }
    }
    let mut body = vec![0; content_length];
    reader.read_exact(&mut body)?;
    let request: Value = serde_json::from_slice(&body).unwrap_or(Value::Null);
    let index = {
        let mut log = requests.lock().expect("request log");
        log.push(request.clone());
        log.len() - 1
    };
    let reply = handler(index, &request);
    thread::sleep(reply.delay);
    let mut stream = stream;
    write!(
        stream,
        "HTTP/1.1 {} Mock\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{}",
        reply.status,
        reply.body.len(),
        reply.body
    )?;
    stream.flush()
}
