//! Tool descriptors, registries and the dispatcher that maps model tool
//! calls onto graph and maze operations.

mod kg;
mod maze;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

pub use kg::{kg_registry, KgContext};
pub use maze::maze_registry;

/// Argument type of one tool parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParamType {
    String,
    /// A string or a number.
    Scalar,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolParam {
    pub name: String,
    pub param_type: ParamType,
    pub description: String,
    pub required: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolDescriptor {
    pub name: String,
    pub description: String,
    pub params: Vec<ToolParam>,
    /// False for tools whose output does not follow from the environment
    /// (`think`).
    pub deterministic: bool,
}

impl ToolDescriptor {
    /// JSON-schema parameter object.
    pub fn parameters(&self) -> Value {
        let mut properties = Map::new();
        for p in &self.params {
            let ty = match p.param_type {
                ParamType::String => json!("string"),
                ParamType::Scalar => json!(["string", "number"]),
            };
            properties.insert(p.name.clone(), json!({"type": ty, "description": p.description}));
        }
        let required: Vec<&str> = self.params.iter().filter(|p| p.required).map(|p| p.name.as_str()).collect();
        json!({"type": "object", "properties": properties, "required": required})
    }

    /// Entry of a chat-completions `tools` array.
    pub fn to_function_json(&self) -> Value {
        json!({
            "type": "function",
            "function": {
                "name": self.name,
                "description": self.description,
                "parameters": self.parameters(),
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolCall {
    pub call_id: String,
    pub name: String,
    /// Normally a JSON object. Models sometimes send a string holding JSON,
    /// or something unparseable; both are handled by [`Toolbox::dispatch`].
    pub arguments: Value,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolResult {
    pub call_id: String,
    pub content: String,
    pub is_error: bool,
}

/// Successful handler output.
#[derive(Debug, Clone, PartialEq)]
pub enum ToolOutput {
    /// Serialized as compact JSON.
    Json(Value),
    /// Passed through unchanged.
    Text(String),
}

pub type Handler<C> = fn(&mut C, &Map<String, Value>) -> Result<ToolOutput, String>;

/// Anything the agent loop can call tools on.
pub trait Toolbox {
    fn descriptors(&self) -> &[ToolDescriptor];

    fn dispatch(&mut self, call: &ToolCall) -> ToolResult;

    fn tools_json(&self) -> Vec<Value> {
        self.descriptors().iter().map(ToolDescriptor::to_function_json).collect()
    }
}

/// A set of tools bound to one context value (a graph or a maze episode).
pub struct ToolRegistry<C> {
    context: C,
    descriptors: Vec<ToolDescriptor>,
    handlers: Vec<Handler<C>>,
}

impl<C> ToolRegistry<C> {
    pub fn new(context: C) -> Self {
        Self { context, descriptors: Vec::new(), handlers: Vec::new() }
    }

    /// Panics on a duplicate name; registries are assembled in code.
    pub fn register(&mut self, descriptor: ToolDescriptor, handler: Handler<C>) {
        assert!(self.descriptors.iter().all(|d| d.name != descriptor.name), "duplicate tool {}", descriptor.name);
        self.descriptors.push(descriptor);
        self.handlers.push(handler);
    }

    pub fn len(&self) -> usize {
        self.descriptors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.descriptors.is_empty()
    }

    pub fn context(&self) -> &C {
        &self.context
    }

    pub fn into_context(self) -> C {
        self.context
    }

    fn run(&mut self, call: &ToolCall) -> Result<ToolOutput, String> {
        let Some(index) = self.descriptors.iter().position(|d| d.name == call.name) else {
            let available: Vec<&str> = self.descriptors.iter().map(|d| d.name.as_str()).collect();
            return Err(format!("unknown tool {}; available: {}", call.name, available.join(", ")));
        };
        let descriptor = &self.descriptors[index];
        let args = normalize_arguments(&descriptor.name, &call.arguments)?;
        for p in &descriptor.params {
            match args.get(&p.name) {
                None | Some(Value::Null) if p.required => {
                    return Err(format!("missing required argument '{}' for tool {}", p.name, descriptor.name));
                }
                Some(v) if !type_matches(p.param_type, v) => {
                    let expected = match p.param_type {
                        ParamType::String => "a string",
                        ParamType::Scalar => "a string or a number",
                    };
                    return Err(format!(
                        "argument '{}' of tool {} must be {expected}, got {v}",
                        p.name, descriptor.name
                    ));
                }
                _ => {}
            }
        }
        (self.handlers[index])(&mut self.context, &args)
    }
}

impl<C> Toolbox for ToolRegistry<C> {
    fn descriptors(&self) -> &[ToolDescriptor] {
        &self.descriptors
    }

    fn dispatch(&mut self, call: &ToolCall) -> ToolResult {
        let (content, is_error) = match self.run(call) {
            Ok(ToolOutput::Json(v)) => (v.to_string(), false),
            Ok(ToolOutput::Text(s)) => (s, false),
            Err(message) => (message, true),
        };
        ToolResult { call_id: call.call_id.clone(), content, is_error }
    }
}

fn normalize_arguments(tool: &str, arguments: &Value) -> Result<Map<String, Value>, String> {
    match arguments {
        Value::Object(map) => Ok(map.clone()),
        Value::Null => Ok(Map::new()),
        Value::String(s) if s.trim().is_empty() => Ok(Map::new()),
        Value::String(s) => match serde_json::from_str::<Value>(s) {
            Ok(Value::Object(map)) => Ok(map),
            _ => Err(format!("malformed arguments for tool {tool}: expected a JSON object, got {s:?}")),
        },
        other => Err(format!("malformed arguments for tool {tool}: expected a JSON object, got {other}")),
    }
}

fn type_matches(expected: ParamType, value: &Value) -> bool {
    match expected {
        ParamType::String => value.is_string(),
        ParamType::Scalar => value.is_string() || value.is_number(),
    }
}

pub(crate) fn param(name: &str, param_type: ParamType, description: &str) -> ToolParam {
    ToolParam { name: name.into(), param_type, description: description.into(), required: true }
}

pub(crate) fn str_arg<'a>(args: &'a Map<String, Value>, name: &str) -> &'a str {
    args.get(name).and_then(Value::as_str).expect("checked by dispatch")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn echo(_: &mut (), args: &Map<String, Value>) -> Result<ToolOutput, String> {
        Ok(ToolOutput::Json(Value::Object(args.clone())))
    }

    fn registry() -> ToolRegistry<()> {
        let mut r = ToolRegistry::new(());
        r.register(
            ToolDescriptor {
                name: "echo".into(),
                description: "Echo.".into(),
                params: vec![param("x", ParamType::String, "x"), param("y", ParamType::Scalar, "y")],
                deterministic: true,
            },
            echo,
        );
        r
    }

    fn call(name: &str, arguments: Value) -> ToolCall {
        ToolCall { call_id: "c1".into(), name: name.into(), arguments }
    }

    #[test]
    fn unknown_tool_lists_available() {
        let r = registry().dispatch(&call("foo", json!({})));
        assert!(r.is_error);
        assert_eq!(r.content, "unknown tool foo; available: echo");
        assert_eq!(r.call_id, "c1");
    }

    #[test]
    fn argument_checks() {
        let mut reg = registry();
        let missing = reg.dispatch(&call("echo", json!({"x": "a"})));
        assert!(missing.is_error && missing.content.contains("'y'"));
        let wrong = reg.dispatch(&call("echo", json!({"x": 1, "y": 2})));
        assert!(wrong.is_error && wrong.content.contains("'x'"));
        let garbage = reg.dispatch(&call("echo", json!("{not json")));
        assert!(garbage.is_error && garbage.content.starts_with("malformed arguments"));
    }

    #[test]
    fn string_encoded_arguments_are_accepted() {
        let r = registry().dispatch(&call("echo", json!(r#"{"x": "a", "y": 2}"#)));
        assert!(!r.is_error);
        let v: Value = serde_json::from_str(&r.content).unwrap();
        assert_eq!(v, json!({"x": "a", "y": 2}));
    }

    #[test]
    fn function_payload_shape() {
        let reg = registry();
        let v = &reg.tools_json()[0];
        assert_eq!(v["type"], "function");
        assert_eq!(v["function"]["parameters"]["required"], json!(["x", "y"]));
        assert_eq!(v["function"]["parameters"]["properties"]["y"]["type"], json!(["string", "number"]));
    }
}
