use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::benchmark::{canonical_json, Record};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExtractionMethod {
    DirectJson,
    FencedJson,
    EmbeddedJson,
    LlmFallback,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractedAnswer {
    pub records: BTreeSet<Record>,
    pub method: ExtractionMethod,
    /// Fields present in the answer but absent from the output schema.
    pub dropped_fields: BTreeSet<String>,
}

impl ExtractedAnswer {
    pub fn failed() -> Self {
        Self { records: BTreeSet::new(), method: ExtractionMethod::Failed, dropped_fields: BTreeSet::new() }
    }
}

/// Optional last-resort extractor, typically backed by a language model.
/// Returns JSON text in the requested output schema, or `None`.
pub trait AnswerExtractor: Sync {
    fn extract(&self, final_text: &str, output_schema: &str) -> Option<String>;
}

/// Output field names of a schema such as `[{"node_key": "string"}]`.
pub fn schema_fields(output_schema: &str) -> Vec<String> {
    let value: Value = serde_json::from_str(output_schema).unwrap_or(Value::Null);
    let object = match &value {
        Value::Array(items) => items.first().and_then(Value::as_object),
        Value::Object(o) => Some(o),
        _ => None,
    };
    object.map(|o| o.keys().cloned().collect()).unwrap_or_default()
}

/// JSON candidates in `text`, by extraction stage: the whole text, fenced
/// code blocks, then outermost bracket-balanced substrings. Within a stage
/// later candidates come first.
pub fn json_candidates(text: &str) -> Vec<(Value, ExtractionMethod)> {
    let mut out = Vec::new();
    if let Ok(v) = serde_json::from_str::<Value>(text.trim()) {
        out.push((v, ExtractionMethod::DirectJson));
    }
    let fenced: Vec<Value> = fenced_blocks(text).filter_map(|b| serde_json::from_str(b.trim()).ok()).collect();
    out.extend(fenced.into_iter().rev().map(|v| (v, ExtractionMethod::FencedJson)));
    let embedded: Vec<Value> = balanced_spans(text).filter_map(|s| serde_json::from_str(s).ok()).collect();
    out.extend(embedded.into_iter().rev().map(|v| (v, ExtractionMethod::EmbeddedJson)));
    out
}

fn fenced_blocks(text: &str) -> impl Iterator<Item = &str> {
    text.split("```").skip(1).step_by(2).map(|block| {
        // drop an info string such as `json`
        match block.split_once('\n') {
            Some((first, rest)) if !first.trim_start().starts_with(['[', '{']) => rest,
            _ => block,
        }
    })
}

/// Outermost substrings starting with `[` or `{` whose brackets balance,
/// ignoring brackets inside JSON strings.
fn balanced_spans(text: &str) -> impl Iterator<Item = &str> {
    let bytes = text.as_bytes();
    let mut spans = Vec::new();
    let mut start = 0;
    while start < bytes.len() {
        if matches!(bytes[start], b'[' | b'{') {
            if let Some(end) = balanced_end(bytes, start) {
                spans.push(&text[start..=end]);
                start = end + 1;
                continue;
            }
        }
        start += 1;
    }
    spans.into_iter()
}

fn balanced_end(bytes: &[u8], start: usize) -> Option<usize> {
    let mut stack = Vec::new();
    let mut in_string = false;
    let mut escaped = false;
    for (i, &b) in bytes.iter().enumerate().skip(start) {
        if in_string {
            match b {
                _ if escaped => escaped = false,
                b'\\' => escaped = true,
                b'"' => in_string = false,
                _ => {}
            }
            continue;
        }
        match b {
            b'"' => in_string = true,
            b'[' => stack.push(b']'),
            b'{' => stack.push(b'}'),
            b']' | b'}' => {
                if stack.pop() != Some(b) {
                    return None;
                }
                if stack.is_empty() {
                    return Some(i);
                }
            }
            _ => {}
        }
    }
    None
}

/// Converts a JSON answer into records over `fields`, or `None` when the
/// value does not have the shape of an answer.
pub fn records_from_value(value: &Value, fields: &[String]) -> Option<(BTreeSet<Record>, BTreeSet<String>)> {
    let mut dropped = BTreeSet::new();
    let mut records = BTreeSet::new();
    match value {
        Value::Array(items) => {
            for item in items {
                records.insert(record_from_item(item, fields, &mut dropped)?);
            }
        }
        Value::Object(o) if fields.iter().any(|f| o.contains_key(f)) => {
            records.insert(record_from_item(value, fields, &mut dropped)?);
        }
        // wrapper such as {"answer": [...]}
        Value::Object(o) => {
            return o.values().find_map(|v| match v {
                Value::Array(_) | Value::Object(_) => records_from_value(v, fields),
                _ => None,
            })
        }
        Value::Null => {}
        scalar => {
            records.insert(record_from_item(scalar, fields, &mut dropped)?);
        }
    }
    Some((records, dropped))
}

fn record_from_item(item: &Value, fields: &[String], dropped: &mut BTreeSet<String>) -> Option<Record> {
    match item {
        Value::Object(o) => {
            if !fields.iter().any(|f| o.contains_key(f)) {
                return None;
            }
            let mut record = Record::new();
            for (k, v) in o {
                if fields.contains(k) {
                    if let Some(c) = canonical_json(v) {
                        record.insert(k.clone(), c);
                    }
                } else {
                    dropped.insert(k.clone());
                }
            }
            Some(record)
        }
        Value::Array(_) => None,
        scalar if fields.len() == 1 => {
            let mut record = Record::new();
            record.insert(fields[0].clone(), canonical_json(scalar)?);
            Some(record)
        }
        _ => None,
    }
}

/// Staged extraction without a fallback extractor.
pub fn extract_answer(final_text: &str, output_schema: &str) -> ExtractedAnswer {
    extract_answer_with(final_text, output_schema, None)
}

pub fn extract_answer_with(
    final_text: &str,
    output_schema: &str,
    fallback: Option<&dyn AnswerExtractor>,
) -> ExtractedAnswer {
    let fields = schema_fields(output_schema);
    for (value, method) in json_candidates(final_text) {
        if let Some((records, dropped_fields)) = records_from_value(&value, &fields) {
            return ExtractedAnswer { records, method, dropped_fields };
        }
    }
    let recovered = fallback
        .and_then(|f| f.extract(final_text, output_schema))
        .and_then(|text| json_candidates(&text).into_iter().find_map(|(v, _)| records_from_value(&v, &fields)));
    match recovered {
        Some((records, dropped_fields)) => {
            ExtractedAnswer { records, method: ExtractionMethod::LlmFallback, dropped_fields }
        }
        None => ExtractedAnswer::failed(),
    }
}

/// Extracts a maze answer `{"path": [...]}` (or a bare array of keys).
pub fn extract_path(
    final_text: &str,
    fallback: Option<&dyn AnswerExtractor>,
) -> (Option<Vec<String>>, ExtractionMethod) {
    fn path_of(value: &Value) -> Option<Vec<String>> {
        let items = match value {
            Value::Object(o) => o.get("path")?.as_array()?,
            Value::Array(items) => items,
            _ => return None,
        };
        items.iter().map(canonical_json).collect()
    }
    for (value, method) in json_candidates(final_text) {
        if let Some(path) = path_of(&value) {
            return (Some(path), method);
        }
    }
    let recovered = fallback
        .and_then(|f| f.extract(final_text, crate::agent::maze_output_schema()))
        .and_then(|text| json_candidates(&text).into_iter().find_map(|(v, _)| path_of(&v)));
    match recovered {
        Some(path) => (Some(path), ExtractionMethod::LlmFallback),
        None => (None, ExtractionMethod::Failed),
    }
}
