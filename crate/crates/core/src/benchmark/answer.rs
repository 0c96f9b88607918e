use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::graph::PropertyValue;

/// One answer row with canonical string values, keyed by output field.
pub type Record = BTreeMap<String, String>;

/// How a prediction is compared against the gold records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CompareMode {
    ExactSet,
    SingleCount,
    /// Any record naming one of the tied maximal nodes with the maximal count.
    ArgmaxMembership,
    /// Any record whose value is one of the gold values.
    ValueMembership,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldAnswer {
    pub mode: CompareMode,
    pub fields: Vec<String>,
    pub records: BTreeSet<Record>,
}

impl GoldAnswer {
    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    /// Gold records as a JSON array, e.g. for the scripted solver's tests.
    pub fn to_json(&self) -> Value {
        Value::Array(
            self.records
                .iter()
                .map(|r| Value::Object(r.iter().map(|(k, v)| (k.clone(), Value::String(v.clone()))).collect()))
                .collect(),
        )
    }
}

/// Integers print without a fractional part so `3`, `3.0` and `"3"` agree.
pub fn canonical_number(x: f64) -> String {
    if x.fract() == 0.0 && x.abs() < 1e15 {
        format!("{}", x as i64)
    } else {
        format!("{x}")
    }
}

pub fn canonical_property(value: &PropertyValue) -> String {
    match value {
        PropertyValue::Number(x) => canonical_number(*x),
        PropertyValue::Text(s) => canonical_text(s),
    }
}

fn canonical_text(s: &str) -> String {
    let trimmed = s.trim();
    match trimmed.parse::<f64>() {
        Ok(x) if x.is_finite() => canonical_number(x),
        _ => trimmed.to_owned(),
    }
}

/// Canonical form of a JSON answer value; `None` for null.
pub fn canonical_json(value: &Value) -> Option<String> {
    match value {
        Value::Null => None,
        Value::String(s) => Some(canonical_text(s)),
        Value::Number(n) => n.as_f64().map(canonical_number),
        Value::Bool(b) => Some(b.to_string()),
        other => Some(other.to_string()),
    }
}

/// Builds a record from `(field, value)` pairs.
pub(crate) fn record<const N: usize>(pairs: [(&str, String); N]) -> Record {
    pairs.into_iter().map(|(k, v)| (k.to_owned(), v)).collect()
}

#[cfg(test)]
mod tests {
    use serde_json::json;

    use super::*;

    #[test]
    fn numeric_normalization() {
        assert_eq!(canonical_json(&json!(3)), Some("3".into()));
        assert_eq!(canonical_json(&json!(3.0)), Some("3".into()));
        assert_eq!(canonical_json(&json!(" 3 ")), Some("3".into()));
        assert_eq!(canonical_json(&json!("3.50")), Some("3.5".into()));
        assert_eq!(canonical_json(&json!(" ab12 ")), Some("ab12".into()));
        assert_eq!(canonical_json(&json!("nan")), Some("nan".into()));
        assert_eq!(canonical_json(&json!("Inf")), Some("Inf".into()));
        assert_eq!(canonical_json(&Value::Null), None);
        assert_eq!(canonical_property(&PropertyValue::Number(12.25)), "12.25");
    }
}
