use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

use super::GraphError;

/// A property value carried by a node or relationship.
///
/// Serialized untagged: text as a JSON string, numbers as a JSON number.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PropertyValue {
    Number(f64),
    Text(String),
}

/// The runtime type of a property, as seen by the tools when coercing arguments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValueKind {
    Text,
    Number,
}

impl PropertyValue {
    pub fn text(s: impl Into<String>) -> Result<Self, GraphError> {
        let s = s.into();
        if s.is_empty() {
            return Err(GraphError::InvalidValue("text values must be non-empty".into()));
        }
        Ok(Self::Text(s))
    }

    pub fn number(x: f64) -> Result<Self, GraphError> {
        if !x.is_finite() {
            return Err(GraphError::InvalidValue(format!("numbers must be finite, got {x}")));
        }
        // -0.0 and 0.0 must hash identically
        Ok(Self::Number(if x == 0.0 { 0.0 } else { x }))
    }

    pub fn validate(&self) -> Result<(), GraphError> {
        match self {
            Self::Text(s) if s.is_empty() => Err(GraphError::InvalidValue("text values must be non-empty".into())),
            Self::Number(x) if !x.is_finite() => {
                Err(GraphError::InvalidValue(format!("numbers must be finite, got {x}")))
            }
            _ => Ok(()),
        }
    }

    pub fn kind(&self) -> ValueKind {
        match self {
            Self::Text(_) => ValueKind::Text,
            Self::Number(_) => ValueKind::Number,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            Self::Text(s) => Some(s),
            Self::Number(_) => None,
        }
    }

    pub fn as_number(&self) -> Option<f64> {
        match self {
            Self::Number(x) => Some(*x),
            Self::Text(_) => None,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Self::Text(s) => serde_json::Value::String(s.clone()),
            Self::Number(x) => {
                serde_json::Number::from_f64(*x).map(serde_json::Value::Number).unwrap_or(serde_json::Value::Null)
            }
        }
    }

    fn number_bits(x: f64) -> u64 {
        if x == 0.0 {
            0.0f64.to_bits()
        } else {
            x.to_bits()
        }
    }
}

impl PartialEq for PropertyValue {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Self::Text(a), Self::Text(b)) => a == b,
            (Self::Number(a), Self::Number(b)) => a == b,
            _ => false,
        }
    }
}

impl Eq for PropertyValue {}

impl Hash for PropertyValue {
    fn hash<H: Hasher>(&self, state: &mut H) {
        match self {
            Self::Text(s) => {
                0u8.hash(state);
                s.hash(state);
            }
            Self::Number(x) => {
                1u8.hash(state);
                Self::number_bits(*x).hash(state);
            }
        }
    }
}

impl Ord for PropertyValue {
    /// Numbers sort before text; numbers by value, text lexicographically.
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Self::Number(a), Self::Number(b)) => a.total_cmp(b),
            (Self::Text(a), Self::Text(b)) => a.cmp(b),
            (Self::Number(_), Self::Text(_)) => Ordering::Less,
            (Self::Text(_), Self::Number(_)) => Ordering::Greater,
        }
    }
}

impl PartialOrd for PropertyValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for PropertyValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Text(s) => f.write_str(s),
            Self::Number(x) => write!(f, "{x}"),
        }
    }
}

impl From<&str> for PropertyValue {
    fn from(s: &str) -> Self {
        Self::Text(s.to_owned())
    }
}

impl From<String> for PropertyValue {
    fn from(s: String) -> Self {
        Self::Text(s)
    }
}

impl From<f64> for PropertyValue {
    fn from(x: f64) -> Self {
        Self::Number(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_text_and_non_finite_numbers() {
        assert!(PropertyValue::text("").is_err());
        assert!(PropertyValue::number(f64::NAN).is_err());
        assert!(PropertyValue::number(f64::INFINITY).is_err());
        assert!(PropertyValue::number(1.5).is_ok());
    }

    #[test]
    fn signed_zero_is_one_value() {
        use std::collections::HashSet;
        let mut set = HashSet::new();
        set.insert(PropertyValue::Number(0.0));
        set.insert(PropertyValue::Number(-0.0));
        assert_eq!(set.len(), 1);
    }

    #[test]
    fn untagged_json_shape() {
        let v: Vec<PropertyValue> = serde_json::from_str(r#"["abc", 2.5]"#).unwrap();
        assert_eq!(v, vec![PropertyValue::from("abc"), PropertyValue::from(2.5)]);
        assert_eq!(serde_json::to_string(&v).unwrap(), r#"["abc",2.5]"#);
    }
}
