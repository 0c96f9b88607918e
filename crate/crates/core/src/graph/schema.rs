//! Class-level description of a property graph and its tabular rendering.

use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use super::KEY_PROPERTY;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeClass {
    pub label: String,
    /// Property names, sorted; always includes `key`.
    pub properties: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelClass {
    pub name: String,
    pub source: String,
    pub target: String,
    /// Property names, sorted.
    pub properties: Vec<String>,
}

impl RelClass {
    pub fn cypher_pattern(&self) -> String {
        format!("(:{})-[:{}]->(:{})", self.source, self.name, self.target)
    }
}

/// The node and relationship classes of a graph, in declaration order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    pub node_classes: Vec<NodeClass>,
    pub rel_classes: Vec<RelClass>,
}

impl Schema {
    pub fn node_class(&self, label: &str) -> Option<&NodeClass> {
        self.node_classes.iter().find(|c| c.label == label)
    }

    pub fn rel_class(&self, name: &str) -> Option<&RelClass> {
        self.rel_classes.iter().find(|c| c.name == name)
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.node_classes.iter().map(|c| c.label.as_str())
    }

    pub fn rel_types(&self) -> impl Iterator<Item = &str> {
        self.rel_classes.iter().map(|c| c.name.as_str())
    }

    /// Whether a relationship of `rel_type` may connect `source` to `target`.
    pub fn allows(&self, rel_type: &str, source: &str, target: &str) -> bool {
        self.rel_classes.iter().any(|c| c.name == rel_type && c.source == source && c.target == target)
    }

    pub fn is_empty(&self) -> bool {
        self.node_classes.is_empty() && self.rel_classes.is_empty()
    }

    /// Node class properties other than `key`.
    pub fn data_properties<'a>(&'a self, label: &str) -> Vec<&'a str> {
        self.node_class(label)
            .map(|c| c.properties.iter().map(String::as_str).filter(|p| *p != KEY_PROPERTY).collect())
            .unwrap_or_default()
    }

    pub fn render(&self) -> SchemaTable {
        SchemaTable::from_schema(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EntityType {
    Node,
    Relationship,
}

impl fmt::Display for EntityType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Node => "Node",
            Self::Relationship => "Relationship",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemaRow {
    pub index: usize,
    pub entity_type: EntityType,
    pub entity_name: String,
    pub cypher_pattern: String,
    pub property: String,
}

/// One row per (entity, property) pair: node classes first, then
/// relationship classes, each in schema order with sorted properties. An
/// entity without properties gets one row with an empty property cell.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemaTable {
    pub rows: Vec<SchemaRow>,
}

fn listed(properties: &[String]) -> Vec<&str> {
    if properties.is_empty() {
        vec![""]
    } else {
        properties.iter().map(String::as_str).collect()
    }
}

impl SchemaTable {
    pub fn from_schema(schema: &Schema) -> Self {
        let mut rows = Vec::new();
        for class in &schema.node_classes {
            let pattern = format!("(:{})", class.label);
            for prop in listed(&class.properties) {
                rows.push(SchemaRow {
                    index: rows.len(),
                    entity_type: EntityType::Node,
                    entity_name: class.label.clone(),
                    cypher_pattern: pattern.clone(),
                    property: prop.to_owned(),
                });
            }
        }
        for class in &schema.rel_classes {
            let pattern = class.cypher_pattern();
            for prop in listed(&class.properties) {
                rows.push(SchemaRow {
                    index: rows.len(),
                    entity_type: EntityType::Relationship,
                    entity_name: class.name.clone(),
                    cypher_pattern: pattern.clone(),
                    property: prop.to_owned(),
                });
            }
        }
        Self { rows }
    }

    /// Markdown-style five-column table. Empty tables render as an empty string.
    pub fn to_text(&self) -> String {
        if self.rows.is_empty() {
            return String::new();
        }
        let mut out =
            String::from("| # | Entity Type | Entity Name | Cypher Pattern | Property |\n|---|---|---|---|---|\n");
        for row in &self.rows {
            let _ = writeln!(
                out,
                "| {} | {} | {} | {} | {} |",
                row.index, row.entity_type, row.entity_name, row.cypher_pattern, row.property
            );
        }
        out
    }
}

impl fmt::Display for SchemaTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}
