//! The twelve query templates: instantiation against a graph, question
//! text, and two independent ground-truth oracles.

mod answer;
mod brute;
mod gold;
mod instantiate;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use answer::{canonical_json, canonical_number, canonical_property, CompareMode, GoldAnswer, Record};
pub use brute::{brute_force_gold, BRUTE_FORCE_MAX_RELATIONSHIPS};
pub use gold::gold_answer;
pub use instantiate::{instantiate, instantiate_all, TemplateConfig};

use crate::graph::{GraphError, PropertyValue, ValueKind};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BenchmarkError {
    #[error("template {0} not instantiable on this graph")]
    NotInstantiable(QueryTemplate),
    #[error("brute-force oracle limited to {limit} relationships, graph has {relationships}")]
    GuardExceeded { relationships: usize, limit: usize },
    #[error("unknown template {0:?}")]
    UnknownTemplate(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryTemplate {
    NodeCount,
    RelationshipCount,
    NodeWithMostRelationships,
    NodeByProperty,
    RelationshipByProperty,
    PathFinding,
    VariableHopPath,
    PathFromSpecificNode,
    RemoteNodeProperty,
    CompositionalIntersection,
    NegationWithConnection,
    NegationOnRelProperty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    RetrievalAggregation,
    PathTraversal,
    LogicalComposition,
}

impl Category {
    pub const ALL: [Category; 3] = [Self::RetrievalAggregation, Self::PathTraversal, Self::LogicalComposition];

    pub fn title(self) -> &'static str {
        match self {
            Self::RetrievalAggregation => "Retrieval & Aggregation",
            Self::PathTraversal => "Path & Relational Traversal",
            Self::LogicalComposition => "Complex Logical Composition",
        }
    }
}

impl QueryTemplate {
    pub const ALL: [QueryTemplate; 12] = [
        Self::NodeCount,
        Self::RelationshipCount,
        Self::NodeWithMostRelationships,
        Self::NodeByProperty,
        Self::RelationshipByProperty,
        Self::PathFinding,
        Self::VariableHopPath,
        Self::PathFromSpecificNode,
        Self::RemoteNodeProperty,
        Self::CompositionalIntersection,
        Self::NegationWithConnection,
        Self::NegationOnRelProperty,
    ];

    /// Row label used in per-template reports.
    pub fn title(self) -> &'static str {
        match self {
            Self::NodeCount => "Node Count",
            Self::RelationshipCount => "Relationship Count",
            Self::NodeWithMostRelationships => "Node with Most Relationships",
            Self::NodeByProperty => "Node by Property",
            Self::RelationshipByProperty => "Relationship by Property",
            Self::PathFinding => "Path Finding",
            Self::VariableHopPath => "Variable Hop Path",
            Self::PathFromSpecificNode => "Path from Specific Node",
            Self::RemoteNodeProperty => "Remote Node Property",
            Self::CompositionalIntersection => "Compositional Intersection",
            Self::NegationWithConnection => "Negation with Connection",
            Self::NegationOnRelProperty => "Negation on Rel Property",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::NodeCount => "node_count",
            Self::RelationshipCount => "relationship_count",
            Self::NodeWithMostRelationships => "node_with_most_relationships",
            Self::NodeByProperty => "node_by_property",
            Self::RelationshipByProperty => "relationship_by_property",
            Self::PathFinding => "path_finding",
            Self::VariableHopPath => "variable_hop_path",
            Self::PathFromSpecificNode => "path_from_specific_node",
            Self::RemoteNodeProperty => "remote_node_property",
            Self::CompositionalIntersection => "compositional_intersection",
            Self::NegationWithConnection => "negation_with_connection",
            Self::NegationOnRelProperty => "negation_on_rel_property",
        }
    }

    pub fn category(self) -> Category {
        use QueryTemplate::*;
        match self {
            NodeCount | RelationshipCount | NodeWithMostRelationships | NodeByProperty | RelationshipByProperty => {
                Category::RetrievalAggregation
            }
            PathFinding | VariableHopPath | PathFromSpecificNode | RemoteNodeProperty => Category::PathTraversal,
            CompositionalIntersection | NegationWithConnection | NegationOnRelProperty => Category::LogicalComposition,
        }
    }

    pub fn mode(self) -> CompareMode {
        match self {
            Self::NodeCount | Self::RelationshipCount => CompareMode::SingleCount,
            Self::NodeWithMostRelationships => CompareMode::ArgmaxMembership,
            Self::RemoteNodeProperty => CompareMode::ValueMembership,
            _ => CompareMode::ExactSet,
        }
    }

    /// Output record fields, in schema order.
    pub fn fields(self) -> &'static [&'static str] {
        use QueryTemplate::*;
        match self {
            NodeCount | RelationshipCount => &["count"],
            NodeWithMostRelationships => &["node_key", "rel_count"],
            NodeByProperty | CompositionalIntersection | NegationWithConnection | NegationOnRelProperty => {
                &["node_key"]
            }
            RelationshipByProperty => &["source_key", "target_key"],
            PathFinding | VariableHopPath => &["source_node_key", "target_node_key"],
            PathFromSpecificNode => &["target_node_key"],
            RemoteNodeProperty => &["value"],
        }
    }
}

impl fmt::Display for QueryTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for QueryTemplate {
    type Err = BenchmarkError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.into_iter().find(|t| t.name() == s).ok_or_else(|| BenchmarkError::UnknownTemplate(s.to_owned()))
    }
}

/// A template with every slot filled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "template", rename_all = "snake_case")]
pub enum Query {
    NodeCount {
        source_label: String,
        target_label: String,
    },
    RelationshipCount {
        rel_type: String,
    },
    NodeWithMostRelationships {
        source_label: String,
        rel_type: String,
    },
    NodeByProperty {
        label: String,
        prop_name: String,
        prop_value: PropertyValue,
    },
    RelationshipByProperty {
        rel_type: String,
        prop_name: String,
        prop_value: PropertyValue,
    },
    PathFinding {
        source_label: String,
        middle_label: String,
        target_label: String,
    },
    VariableHopPath {
        source_label: String,
        target_label: String,
        n: usize,
    },
    PathFromSpecificNode {
        source_label: String,
        source_key: String,
        target_label: String,
        n: usize,
    },
    RemoteNodeProperty {
        source_label: String,
        source_key: String,
        target_label: String,
        prop_name: String,
        prop_kind: ValueKind,
        max_hops: usize,
    },
    CompositionalIntersection {
        source_label: String,
        target1_label: String,
        target2_label: String,
    },
    NegationWithConnection {
        source_label: String,
        positive_label: String,
        negative_label: String,
    },
    NegationOnRelProperty {
        source_label: String,
        source_prop_name: String,
        source_prop_value: PropertyValue,
        rel_type: String,
        target_label: String,
        prop_name: String,
        val2: PropertyValue,
    },
}

impl Query {
    pub fn template(&self) -> QueryTemplate {
        match self {
            Self::NodeCount { .. } => QueryTemplate::NodeCount,
            Self::RelationshipCount { .. } => QueryTemplate::RelationshipCount,
            Self::NodeWithMostRelationships { .. } => QueryTemplate::NodeWithMostRelationships,
            Self::NodeByProperty { .. } => QueryTemplate::NodeByProperty,
            Self::RelationshipByProperty { .. } => QueryTemplate::RelationshipByProperty,
            Self::PathFinding { .. } => QueryTemplate::PathFinding,
            Self::VariableHopPath { .. } => QueryTemplate::VariableHopPath,
            Self::PathFromSpecificNode { .. } => QueryTemplate::PathFromSpecificNode,
            Self::RemoteNodeProperty { .. } => QueryTemplate::RemoteNodeProperty,
            Self::CompositionalIntersection { .. } => QueryTemplate::CompositionalIntersection,
            Self::NegationWithConnection { .. } => QueryTemplate::NegationWithConnection,
            Self::NegationOnRelProperty { .. } => QueryTemplate::NegationOnRelProperty,
        }
    }

    /// JSON shape the answer must follow, as shown to the agent.
    pub fn output_schema(&self) -> String {
        match self {
            Self::NodeCount { .. } | Self::RelationshipCount { .. } => r#"[{"count": "number"}]"#.into(),
            Self::NodeWithMostRelationships { .. } => r#"[{"node_key": "string", "rel_count": "number"}]"#.into(),
            Self::NodeByProperty { .. }
            | Self::CompositionalIntersection { .. }
            | Self::NegationWithConnection { .. }
            | Self::NegationOnRelProperty { .. } => r#"[{"node_key": "string"}]"#.into(),
            Self::RelationshipByProperty { .. } => r#"[{"source_key": "string", "target_key": "string"}]"#.into(),
            Self::PathFinding { .. } | Self::VariableHopPath { .. } => {
                r#"[{"source_node_key": "string", "target_node_key": "string"}]"#.into()
            }
            Self::PathFromSpecificNode { .. } => r#"[{"target_node_key": "string"}]"#.into(),
            Self::RemoteNodeProperty { prop_kind, .. } => {
                let kind = match prop_kind {
                    ValueKind::Text => "string",
                    ValueKind::Number => "number",
                };
                format!(r#"[{{"value": "{kind}"}}]"#)
            }
        }
    }

    pub fn question_text(&self) -> String {
        let schema = self.output_schema();
        match self {
            Self::NodeCount { source_label, target_label } => format!(
                "Count the number of \"{source_label}\" nodes that are connected to any \"{target_label}\" node. \
                 Return ONLY the output with the count in JSON format: {schema}."
            ),
            Self::RelationshipCount { rel_type } => format!(
                "How many relationships of type \"{rel_type}\" exist? \
                 Return ONLY the output with the count in JSON format: {schema}."
            ),
            Self::NodeWithMostRelationships { source_label, rel_type } => format!(
                "Which \"{source_label}\" node has the most outgoing \"{rel_type}\" relationships? \
                 Return ONLY ONE answer in JSON format as per the schema: {schema}."
            ),
            Self::NodeByProperty { label, prop_name, prop_value } => format!(
                "Find all \"{label}\" nodes where \"{prop_name}\" is \"{prop_value}\". \
                 Return results in JSON format according to the schema: {schema}."
            ),
            Self::RelationshipByProperty { rel_type, prop_name, prop_value } => format!(
                "Find all \"{rel_type}\" relationships where \"{prop_name}\" is \"{prop_value}\". \
                 Return results in JSON format based on the schema: {schema}."
            ),
            Self::PathFinding { source_label, middle_label, target_label } => format!(
                "Find all paths from \"{source_label}\" to \"{target_label}\" through \"{middle_label}\". \
                 Return results in JSON format as per schema: {schema}."
            ),
            Self::VariableHopPath { source_label, target_label, n } => format!(
                "Find all paths where a \"{source_label}\" node reaches a \"{target_label}\" node in 1 to {n} steps, \
                 then takes one more step to any other node. \
                 Return the keys of the source and target nodes in JSON format as per schema: {schema}."
            ),
            Self::PathFromSpecificNode { source_key, target_label, n, .. } => format!(
                "Find all paths of 1 to {n} steps from the node with key \"{source_key}\" to any node of type \
                 \"{target_label}\". Return the keys of the target nodes found in JSON format: {schema}."
            ),
            Self::RemoteNodeProperty { source_label, source_key, target_label, prop_name, .. } => format!(
                "From a \"{source_label}\" node with key \"{source_key}\" find a \"{target_label}\" node that is not \
                 a direct neighbor but is reachable in 2 or more hops, and return its \"{prop_name}\". \
                 ANY valid node's property will be accepted. Return ONLY ONE answer in JSON format: {schema}."
            ),
            Self::CompositionalIntersection { source_label, target1_label, target2_label } => format!(
                "Find all nodes of type \"{source_label}\" that have a relationship to at least one \
                 \"{target1_label}\" node AND at least one \"{target2_label}\" node. \
                 Return the keys of these \"{source_label}\" nodes in JSON in this format: {schema}."
            ),
            Self::NegationWithConnection { source_label, positive_label, negative_label } => format!(
                "Find all nodes of type \"{source_label}\" that are connected to at least one \"{positive_label}\" \
                 node AND are not connected to any \"{negative_label}\" node. \
                 Return their keys in JSON in this format: {schema}."
            ),
            Self::NegationOnRelProperty {
                source_label,
                source_prop_name,
                source_prop_value,
                rel_type,
                target_label,
                prop_name,
                val2,
            } => format!(
                "Find all \"{source_label}\" nodes where \"{source_prop_name}\" is \"{source_prop_value}\". \
                 From those, find the ones connected to a \"{target_label}\" node by a \"{rel_type}\" relationship \
                 where the relationship's \"{prop_name}\" is not \"{val2}\". \
                 Return the keys of the source nodes in JSON in this format: {schema}."
            ),
        }
    }
}

/// A query together with the text shown to the agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryInstance {
    pub query: Query,
    pub question_text: String,
    pub output_schema: String,
}

impl QueryInstance {
    pub fn new(query: Query) -> Self {
        Self { question_text: query.question_text(), output_schema: query.output_schema(), query }
    }

    pub fn template(&self) -> QueryTemplate {
        self.query.template()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn template_names_round_trip() {
        for t in QueryTemplate::ALL {
            assert_eq!(t.name().parse::<QueryTemplate>().unwrap(), t);
            assert_eq!(serde_json::to_value(t).unwrap(), t.name());
        }
        assert!("nope".parse::<QueryTemplate>().is_err());
    }

    #[test]
    fn category_sizes() {
        let count = |c| QueryTemplate::ALL.iter().filter(|t| t.category() == c).count();
        assert_eq!(
            (
                count(Category::RetrievalAggregation),
                count(Category::PathTraversal),
                count(Category::LogicalComposition)
            ),
            (5, 4, 3)
        );
    }

    #[test]
    fn question_text_embeds_schema() {
        let q = Query::NodeCount { source_label: "Cevaz".into(), target_label: "Egodpw".into() };
        assert_eq!(
            q.question_text(),
            "Count the number of \"Cevaz\" nodes that are connected to any \"Egodpw\" node. \
             Return ONLY the output with the count in JSON format: [{\"count\": \"number\"}]."
        );
        let q = Query::RemoteNodeProperty {
            source_label: "A".into(),
            source_key: "k".into(),
            target_label: "B".into(),
            prop_name: "p".into(),
            prop_kind: ValueKind::Number,
            max_hops: 3,
        };
        assert!(q.question_text().ends_with("JSON format: [{\"value\": \"number\"}]."));
    }

    #[test]
    fn instance_json_round_trip() {
        let inst = QueryInstance::new(Query::NodeByProperty {
            label: "A".into(),
            prop_name: "p".into(),
            prop_value: PropertyValue::Number(2.5),
        });
        let json = serde_json::to_string(&inst).unwrap();
        assert!(json.contains("\"template\":\"node_by_property\""));
        assert_eq!(serde_json::from_str::<QueryInstance>(&json).unwrap(), inst);
    }
}
