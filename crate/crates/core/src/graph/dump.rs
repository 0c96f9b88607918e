use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{GraphBuilder, GraphError, NodeId, Properties, PropertyGraph, PropertyValue, Schema, KEY_PROPERTY};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub key: String,
    pub label: String,
    /// Properties other than `key`.
    pub properties: Properties,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelRecord {
    #[serde(rename = "type")]
    pub rel_type: String,
    pub source: String,
    pub target: String,
    pub properties: Properties,
}

/// JSON fixture form of a graph. Nodes and relationships appear in id order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphDump {
    pub schema: Schema,
    pub nodes: Vec<NodeRecord>,
    pub relationships: Vec<RelRecord>,
}

impl GraphDump {
    pub fn from_graph(graph: &PropertyGraph) -> Self {
        let nodes = graph
            .nodes()
            .iter()
            .map(|n| NodeRecord {
                key: n.key().to_owned(),
                label: n.label.clone(),
                properties: n
                    .properties
                    .iter()
                    .filter(|(k, _)| k.as_str() != KEY_PROPERTY)
                    .map(|(k, v)| (k.clone(), v.clone()))
                    .collect(),
            })
            .collect();
        let relationships = graph
            .relationships()
            .iter()
            .map(|r| RelRecord {
                rel_type: r.rel_type.clone(),
                source: graph.nodes()[r.source.index()].key().to_owned(),
                target: graph.nodes()[r.target.index()].key().to_owned(),
                properties: r.properties.clone(),
            })
            .collect();
        Self { schema: graph.schema().clone(), nodes, relationships }
    }

    pub fn into_graph(self) -> Result<PropertyGraph, GraphError> {
        let mut builder = GraphBuilder::with_schema(self.schema);
        let mut ids = std::collections::HashMap::new();
        for node in self.nodes {
            let mut properties = node.properties;
            properties.insert(KEY_PROPERTY.to_owned(), PropertyValue::Text(node.key.clone()));
            let id = builder.add_node(node.label, properties)?;
            ids.insert(node.key, id);
        }
        let lookup = |key: &str| -> Result<NodeId, GraphError> {
            ids.get(key).copied().ok_or_else(|| GraphError::NodeNotFound(key.to_owned()))
        };
        for rel in self.relationships {
            let source = lookup(&rel.source)?;
            let target = lookup(&rel.target)?;
            builder.add_relationship(rel.rel_type, source, target, rel.properties)?;
        }
        Ok(builder.build())
    }
}

fn write_props(out: &mut String, properties: &Properties, skip_key: bool) {
    out.push('{');
    let mut first = true;
    for (name, value) in properties {
        if skip_key && name == KEY_PROPERTY {
            continue;
        }
        if !first {
            out.push_str(", ");
        }
        first = false;
        let rendered = match value {
            PropertyValue::Text(s) => serde_json::to_string(s).expect("strings serialize"),
            PropertyValue::Number(x) => x.to_string(),
        };
        let _ = write!(out, "{name}: {rendered}");
    }
    out.push('}');
}

pub(super) fn to_lines(graph: &PropertyGraph) -> String {
    let mut out = String::new();
    let mut nodes: Vec<_> = graph.nodes().iter().collect();
    nodes.sort_by(|a, b| a.key().cmp(b.key()));
    for node in nodes {
        let _ = write!(out, "NODE {} :{} ", node.key(), node.label);
        write_props(&mut out, &node.properties, true);
        out.push('\n');
    }
    let key = |id: NodeId| graph.nodes()[id.index()].key();
    let mut rels: Vec<_> = graph.relationships().iter().collect();
    rels.sort_by(|a, b| {
        (key(a.source), key(a.target), &a.rel_type, a.id).cmp(&(key(b.source), key(b.target), &b.rel_type, b.id))
    });
    for rel in rels {
        let _ = write!(out, "REL :{} ({})->({}) ", rel.rel_type, key(rel.source), key(rel.target));
        write_props(&mut out, &rel.properties, false);
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::super::{props, Properties};
    use super::*;

    fn sample() -> PropertyGraph {
        let mut b = PropertyGraph::builder();
        let z = b.add_node("A", props([("key", "zz"), ("p", "x")])).unwrap();
        let a = b.add_node("B", props([("key", "aa")])).unwrap();
        let mut p = Properties::new();
        p.insert("w".into(), PropertyValue::Number(2.5));
        b.add_relationship("R", z, a, p).unwrap();
        b.build()
    }

    #[test]
    fn line_format() {
        let text = sample().to_lines();
        assert_eq!(text, "NODE aa :B {}\nNODE zz :A {p: \"x\"}\nREL :R (zz)->(aa) {w: 2.5}\n");
    }

    #[test]
    fn json_dump_reloads_identically() {
        let g = sample();
        let json = serde_json::to_string(&g.to_dump()).unwrap();
        let back: GraphDump = serde_json::from_str(&json).unwrap();
        let g2 = back.into_graph().unwrap();
        assert_eq!(serde_json::to_string(&g2.to_dump()).unwrap(), json);
        assert_eq!(g2.to_lines(), g.to_lines());
    }
}
