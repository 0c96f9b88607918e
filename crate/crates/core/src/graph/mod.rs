//! In-memory directed property multigraph and the primitive queries the
//! tools and the ground-truth oracle are built on.

mod dump;
mod schema;
mod value;

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use dump::{GraphDump, NodeRecord, RelRecord};
pub use schema::{EntityType, NodeClass, RelClass, Schema, SchemaRow, SchemaTable};
pub use value::{PropertyValue, ValueKind};

/// Name of the property every node carries, unique graph-wide.
pub const KEY_PROPERTY: &str = "key";

pub type Properties = BTreeMap<String, PropertyValue>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("node not found: {0}")]
    NodeNotFound(String),
    #[error("every node needs a non-empty text `key` property")]
    MissingKey,
    #[error("duplicate node key {0:?}")]
    DuplicateKey(String),
    #[error("invalid property value: {0}")]
    InvalidValue(String),
    #[error("unknown label {label:?}; valid labels: {}", valid.join(", "))]
    UnknownLabel { label: String, valid: Vec<String> },
    #[error("relationship {rel_type:?} from {source_label:?} to {target_label:?} does not match any schema relationship class")]
    SchemaViolation { rel_type: String, source_label: String, target_label: String },
    #[error("unknown {entity_type} {name:?}; valid options: {}", valid.join(", "))]
    UnknownEntity { name: String, entity_type: EntityType, valid: Vec<String> },
    #[error("unknown entity type {0:?}; valid options: node, relationship")]
    UnknownEntityType(String),
    #[error("invalid hop range {min}..{max}; need 1 <= min <= max")]
    InvalidHopRange { min: usize, max: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RelId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl RelId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: NodeId,
    pub label: String,
    pub properties: Properties,
}

impl Node {
    pub fn key(&self) -> &str {
        self.properties.get(KEY_PROPERTY).and_then(PropertyValue::as_text).expect("nodes always carry a text key")
    }

    pub fn property(&self, name: &str) -> Option<&PropertyValue> {
        self.properties.get(name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Relationship {
    pub id: RelId,
    pub rel_type: String,
    pub source: NodeId,
    pub target: NodeId,
    pub properties: Properties,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Outgoing,
    Incoming,
}

/// One incident relationship seen from a node.
#[derive(Debug, Clone, Copy)]
pub struct Neighbor<'g> {
    pub relationship: &'g Relationship,
    pub node: &'g Node,
    pub direction: Direction,
}

/// Case-insensitive `node` / `relationship`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EntityKind(pub EntityType);

impl FromStr for EntityKind {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "node" => Ok(Self(EntityType::Node)),
            "relationship" => Ok(Self(EntityType::Relationship)),
            _ => Err(GraphError::UnknownEntityType(s.to_owned())),
        }
    }
}

type PropertyIndexKey = (String, String, PropertyValue);

/// Immutable labeled property multigraph with key, label and property indexes.
#[derive(Debug, Clone)]
pub struct PropertyGraph {
    schema: Schema,
    nodes: Vec<Node>,
    rels: Vec<Relationship>,
    out_adj: Vec<Vec<RelId>>,
    in_adj: Vec<Vec<RelId>>,
    key_index: HashMap<String, NodeId>,
    property_index: HashMap<PropertyIndexKey, Vec<NodeId>>,
    label_index: BTreeMap<String, Vec<NodeId>>,
    rel_type_index: BTreeMap<String, Vec<RelId>>,
}

impl PropertyGraph {
    pub fn builder() -> GraphBuilder {
        GraphBuilder::default()
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn relationships(&self) -> &[Relationship] {
        &self.rels
    }

    pub fn node(&self, id: NodeId) -> Option<&Node> {
        self.nodes.get(id.index())
    }

    pub fn relationship(&self, id: RelId) -> &Relationship {
        &self.rels[id.index()]
    }

    pub fn node_by_key(&self, key: &str) -> Option<&Node> {
        self.key_index.get(key).map(|id| &self.nodes[id.index()])
    }

    /// Nodes carrying `label`, in id order.
    pub fn nodes_with_label(&self, label: &str) -> impl Iterator<Item = &Node> + '_ {
        self.label_index.get(label).into_iter().flatten().map(move |id| &self.nodes[id.index()])
    }

    pub fn relationships_of_type(&self, rel_type: &str) -> impl Iterator<Item = &Relationship> + '_ {
        self.rel_type_index.get(rel_type).into_iter().flatten().map(move |id| &self.rels[id.index()])
    }

    pub fn outgoing(&self, id: NodeId) -> impl Iterator<Item = &Relationship> + '_ {
        self.out_adj[id.index()].iter().map(move |r| &self.rels[r.index()])
    }

    pub fn incoming(&self, id: NodeId) -> impl Iterator<Item = &Relationship> + '_ {
        self.in_adj[id.index()].iter().map(move |r| &self.rels[r.index()])
    }

    pub fn out_degree(&self, id: NodeId) -> usize {
        self.out_adj[id.index()].len()
    }

    pub fn has_label(&self, label: &str) -> bool {
        self.label_index.contains_key(label) || self.schema.node_class(label).is_some()
    }

    fn require_node(&self, id: NodeId) -> Result<&Node, GraphError> {
        self.node(id).ok_or_else(|| GraphError::NodeNotFound(format!("#{}", id.0)))
    }

    /// Every node with `label` whose `property` equals `value` exactly,
    /// ordered by key. Unknown labels or properties yield an empty list.
    pub fn nodes_by_property(&self, label: &str, property: &str, value: &PropertyValue) -> Vec<&Node> {
        let index_key = (label.to_owned(), property.to_owned(), value.clone());
        self.property_index
            .get(&index_key)
            .map(|ids| ids.iter().map(|id| &self.nodes[id.index()]).collect())
            .unwrap_or_default()
    }

    /// Incident relationships of `id`: outgoing first, then incoming, each
    /// by relationship id. A self-loop shows up once in each direction.
    pub fn neighbors(&self, id: NodeId) -> Result<Vec<Neighbor<'_>>, GraphError> {
        self.require_node(id)?;
        let out = self.out_adj[id.index()].iter().map(|r| {
            let rel = &self.rels[r.index()];
            Neighbor { relationship: rel, node: &self.nodes[rel.target.index()], direction: Direction::Outgoing }
        });
        let inc = self.in_adj[id.index()].iter().map(|r| {
            let rel = &self.rels[r.index()];
            Neighbor { relationship: rel, node: &self.nodes[rel.source.index()], direction: Direction::Incoming }
        });
        Ok(out.chain(inc).collect())
    }

    /// Sorted distinct values of `property` over all entities of one class.
    pub fn unique_property_values(
        &self,
        property: &str,
        entity_name: &str,
        entity_type: &str,
    ) -> Result<Vec<PropertyValue>, GraphError> {
        let EntityKind(kind) = entity_type.parse()?;
        let values: BTreeSet<&PropertyValue> = match kind {
            EntityType::Node => {
                if !self.has_label(entity_name) {
                    return Err(self.unknown_entity(entity_name, kind));
                }
                self.nodes_with_label(entity_name).filter_map(|n| n.properties.get(property)).collect()
            }
            EntityType::Relationship => {
                if !self.rel_type_index.contains_key(entity_name) && self.schema.rel_class(entity_name).is_none() {
                    return Err(self.unknown_entity(entity_name, kind));
                }
                self.relationships_of_type(entity_name).filter_map(|r| r.properties.get(property)).collect()
            }
        };
        Ok(values.into_iter().cloned().collect())
    }

    fn unknown_entity(&self, name: &str, entity_type: EntityType) -> GraphError {
        let valid = match entity_type {
            EntityType::Node => self.labels(),
            EntityType::Relationship => self.rel_types(),
        };
        GraphError::UnknownEntity { name: name.to_owned(), entity_type, valid }
    }

    /// All labels in the schema followed by any extra labels present on nodes.
    pub fn labels(&self) -> Vec<String> {
        let mut labels: Vec<String> = self.schema.labels().map(str::to_owned).collect();
        for label in self.label_index.keys() {
            if !labels.contains(label) {
                labels.push(label.clone());
            }
        }
        labels
    }

    pub fn rel_types(&self) -> Vec<String> {
        let mut types: Vec<String> = Vec::new();
        for t in self.schema.rel_types() {
            if !types.iter().any(|x| x == t) {
                types.push(t.to_owned());
            }
        }
        for t in self.rel_type_index.keys() {
            if !types.contains(t) {
                types.push(t.clone());
            }
        }
        types
    }

    /// Type of `property` on a node label or relationship type, from the
    /// first entity that carries it.
    pub fn property_kind(&self, entity_name: &str, property: &str) -> Option<ValueKind> {
        self.nodes_with_label(entity_name)
            .find_map(|n| n.properties.get(property))
            .or_else(|| self.relationships_of_type(entity_name).find_map(|r| r.properties.get(property)))
            .map(PropertyValue::kind)
    }

    /// Nodes reachable from `start` by a directed walk over relationships of
    /// any type whose length lies in `min_hops..=max_hops`, optionally
    /// restricted to `target_label`.
    ///
    /// Computed level by level: level `d` is the set of nodes at the end of
    /// some length-`d` walk. With `min_hops == 1` this coincides with
    /// variable-length path semantics, since a shortest walk never repeats
    /// a relationship.
    pub fn reachable_within(
        &self,
        start: NodeId,
        min_hops: usize,
        max_hops: usize,
        target_label: Option<&str>,
    ) -> Result<BTreeSet<NodeId>, GraphError> {
        self.require_node(start)?;
        if min_hops == 0 || min_hops > max_hops {
            return Err(GraphError::InvalidHopRange { min: min_hops, max: max_hops });
        }
        let mut found = BTreeSet::new();
        let mut frontier: BTreeSet<NodeId> = BTreeSet::from([start]);
        for depth in 1..=max_hops {
            let next: BTreeSet<NodeId> = frontier.iter().flat_map(|&n| self.outgoing(n).map(|r| r.target)).collect();
            if depth >= min_hops {
                found.extend(next.iter().copied());
            }
            if next.is_empty() {
                break;
            }
            frontier = next;
        }
        if let Some(label) = target_label {
            found.retain(|id| self.nodes[id.index()].label == label);
        }
        Ok(found)
    }

    pub fn to_dump(&self) -> GraphDump {
        GraphDump::from_graph(self)
    }

    /// Line-oriented text serialization: one `NODE` line per node, then one
    /// `REL` line per relationship, both sorted by key.
    pub fn to_lines(&self) -> String {
        dump::to_lines(self)
    }
}

/// Incremental constructor that enforces key uniqueness and, when a schema
/// is supplied, label and relationship-class conformance.
#[derive(Debug, Default)]
pub struct GraphBuilder {
    schema: Option<Schema>,
    nodes: Vec<Node>,
    rels: Vec<Relationship>,
    keys: HashSet<String>,
}

impl GraphBuilder {
    pub fn with_schema(schema: Schema) -> Self {
        Self { schema: Some(schema), ..Self::default() }
    }

    pub fn add_node(&mut self, label: impl Into<String>, properties: Properties) -> Result<NodeId, GraphError> {
        let label = label.into();
        if let Some(schema) = &self.schema {
            if schema.node_class(&label).is_none() {
                return Err(GraphError::UnknownLabel { label, valid: schema.labels().map(str::to_owned).collect() });
            }
        }
        let key = match properties.get(KEY_PROPERTY) {
            Some(PropertyValue::Text(k)) if !k.is_empty() => k.clone(),
            _ => return Err(GraphError::MissingKey),
        };
        for value in properties.values() {
            value.validate()?;
        }
        if !self.keys.insert(key.clone()) {
            return Err(GraphError::DuplicateKey(key));
        }
        let id = NodeId(self.nodes.len() as u32);
        self.nodes.push(Node { id, label, properties });
        Ok(id)
    }

    pub fn add_relationship(
        &mut self,
        rel_type: impl Into<String>,
        source: NodeId,
        target: NodeId,
        properties: Properties,
    ) -> Result<RelId, GraphError> {
        let rel_type = rel_type.into();
        let node_label = |id: NodeId| {
            self.nodes
                .get(id.index())
                .map(|n| n.label.clone())
                .ok_or_else(|| GraphError::NodeNotFound(format!("#{}", id.0)))
        };
        let source_label = node_label(source)?;
        let target_label = node_label(target)?;
        if let Some(schema) = &self.schema {
            if !schema.allows(&rel_type, &source_label, &target_label) {
                return Err(GraphError::SchemaViolation { rel_type, source_label, target_label });
            }
        }
        for value in properties.values() {
            value.validate()?;
        }
        let id = RelId(self.rels.len() as u32);
        self.rels.push(Relationship { id, rel_type, source, target, properties });
        Ok(id)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn build(self) -> PropertyGraph {
        let schema = match self.schema {
            Some(s) => s,
            None => infer_schema(&self.nodes, &self.rels),
        };
        let n = self.nodes.len();
        let mut out_adj = vec![Vec::new(); n];
        let mut in_adj = vec![Vec::new(); n];
        let mut rel_type_index: BTreeMap<String, Vec<RelId>> = BTreeMap::new();
        for rel in &self.rels {
            out_adj[rel.source.index()].push(rel.id);
            in_adj[rel.target.index()].push(rel.id);
            rel_type_index.entry(rel.rel_type.clone()).or_default().push(rel.id);
        }
        let mut key_index = HashMap::with_capacity(n);
        let mut label_index: BTreeMap<String, Vec<NodeId>> = BTreeMap::new();
        let mut property_index: HashMap<PropertyIndexKey, Vec<NodeId>> = HashMap::new();
        for node in &self.nodes {
            key_index.insert(node.key().to_owned(), node.id);
            label_index.entry(node.label.clone()).or_default().push(node.id);
            for (prop, value) in &node.properties {
                property_index.entry((node.label.clone(), prop.clone(), value.clone())).or_default().push(node.id);
            }
        }
        for ids in property_index.values_mut() {
            ids.sort_by(|a, b| self.nodes[a.index()].key().cmp(self.nodes[b.index()].key()));
        }
        PropertyGraph {
            schema,
            nodes: self.nodes,
            rels: self.rels,
            out_adj,
            in_adj,
            key_index,
            property_index,
            label_index,
            rel_type_index,
        }
    }
}

/// Schema implied by the graph contents, in first-appearance order.
fn infer_schema(nodes: &[Node], rels: &[Relationship]) -> Schema {
    let mut schema = Schema::default();
    for node in nodes {
        let class = match schema.node_classes.iter_mut().find(|c| c.label == node.label) {
            Some(c) => c,
            None => {
                schema.node_classes.push(NodeClass { label: node.label.clone(), properties: Vec::new() });
                schema.node_classes.last_mut().unwrap()
            }
        };
        for prop in node.properties.keys() {
            if !class.properties.contains(prop) {
                class.properties.push(prop.clone());
            }
        }
    }
    for rel in rels {
        let source = &nodes[rel.source.index()].label;
        let target = &nodes[rel.target.index()].label;
        let class = match schema
            .rel_classes
            .iter_mut()
            .find(|c| c.name == rel.rel_type && &c.source == source && &c.target == target)
        {
            Some(c) => c,
            None => {
                schema.rel_classes.push(RelClass {
                    name: rel.rel_type.clone(),
                    source: source.clone(),
                    target: target.clone(),
                    properties: Vec::new(),
                });
                schema.rel_classes.last_mut().unwrap()
            }
        };
        for prop in rel.properties.keys() {
            if !class.properties.contains(prop) {
                class.properties.push(prop.clone());
            }
        }
    }
    for c in &mut schema.node_classes {
        c.properties.sort();
    }
    for c in &mut schema.rel_classes {
        c.properties.sort();
    }
    schema
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Outgoing => "outgoing",
            Self::Incoming => "incoming",
        })
    }
}

/// Builds a property map from `(name, value)` pairs.
pub fn props<I, K, V>(pairs: I) -> Properties
where
    I: IntoIterator<Item = (K, V)>,
    K: Into<String>,
    V: Into<PropertyValue>,
{
    pairs.into_iter().map(|(k, v)| (k.into(), v.into())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// k1:{A, p=x}, k2:{A, p=y}, k3:{B, p=x}
    fn g1() -> GraphBuilder {
        let mut b = PropertyGraph::builder();
        b.add_node("A", props([("key", "k1"), ("p", "x")])).unwrap();
        b.add_node("A", props([("key", "k2"), ("p", "y")])).unwrap();
        b.add_node("B", props([("key", "k3"), ("p", "x")])).unwrap();
        b
    }

    fn keys(nodes: &[&Node]) -> Vec<String> {
        nodes.iter().map(|n| n.key().to_owned()).collect()
    }

    #[test]
    fn nodes_by_property_matches_exactly() {
        let g = g1().build();
        assert_eq!(keys(&g.nodes_by_property("A", "p", &"x".into())), ["k1"]);
        assert!(g.nodes_by_property("A", "p", &"zzz".into()).is_empty());
        assert_eq!(keys(&g.nodes_by_property("B", "p", &"x".into())), ["k3"]);
        assert!(g.nodes_by_property("A", "p", &"X".into()).is_empty());
        assert!(g.nodes_by_property("Nope", "p", &"x".into()).is_empty());
        assert!(g.nodes_by_property("A", "nope", &"x".into()).is_empty());
    }

    #[test]
    fn duplicate_and_missing_keys_are_rejected() {
        let mut b = g1();
        assert_eq!(b.add_node("A", props([("key", "k1")])), Err(GraphError::DuplicateKey("k1".into())));
        assert_eq!(b.add_node("A", props([("p", "q")])), Err(GraphError::MissingKey));
    }

    #[test]
    fn neighbors_single_edge() {
        let mut b = g1();
        b.add_relationship("R", NodeId(0), NodeId(2), Properties::new()).unwrap();
        let g = b.build();
        let n = g.neighbors(NodeId(0)).unwrap();
        assert_eq!(n.len(), 1);
        assert_eq!(n[0].node.key(), "k3");
        assert_eq!(n[0].direction, Direction::Outgoing);
        assert_eq!(n[0].relationship.rel_type, "R");
        assert!(g.neighbors(NodeId(1)).unwrap().is_empty());
        assert!(matches!(g.neighbors(NodeId(9)), Err(GraphError::NodeNotFound(_))));
    }

    #[test]
    fn neighbors_both_directions() {
        let mut b = g1();
        b.add_relationship("R", NodeId(0), NodeId(2), Properties::new()).unwrap();
        b.add_relationship("R", NodeId(2), NodeId(0), Properties::new()).unwrap();
        let g = b.build();
        let n = g.neighbors(NodeId(0)).unwrap();
        assert_eq!(n.len(), 2);
        assert_eq!(n[0].direction, Direction::Outgoing);
        assert_eq!(n[1].direction, Direction::Incoming);
        assert!(n.iter().all(|x| x.node.key() == "k3"));
    }

    #[test]
    fn unique_values_per_class() {
        let g = g1().build();
        assert_eq!(
            g.unique_property_values("p", "A", "node").unwrap(),
            vec!["x".into(), "y".into()] as Vec<PropertyValue>
        );
        assert_eq!(g.unique_property_values("p", "B", "Node").unwrap(), vec![PropertyValue::from("x")]);
        assert!(g.unique_property_values("nothing", "A", "NODE").unwrap().is_empty());
        let err = g.unique_property_values("p", "C", "node").unwrap_err();
        assert!(err.to_string().contains("A, B"), "{err}");
        assert!(matches!(g.unique_property_values("p", "A", "edge"), Err(GraphError::UnknownEntityType(_))));
    }

    fn labelled_chain(labels: &[&str], edges: &[(usize, usize)]) -> PropertyGraph {
        let mut b = PropertyGraph::builder();
        for (i, l) in labels.iter().enumerate() {
            b.add_node(*l, props([("key", format!("n{i}"))])).unwrap();
        }
        for &(s, t) in edges {
            b.add_relationship("R", NodeId(s as u32), NodeId(t as u32), Properties::new()).unwrap();
        }
        b.build()
    }

    #[test]
    fn reachable_chain_and_diamond() {
        let chain = labelled_chain(&["A", "B", "C"], &[(0, 1), (1, 2)]);
        assert_eq!(chain.reachable_within(NodeId(0), 1, 2, Some("C")).unwrap(), BTreeSet::from([NodeId(2)]));
        let ab = labelled_chain(&["A", "B"], &[(0, 1)]);
        assert!(ab.reachable_within(NodeId(0), 2, 2, Some("B")).unwrap().is_empty());
        let diamond = labelled_chain(&["A", "B", "C", "D"], &[(0, 1), (0, 2), (1, 3), (2, 3)]);
        assert_eq!(diamond.reachable_within(NodeId(0), 1, 2, Some("D")).unwrap(), BTreeSet::from([NodeId(3)]));
        assert!(matches!(diamond.reachable_within(NodeId(0), 0, 2, None), Err(GraphError::InvalidHopRange { .. })));
        assert!(diamond.reachable_within(NodeId(7), 1, 2, None).is_err());
    }

    #[test]
    fn schema_conformance_is_enforced() {
        let schema = Schema {
            node_classes: vec![
                NodeClass { label: "A".into(), properties: vec!["key".into()] },
                NodeClass { label: "B".into(), properties: vec!["key".into()] },
            ],
            rel_classes: vec![RelClass {
                name: "R".into(),
                source: "A".into(),
                target: "B".into(),
                properties: vec![],
            }],
        };
        let mut b = GraphBuilder::with_schema(schema);
        let a = b.add_node("A", props([("key", "a")])).unwrap();
        let bb = b.add_node("B", props([("key", "b")])).unwrap();
        assert!(b.add_node("C", props([("key", "c")])).is_err());
        assert!(b.add_relationship("R", a, bb, Properties::new()).is_ok());
        assert!(matches!(b.add_relationship("R", bb, a, Properties::new()), Err(GraphError::SchemaViolation { .. })));
    }

    #[test]
    fn inferred_schema_lists_sorted_properties() {
        let g = g1().build();
        assert_eq!(g.schema().node_classes.len(), 2);
        assert_eq!(g.schema().node_classes[0].properties, ["key", "p"]);
    }
}
