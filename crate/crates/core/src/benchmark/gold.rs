use std::collections::{BTreeMap, BTreeSet};

use super::answer::{canonical_number, canonical_property, record, GoldAnswer, Record};
use super::Query;
use crate::graph::{Node, NodeId, PropertyGraph};

/// Exact answer of `query`, computed with the graph's indexes.
///
/// Variable-length patterns follow relationship-uniqueness semantics:
/// a relationship appears at most once per matched path.
pub fn gold_answer(query: &Query, graph: &PropertyGraph) -> GoldAnswer {
    let template = query.template();
    let records = match query {
        Query::NodeCount { source_label, target_label } => {
            let count =
                graph.nodes_with_label(source_label).filter(|a| points_to_label(graph, a.id, target_label)).count();
            positive_count(count)
        }
        Query::RelationshipCount { rel_type } => positive_count(graph.relationships_of_type(rel_type).count()),
        Query::NodeWithMostRelationships { source_label, rel_type } => {
            let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
            for r in graph.relationships_of_type(rel_type) {
                let source = node(graph, r.source);
                if source.label == *source_label {
                    *counts.entry(source.key()).or_default() += 1;
                }
            }
            let max = counts.values().copied().max().unwrap_or(0);
            counts
                .into_iter()
                .filter(|&(_, c)| c == max)
                .map(|(k, c)| record([("node_key", k.to_owned()), ("rel_count", c.to_string())]))
                .collect()
        }
        Query::NodeByProperty { label, prop_name, prop_value } => {
            graph.nodes_by_property(label, prop_name, prop_value).into_iter().map(node_key).collect()
        }
        Query::RelationshipByProperty { rel_type, prop_name, prop_value } => graph
            .relationships_of_type(rel_type)
            .filter(|r| r.properties.get(prop_name) == Some(prop_value))
            .map(|r| {
                record([
                    ("source_key", node(graph, r.source).key().to_owned()),
                    ("target_key", node(graph, r.target).key().to_owned()),
                ])
            })
            .collect(),
        Query::PathFinding { source_label, middle_label, target_label } => {
            let mut out = BTreeSet::new();
            for b in graph.nodes_with_label(middle_label) {
                for r1 in graph.incoming(b.id).filter(|r| node(graph, r.source).label == *source_label) {
                    for r2 in graph.outgoing(b.id).filter(|r| node(graph, r.target).label == *target_label) {
                        if r1.id != r2.id {
                            out.insert(pair(graph, r1.source, r2.target, "source_node_key", "target_node_key"));
                        }
                    }
                }
            }
            out
        }
        Query::VariableHopPath { source_label, target_label, n } => {
            let mut out = BTreeSet::new();
            for a in graph.nodes_with_label(source_label) {
                let reach = graph.reachable_within(a.id, 1, *n, Some(target_label)).expect("valid node and range");
                for b in reach {
                    // A shortest path to b != a never leaves b, so any
                    // outgoing relationship of b extends it. A closed path
                    // back to a already used one of a's outgoing relationships.
                    let needed = if b == a.id { 2 } else { 1 };
                    if graph.out_degree(b) >= needed {
                        out.insert(pair(graph, a.id, b, "source_node_key", "target_node_key"));
                    }
                }
            }
            out
        }
        Query::PathFromSpecificNode { source_label, source_key, target_label, n } => {
            match graph.node_by_key(source_key).filter(|s| s.label == *source_label) {
                Some(source) => graph
                    .reachable_within(source.id, 1, *n, Some(target_label))
                    .expect("valid node and range")
                    .into_iter()
                    .map(|b| record([("target_node_key", node(graph, b).key().to_owned())]))
                    .collect(),
                None => BTreeSet::new(),
            }
        }
        Query::RemoteNodeProperty { source_label, source_key, target_label, prop_name, max_hops, .. } => {
            match graph.node_by_key(source_key).filter(|s| s.label == *source_label) {
                Some(source) if *max_hops >= 2 => {
                    let direct: BTreeSet<NodeId> = graph.outgoing(source.id).map(|r| r.target).collect();
                    graph
                        .reachable_within(source.id, 2, *max_hops, Some(target_label))
                        .expect("valid node and range")
                        .into_iter()
                        .filter(|b| !direct.contains(b))
                        .filter_map(|b| node(graph, b).property(prop_name))
                        .map(|v| record([("value", canonical_property(v))]))
                        .collect()
                }
                _ => BTreeSet::new(),
            }
        }
        Query::CompositionalIntersection { source_label, target1_label, target2_label } => graph
            .nodes_with_label(source_label)
            .filter(|a| points_to_label(graph, a.id, target1_label) && points_to_label(graph, a.id, target2_label))
            .map(node_key)
            .collect(),
        Query::NegationWithConnection { source_label, positive_label, negative_label } => graph
            .nodes_with_label(source_label)
            .filter(|a| points_to_label(graph, a.id, positive_label) && !points_to_label(graph, a.id, negative_label))
            .map(node_key)
            .collect(),
        Query::NegationOnRelProperty {
            source_label,
            source_prop_name,
            source_prop_value,
            rel_type,
            target_label,
            prop_name,
            val2,
        } => graph
            .nodes_by_property(source_label, source_prop_name, source_prop_value)
            .into_iter()
            .filter(|a| {
                graph.outgoing(a.id).any(|r| {
                    r.rel_type == *rel_type
                        && node(graph, r.target).label == *target_label
                        && r.properties.get(prop_name).is_some_and(|v| v != val2)
                })
            })
            .map(node_key)
            .collect(),
    };
    GoldAnswer { mode: template.mode(), fields: template.fields().iter().map(|f| (*f).to_owned()).collect(), records }
}

fn node(graph: &PropertyGraph, id: NodeId) -> &Node {
    graph.node(id).expect("relationship endpoints exist")
}

fn node_key(n: &Node) -> Record {
    record([("node_key", n.key().to_owned())])
}

fn pair(graph: &PropertyGraph, a: NodeId, b: NodeId, first: &str, second: &str) -> Record {
    record([(first, node(graph, a).key().to_owned()), (second, node(graph, b).key().to_owned())])
}

fn points_to_label(graph: &PropertyGraph, id: NodeId, label: &str) -> bool {
    graph.outgoing(id).any(|r| node(graph, r.target).label == label)
}

/// A count answer; zero counts count as "no answer" for instantiation.
fn positive_count(count: usize) -> BTreeSet<Record> {
    if count == 0 {
        BTreeSet::new()
    } else {
        BTreeSet::from([record([("count", canonical_number(count as f64))])])
    }
}
