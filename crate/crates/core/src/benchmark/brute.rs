use std::collections::BTreeSet;

use super::answer::{canonical_number, canonical_property, record, GoldAnswer, Record};
use super::{BenchmarkError, Query};
use crate::graph::{Node, PropertyGraph, Relationship};

pub const BRUTE_FORCE_MAX_RELATIONSHIPS: usize = 2_000;

/// Reference oracle by exhaustive enumeration over the raw node and
/// relationship lists: every relationship tuple, every trail.
///
/// Shares no traversal code with [`super::gold_answer`] and exists to
/// cross-check it.
pub fn brute_force_gold(query: &Query, graph: &PropertyGraph) -> Result<GoldAnswer, BenchmarkError> {
    let rels = graph.relationships();
    if rels.len() > BRUTE_FORCE_MAX_RELATIONSHIPS {
        return Err(BenchmarkError::GuardExceeded { relationships: rels.len(), limit: BRUTE_FORCE_MAX_RELATIONSHIPS });
    }
    let nodes = graph.nodes();
    let label_of = |i: usize| nodes[i].label.as_str();
    let key_of = |i: usize| nodes[i].key().to_owned();
    let src = |r: &Relationship| r.source.index();
    let dst = |r: &Relationship| r.target.index();
    let has_edge_to = |a: usize, label: &str| rels.iter().any(|r| src(r) == a && label_of(dst(r)) == label);

    let mut out: BTreeSet<Record> = BTreeSet::new();
    match query {
        Query::NodeCount { source_label, target_label } => {
            let mut count = 0usize;
            for a in 0..nodes.len() {
                if label_of(a) == source_label && has_edge_to(a, target_label) {
                    count += 1;
                }
            }
            if count > 0 {
                out.insert(record([("count", canonical_number(count as f64))]));
            }
        }
        Query::RelationshipCount { rel_type } => {
            let count = rels.iter().filter(|r| r.rel_type == *rel_type).count();
            if count > 0 {
                out.insert(record([("count", canonical_number(count as f64))]));
            }
        }
        Query::NodeWithMostRelationships { source_label, rel_type } => {
            let counts: Vec<(usize, usize)> = (0..nodes.len())
                .filter(|&a| label_of(a) == source_label)
                .map(|a| (a, rels.iter().filter(|r| src(r) == a && r.rel_type == *rel_type).count()))
                .filter(|&(_, c)| c > 0)
                .collect();
            if let Some(max) = counts.iter().map(|&(_, c)| c).max() {
                for (a, c) in counts {
                    if c == max {
                        out.insert(record([("node_key", key_of(a)), ("rel_count", c.to_string())]));
                    }
                }
            }
        }
        Query::NodeByProperty { label, prop_name, prop_value } => {
            for (i, n) in nodes.iter().enumerate() {
                if n.label == *label && n.properties.get(prop_name) == Some(prop_value) {
                    out.insert(record([("node_key", key_of(i))]));
                }
            }
        }
        Query::RelationshipByProperty { rel_type, prop_name, prop_value } => {
            for r in rels {
                if r.rel_type == *rel_type && r.properties.get(prop_name) == Some(prop_value) {
                    out.insert(record([("source_key", key_of(src(r))), ("target_key", key_of(dst(r)))]));
                }
            }
        }
        Query::PathFinding { source_label, middle_label, target_label } => {
            for (i, r1) in rels.iter().enumerate() {
                for (j, r2) in rels.iter().enumerate() {
                    if i != j
                        && dst(r1) == src(r2)
                        && label_of(src(r1)) == source_label
                        && label_of(dst(r1)) == middle_label
                        && label_of(dst(r2)) == target_label
                    {
                        out.insert(record([
                            ("source_node_key", key_of(src(r1))),
                            ("target_node_key", key_of(dst(r2))),
                        ]));
                    }
                }
            }
        }
        Query::VariableHopPath { source_label, target_label, n } => {
            for a in (0..nodes.len()).filter(|&a| label_of(a) == source_label) {
                for_each_trail(rels, a, *n, &mut |end, len, used| {
                    if len >= 1
                        && label_of(end) == target_label
                        && rels.iter().enumerate().any(|(e, r)| src(r) == end && !used[e])
                    {
                        out.insert(record([("source_node_key", key_of(a)), ("target_node_key", key_of(end))]));
                    }
                });
            }
        }
        Query::PathFromSpecificNode { source_label, source_key, target_label, n } => {
            if let Some(a) = find_key(nodes, source_key).filter(|&a| label_of(a) == source_label) {
                for_each_trail(rels, a, *n, &mut |end, len, _| {
                    if len >= 1 && label_of(end) == target_label {
                        out.insert(record([("target_node_key", key_of(end))]));
                    }
                });
            }
        }
        Query::RemoteNodeProperty { source_label, source_key, target_label, prop_name, max_hops, .. } => {
            if let Some(a) = find_key(nodes, source_key).filter(|&a| label_of(a) == source_label) {
                for_each_trail(rels, a, *max_hops, &mut |end, len, _| {
                    let adjacent = rels.iter().any(|r| src(r) == a && dst(r) == end);
                    if len >= 2 && label_of(end) == target_label && !adjacent {
                        if let Some(v) = nodes[end].properties.get(prop_name) {
                            out.insert(record([("value", canonical_property(v))]));
                        }
                    }
                });
            }
        }
        Query::CompositionalIntersection { source_label, target1_label, target2_label } => {
            for a in 0..nodes.len() {
                if label_of(a) == source_label && has_edge_to(a, target1_label) && has_edge_to(a, target2_label) {
                    out.insert(record([("node_key", key_of(a))]));
                }
            }
        }
        Query::NegationWithConnection { source_label, positive_label, negative_label } => {
            for a in 0..nodes.len() {
                if label_of(a) == source_label && has_edge_to(a, positive_label) && !has_edge_to(a, negative_label) {
                    out.insert(record([("node_key", key_of(a))]));
                }
            }
        }
        Query::NegationOnRelProperty {
            source_label,
            source_prop_name,
            source_prop_value,
            rel_type,
            target_label,
            prop_name,
            val2,
        } => {
            for r in rels {
                let a = &nodes[src(r)];
                if a.label == *source_label
                    && a.properties.get(source_prop_name) == Some(source_prop_value)
                    && r.rel_type == *rel_type
                    && label_of(dst(r)) == target_label
                    && matches!(r.properties.get(prop_name), Some(v) if v != val2)
                {
                    out.insert(record([("node_key", key_of(src(r)))]));
                }
            }
        }
    }
    let template = query.template();
    Ok(GoldAnswer {
        mode: template.mode(),
        fields: template.fields().iter().map(|f| (*f).to_owned()).collect(),
        records: out,
    })
}

fn find_key(nodes: &[Node], key: &str) -> Option<usize> {
    nodes.iter().position(|n| n.key() == key)
}

/// Calls `visit(end, length, used)` for every trail (no relationship used
/// twice) of length `0..=max_len` starting at `start`.
fn for_each_trail(rels: &[Relationship], start: usize, max_len: usize, visit: &mut dyn FnMut(usize, usize, &[bool])) {
    fn walk(
        rels: &[Relationship],
        at: usize,
        len: usize,
        max_len: usize,
        used: &mut Vec<bool>,
        visit: &mut dyn FnMut(usize, usize, &[bool]),
    ) {
        visit(at, len, used);
        if len == max_len {
            return;
        }
        for (e, r) in rels.iter().enumerate() {
            if r.source.index() == at && !used[e] {
                used[e] = true;
                walk(rels, r.target.index(), len + 1, max_len, used, visit);
                used[e] = false;
            }
        }
    }
    let mut used = vec![false; rels.len()];
    walk(rels, start, 0, max_len, &mut used, visit);
}

#[cfg(test)]
mod tests {
    use super::super::gold_answer;
    use super::*;
    use crate::graph::{props, GraphBuilder, Properties, PropertyValue};

    fn chain() -> PropertyGraph {
        let mut b = GraphBuilder::default();
        let x = b.add_node("S", props([("key", "x")])).unwrap();
        let y = b.add_node("M", props([("key", "y")])).unwrap();
        let z = b.add_node("T", props([("key", "z")])).unwrap();
        b.add_relationship("R", x, y, Properties::new()).unwrap();
        b.add_relationship("R", y, z, Properties::new()).unwrap();
        b.build()
    }

    fn keys(g: &GoldAnswer, field: &str) -> Vec<String> {
        g.records.iter().map(|r| r[field].clone()).collect()
    }

    #[test]
    fn node_count_example() {
        let mut b = GraphBuilder::default();
        let a1 = b.add_node("S", props([("key", "a1")])).unwrap();
        b.add_node("S", props([("key", "a2")])).unwrap();
        let b1 = b.add_node("T", props([("key", "b1")])).unwrap();
        b.add_relationship("R", a1, b1, Properties::new()).unwrap();
        let g = b.build();
        let q = Query::NodeCount { source_label: "S".into(), target_label: "T".into() };
        let gold = gold_answer(&q, &g);
        assert_eq!(keys(&gold, "count"), ["1"]);
        assert_eq!(brute_force_gold(&q, &g).unwrap(), gold);
    }

    #[test]
    fn path_finding_chain() {
        let g = chain();
        let q = Query::PathFinding { source_label: "S".into(), middle_label: "M".into(), target_label: "T".into() };
        let gold = gold_answer(&q, &g);
        assert_eq!(gold.records.len(), 1);
        assert_eq!(keys(&gold, "source_node_key"), ["x"]);
        assert_eq!(keys(&gold, "target_node_key"), ["z"]);
        assert_eq!(brute_force_gold(&q, &g).unwrap(), gold);
    }

    #[test]
    fn single_node_lookup() {
        let mut b = GraphBuilder::default();
        b.add_node("A", props([("key", "solo"), ("p", "v")])).unwrap();
        let g = b.build();
        let q = Query::NodeByProperty {
            label: "A".into(),
            prop_name: "p".into(),
            prop_value: PropertyValue::Text("v".into()),
        };
        assert_eq!(keys(&gold_answer(&q, &g), "node_key"), ["solo"]);
        assert_eq!(brute_force_gold(&q, &g).unwrap(), gold_answer(&q, &g));
    }

    #[test]
    fn variable_hop_on_diamond_and_loops() {
        // a -> b, a -> c, b -> d, c -> d, d -> a, plus a self-loop on c
        let mut bld = GraphBuilder::default();
        let ids: Vec<_> =
            ["a", "b", "c", "d"].iter().map(|k| bld.add_node("N", props([("key", *k)])).unwrap()).collect();
        for (s, t) in [(0, 1), (0, 2), (1, 3), (2, 3), (3, 0), (2, 2)] {
            bld.add_relationship("R", ids[s], ids[t], Properties::new()).unwrap();
        }
        let g = bld.build();
        for n in 1..=4 {
            let q = Query::VariableHopPath { source_label: "N".into(), target_label: "N".into(), n };
            assert_eq!(brute_force_gold(&q, &g).unwrap(), gold_answer(&q, &g), "n = {n}");
        }
    }

    #[test]
    fn single_self_loop_cannot_take_another_step() {
        let mut bld = GraphBuilder::default();
        let a = bld.add_node("N", props([("key", "a")])).unwrap();
        bld.add_relationship("R", a, a, Properties::new()).unwrap();
        let g = bld.build();
        let q = Query::VariableHopPath { source_label: "N".into(), target_label: "N".into(), n: 3 };
        assert!(gold_answer(&q, &g).is_empty());
        assert!(brute_force_gold(&q, &g).unwrap().is_empty());
        let q = Query::PathFinding { source_label: "N".into(), middle_label: "N".into(), target_label: "N".into() };
        assert!(gold_answer(&q, &g).is_empty());
        assert!(brute_force_gold(&q, &g).unwrap().is_empty());
    }

    #[test]
    fn guard() {
        let mut b = GraphBuilder::default();
        let a = b.add_node("N", props([("key", "a")])).unwrap();
        for _ in 0..=BRUTE_FORCE_MAX_RELATIONSHIPS {
            b.add_relationship("R", a, a, Properties::new()).unwrap();
        }
        let g = b.build();
        let q = Query::RelationshipCount { rel_type: "R".into() };
        assert!(matches!(brute_force_gold(&q, &g), Err(BenchmarkError::GuardExceeded { .. })));
    }
}
