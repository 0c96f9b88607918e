use std::collections::BTreeSet;

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{gold_answer, BenchmarkError, Query, QueryInstance, QueryTemplate};
use crate::graph::{PropertyGraph, PropertyValue, RelClass, ValueKind, KEY_PROPERTY};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct TemplateConfig {
    /// `n` of the variable-hop and specific-node path templates.
    pub hop_bound: usize,
    /// Upper hop bound of the remote-property template.
    pub max_hops: usize,
    /// Parameter draws before a template is declared not instantiable.
    pub max_attempts: usize,
}

impl Default for TemplateConfig {
    fn default() -> Self {
        Self { hop_bound: 3, max_hops: 3, max_attempts: 100 }
    }
}

/// Draws parameters for `template` uniformly among schema-consistent
/// choices until the gold answer is non-empty.
pub fn instantiate<R: Rng + ?Sized>(
    template: QueryTemplate,
    graph: &PropertyGraph,
    rng: &mut R,
    config: &TemplateConfig,
) -> Result<QueryInstance, BenchmarkError> {
    let sampler = Sampler::new(graph, config);
    let found = if template == QueryTemplate::CompositionalIntersection {
        // distinct target labels first; the same label twice as a fallback
        sampler
            .sample_until(rng, |s, rng| s.draw_compositional(rng, true))
            .or_else(|| sampler.sample_until(rng, |s, rng| s.draw_compositional(rng, false)))
    } else {
        sampler.sample_until(rng, |s, rng| s.draw(template, rng))
    };
    found.map(QueryInstance::new).ok_or(BenchmarkError::NotInstantiable(template))
}

/// One instance per template, in template order.
pub fn instantiate_all<R: Rng + ?Sized>(
    graph: &PropertyGraph,
    rng: &mut R,
    config: &TemplateConfig,
) -> Result<Vec<QueryInstance>, BenchmarkError> {
    QueryTemplate::ALL.into_iter().map(|t| instantiate(t, graph, rng, config)).collect()
}

fn remote_sources(graph: &PropertyGraph, max_hops: usize) -> Vec<(String, String, Vec<String>)> {
    if max_hops < 2 {
        return Vec::new();
    }
    graph
        .nodes()
        .iter()
        .filter(|n| graph.out_degree(n.id) > 0)
        .filter_map(|n| {
            let direct: BTreeSet<_> = graph.outgoing(n.id).map(|r| r.target).collect();
            let remote = graph.reachable_within(n.id, 2, max_hops, None).ok()?;
            let labels = dedup(
                remote
                    .iter()
                    .filter(|id| !direct.contains(id))
                    .filter_map(|&id| graph.node(id))
                    .map(|m| m.label.clone()),
            );
            (!labels.is_empty()).then(|| (n.label.clone(), n.key().to_owned(), labels))
        })
        .collect()
}

struct Sampler<'g> {
    graph: &'g PropertyGraph,
    config: &'g TemplateConfig,
    labels: Vec<String>,
    /// Distinct (source, target) label pairs of relationship classes.
    endpoint_pairs: Vec<(String, String)>,
    sources: Vec<String>,
    targets: Vec<String>,
    /// Nodes with at least one outgoing relationship, by key.
    emitters: Vec<(String, String)>,
    /// Nodes with some node 2..=max_hops steps away that is not a direct
    /// successor: (label, key, labels of those remote nodes).
    remote_sources: Vec<(String, String, Vec<String>)>,
}

impl<'g> Sampler<'g> {
    fn new(graph: &'g PropertyGraph, config: &'g TemplateConfig) -> Self {
        let schema = graph.schema();
        let pairs: BTreeSet<(String, String)> =
            schema.rel_classes.iter().map(|r| (r.source.clone(), r.target.clone())).collect();
        let endpoint_pairs: Vec<_> = pairs.into_iter().collect();
        let sources = dedup(endpoint_pairs.iter().map(|(s, _)| s.clone()));
        let targets = dedup(endpoint_pairs.iter().map(|(_, t)| t.clone()));
        let emitters = graph
            .nodes()
            .iter()
            .filter(|n| graph.out_degree(n.id) > 0)
            .map(|n| (n.label.clone(), n.key().to_owned()))
            .collect();
        let remote_sources = remote_sources(graph, config.max_hops);
        Self { graph, config, labels: graph.labels(), endpoint_pairs, sources, targets, emitters, remote_sources }
    }

    fn sample_until<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        mut draw: impl FnMut(&Self, &mut R) -> Option<Query>,
    ) -> Option<Query> {
        for _ in 0..self.config.max_attempts {
            let query = draw(self, rng)?;
            if !gold_answer(&query, self.graph).is_empty() {
                return Some(query);
            }
        }
        None
    }

    /// Data properties of a node label, or `key` when there are none.
    fn node_properties(&self, label: &str) -> Vec<String> {
        let data = self.graph.schema().data_properties(label);
        if data.is_empty() {
            vec![KEY_PROPERTY.to_owned()]
        } else {
            data.into_iter().map(str::to_owned).collect()
        }
    }

    fn node_values(&self, label: &str, property: &str) -> Vec<PropertyValue> {
        self.graph.unique_property_values(property, label, "node").unwrap_or_default()
    }

    fn rel_values(&self, rel_type: &str, property: &str) -> Vec<PropertyValue> {
        self.graph.unique_property_values(property, rel_type, "relationship").unwrap_or_default()
    }

    fn rel_classes_with_properties(&self) -> Vec<&'g RelClass> {
        self.graph.schema().rel_classes.iter().filter(|r| !r.properties.is_empty()).collect()
    }

    fn targets_of(&self, source: &str) -> Vec<String> {
        dedup(self.endpoint_pairs.iter().filter(|(s, _)| s == source).map(|(_, t)| t.clone()))
    }

    fn draw<R: Rng + ?Sized>(&self, template: QueryTemplate, rng: &mut R) -> Option<Query> {
        let rel_classes = &self.graph.schema().rel_classes;
        let hop_bound = self.config.hop_bound;
        Some(match template {
            QueryTemplate::NodeCount => {
                let (s, t) = self.endpoint_pairs.choose(rng)?.clone();
                Query::NodeCount { source_label: s, target_label: t }
            }
            QueryTemplate::RelationshipCount => {
                Query::RelationshipCount { rel_type: rel_classes.choose(rng)?.name.clone() }
            }
            QueryTemplate::NodeWithMostRelationships => {
                let r = rel_classes.choose(rng)?;
                Query::NodeWithMostRelationships { source_label: r.source.clone(), rel_type: r.name.clone() }
            }
            QueryTemplate::NodeByProperty => {
                let label = self.graph.schema().node_classes.choose(rng)?.label.clone();
                let prop = self.node_properties(&label).choose(rng)?.clone();
                let value = self.node_values(&label, &prop).choose(rng)?.clone();
                Query::NodeByProperty { label, prop_name: prop, prop_value: value }
            }
            QueryTemplate::RelationshipByProperty => {
                let r = *self.rel_classes_with_properties().choose(rng)?;
                let prop = r.properties.choose(rng)?.clone();
                let value = self.rel_values(&r.name, &prop).choose(rng)?.clone();
                Query::RelationshipByProperty { rel_type: r.name.clone(), prop_name: prop, prop_value: value }
            }
            QueryTemplate::PathFinding => {
                let chains: Vec<&RelClass> =
                    rel_classes.iter().filter(|r| rel_classes.iter().any(|n| n.source == r.target)).collect();
                let first = *chains.choose(rng)?;
                let follow: Vec<&RelClass> = rel_classes.iter().filter(|r| r.source == first.target).collect();
                let second = follow.choose(rng)?;
                Query::PathFinding {
                    source_label: first.source.clone(),
                    middle_label: first.target.clone(),
                    target_label: second.target.clone(),
                }
            }
            QueryTemplate::VariableHopPath => Query::VariableHopPath {
                source_label: self.sources.choose(rng)?.clone(),
                target_label: self.targets.choose(rng)?.clone(),
                n: hop_bound,
            },
            QueryTemplate::PathFromSpecificNode => {
                let (label, key) = self.emitters.choose(rng)?.clone();
                Query::PathFromSpecificNode {
                    source_label: label,
                    source_key: key,
                    target_label: self.labels.choose(rng)?.clone(),
                    n: hop_bound,
                }
            }
            QueryTemplate::RemoteNodeProperty => {
                let (label, key, remote_labels) = self.remote_sources.choose(rng)?.clone();
                let target = remote_labels.choose(rng)?.clone();
                let prop = self.node_properties(&target).choose(rng)?.clone();
                let kind = self.graph.property_kind(&target, &prop).unwrap_or(ValueKind::Text);
                Query::RemoteNodeProperty {
                    source_label: label,
                    source_key: key,
                    target_label: target,
                    prop_name: prop,
                    prop_kind: kind,
                    max_hops: self.config.max_hops,
                }
            }
            QueryTemplate::CompositionalIntersection => return self.draw_compositional(rng, false),
            QueryTemplate::NegationWithConnection => {
                let source = self.sources.choose(rng)?.clone();
                let positive = self.targets_of(&source).choose(rng)?.clone();
                let others: Vec<&String> = self.labels.iter().filter(|l| **l != positive).collect();
                let negative = (*others.choose(rng)?).clone();
                Query::NegationWithConnection {
                    source_label: source,
                    positive_label: positive,
                    negative_label: negative,
                }
            }
            QueryTemplate::NegationOnRelProperty => {
                let r = *self.rel_classes_with_properties().choose(rng)?;
                let source_prop = self.node_properties(&r.source).choose(rng)?.clone();
                let source_value = self.node_values(&r.source, &source_prop).choose(rng)?.clone();
                let prop = r.properties.choose(rng)?.clone();
                let val2 = self.rel_values(&r.name, &prop).choose(rng)?.clone();
                Query::NegationOnRelProperty {
                    source_label: r.source.clone(),
                    source_prop_name: source_prop,
                    source_prop_value: source_value,
                    rel_type: r.name.clone(),
                    target_label: r.target.clone(),
                    prop_name: prop,
                    val2,
                }
            }
        })
    }

    /// Source label plus two of its relationship targets, either distinct
    /// labels or one label repeated.
    fn draw_compositional<R: Rng + ?Sized>(&self, rng: &mut R, distinct: bool) -> Option<Query> {
        let mut candidates = Vec::new();
        for s in &self.sources {
            let targets = self.targets_of(s);
            for (i, t1) in targets.iter().enumerate() {
                if distinct {
                    for t2 in &targets[i + 1..] {
                        candidates.push((s.clone(), t1.clone(), t2.clone()));
                    }
                } else {
                    candidates.push((s.clone(), t1.clone(), t1.clone()));
                }
            }
        }
        let (s, t1, t2) = candidates.choose(rng)?.clone();
        Some(Query::CompositionalIntersection { source_label: s, target1_label: t1, target2_label: t2 })
    }
}

fn dedup(items: impl Iterator<Item = String>) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for item in items {
        if !out.contains(&item) {
            out.push(item);
        }
    }
    out
}
