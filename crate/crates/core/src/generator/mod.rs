//! Seeded generation of random property graphs with non-semantic names.

mod config;
mod dictionary;

use std::collections::{BTreeSet, HashSet};
use std::ops::RangeInclusive;

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use config::{GeneratorConfig, Preset};
pub use dictionary::{Dictionary, DICTIONARY_ENV};

use crate::graph::{
    GraphBuilder, NodeClass, NodeId, Properties, PropertyGraph, PropertyValue, RelClass, Schema, SchemaTable,
    ValueKind, KEY_PROPERTY,
};
use crate::seed::stage_rng;

/// Consecutive rejections after which label sampling gives up.
pub const MAX_LABEL_REJECTIONS: usize = 10_000;

/// Attempts at drawing relationship-class endpoints that admit a two-step
/// class-level chain before accepting whatever was drawn last.
const MAX_ENDPOINT_DRAWS: usize = 1_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeneratorError {
    #[error("invalid generator config: {0}")]
    InvalidConfig(String),
    #[error("dictionary is empty")]
    EmptyDictionary,
    #[error("cannot read dictionary: {0}")]
    DictionaryIo(String),
    #[error("no non-dictionary label of length {min}..={max} after {MAX_LABEL_REJECTIONS} draws")]
    LabelExhausted { min: usize, max: usize },
    #[error(transparent)]
    Graph(#[from] crate::graph::GraphError),
}

/// Draws a random lowercase alphabetic string with length in `length`,
/// rejecting dictionary words.
pub fn random_label<R: Rng + ?Sized>(
    rng: &mut R,
    length: RangeInclusive<usize>,
    dictionary: &Dictionary,
) -> Result<String, GeneratorError> {
    let (min, max) = (*length.start(), *length.end());
    for _ in 0..MAX_LABEL_REJECTIONS {
        let len = rng.random_range(min..=max);
        let word: String = (0..len).map(|_| char::from(b'a' + rng.random_range(0..26u8))).collect();
        if !dictionary.contains(&word) {
            return Ok(word);
        }
    }
    Err(GeneratorError::LabelExhausted { min, max })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertySpec {
    pub name: String,
    pub kind: ValueKind,
    pub pool: Vec<PropertyValue>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeClassSpec {
    pub label: String,
    pub properties: Vec<PropertySpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelClassSpec {
    pub name: String,
    pub source: String,
    pub target: String,
    pub properties: Vec<PropertySpec>,
}

/// Generated class structure together with the value pool of every property.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemaBlueprint {
    pub node_classes: Vec<NodeClassSpec>,
    pub rel_classes: Vec<RelClassSpec>,
}

impl SchemaBlueprint {
    /// Class-level schema; node classes gain the implicit `key` property.
    pub fn to_schema(&self) -> Schema {
        let sorted = |props: &[PropertySpec], extra: Option<&str>| {
            let mut names: Vec<String> = props.iter().map(|p| p.name.clone()).collect();
            names.extend(extra.map(str::to_owned));
            names.sort();
            names
        };
        Schema {
            node_classes: self
                .node_classes
                .iter()
                .map(|c| NodeClass { label: c.label.clone(), properties: sorted(&c.properties, Some(KEY_PROPERTY)) })
                .collect(),
            rel_classes: self
                .rel_classes
                .iter()
                .map(|c| RelClass {
                    name: c.name.clone(),
                    source: c.source.clone(),
                    target: c.target.clone(),
                    properties: sorted(&c.properties, None),
                })
                .collect(),
        }
    }

    pub fn render(&self) -> SchemaTable {
        self.to_schema().render()
    }
}

#[derive(Debug, Clone)]
pub struct GeneratedGraph {
    pub graph: PropertyGraph,
    pub blueprint: SchemaBlueprint,
}

/// Issues names that are non-words and pairwise distinct (ignoring case).
struct NameSource<'d> {
    dictionary: &'d Dictionary,
    length: RangeInclusive<usize>,
    used: HashSet<String>,
}

impl<'d> NameSource<'d> {
    fn new(dictionary: &'d Dictionary, config: &GeneratorConfig) -> Self {
        Self {
            dictionary,
            length: config.label_min_len..=config.label_max_len,
            used: HashSet::from([KEY_PROPERTY.to_owned()]),
        }
    }

    fn fresh<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<String, GeneratorError> {
        for _ in 0..MAX_LABEL_REJECTIONS {
            let name = random_label(rng, self.length.clone(), self.dictionary)?;
            if self.used.insert(name.clone()) {
                return Ok(name);
            }
        }
        Err(GeneratorError::LabelExhausted { min: *self.length.start(), max: *self.length.end() })
    }
}

fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(first) => first.to_ascii_uppercase().to_string() + chars.as_str(),
        None => String::new(),
    }
}

fn property_count<R: Rng + ?Sized>(rng: &mut R, avg: usize) -> usize {
    let lo = avg.saturating_sub(1);
    rng.random_range(lo..=avg + 1).max(1)
}

fn value_pool<R: Rng + ?Sized>(
    rng: &mut R,
    kind: ValueKind,
    size: usize,
    names: &mut NameSource<'_>,
) -> Result<Vec<PropertyValue>, GeneratorError> {
    match kind {
        ValueKind::Text => {
            let mut seen = BTreeSet::new();
            let mut pool = Vec::with_capacity(size);
            while pool.len() < size {
                let v = random_label(rng, names.length.clone(), names.dictionary)?;
                if seen.insert(v.clone()) {
                    pool.push(PropertyValue::Text(v));
                }
            }
            Ok(pool)
        }
        ValueKind::Number => {
            // distinct values in [0, 1000) with two decimals
            let mut seen = BTreeSet::new();
            let mut pool = Vec::with_capacity(size);
            while pool.len() < size {
                let cents: u32 = rng.random_range(0..100_000);
                if seen.insert(cents) {
                    pool.push(PropertyValue::Number(f64::from(cents) / 100.0));
                }
            }
            Ok(pool)
        }
    }
}

fn property_specs<R: Rng + ?Sized>(
    rng: &mut R,
    config: &GeneratorConfig,
    names: &mut NameSource<'_>,
) -> Result<Vec<PropertySpec>, GeneratorError> {
    let count = property_count(rng, config.avg_props_per_entity);
    let mut specs = Vec::with_capacity(count);
    for _ in 0..count {
        let name = names.fresh(rng)?;
        let kind = if rng.random_bool(config.numeric_property_fraction) { ValueKind::Number } else { ValueKind::Text };
        let pool = value_pool(rng, kind, config.values_per_property, names)?;
        specs.push(PropertySpec { name, kind, pool });
    }
    Ok(specs)
}

/// Whether some relationship class ends where another (or the same) begins.
fn has_two_step_chain(endpoints: &[(usize, usize)]) -> bool {
    endpoints.iter().any(|&(_, target)| endpoints.iter().any(|&(source, _)| source == target))
}

/// Draws the class structure and value pools.
///
/// Relationship-class endpoints are uniform over ordered class pairs,
/// conditioned on at least one two-step chain existing at class level; the
/// multi-hop templates are uninstantiable on schemas without one.
pub fn generate_blueprint<R: Rng + ?Sized>(
    config: &GeneratorConfig,
    dictionary: &Dictionary,
    rng: &mut R,
) -> Result<SchemaBlueprint, GeneratorError> {
    config.validate()?;
    let mut names = NameSource::new(dictionary, config);

    let mut node_classes = Vec::with_capacity(config.node_classes);
    for _ in 0..config.node_classes {
        let label = capitalize(&names.fresh(rng)?);
        let properties = property_specs(rng, config, &mut names)?;
        node_classes.push(NodeClassSpec { label, properties });
    }

    let mut endpoints = Vec::new();
    for _ in 0..MAX_ENDPOINT_DRAWS {
        endpoints = (0..config.rel_classes)
            .map(|_| (rng.random_range(0..config.node_classes), rng.random_range(0..config.node_classes)))
            .collect();
        if has_two_step_chain(&endpoints) {
            break;
        }
    }

    let mut rel_classes = Vec::with_capacity(config.rel_classes);
    for (source, target) in endpoints {
        let name = names.fresh(rng)?.to_ascii_uppercase();
        let properties = property_specs(rng, config, &mut names)?;
        rel_classes.push(RelClassSpec {
            name,
            source: node_classes[source].label.clone(),
            target: node_classes[target].label.clone(),
            properties,
        });
    }
    Ok(SchemaBlueprint { node_classes, rel_classes })
}

/// Generates a graph with the bundled (or environment-selected) dictionary.
pub fn generate_graph(config: &GeneratorConfig) -> Result<GeneratedGraph, GeneratorError> {
    generate_graph_with(config, Dictionary::standard()?)
}

/// Every (source, target) index pair of a `rows x cols` grid selected
/// independently with probability `p`, visited by geometric skipping so the
/// cost is proportional to the number of selected pairs.
fn bernoulli_pairs<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize, p: f64) -> Vec<(usize, usize)> {
    let total = rows * cols;
    if p <= 0.0 || total == 0 {
        return Vec::new();
    }
    if p >= 1.0 {
        return (0..total).map(|i| (i / cols, i % cols)).collect();
    }
    let log_q = (1.0 - p).ln();
    let mut picked = Vec::new();
    let mut index: usize = 0;
    let mut first = true;
    loop {
        let u: f64 = 1.0 - rng.random::<f64>();
        let skip = (u.ln() / log_q).floor();
        let step = if skip.is_finite() && skip < total as f64 { skip as usize } else { total };
        index = if first { step } else { index.saturating_add(step + 1) };
        first = false;
        if index >= total {
            return picked;
        }
        picked.push((index / cols, index % cols));
    }
}

pub fn generate_graph_with(
    config: &GeneratorConfig,
    dictionary: &Dictionary,
) -> Result<GeneratedGraph, GeneratorError> {
    config.validate()?;
    let blueprint = generate_blueprint(config, dictionary, &mut stage_rng(config.seed, "blueprint"))?;

    let mut structure = stage_rng(config.seed, "structure");
    let classes: Vec<usize> = (0..config.num_nodes).map(|_| structure.random_range(0..config.node_classes)).collect();
    let members: Vec<Vec<usize>> =
        (0..config.node_classes).map(|c| (0..config.num_nodes).filter(|&n| classes[n] == c).collect()).collect();
    let class_index = |label: &str| {
        blueprint.node_classes.iter().position(|c| c.label == label).expect("blueprint endpoints name its own classes")
    };
    let mut edges: Vec<(usize, usize, usize)> = Vec::new();
    for (rel_index, rel) in blueprint.rel_classes.iter().enumerate() {
        let sources = &members[class_index(&rel.source)];
        let targets = &members[class_index(&rel.target)];
        for (i, j) in bernoulli_pairs(&mut structure, sources.len(), targets.len(), config.edge_density) {
            if sources[i] != targets[j] {
                edges.push((rel_index, sources[i], targets[j]));
            }
        }
    }

    let mut key_rng = stage_rng(config.seed, "keys");
    let mut used_keys = HashSet::with_capacity(config.num_nodes);
    let mut keys = Vec::with_capacity(config.num_nodes);
    while keys.len() < config.num_nodes {
        let key = random_label(&mut key_rng, config.label_min_len..=config.label_max_len, dictionary)?;
        if used_keys.insert(key.clone()) {
            keys.push(key);
        }
    }

    let mut value_rng = stage_rng(config.seed, "properties");
    let mut draw = |specs: &[PropertySpec]| -> Properties {
        specs
            .iter()
            .map(|s| (s.name.clone(), s.pool.choose(&mut value_rng).expect("pools are non-empty").clone()))
            .collect()
    };

    let mut builder = GraphBuilder::with_schema(blueprint.to_schema());
    for (n, key) in keys.into_iter().enumerate() {
        let class = &blueprint.node_classes[classes[n]];
        let mut properties = draw(&class.properties);
        properties.insert(KEY_PROPERTY.to_owned(), PropertyValue::Text(key));
        builder.add_node(class.label.clone(), properties)?;
    }
    for (rel_index, source, target) in edges {
        let class = &blueprint.rel_classes[rel_index];
        let properties = draw(&class.properties);
        builder.add_relationship(class.name.clone(), NodeId(source as u32), NodeId(target as u32), properties)?;
    }
    Ok(GeneratedGraph { graph: builder.build(), blueprint })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::StageRng;
    use rand::SeedableRng;

    fn small(seed: u64) -> GeneratorConfig {
        GeneratorConfig { num_nodes: 30, seed, ..Preset::Paper100.config(seed) }
    }

    #[test]
    fn random_label_is_deterministic_and_non_word() {
        let dict = Dictionary::standard().unwrap();
        let a = random_label(&mut StageRng::seed_from_u64(7), 4..=8, dict).unwrap();
        let b = random_label(&mut StageRng::seed_from_u64(7), 4..=8, dict).unwrap();
        assert_eq!(a, b);
        assert!((4..=8).contains(&a.len()));
        assert!(a.chars().all(|c| c.is_ascii_lowercase()));
        assert!(!dict.contains(&a));
    }

    #[test]
    fn random_label_exhausts_on_total_dictionary() {
        let mut words = Vec::with_capacity(26usize.pow(4));
        for i in 0..26usize.pow(4) {
            let mut w = String::new();
            let mut x = i;
            for _ in 0..4 {
                w.push(char::from(b'a' + (x % 26) as u8));
                x /= 26;
            }
            words.push(w);
        }
        let dict = Dictionary::from_words(words).unwrap();
        let err = random_label(&mut StageRng::seed_from_u64(1), 4..=4, &dict).unwrap_err();
        assert_eq!(err, GeneratorError::LabelExhausted { min: 4, max: 4 });
    }

    #[test]
    fn blueprint_shape() {
        let dict = Dictionary::standard().unwrap();
        let config = Preset::Paper100.config(3);
        let bp = generate_blueprint(&config, dict, &mut StageRng::seed_from_u64(3)).unwrap();
        assert_eq!(bp.node_classes.len(), 4);
        assert_eq!(bp.rel_classes.len(), 2);
        let mut names: Vec<String> = bp.node_classes.iter().map(|c| c.label.to_lowercase()).collect();
        names.extend(bp.rel_classes.iter().map(|c| c.name.to_lowercase()));
        for c in &bp.node_classes {
            names.extend(c.properties.iter().map(|p| p.name.clone()));
            assert!((2..=4).contains(&c.properties.len()));
        }
        for c in &bp.rel_classes {
            names.extend(c.properties.iter().map(|p| p.name.clone()));
        }
        let distinct: HashSet<_> = names.iter().collect();
        assert_eq!(distinct.len(), names.len());
        assert!(names.iter().all(|n| !dict.contains(n)));
        for spec in bp.node_classes.iter().flat_map(|c| &c.properties) {
            assert_eq!(spec.pool.len(), 5);
            assert!(spec.pool.iter().all(|v| v.kind() == spec.kind));
        }
        assert_eq!(bp, generate_blueprint(&config, dict, &mut StageRng::seed_from_u64(3)).unwrap());
    }

    #[test]
    fn single_class_blueprint_is_self_referential() {
        let dict = Dictionary::standard().unwrap();
        let config = GeneratorConfig { node_classes: 1, rel_classes: 1, ..small(5) };
        let bp = generate_blueprint(&config, dict, &mut StageRng::seed_from_u64(5)).unwrap();
        assert_eq!(bp.rel_classes[0].source, bp.rel_classes[0].target);
    }

    #[test]
    fn graph_is_deterministic_and_conforms() {
        let config = Preset::Paper100.config(11);
        let a = generate_graph(&config).unwrap();
        let b = generate_graph(&config).unwrap();
        let dump_a = serde_json::to_string(&a.graph.to_dump()).unwrap();
        assert_eq!(dump_a, serde_json::to_string(&b.graph.to_dump()).unwrap());
        let g = &a.graph;
        assert_eq!(g.nodes().len(), 100);
        assert!(!g.relationships().is_empty());
        for rel in g.relationships() {
            assert_ne!(rel.source, rel.target);
            let s = &g.node(rel.source).unwrap().label;
            let t = &g.node(rel.target).unwrap().label;
            assert!(g.schema().allows(&rel.rel_type, s, t));
            let spec = a.blueprint.rel_classes.iter().find(|c| c.name == rel.rel_type).unwrap();
            for p in &spec.properties {
                assert!(p.pool.contains(&rel.properties[&p.name]));
            }
        }
        for node in g.nodes() {
            let spec = a.blueprint.node_classes.iter().find(|c| c.label == node.label).unwrap();
            assert_eq!(node.properties.len(), spec.properties.len() + 1);
            for p in &spec.properties {
                assert!(p.pool.contains(&node.properties[&p.name]));
            }
        }
    }

    #[test]
    fn zero_density_has_no_edges() {
        let config = GeneratorConfig { edge_density: 0.0, ..small(2) };
        assert!(generate_graph(&config).unwrap().graph.relationships().is_empty());
    }

    #[test]
    fn full_density_connects_every_eligible_pair() {
        let config = GeneratorConfig { edge_density: 1.0, rel_classes: 1, ..small(2) };
        let out = generate_graph(&config).unwrap();
        let rel = &out.blueprint.rel_classes[0];
        let s = out.graph.nodes_with_label(&rel.source).count();
        let t = out.graph.nodes_with_label(&rel.target).count();
        let expected = if rel.source == rel.target { s * (s - 1) } else { s * t };
        assert_eq!(out.graph.relationships().len(), expected);
    }

    #[test]
    fn bernoulli_pairs_are_in_range_and_sorted() {
        let mut rng = StageRng::seed_from_u64(4);
        let pairs = bernoulli_pairs(&mut rng, 40, 50, 0.1);
        assert!(pairs.windows(2).all(|w| w[0] < w[1]));
        assert!(pairs.iter().all(|&(i, j)| i < 40 && j < 50));
        // 2000 pairs at p = 0.1: mean 200, sd ~13.4
        assert!((150..=250).contains(&pairs.len()), "{}", pairs.len());
    }

    #[test]
    fn class_assignment_is_uniform() {
        // chi-square with 3 degrees of freedom; reject beyond mean + 3 sd
        let threshold = 3.0 + 3.0 * 6.0f64.sqrt();
        for seed in 0..4 {
            let config = GeneratorConfig {
                num_nodes: 10_000,
                edge_density: 0.0,
                avg_props_per_entity: 1,
                values_per_property: 1,
                ..Preset::Paper100.config(seed)
            };
            let g = generate_graph(&config).unwrap().graph;
            let expected = 10_000.0 / 4.0;
            let chi2: f64 = g
                .schema()
                .labels()
                .map(|l| {
                    let observed = g.nodes_with_label(l).count() as f64;
                    (observed - expected).powi(2) / expected
                })
                .sum();
            assert!(chi2 < threshold, "seed {seed}: chi2 = {chi2}");
        }
    }
}
