use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::GeneratorError;

/// Parameters of one random property graph. Flat so it maps onto TOML keys
/// and CLI flags one-to-one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorConfig {
    pub num_nodes: usize,
    pub node_classes: usize,
    pub rel_classes: usize,
    pub avg_props_per_entity: usize,
    pub values_per_property: usize,
    /// Probability that an eligible (source, target) pair receives an edge
    /// of a given relationship class.
    pub edge_density: f64,
    pub label_min_len: usize,
    pub label_max_len: usize,
    pub numeric_property_fraction: f64,
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Preset::Paper100.config(0)
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<(), GeneratorError> {
        let bad = |msg: String| Err(GeneratorError::InvalidConfig(msg));
        if self.num_nodes == 0 || self.node_classes == 0 || self.rel_classes == 0 {
            return bad("num_nodes, node_classes and rel_classes must be >= 1".into());
        }
        if self.avg_props_per_entity == 0 || self.values_per_property == 0 {
            return bad("avg_props_per_entity and values_per_property must be >= 1".into());
        }
        if self.node_classes > self.num_nodes {
            return bad(format!("node_classes ({}) exceeds num_nodes ({})", self.node_classes, self.num_nodes));
        }
        if !(self.edge_density >= 0.0 && self.edge_density <= 1.0) {
            return bad(format!("edge_density must lie in [0, 1], got {}", self.edge_density));
        }
        if !(0.0..=1.0).contains(&self.numeric_property_fraction) {
            return bad(format!(
                "numeric_property_fraction must lie in [0, 1], got {}",
                self.numeric_property_fraction
            ));
        }
        if self.label_min_len == 0 || self.label_min_len > self.label_max_len {
            return bad(format!("label length range {}..={} is empty", self.label_min_len, self.label_max_len));
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Named experimental configurations.
///
/// `paper-100` is the primary setting (4 node classes, 2 relationship
/// classes, 3 properties per entity on average, 5 values per property). The
/// scaling presets use 8 node classes, 4 relationship classes, 6 properties
/// and 10 values per property.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Preset {
    #[serde(rename = "paper-100")]
    Paper100,
    #[serde(rename = "paper-150")]
    Paper150,
    #[serde(rename = "paper-200")]
    Paper200,
    #[serde(rename = "paper-500")]
    Paper500,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Self::Paper100, Self::Paper150, Self::Paper200, Self::Paper500];

    pub fn num_nodes(self) -> usize {
        match self {
            Self::Paper100 => 100,
            Self::Paper150 => 150,
            Self::Paper200 => 200,
            Self::Paper500 => 500,
        }
    }

    pub fn config(self, seed: u64) -> GeneratorConfig {
        let num_nodes = self.num_nodes();
        let (node_classes, rel_classes, avg_props, values) = match self {
            Self::Paper100 => (4, 2, 3, 5),
            _ => (8, 4, 6, 10),
        };
        GeneratorConfig {
            num_nodes,
            node_classes,
            rel_classes,
            avg_props_per_entity: avg_props,
            values_per_property: values,
            // 0.04 at 100 nodes; scaled so the expected out-degree per
            // relationship class stays roughly constant as graphs grow.
            edge_density: 4.0 / num_nodes as f64,
            label_min_len: 4,
            label_max_len: 8,
            numeric_property_fraction: 0.25,
            seed,
        }
    }
}

impl FromStr for Preset {
    type Err = GeneratorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "paper-100" => Ok(Self::Paper100),
            "paper-150" => Ok(Self::Paper150),
            "paper-200" => Ok(Self::Paper200),
            "paper-500" => Ok(Self::Paper500),
            other => Err(GeneratorError::InvalidConfig(format!(
                "unknown preset {other:?}; expected paper-100, paper-150, paper-200 or paper-500"
            ))),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "paper-{}", self.num_nodes())
    }
}
