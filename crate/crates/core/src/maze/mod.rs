//! Grid mazes as graphs: generation with a guaranteed path, the two
//! exploration primitives, path validation and ASCII rendering.

mod render;

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use render::Overlay;

use crate::graph::{props, NodeClass, NodeId, Properties, PropertyGraph, PropertyValue, RelClass, Schema};
use crate::seed::stage_rng;

/// `euclidean_distance` carried by wall cells.
pub const WALL_DISTANCE: f64 = -1e9;

/// Randomized attempts at carving a start-to-goal path before giving up.
pub const MAX_CARVE_ATTEMPTS: usize = 1_000;

pub const CELL_LABEL: &str = "Cell";
pub const ADJACENT: &str = "ADJACENT";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MazeError {
    #[error("invalid maze config: {0}")]
    InvalidConfig(String),
    #[error("infeasible config: no path of at least {min_path_len} steps found in {MAX_CARVE_ATTEMPTS} attempts")]
    Infeasible { min_path_len: usize },
}

/// Errors returned by the exploration tools. They are reported back to the
/// agent as tool results, never raised.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MazeToolError {
    #[error("invalid cell {key:?}: cell keys are integers from 0 to {max}")]
    InvalidCell { key: String, max: usize },
    #[error("cell {0} is a wall and cannot be visited")]
    WallCell(String),
    #[error("no cells have been visited yet; call get_possible_next_cells first")]
    NothingVisited,
    #[error("no valid path can be formed from the visited cells (from cell {from} to cell {to})")]
    Disconnected { from: String, to: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MazeConfig {
    pub width: usize,
    pub height: usize,
    pub wall_ratio: f64,
    /// Minimum number of steps on the carved start-to-goal path.
    pub min_path_len: usize,
    pub seed: u64,
}

impl Default for MazeConfig {
    fn default() -> Self {
        Self { width: 10, height: 10, wall_ratio: 0.5, min_path_len: 15, seed: 0 }
    }
}

impl MazeConfig {
    pub fn validate(&self) -> Result<(), MazeError> {
        let bad = |m: String| Err(MazeError::InvalidConfig(m));
        if self.width == 0 || self.height == 0 {
            return bad("width and height must be >= 1".into());
        }
        if !(0.0..1.0).contains(&self.wall_ratio) {
            return bad(format!("wall_ratio must lie in [0, 1), got {}", self.wall_ratio));
        }
        if self.min_path_len == 0 || self.min_path_len >= self.width * self.height {
            return bad(format!(
                "min_path_len must lie in 1..{} for a {}x{} grid",
                self.width * self.height,
                self.width,
                self.height
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub key: String,
    pub is_wall: bool,
    pub euclidean_distance: f64,
    pub marked: bool,
    pub mark_order: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MazeMeta {
    pub seed: u64,
    pub requested_walls: usize,
    pub actual_walls: usize,
    /// The carved start-to-goal path, by key.
    pub carved_path: Vec<String>,
}

impl MazeMeta {
    pub fn wall_ratio(&self, cells: usize) -> f64 {
        self.actual_walls as f64 / cells as f64
    }
}

/// A maze episode's world: the grid plus visitation marks. Serializes to
/// the JSON replay fixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MazeState {
    pub width: usize,
    pub height: usize,
    /// Row-major; the top-left cell has key `0`.
    pub cells: Vec<Cell>,
    pub start: usize,
    pub goal: usize,
    pub visit_counter: i64,
    /// Cells returned by the latest `get_possible_next_cells` call.
    pub last_output: Vec<usize>,
    pub meta: MazeMeta,
}

/// Verdict of [`MazeState::validate_path`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathVerdict {
    pub valid: bool,
    pub reason: Option<String>,
}

impl PathVerdict {
    fn ok() -> Self {
        Self { valid: true, reason: None }
    }

    fn fail(reason: String) -> Self {
        Self { valid: false, reason: Some(reason) }
    }
}

/// Randomized depth-first search for a simple path `start -> goal` of at
/// least `min_len` steps. The goal is entered only once the path is long
/// enough. Gives up after `budget` expansions.
fn carve<R: Rng + ?Sized>(
    rng: &mut R,
    width: usize,
    height: usize,
    start: usize,
    goal: usize,
    min_len: usize,
    budget: usize,
) -> Option<Vec<usize>> {
    let mut on_path = vec![false; width * height];
    let shuffled = |cell: usize, rng: &mut R| {
        let mut n = grid_neighbors(width, height, cell);
        n.shuffle(rng);
        n
    };
    let mut path = vec![start];
    on_path[start] = true;
    let mut stack = vec![(shuffled(start, rng), 0usize)];
    let mut expansions = 0;
    while let Some((options, next)) = stack.last_mut() {
        if *next == options.len() {
            stack.pop();
            let cell = path.pop().expect("path mirrors stack");
            on_path[cell] = false;
            continue;
        }
        let candidate = options[*next];
        *next += 1;
        if on_path[candidate] {
            continue;
        }
        if candidate == goal {
            if path.len() >= min_len {
                path.push(goal);
                return Some(path);
            }
            continue;
        }
        expansions += 1;
        if expansions > budget {
            return None;
        }
        on_path[candidate] = true;
        path.push(candidate);
        let opts = shuffled(candidate, rng);
        stack.push((opts, 0));
    }
    None
}

/// In-grid 4-neighbours in up, down, left, right order.
fn grid_neighbors(width: usize, height: usize, cell: usize) -> Vec<usize> {
    let (row, col) = (cell / width, cell % width);
    let mut out = Vec::with_capacity(4);
    if row > 0 {
        out.push(cell - width);
    }
    if row + 1 < height {
        out.push(cell + width);
    }
    if col > 0 {
        out.push(cell - 1);
    }
    if col + 1 < width {
        out.push(cell + 1);
    }
    out
}

pub fn generate_maze(config: &MazeConfig) -> Result<MazeState, MazeError> {
    config.validate()?;
    let (width, height) = (config.width, config.height);
    let total = width * height;
    let mut rng = stage_rng(config.seed, "maze");

    let mut carved = None;
    for _ in 0..MAX_CARVE_ATTEMPTS {
        let start = rng.random_range(0..total);
        let goal = rng.random_range(0..total);
        if start == goal {
            continue;
        }
        if let Some(path) = carve(&mut rng, width, height, start, goal, config.min_path_len, 20 * total) {
            carved = Some(path);
            break;
        }
    }
    let path = carved.ok_or(MazeError::Infeasible { min_path_len: config.min_path_len })?;
    let (start, goal) = (path[0], *path.last().expect("non-empty"));

    let mut on_path = vec![false; total];
    for &c in &path {
        on_path[c] = true;
    }
    let requested_walls = (config.wall_ratio * total as f64).round() as usize;
    let mut candidates: Vec<usize> = (0..total).filter(|&c| !on_path[c]).collect();
    candidates.shuffle(&mut rng);
    let mut is_wall = vec![false; total];
    for &c in candidates.iter().take(requested_walls) {
        is_wall[c] = true;
    }

    let (goal_row, goal_col) = ((goal / width) as f64, (goal % width) as f64);
    let cells = (0..total)
        .map(|c| {
            let distance = if is_wall[c] {
                WALL_DISTANCE
            } else {
                let (r, col) = ((c / width) as f64, (c % width) as f64);
                ((r - goal_row).powi(2) + (col - goal_col).powi(2)).sqrt()
            };
            Cell {
                key: c.to_string(),
                is_wall: is_wall[c],
                euclidean_distance: distance,
                marked: false,
                mark_order: -1,
            }
        })
        .collect();

    Ok(MazeState {
        width,
        height,
        cells,
        start,
        goal,
        visit_counter: 0,
        last_output: Vec::new(),
        meta: MazeMeta {
            seed: config.seed,
            requested_walls,
            actual_walls: is_wall.iter().filter(|w| **w).count(),
            carved_path: path.iter().map(usize::to_string).collect(),
        },
    })
}

impl MazeState {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn start_key(&self) -> &str {
        &self.cells[self.start].key
    }

    pub fn goal_key(&self) -> &str {
        &self.cells[self.goal].key
    }

    pub fn cell(&self, key: &str) -> Option<&Cell> {
        self.parse_key(key).ok().map(|i| &self.cells[i])
    }

    fn parse_key(&self, key: &str) -> Result<usize, MazeToolError> {
        key.trim()
            .parse::<usize>()
            .ok()
            .filter(|&i| i < self.cells.len())
            .ok_or_else(|| MazeToolError::InvalidCell { key: key.to_owned(), max: self.cells.len() - 1 })
    }

    /// Non-wall 4-neighbours in up, down, left, right order.
    pub fn open_neighbors(&self, index: usize) -> Vec<usize> {
        grid_neighbors(self.width, self.height, index).into_iter().filter(|&n| !self.cells[n].is_wall).collect()
    }

    /// Marks `key` as visited (keeping an existing mark order) and returns
    /// its open neighbours.
    pub fn get_possible_next_cells(&mut self, key: &str) -> Result<Vec<String>, MazeToolError> {
        let index = self.parse_key(key)?;
        if self.cells[index].is_wall {
            return Err(MazeToolError::WallCell(self.cells[index].key.clone()));
        }
        let cell = &mut self.cells[index];
        if !cell.marked {
            cell.marked = true;
            cell.mark_order = self.visit_counter;
            self.visit_counter += 1;
        }
        let next = self.open_neighbors(index);
        self.last_output = next.clone();
        Ok(next.into_iter().map(|i| self.cells[i].key.clone()).collect())
    }

    /// Marked cells in mark order.
    pub fn visited(&self) -> Vec<usize> {
        let mut marked: Vec<usize> = (0..self.cells.len()).filter(|&i| self.cells[i].marked).collect();
        marked.sort_by_key(|&i| self.cells[i].mark_order);
        marked
    }

    /// Shortest 4-connected path from the first to the last marked cell,
    /// using marked cells only.
    pub fn get_connected_path(&self) -> Result<Vec<String>, MazeToolError> {
        let visited = self.visited();
        let (Some(&first), Some(&last)) = (visited.first(), visited.last()) else {
            return Err(MazeToolError::NothingVisited);
        };
        let mut parent: Vec<Option<usize>> = vec![None; self.cells.len()];
        let mut seen = vec![false; self.cells.len()];
        let mut queue = VecDeque::from([first]);
        seen[first] = true;
        while let Some(cell) = queue.pop_front() {
            if cell == last {
                break;
            }
            for n in grid_neighbors(self.width, self.height, cell) {
                if self.cells[n].marked && !seen[n] {
                    seen[n] = true;
                    parent[n] = Some(cell);
                    queue.push_back(n);
                }
            }
        }
        if !seen[last] {
            return Err(MazeToolError::Disconnected {
                from: self.cells[first].key.clone(),
                to: self.cells[last].key.clone(),
            });
        }
        let mut path = vec![last];
        while let Some(p) = parent[*path.last().expect("non-empty")] {
            path.push(p);
        }
        path.reverse();
        Ok(path.into_iter().map(|i| self.cells[i].key.clone()).collect())
    }

    /// Checks that `path` runs from start to goal through open cells in
    /// 4-adjacent steps; reports the first violation.
    pub fn validate_path<S: AsRef<str>>(&self, path: &[S]) -> PathVerdict {
        if path.is_empty() {
            return PathVerdict::fail("empty path".into());
        }
        let mut previous: Option<usize> = None;
        for (position, key) in path.iter().enumerate() {
            let key = key.as_ref();
            let Ok(index) = self.parse_key(key) else {
                return PathVerdict::fail(format!("invalid cell {key:?} at position {position}"));
            };
            if self.cells[index].is_wall {
                return PathVerdict::fail(format!("wall cell {key} at position {position}"));
            }
            match previous {
                None if index != self.start => {
                    return PathVerdict::fail(format!(
                        "path starts at {key}, not at the start cell {}",
                        self.start_key()
                    ));
                }
                Some(p) if !grid_neighbors(self.width, self.height, p).contains(&index) => {
                    return PathVerdict::fail(format!(
                        "non-adjacent step from {} to {key} at position {position}",
                        self.cells[p].key
                    ));
                }
                _ => {}
            }
            previous = Some(index);
        }
        if previous != Some(self.goal) {
            return PathVerdict::fail(format!(
                "path ends at {}, not at the goal cell {}",
                self.cells[previous.unwrap()].key,
                self.goal_key()
            ));
        }
        PathVerdict::ok()
    }

    pub fn render_ascii(&self, overlay: Overlay) -> String {
        render::render(self, overlay)
    }

    /// Properties of one cell as the exploration tools report them.
    pub fn cell_json(&self, index: usize) -> serde_json::Value {
        let c = &self.cells[index];
        serde_json::json!({
            "key": c.key,
            "euclidean_distance": c.euclidean_distance,
            "marked": c.marked,
            "mark_order": c.mark_order,
        })
    }

    /// Class-level schema of the maze graph, shown to agents.
    pub fn schema() -> Schema {
        Schema {
            node_classes: vec![NodeClass {
                label: CELL_LABEL.into(),
                properties: vec!["euclidean_distance".into(), "key".into(), "mark_order".into(), "marked".into()],
            }],
            rel_classes: vec![RelClass {
                name: ADJACENT.into(),
                source: CELL_LABEL.into(),
                target: CELL_LABEL.into(),
                properties: vec![],
            }],
        }
    }

    /// The maze as a property graph: one node per cell and an `ADJACENT`
    /// relationship in each direction between cells that share an edge.
    pub fn to_graph(&self) -> PropertyGraph {
        let mut builder = PropertyGraph::builder();
        for c in &self.cells {
            let mut p: Properties = props([("key", c.key.clone())]);
            p.insert("euclidean_distance".into(), PropertyValue::Number(c.euclidean_distance));
            p.insert("mark_order".into(), PropertyValue::Number(c.mark_order as f64));
            p.insert("marked".into(), PropertyValue::Text(c.marked.to_string()));
            builder.add_node(CELL_LABEL, p).expect("cell keys are unique");
        }
        for c in 0..self.cells.len() {
            for n in grid_neighbors(self.width, self.height, c) {
                builder
                    .add_relationship(ADJACENT, NodeId(c as u32), NodeId(n as u32), Properties::new())
                    .expect("cells exist");
            }
        }
        builder.build()
    }
}
