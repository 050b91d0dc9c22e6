//! Random geometric (unit-disk) networks on the unit square.
//!
//! Nodes are placed independently and uniformly in `[0, 1]²`. Two distinct
//! nodes are adjacent iff their Euclidean distance is at most the radius
//! (the boundary case counts as an edge). Generation rejects whole
//! placements until the graph is connected.

use std::collections::VecDeque;
use std::fs;
use std::io;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hull;
use crate::rng;

/// Dense node index, assigned in placement order.
pub type NodeId = usize;

pub const MAX_RADIUS: f64 = std::f64::consts::SQRT_2;
pub const DEFAULT_MAX_ATTEMPTS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance_sq(self, other: Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn distance(self, other: Point) -> f64 {
        self.distance_sq(other).sqrt()
    }
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("no connected placement found after {0} attempts (n/r too sparse)")]
    NotConnected(usize),
    #[error("unknown node {node} (network has {n} nodes)")]
    UnknownNode { node: NodeId, n: usize },
    #[error("invalid generation config: {0}")]
    InvalidConfig(String),
    #[error("invalid network: {0}")]
    InvalidNetwork(String),
    #[error("io: {0}")]
    Io(#[from] io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphGenConfig {
    pub n: usize,
    pub r: f64,
    pub seed: u64,
    pub max_attempts: usize,
}

impl GraphGenConfig {
    pub fn new(n: usize, r: f64, seed: u64) -> Self {
        GraphGenConfig {
            n,
            r,
            seed,
            max_attempts: DEFAULT_MAX_ATTEMPTS,
        }
    }

    /// Radius actually used: values above √2 connect every pair anyway.
    pub fn effective_radius(&self) -> f64 {
        self.r.min(MAX_RADIUS)
    }

    fn validate(&self) -> Result<(), GraphError> {
        if self.n < 2 {
            return Err(GraphError::InvalidConfig(format!(
                "n must be >= 2, got {}",
                self.n
            )));
        }
        if !self.r.is_finite() || self.r <= 0.0 {
            return Err(GraphError::InvalidConfig(format!(
                "radius must be positive, got {}",
                self.r
            )));
        }
        if self.max_attempts == 0 {
            return Err(GraphError::InvalidConfig(
                "max_attempts must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Immutable network: positions, sorted symmetric adjacency, radius.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    positions: Vec<Point>,
    adjacency: Vec<Vec<NodeId>>,
    radius: f64,
    seed: u64,
    attempts: usize,
}

/// On-disk form of a [`Network`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetworkFile {
    pub n: usize,
    pub r: f64,
    pub seed: u64,
    pub positions: Vec<[f64; 2]>,
    pub edges: Vec<[NodeId; 2]>,
}

/// Generates a connected unit-disk network.
///
/// Attempt `k` draws its placement from its own stream, so the result only
/// depends on the config.
pub fn generate_network(cfg: &GraphGenConfig) -> Result<Network, GraphError> {
    cfg.validate()?;
    let r = cfg.effective_radius();
    for attempt in 0..cfg.max_attempts {
        let mut rng = rng::stream(cfg.seed, "placement", attempt as u64);
        let positions: Vec<Point> = (0..cfg.n)
            .map(|_| Point::new(rng.gen::<f64>(), rng.gen::<f64>()))
            .collect();
        let mut net = Network::from_positions(positions, r, cfg.seed);
        if net.is_connected() {
            net.attempts = attempt + 1;
            return Ok(net);
        }
    }
    Err(GraphError::NotConnected(cfg.max_attempts))
}

impl Network {
    /// Unit-disk graph over the given positions. Connectivity is not checked.
    pub fn from_positions(positions: Vec<Point>, radius: f64, seed: u64) -> Self {
        let adjacency = disk_adjacency(&positions, radius);
        Network {
            positions,
            adjacency,
            radius,
            seed,
            attempts: 0,
        }
    }

    /// Network with an explicit edge list instead of the disk rule.
    ///
    /// Used for hand-built topologies and for importing files. Duplicate
    /// edges are merged; self-loops and out-of-range endpoints are rejected.
    pub fn from_edges(
        positions: Vec<Point>,
        radius: f64,
        seed: u64,
        edges: &[(NodeId, NodeId)],
    ) -> Result<Self, GraphError> {
        let n = positions.len();
        let mut adjacency = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(GraphError::InvalidNetwork(format!(
                    "edge ({u},{v}) out of range for n={n}"
                )));
            }
            if u == v {
                return Err(GraphError::InvalidNetwork(format!("self-loop at {u}")));
            }
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for list in &mut adjacency {
            list.sort_unstable();
            list.dedup();
        }
        Ok(Network {
            positions,
            adjacency,
            radius,
            seed,
            attempts: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of placements drawn by [`generate_network`]; 0 otherwise.
    pub fn attempts(&self) -> usize {
        self.attempts
    }

    pub fn positions(&self) -> &[Point] {
        &self.positions
    }

    pub fn position(&self, v: NodeId) -> Point {
        self.positions[v]
    }

    /// Sorted neighbor list. Panics on an out-of-range id; see [`Network::neighbors`].
    #[inline]
    pub fn adj(&self, v: NodeId) -> &[NodeId] {
        &self.adjacency[v]
    }

    pub fn neighbors(&self, v: NodeId) -> Result<&[NodeId], GraphError> {
        self.adjacency
            .get(v)
            .map(Vec::as_slice)
            .ok_or(GraphError::UnknownNode {
                node: v,
                n: self.len(),
            })
    }

    pub fn are_adjacent(&self, u: NodeId, v: NodeId) -> bool {
        self.adjacency
            .get(u)
            .is_some_and(|l| l.binary_search(&v).is_ok())
    }

    /// Edges with `u < v`, in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(u, l)| l.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
    }

    /// BFS from node 0 reaches every node.
    pub fn is_connected(&self) -> bool {
        let n = self.len();
        if n == 0 {
            return true;
        }
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for &v in &self.adjacency[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    queue.push_back(v);
                }
            }
        }
        count == n
    }

    /// Largest Euclidean distance between any two nodes.
    pub fn max_pairwise_distance(&self) -> f64 {
        hull::diameter(&self.positions)
    }

    /// Whether the stored edges are exactly those of the disk rule.
    pub fn satisfies_disk_rule(&self) -> bool {
        disk_adjacency(&self.positions, self.radius) == self.adjacency
    }

    pub fn to_file(&self) -> NetworkFile {
        NetworkFile {
            n: self.len(),
            r: self.radius,
            seed: self.seed,
            positions: self.positions.iter().map(|p| [p.x, p.y]).collect(),
            edges: self.edges().map(|(u, v)| [u, v]).collect(),
        }
    }

    pub fn from_file(file: &NetworkFile) -> Result<Self, GraphError> {
        if file.positions.len() != file.n {
            return Err(GraphError::InvalidNetwork(format!(
                "n = {} but {} positions",
                file.n,
                file.positions.len()
            )));
        }
        let positions = file
            .positions
            .iter()
            .map(|&[x, y]| Point::new(x, y))
            .collect();
        let edges: Vec<(NodeId, NodeId)> = file.edges.iter().map(|&[u, v]| (u, v)).collect();
        Network::from_edges(positions, file.r, file.seed, &edges)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_file()).expect("network serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, GraphError> {
        Network::from_file(&serde_json::from_str(s)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), GraphError> {
        fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, GraphError> {
        Network::from_json(&fs::read_to_string(path)?)
    }
}

/// Unit-disk adjacency using a bucket grid with cells no smaller than `r`.
fn disk_adjacency(positions: &[Point], r: f64) -> Vec<Vec<NodeId>> {
    let n = positions.len();
    let mut adjacency = vec![Vec::new(); n];
    if n < 2 {
        return adjacency;
    }
    let r_sq = r * r;
    let max_dim = ((n as f64).sqrt() as usize * 2).max(1);
    let dim = ((1.0 / r).floor() as usize).clamp(1, max_dim);
    let cell_of = |p: Point| -> (usize, usize) {
        let cx = ((p.x * dim as f64) as usize).min(dim - 1);
        let cy = ((p.y * dim as f64) as usize).min(dim - 1);
        (cx, cy)
    };

    // Counting sort of nodes into cells.
    let mut start = vec![0usize; dim * dim + 1];
    for &p in positions {
        let (cx, cy) = cell_of(p);
        start[cy * dim + cx + 1] += 1;
    }
    for i in 0..dim * dim {
        start[i + 1] += start[i];
    }
    let mut fill = start.clone();
    let mut order = vec![0usize; n];
    for (v, &p) in positions.iter().enumerate() {
        let (cx, cy) = cell_of(p);
        let c = cy * dim + cx;
        order[fill[c]] = v;
        fill[c] += 1;
    }

    for (u, &pu) in positions.iter().enumerate() {
        let (cx, cy) = cell_of(pu);
        for ny in cy.saturating_sub(1)..=(cy + 1).min(dim - 1) {
            for nx in cx.saturating_sub(1)..=(cx + 1).min(dim - 1) {
                let c = ny * dim + nx;
                for &v in &order[start[c]..start[c + 1]] {
                    if v != u && pu.distance_sq(positions[v]) <= r_sq {
                        adjacency[u].push(v);
                    }
                }
            }
        }
        adjacency[u].sort_unstable();
    }
    adjacency
}
