//! A single walker: tabu-list growth, neighborhood marking, cost-based
//! candidate selection, backtracking, and intersection detection.
//!
//! The walk keeps a stack of nodes (`path`) whose top is the head. Each
//! [`WalkState::step`] call runs one loop iteration:
//!
//! 1. Mark the neighborhood of the node below the head (the last node whose
//!    successor has been chosen). Skipped while backtracking.
//! 2. Candidates are the head's neighbors that are not yet members. If there
//!    are none, the cursor moves one node down the stack and the step
//!    reports [`StepOutcome::Backtracked`].
//! 3. A candidate owned by another walk wins immediately: it is appended
//!    and the walk stops as [`WalkStatus::Intersected`].
//! 4. Otherwise the candidate of minimum cost is appended, ties broken
//!    uniformly from the walk's own generator.
//!
//! Members are never removed. Nodes on an abandoned dead-end spur stay in the
//! member set (and so in the active path) after the stack moves past them.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom_graph::{Network, NodeId};
use crate::registry::OverlayRegistry;
use crate::rng::SimRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WalkId(pub u32);

impl fmt::Display for WalkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// How a walk ranks its candidates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CostStrategy {
    /// `|N(v) ∩ marked|`. The directional random walk.
    FirstNeighborhood,
    /// `|N(x) ∩ N(v)|` where `x` is the node below the head.
    TwoHopWeight,
    /// `α·|N(v) ∩ marked| + β·|N(v) ∩ N(marked)|`.
    WeightedTwoNeighborhood { alpha: f64, beta: f64 },
    /// Uniform choice among candidates. The pure random walk baseline.
    Pure,
}

impl CostStrategy {
    pub const TOKENS: [&'static str; 4] = ["drw", "prw", "twohop", "weighted"];

    pub fn weighted(alpha: f64, beta: f64) -> Self {
        CostStrategy::WeightedTwoNeighborhood { alpha, beta }
    }

    /// Parses a CLI token; `alpha`/`beta` only apply to `weighted`.
    pub fn from_token(token: &str, alpha: f64, beta: f64) -> Result<Self, String> {
        let s = match token.trim() {
            "drw" => CostStrategy::FirstNeighborhood,
            "prw" => CostStrategy::Pure,
            "twohop" => CostStrategy::TwoHopWeight,
            "weighted" => CostStrategy::weighted(alpha, beta),
            other => {
                return Err(format!(
                    "unknown strategy {other:?} (expected one of {})",
                    Self::TOKENS.join(", ")
                ))
            }
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), String> {
        if let CostStrategy::WeightedTwoNeighborhood { alpha, beta } = *self {
            if !(alpha >= 0.0 && beta >= 0.0 && alpha.is_finite() && beta.is_finite()) {
                return Err(format!(
                    "weights must be finite and >= 0, got alpha={alpha} beta={beta}"
                ));
            }
        }
        Ok(())
    }

    /// Short label used in CSV output.
    pub fn label(&self) -> String {
        match *self {
            CostStrategy::FirstNeighborhood => "drw".into(),
            CostStrategy::Pure => "prw".into(),
            CostStrategy::TwoHopWeight => "twohop".into(),
            CostStrategy::WeightedTwoNeighborhood { alpha, beta }
                if alpha == 1.0 && beta == 1.0 =>
            {
                "weighted".into()
            }
            CostStrategy::WeightedTwoNeighborhood { alpha, beta } => {
                format!("weighted-a{alpha}-b{beta}")
            }
        }
    }

    fn tracks_second_neighborhood(&self) -> bool {
        matches!(self, CostStrategy::WeightedTwoNeighborhood { .. })
    }
}

/// Which neighborhoods are marked at the start of a step.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarkingMode {
    /// Neighborhood of the node below the head only; the head's own
    /// neighborhood is marked one step later.
    #[default]
    Lagged,
    /// Neighborhoods of every stack node up to and including the head.
    Eager,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WalkConfig {
    pub strategy: CostStrategy,
    pub marking: MarkingMode,
    /// Pure walks only: move to any neighbor, revisits allowed, no
    /// backtracking. Ignored by cost-based strategies.
    pub free_roaming: bool,
    /// Record a [`TraceRecord`] per step.
    pub trace: bool,
}

impl WalkConfig {
    pub fn new(strategy: CostStrategy) -> Self {
        WalkConfig {
            strategy,
            marking: MarkingMode::Lagged,
            free_roaming: false,
            trace: false,
        }
    }

    fn roams(&self) -> bool {
        self.free_roaming && self.strategy == CostStrategy::Pure
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum WalkStatus {
    Active,
    Intersected { broker: NodeId, other: WalkId },
    Exhausted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepOutcome {
    Extended(NodeId),
    Intersected {
        broker: NodeId,
        other_walk: WalkId,
    },
    /// The cursor moved down the stack; carries the new 1-based cursor.
    Backtracked(usize),
    Exhausted,
}

impl StepOutcome {
    fn name(&self) -> &'static str {
        match self {
            StepOutcome::Extended(_) => "extended",
            StepOutcome::Intersected { .. } => "intersected",
            StepOutcome::Backtracked(_) => "backtracked",
            StepOutcome::Exhausted => "exhausted",
        }
    }

    fn node(&self) -> Option<NodeId> {
        match *self {
            StepOutcome::Extended(v) => Some(v),
            StepOutcome::Intersected { broker, .. } => Some(broker),
            _ => None,
        }
    }
}

/// One line of a walk trace (JSON lines).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRecord {
    pub walk: WalkId,
    pub iter: usize,
    pub outcome: &'static str,
    pub node: Option<NodeId>,
    pub cursor: usize,
    pub cost: Option<f64>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WalkError {
    #[error("initiator {0} has no neighbors")]
    IsolatedInitiator(NodeId),
    #[error("node {0} is not in the network")]
    UnknownNode(NodeId),
    #[error("walk {0} is not active")]
    NotActive(WalkId),
    #[error("walk {walk} exceeded its step budget of {budget}")]
    StepBudgetExceeded { walk: WalkId, budget: usize },
    #[error("walk {0} backtracked past its initiator without finding a candidate")]
    Exhausted(WalkId),
}

/// Dense node set with a population count.
#[derive(Debug, Clone)]
struct NodeMask {
    bits: Vec<bool>,
    count: usize,
}

impl NodeMask {
    fn new(n: usize) -> Self {
        NodeMask {
            bits: vec![false; n],
            count: 0,
        }
    }

    fn insert(&mut self, v: NodeId) -> bool {
        let fresh = !self.bits[v];
        if fresh {
            self.bits[v] = true;
            self.count += 1;
        }
        fresh
    }

    #[inline]
    fn contains(&self, v: NodeId) -> bool {
        self.bits[v]
    }

    fn to_vec(&self) -> Vec<NodeId> {
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(v, _)| v)
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct WalkState {
    id: WalkId,
    config: WalkConfig,
    /// Stack of nodes; only `path[..cursor]` is live.
    path: Vec<NodeId>,
    cursor: usize,
    members: NodeMask,
    recruited: Vec<NodeId>,
    edges: Vec<(NodeId, NodeId)>,
    marked: NodeMask,
    second_marked: Option<NodeMask>,
    rng: SimRng,
    status: WalkStatus,
    backtracking: bool,
    steps: usize,
    backtracks: usize,
    trace: Vec<TraceRecord>,
}

/// Starts a walk at `initiator`.
///
/// If a neighbor of the initiator is already owned by another walk, that
/// neighbor is appended and the walk is returned already intersected,
/// together with the outcome. The same happens with the initiator itself as
/// broker when the initiator was already recruited by another walk.
/// Otherwise a uniformly random neighbor becomes the second node.
pub fn init_walk(
    net: &Network,
    initiator: NodeId,
    id: WalkId,
    registry: &mut OverlayRegistry,
    config: WalkConfig,
    rng: SimRng,
) -> Result<(WalkState, Option<StepOutcome>), WalkError> {
    if initiator >= net.len() {
        return Err(WalkError::UnknownNode(initiator));
    }
    let n = net.len();
    let mut walk = WalkState {
        id,
        config,
        path: Vec::new(),
        cursor: 0,
        members: NodeMask::new(n),
        recruited: Vec::new(),
        edges: Vec::new(),
        marked: NodeMask::new(n),
        second_marked: config
            .strategy
            .tracks_second_neighborhood()
            .then(|| NodeMask::new(n)),
        rng,
        status: WalkStatus::Active,
        backtracking: false,
        steps: 0,
        backtracks: 0,
        trace: Vec::new(),
    };
    walk.path.push(initiator);
    walk.cursor = 1;
    walk.members.insert(initiator);
    walk.recruited.push(initiator);
    registry.register_member(initiator, id);
    walk.record(StepOutcome::Extended(initiator), None, "init");

    if let Some(other) = registry.other_owner(initiator, id) {
        let outcome = StepOutcome::Intersected {
            broker: initiator,
            other_walk: other,
        };
        walk.status = WalkStatus::Intersected {
            broker: initiator,
            other,
        };
        walk.record(outcome, None, outcome.name());
        return Ok((walk, Some(outcome)));
    }

    let neighbors = net.adj(initiator);
    if neighbors.is_empty() {
        return Err(WalkError::IsolatedInitiator(initiator));
    }
    if let Some(outcome) = walk.try_intersect(neighbors, initiator, registry) {
        return Ok((walk, Some(outcome)));
    }
    let second = neighbors[walk.rng.gen_range(0..neighbors.len())];
    walk.append(second, initiator, registry);
    walk.record(StepOutcome::Extended(second), None, "extended");
    Ok((walk, None))
}

impl WalkState {
    pub fn id(&self) -> WalkId {
        self.id
    }

    pub fn config(&self) -> &WalkConfig {
        &self.config
    }

    pub fn initiator(&self) -> NodeId {
        self.path[0]
    }

    /// Live stack, initiator first, head last.
    pub fn path(&self) -> &[NodeId] {
        &self.path[..self.cursor]
    }

    /// 1-based index of the head in the stack.
    pub fn cursor(&self) -> usize {
        self.cursor
    }

    pub fn head(&self) -> NodeId {
        self.path[self.cursor - 1]
    }

    /// Every member in recruitment order, spurs included.
    pub fn recruited(&self) -> &[NodeId] {
        &self.recruited
    }

    pub fn is_member(&self, v: NodeId) -> bool {
        self.members.contains(v)
    }

    pub fn member_count(&self) -> usize {
        self.members.count
    }

    /// `(from, to)` for every recruitment hop, in order.
    pub fn edges(&self) -> &[(NodeId, NodeId)] {
        &self.edges
    }

    pub fn is_marked(&self, v: NodeId) -> bool {
        self.marked.contains(v)
    }

    pub fn marked_nodes(&self) -> Vec<NodeId> {
        self.marked.to_vec()
    }

    /// Neighbors of marked nodes, when tracked for the weighted strategy.
    pub fn second_marked_nodes(&self) -> Option<Vec<NodeId>> {
        self.second_marked.as_ref().map(NodeMask::to_vec)
    }

    pub fn status(&self) -> WalkStatus {
        self.status
    }

    pub fn is_active(&self) -> bool {
        self.status == WalkStatus::Active
    }

    /// Whether the last step backtracked (the next step will not mark).
    pub fn is_backtracking(&self) -> bool {
        self.backtracking
    }

    /// Number of `step` calls, backtracks included.
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn backtracks(&self) -> usize {
        self.backtracks
    }

    pub fn trace(&self) -> &[TraceRecord] {
        &self.trace
    }

    /// Stops an active walk at `broker`, which must already be a member.
    pub fn halt_at(&mut self, broker: NodeId, other: WalkId) {
        debug_assert!(self.members.contains(broker));
        self.status = WalkStatus::Intersected { broker, other };
    }

    /// Cost of `v` under this walk's strategy and current marking.
    pub fn cost_of(&self, net: &Network, v: NodeId) -> f64 {
        match self.config.strategy {
            CostStrategy::FirstNeighborhood => cost_first_neighborhood(net, self, v) as f64,
            CostStrategy::TwoHopWeight => match self.penultimate() {
                Some(x) => cost_two_hop(net, x, v) as f64,
                None => 0.0,
            },
            CostStrategy::WeightedTwoNeighborhood { alpha, beta } => {
                cost_weighted(net, self, v, alpha, beta)
            }
            CostStrategy::Pure => 0.0,
        }
    }

    fn penultimate(&self) -> Option<NodeId> {
        (self.cursor >= 2).then(|| self.path[self.cursor - 2])
    }

    /// Runs one iteration of the walk loop.
    pub fn step(
        &mut self,
        net: &Network,
        registry: &mut OverlayRegistry,
    ) -> Result<StepOutcome, WalkError> {
        if !self.is_active() {
            return Err(WalkError::NotActive(self.id));
        }
        self.steps += 1;
        if self.config.roams() {
            return Ok(self.roam(net, registry));
        }

        if !self.backtracking {
            if let Some(x) = self.penultimate() {
                self.mark_neighborhood(net, x);
            }
            if self.config.marking == MarkingMode::Eager {
                self.mark_neighborhood(net, self.head());
            }
        }

        let head = self.head();
        let candidates: Vec<NodeId> = net
            .adj(head)
            .iter()
            .copied()
            .filter(|&v| !self.members.contains(v))
            .collect();
        if candidates.is_empty() {
            self.cursor -= 1;
            self.backtracks += 1;
            let outcome = if self.cursor == 0 {
                self.status = WalkStatus::Exhausted;
                StepOutcome::Exhausted
            } else {
                self.backtracking = true;
                StepOutcome::Backtracked(self.cursor)
            };
            self.record(outcome, None, outcome.name());
            return Ok(outcome);
        }
        self.backtracking = false;

        if let Some(outcome) = self.try_intersect(&candidates, head, registry) {
            return Ok(outcome);
        }

        let (choice, cost) = if self.config.strategy == CostStrategy::Pure {
            (candidates[self.rng.gen_range(0..candidates.len())], None)
        } else {
            let costs: Vec<f64> = candidates.iter().map(|&v| self.cost_of(net, v)).collect();
            let best = costs.iter().copied().fold(f64::INFINITY, f64::min);
            let ties: Vec<NodeId> = candidates
                .iter()
                .zip(&costs)
                .filter(|(_, &c)| c == best)
                .map(|(&v, _)| v)
                .collect();
            let pick = if ties.len() == 1 {
                ties[0]
            } else {
                ties[self.rng.gen_range(0..ties.len())]
            };
            (pick, Some(best))
        };
        self.append(choice, head, registry);
        let outcome = StepOutcome::Extended(choice);
        self.record(outcome, cost, outcome.name());
        Ok(outcome)
    }

    /// Steps until the walk intersects another walk.
    ///
    /// `step_budget` caps the walk's total step count, counted from init.
    pub fn run_until_stop(
        &mut self,
        net: &Network,
        registry: &mut OverlayRegistry,
        step_budget: usize,
    ) -> Result<(), WalkError> {
        while self.is_active() {
            if self.steps >= step_budget {
                return Err(WalkError::StepBudgetExceeded {
                    walk: self.id,
                    budget: step_budget,
                });
            }
            if self.step(net, registry)? == StepOutcome::Exhausted {
                return Err(WalkError::Exhausted(self.id));
            }
        }
        Ok(())
    }

    fn roam(&mut self, net: &Network, registry: &mut OverlayRegistry) -> StepOutcome {
        let head = self.head();
        let fresh: Vec<NodeId> = net
            .adj(head)
            .iter()
            .copied()
            .filter(|&v| !self.members.contains(v))
            .collect();
        if let Some(outcome) = self.try_intersect(&fresh, head, registry) {
            return outcome;
        }
        let neighbors = net.adj(head);
        let next = neighbors[self.rng.gen_range(0..neighbors.len())];
        if self.members.insert(next) {
            self.recruited.push(next);
            self.edges.push((head, next));
            registry.register_member(next, self.id);
        }
        self.path.push(next);
        self.cursor = self.path.len();
        let outcome = StepOutcome::Extended(next);
        self.record(outcome, None, outcome.name());
        outcome
    }

    /// Appends the first candidate owned by another walk, if any.
    fn try_intersect(
        &mut self,
        candidates: &[NodeId],
        from: NodeId,
        registry: &mut OverlayRegistry,
    ) -> Option<StepOutcome> {
        let (broker, other) = candidates
            .iter()
            .filter_map(|&v| registry.other_owner(v, self.id).map(|o| (v, o)))
            .next()?;
        self.append(broker, from, registry);
        self.status = WalkStatus::Intersected { broker, other };
        let outcome = StepOutcome::Intersected {
            broker,
            other_walk: other,
        };
        self.record(outcome, None, outcome.name());
        Some(outcome)
    }

    fn append(&mut self, node: NodeId, from: NodeId, registry: &mut OverlayRegistry) {
        self.path.truncate(self.cursor);
        self.path.push(node);
        self.cursor = self.path.len();
        self.members.insert(node);
        self.recruited.push(node);
        self.edges.push((from, node));
        registry.register_member(node, self.id);
    }

    fn mark_neighborhood(&mut self, net: &Network, u: NodeId) {
        for &w in net.adj(u) {
            if self.marked.insert(w) {
                if let Some(second) = self.second_marked.as_mut() {
                    for &x in net.adj(w) {
                        second.insert(x);
                    }
                }
            }
        }
    }

    fn record(&mut self, outcome: StepOutcome, cost: Option<f64>, name: &'static str) {
        if self.config.trace {
            self.trace.push(TraceRecord {
                walk: self.id,
                iter: self.steps,
                outcome: name,
                node: outcome.node(),
                cursor: self.cursor,
                cost,
            });
        }
    }
}

/// `|N(v) ∩ marked|` for the walk's current marking.
pub fn cost_first_neighborhood(net: &Network, walk: &WalkState, v: NodeId) -> usize {
    net.adj(v)
        .iter()
        .filter(|&&w| walk.marked.contains(w))
        .count()
}

/// Number of common neighbors of `x` and `z`.
pub fn cost_two_hop(net: &Network, x: NodeId, z: NodeId) -> usize {
    let (a, b) = (net.adj(x), net.adj(z));
    let (mut i, mut j, mut count) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                count += 1;
                i += 1;
                j += 1;
            }
        }
    }
    count
}

/// `α·|N(v) ∩ marked| + β·|N(v) ∩ N(marked)|`.
///
/// Uses the walk's tracked second neighborhood when present and otherwise
/// tests each neighbor of `v` for a marked neighbor.
pub fn cost_weighted(net: &Network, walk: &WalkState, v: NodeId, alpha: f64, beta: f64) -> f64 {
    let first = cost_first_neighborhood(net, walk, v);
    let second = match &walk.second_marked {
        Some(mask) => net.adj(v).iter().filter(|&&w| mask.contains(w)).count(),
        None => net
            .adj(v)
            .iter()
            .filter(|&&w| net.adj(w).iter().any(|&m| walk.marked.contains(m)))
            .count(),
    };
    alpha * first as f64 + beta * second as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom_graph::{generate_network, GraphGenConfig, Point};
    use crate::rng;

    fn graph(n: usize, edges: &[(NodeId, NodeId)]) -> Network {
        let pts = (0..n)
            .map(|i| Point::new(i as f64 / n as f64, 0.5))
            .collect();
        Network::from_edges(pts, 1.0, 0, edges).unwrap()
    }

    // x=0 y=1 p=2 q=3 a=4 b=5 c=6 d=7 z=8. Marking N(x)={y,p,q} gives the
    // candidate costs a=3 b=2 c=3 d=2 z=1 seen from y.
    fn figure5() -> Network {
        graph(
            9,
            &[
                (0, 1),
                (0, 2),
                (0, 3),
                (1, 4),
                (1, 5),
                (1, 6),
                (1, 7),
                (1, 8),
                (2, 4),
                (3, 4),
                (2, 6),
                (3, 6),
                (2, 5),
                (3, 7),
            ],
        )
    }

    fn start(
        net: &Network,
        reg: &mut OverlayRegistry,
        at: NodeId,
        strategy: CostStrategy,
        seed: u64,
    ) -> WalkState {
        let mut cfg = WalkConfig::new(strategy);
        cfg.trace = true;
        init_walk(net, at, WalkId(1), reg, cfg, rng::stream(seed, "walk", 1))
            .unwrap()
            .0
    }

    /// Seed whose first hop from `at` lands on `want`.
    fn seed_for_first_hop(net: &Network, at: NodeId, want: NodeId, strategy: CostStrategy) -> u64 {
        (0..1000)
            .find(|&s| {
                let mut reg = OverlayRegistry::new(net.len());
                start(net, &mut reg, at, strategy, s).path() == [at, want]
            })
            .expect("some seed reaches the wanted first hop")
    }

    #[test]
    fn first_walk_starts_active_with_two_nodes() {
        let net = figure5();
        let mut reg = OverlayRegistry::new(net.len());
        let (w, out) = init_walk(
            &net,
            0,
            WalkId(0),
            &mut reg,
            WalkConfig::new(CostStrategy::FirstNeighborhood),
            rng::stream(1, "w", 0),
        )
        .unwrap();
        assert!(out.is_none());
        assert!(w.is_active());
        assert_eq!(w.path().len(), 2);
        assert_eq!(w.cursor(), 2);
        assert!(net.are_adjacent(w.path()[0], w.path()[1]));
    }

    #[test]
    fn init_intersects_neighbor_owned_by_other_walk() {
        let net = figure5();
        let mut reg = OverlayRegistry::new(net.len());
        reg.register_member(4, WalkId(0));
        let (w, out) = init_walk(
            &net,
            2,
            WalkId(1),
            &mut reg,
            WalkConfig::new(CostStrategy::FirstNeighborhood),
            rng::stream(1, "w", 1),
        )
        .unwrap();
        assert_eq!(
            out,
            Some(StepOutcome::Intersected {
                broker: 4,
                other_walk: WalkId(0)
            })
        );
        assert_eq!(w.path(), &[2, 4]);
        assert!(reg.is_broker(4));
    }

    #[test]
    fn init_on_owned_initiator_intersects_in_place() {
        let net = figure5();
        let mut reg = OverlayRegistry::new(net.len());
        reg.register_member(2, WalkId(0));
        let (w, out) = init_walk(
            &net,
            2,
            WalkId(1),
            &mut reg,
            WalkConfig::new(CostStrategy::Pure),
            rng::stream(1, "w", 1),
        )
        .unwrap();
        assert_eq!(
            out,
            Some(StepOutcome::Intersected {
                broker: 2,
                other_walk: WalkId(0)
            })
        );
        assert_eq!(w.path(), &[2]);
    }

    #[test]
    fn isolated_and_unknown_initiators() {
        let net = graph(3, &[(0, 1)]);
        let mut reg = OverlayRegistry::new(3);
        let cfg = WalkConfig::new(CostStrategy::Pure);
        assert_eq!(
            init_walk(&net, 2, WalkId(0), &mut reg, cfg, rng::stream(0, "w", 0)).unwrap_err(),
            WalkError::IsolatedInitiator(2)
        );
        assert_eq!(
            init_walk(&net, 9, WalkId(0), &mut reg, cfg, rng::stream(0, "w", 0)).unwrap_err(),
            WalkError::UnknownNode(9)
        );
    }

    #[test]
    fn first_hop_is_uniform() {
        // Node 1 of figure5 has 6 neighbors.
        let net = figure5();
        let trials = 10_000;
        let mut counts = [0usize; 9];
        let mut gen = rng::stream(2024, "first-hop", 0);
        for _ in 0..trials {
            let mut reg = OverlayRegistry::new(net.len());
            let seed: u64 = gen.gen();
            let (w, _) = init_walk(
                &net,
                1,
                WalkId(0),
                &mut reg,
                WalkConfig::new(CostStrategy::FirstNeighborhood),
                rng::stream(seed, "w", 0),
            )
            .unwrap();
            counts[w.path()[1]] += 1;
        }
        let k = net.adj(1).len() as f64;
        let expected = trials as f64 / k;
        let chi2: f64 = net
            .adj(1)
            .iter()
            .map(|&v| (counts[v] as f64 - expected).powi(2) / expected)
            .sum();
        // 5 degrees of freedom, p = 0.001 critical value.
        assert!(chi2 < 20.52, "chi2 = {chi2}, counts = {counts:?}");
    }

    #[test]
    fn figure5_costs_and_choice() {
        let net = figure5();
        let seed = seed_for_first_hop(&net, 0, 1, CostStrategy::FirstNeighborhood);
        let mut reg = OverlayRegistry::new(net.len());
        let mut w = start(&net, &mut reg, 0, CostStrategy::FirstNeighborhood, seed);
        assert_eq!(w.step(&net, &mut reg).unwrap(), StepOutcome::Extended(8));
        assert_eq!(w.marked_nodes(), vec![1, 2, 3]);
        let costs: Vec<usize> = [4, 5, 6, 7, 8]
            .iter()
            .map(|&v| cost_first_neighborhood(&net, &w, v))
            .collect();
        assert_eq!(costs, vec![3, 2, 3, 2, 1]);
        assert_eq!(w.trace().last().unwrap().cost, Some(1.0));
    }

    #[test]
    fn unmarked_candidate_costs_zero() {
        let net = figure5();
        let mut reg = OverlayRegistry::new(net.len());
        let w = start(&net, &mut reg, 0, CostStrategy::FirstNeighborhood, 3);
        assert_eq!(cost_first_neighborhood(&net, &w, 8), 0);
    }

    #[test]
    fn two_hop_counts_common_neighbors() {
        let tri = graph(3, &[(0, 1), (1, 2), (0, 2)]);
        assert_eq!(cost_two_hop(&tri, 0, 2), 1);
        let disjoint = graph(4, &[(0, 1), (2, 3)]);
        assert_eq!(cost_two_hop(&disjoint, 0, 2), 0);
        let net = figure5();
        assert_eq!(cost_two_hop(&net, 2, 3), 3); // x, a, c
    }

    #[test]
    fn weighted_reduces_to_first_neighborhood() {
        let net = figure5();
        let seed = seed_for_first_hop(&net, 0, 1, CostStrategy::weighted(1.0, 0.0));
        let mut reg = OverlayRegistry::new(net.len());
        let mut w = start(&net, &mut reg, 0, CostStrategy::weighted(1.0, 0.0), seed);
        assert_eq!(w.step(&net, &mut reg).unwrap(), StepOutcome::Extended(8));
        for v in 0..net.len() {
            assert_eq!(
                cost_weighted(&net, &w, v, 1.0, 0.0),
                cost_first_neighborhood(&net, &w, v) as f64
            );
            assert_eq!(cost_weighted(&net, &w, v, 0.0, 0.0), 0.0);
        }
    }

    #[test]
    fn weighted_matches_set_oracle_on_hand_graph() {
        // 10 nodes: a ring with two chords.
        let net = graph(
            10,
            &[
                (0, 1),
                (1, 2),
                (2, 3),
                (3, 4),
                (4, 5),
                (5, 6),
                (6, 7),
                (7, 8),
                (8, 9),
                (9, 0),
                (0, 5),
                (2, 7),
            ],
        );
        let strategy = CostStrategy::weighted(1.0, 1.0);
        let mut reg = OverlayRegistry::new(net.len());
        let mut w = start(&net, &mut reg, 0, strategy, 17);
        for _ in 0..3 {
            if w.is_active() {
                w.step(&net, &mut reg).unwrap();
            }
        }
        let marked: std::collections::BTreeSet<NodeId> = w.marked_nodes().into_iter().collect();
        let second: std::collections::BTreeSet<NodeId> = marked
            .iter()
            .flat_map(|&m| net.adj(m).iter().copied())
            .collect();
        assert_eq!(
            w.second_marked_nodes().unwrap(),
            second.iter().copied().collect::<Vec<_>>()
        );
        for v in 0..net.len() {
            let a = net.adj(v).iter().filter(|x| marked.contains(x)).count();
            let b = net.adj(v).iter().filter(|x| second.contains(x)).count();
            assert_eq!(cost_weighted(&net, &w, v, 1.0, 1.0), (a + b) as f64);
        }
    }

    #[test]
    fn intersection_takes_precedence_over_cost() {
        // Head 1 has candidates 2 (owned by walk 0) and 3 (cheaper).
        let net = graph(5, &[(0, 1), (1, 2), (1, 3), (2, 4), (0, 4)]);
        let mut reg = OverlayRegistry::new(5);
        let seed = seed_for_first_hop(&net, 0, 1, CostStrategy::FirstNeighborhood);
        let mut w = start(&net, &mut reg, 0, CostStrategy::FirstNeighborhood, seed);
        reg.register_member(2, WalkId(0));
        assert_eq!(
            w.step(&net, &mut reg).unwrap(),
            StepOutcome::Intersected {
                broker: 2,
                other_walk: WalkId(0)
            }
        );
        assert_eq!(
            w.status(),
            WalkStatus::Intersected {
                broker: 2,
                other: WalkId(0)
            }
        );
        assert!(reg.is_broker(2));
    }

    // 0-1-2-3 dead end, 1-4-5-6 with 6 owned by walk 0.
    fn dead_end_graph() -> Network {
        graph(7, &[(0, 1), (1, 2), (2, 3), (1, 4), (4, 5), (5, 6)])
    }

    #[test]
    fn dead_end_backtracks_to_nearest_branch() {
        let net = dead_end_graph();
        let (mut seen_spur, mut seen_direct) = (false, false);
        for seed in 0..64 {
            let mut reg = OverlayRegistry::new(7);
            reg.register_member(6, WalkId(0));
            let mut w = start(&net, &mut reg, 0, CostStrategy::FirstNeighborhood, seed);
            assert_eq!(w.path(), &[0, 1]);
            let first = w.step(&net, &mut reg).unwrap();
            let mut outcomes = vec![first];
            while w.is_active() {
                outcomes.push(w.step(&net, &mut reg).unwrap());
            }
            use StepOutcome::*;
            let done = Intersected {
                broker: 6,
                other_walk: WalkId(0),
            };
            if first == Extended(2) {
                seen_spur = true;
                assert_eq!(
                    outcomes,
                    vec![
                        Extended(2),
                        Extended(3),
                        Backtracked(3),
                        Backtracked(2),
                        Extended(4),
                        Extended(5),
                        done
                    ]
                );
                assert_eq!(w.recruited(), &[0, 1, 2, 3, 4, 5, 6]);
                assert_eq!(w.path(), &[0, 1, 4, 5, 6]);
                assert_eq!(w.backtracks(), 2);
            } else {
                seen_direct = true;
                assert_eq!(outcomes, vec![Extended(4), Extended(5), done]);
            }
        }
        assert!(seen_spur && seen_direct);
    }

    #[test]
    fn marking_is_lagged_by_one_node() {
        let net = dead_end_graph();
        let mut reg = OverlayRegistry::new(7);
        reg.register_member(6, WalkId(0));
        let mut w = start(&net, &mut reg, 0, CostStrategy::FirstNeighborhood, 0);
        assert!(w.marked_nodes().is_empty());
        w.step(&net, &mut reg).unwrap();
        assert_eq!(w.marked_nodes(), net.adj(0).to_vec());
        w.step(&net, &mut reg).unwrap();
        let mut expect: Vec<NodeId> = net.adj(0).iter().chain(net.adj(1)).copied().collect();
        expect.sort_unstable();
        expect.dedup();
        assert_eq!(w.marked_nodes(), expect);
    }

    #[test]
    fn eager_marking_includes_head() {
        let net = dead_end_graph();
        let mut reg = OverlayRegistry::new(7);
        let mut cfg = WalkConfig::new(CostStrategy::FirstNeighborhood);
        cfg.marking = MarkingMode::Eager;
        let (mut w, _) =
            init_walk(&net, 0, WalkId(1), &mut reg, cfg, rng::stream(0, "w", 1)).unwrap();
        reg.register_member(6, WalkId(0));
        w.step(&net, &mut reg).unwrap();
        let mut expect: Vec<NodeId> = net.adj(0).iter().chain(net.adj(1)).copied().collect();
        expect.sort_unstable();
        expect.dedup();
        assert_eq!(w.marked_nodes(), expect);
    }

    #[test]
    fn saturated_graph_exhausts() {
        // Walk covers the whole path graph with no other walk to meet.
        let net = graph(4, &[(0, 1), (1, 2), (2, 3)]);
        let mut reg = OverlayRegistry::new(4);
        let mut w = start(&net, &mut reg, 0, CostStrategy::FirstNeighborhood, 0);
        assert_eq!(
            w.run_until_stop(&net, &mut reg, 100).unwrap_err(),
            WalkError::Exhausted(WalkId(1))
        );
        assert_eq!(w.status(), WalkStatus::Exhausted);
        assert_eq!(
            w.step(&net, &mut reg).unwrap_err(),
            WalkError::NotActive(WalkId(1))
        );
    }

    #[test]
    fn zero_budget_on_active_walk_fails() {
        let net = dead_end_graph();
        let mut reg = OverlayRegistry::new(7);
        reg.register_member(6, WalkId(0));
        let mut w = start(&net, &mut reg, 0, CostStrategy::FirstNeighborhood, 0);
        assert_eq!(
            w.run_until_stop(&net, &mut reg, 0).unwrap_err(),
            WalkError::StepBudgetExceeded {
                walk: WalkId(1),
                budget: 0
            }
        );
    }

    #[test]
    fn already_intersected_walk_stops_without_steps() {
        let net = dead_end_graph();
        let mut reg = OverlayRegistry::new(7);
        reg.register_member(1, WalkId(0));
        let mut w = start(&net, &mut reg, 0, CostStrategy::FirstNeighborhood, 0);
        w.run_until_stop(&net, &mut reg, 0).unwrap();
        assert_eq!(w.steps(), 0);
    }

    #[test]
    fn terminates_against_static_walk() {
        for seed in 0..100u64 {
            let net = generate_network(&GraphGenConfig::new(
                200,
                0.05 * (1000.0f64 / 200.0).sqrt(),
                seed,
            ))
            .unwrap();
            let mut reg = OverlayRegistry::new(net.len());
            let cfg = WalkConfig::new(CostStrategy::FirstNeighborhood);
            let (w0, _) =
                init_walk(&net, 0, WalkId(0), &mut reg, cfg, rng::stream(seed, "w", 0)).unwrap();
            let target = (1..net.len()).find(|&v| !w0.is_member(v)).unwrap();
            let (mut w1, _) = init_walk(
                &net,
                target,
                WalkId(1),
                &mut reg,
                cfg,
                rng::stream(seed, "w", 1),
            )
            .unwrap();
            w1.run_until_stop(&net, &mut reg, 10 * net.len()).unwrap();
            assert!(matches!(
                w1.status(),
                WalkStatus::Intersected {
                    other: WalkId(0),
                    ..
                }
            ));
        }
    }

    #[test]
    fn pure_choice_is_uniform() {
        // Star: head 0 reached from leaf 1 has candidates 2..=6.
        let net = graph(7, &[(1, 0), (0, 2), (0, 3), (0, 4), (0, 5), (0, 6)]);
        let mut counts = [0usize; 7];
        let trials = 10_000;
        for seed in 0..trials {
            let mut reg = OverlayRegistry::new(7);
            let mut w = start(&net, &mut reg, 1, CostStrategy::Pure, seed);
            if let StepOutcome::Extended(v) = w.step(&net, &mut reg).unwrap() {
                counts[v] += 1;
            }
        }
        let expected = trials as f64 / 5.0;
        let chi2: f64 = (2..7)
            .map(|v| (counts[v] as f64 - expected).powi(2) / expected)
            .sum();
        // 4 degrees of freedom, p = 0.001.
        assert!(chi2 < 18.47, "chi2 = {chi2}, counts = {counts:?}");
    }

    #[test]
    fn free_roaming_pure_walk_revisits() {
        let net = graph(4, &[(0, 1), (1, 2), (2, 3)]);
        let mut reg = OverlayRegistry::new(4);
        reg.register_member(3, WalkId(0));
        let mut cfg = WalkConfig::new(CostStrategy::Pure);
        cfg.free_roaming = true;
        let (mut w, _) =
            init_walk(&net, 0, WalkId(1), &mut reg, cfg, rng::stream(5, "w", 1)).unwrap();
        w.run_until_stop(&net, &mut reg, 10_000).unwrap();
        assert_eq!(
            w.status(),
            WalkStatus::Intersected {
                broker: 3,
                other: WalkId(0)
            }
        );
        assert_eq!(w.backtracks(), 0);
        assert!(w.path().windows(2).all(|p| net.are_adjacent(p[0], p[1])));
    }

    #[test]
    fn strategy_tokens() {
        assert_eq!(
            CostStrategy::from_token("drw", 1.0, 1.0).unwrap(),
            CostStrategy::FirstNeighborhood
        );
        assert_eq!(
            CostStrategy::from_token("prw", 1.0, 1.0).unwrap(),
            CostStrategy::Pure
        );
        assert_eq!(
            CostStrategy::from_token("twohop", 1.0, 1.0)
                .unwrap()
                .label(),
            "twohop"
        );
        assert_eq!(
            CostStrategy::from_token("weighted", 1.0, 1.0)
                .unwrap()
                .label(),
            "weighted"
        );
        assert_eq!(CostStrategy::weighted(2.0, 0.5).label(), "weighted-a2-b0.5");
        assert!(CostStrategy::from_token("weighted", -1.0, 1.0).is_err());
        assert!(CostStrategy::from_token("bogus", 1.0, 1.0).is_err());
    }
}
