//! Construction of the whole overlay from a set of initiators.
//!
//! The first two walks start together and are advanced in strict
//! alternation (walk 0, then walk 1) until one of them meets the other.
//! Every further initiator then launches a walk that runs to intersection
//! against everything built so far before the next walk starts.

use std::collections::BTreeSet;

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::geom_graph::{Network, NodeId};
use crate::registry::OverlayRegistry;
use crate::rng::{self, SimRng};
use crate::walk::{
    init_walk, StepOutcome, TraceRecord, WalkConfig, WalkError, WalkId, WalkState, WalkStatus,
};

/// Step budget per walk, as a multiple of the node count.
pub const DEFAULT_BUDGET_FACTOR: usize = 50;

/// Scheduling of the first two walks once one of them intersects.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PairPhaseMode {
    /// The partner stops at the same broker.
    #[default]
    LockStep,
    /// The partner keeps walking until it meets a walk on its own.
    LockStepContinue,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverlayBuildConfig {
    pub initiator_count: usize,
    pub walk: WalkConfig,
    pub seed: u64,
    /// Per-walk step cap; `None` means `DEFAULT_BUDGET_FACTOR · n`.
    pub step_budget: Option<usize>,
    pub pair_phase: PairPhaseMode,
}

impl OverlayBuildConfig {
    pub fn new(initiator_count: usize, walk: WalkConfig, seed: u64) -> Self {
        OverlayBuildConfig {
            initiator_count,
            walk,
            seed,
            step_budget: None,
            pair_phase: PairPhaseMode::LockStep,
        }
    }

    pub fn budget_for(&self, net: &Network) -> usize {
        self.step_budget
            .unwrap_or(DEFAULT_BUDGET_FACTOR * net.len())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OverlayError {
    #[error("need between 2 and {n} initiators, got {requested}")]
    TooManyInitiators { requested: usize, n: usize },
    #[error("invalid initiators: {0}")]
    InvalidInitiators(String),
    #[error("invalid strategy: {0}")]
    InvalidStrategy(String),
    #[error("walk {walk} failed: {cause}")]
    BuildFailed { walk: WalkId, cause: WalkError },
}

/// Everything a build produced.
#[derive(Debug, Clone)]
pub struct OverlayResult {
    pub walks: Vec<WalkState>,
    pub active_path: BTreeSet<NodeId>,
    /// Recruitment hops of all walks, stored with the smaller id first.
    pub active_path_edges: BTreeSet<(NodeId, NodeId)>,
    pub brokers: BTreeSet<NodeId>,
    pub initiators: Vec<NodeId>,
    pub per_walk_steps: Vec<usize>,
    pub per_walk_backtracks: Vec<usize>,
}

/// Samples `count` distinct initiators uniformly without replacement.
pub fn select_initiators(
    net: &Network,
    count: usize,
    rng: &mut impl Rng,
) -> Result<Vec<NodeId>, OverlayError> {
    let n = net.len();
    if count < 2 || count > n {
        return Err(OverlayError::TooManyInitiators {
            requested: count,
            n,
        });
    }
    Ok(rand::seq::index::sample(rng, n, count).into_vec())
}

/// Builds an overlay, drawing the initiators from the config seed.
pub fn build_overlay(
    net: &Network,
    cfg: &OverlayBuildConfig,
) -> Result<OverlayResult, OverlayError> {
    let mut rng = rng::stream(cfg.seed, "initiators", 0);
    let initiators = select_initiators(net, cfg.initiator_count, &mut rng)?;
    build_overlay_with_initiators(net, &initiators, cfg)
}

/// Builds an overlay from explicit initiators, in launch order.
///
/// `cfg.initiator_count` is ignored in favor of `initiators.len()`.
pub fn build_overlay_with_initiators(
    net: &Network,
    initiators: &[NodeId],
    cfg: &OverlayBuildConfig,
) -> Result<OverlayResult, OverlayError> {
    validate_initiators(net, initiators)?;
    cfg.walk
        .strategy
        .validate()
        .map_err(OverlayError::InvalidStrategy)?;
    let budget = cfg.budget_for(net);
    let mut registry = OverlayRegistry::new(net.len());
    let walk_rng = |i: usize| -> SimRng { rng::stream(cfg.seed, "walk", i as u64) };
    let start = |i: usize, registry: &mut OverlayRegistry| {
        init_walk(
            net,
            initiators[i],
            WalkId(i as u32),
            registry,
            cfg.walk,
            walk_rng(i),
        )
        .map_err(|cause| OverlayError::BuildFailed {
            walk: WalkId(i as u32),
            cause,
        })
    };

    let (mut first, _) = start(0, &mut registry)?;
    let (mut second, opening) = start(1, &mut registry)?;
    if let Some(StepOutcome::Intersected { broker, .. }) = opening {
        first.halt_at(broker, second.id());
    } else {
        pair_phase(
            net,
            &mut registry,
            &mut first,
            &mut second,
            budget,
            cfg.pair_phase,
        )?;
    }

    let mut walks = vec![first, second];
    for i in 2..initiators.len() {
        let (mut walk, _) = start(i, &mut registry)?;
        walk.run_until_stop(net, &mut registry, budget)
            .map_err(|cause| OverlayError::BuildFailed {
                walk: walk.id(),
                cause,
            })?;
        walks.push(walk);
    }

    Ok(OverlayResult::assemble(
        walks,
        initiators.to_vec(),
        &registry,
    ))
}

fn validate_initiators(net: &Network, initiators: &[NodeId]) -> Result<(), OverlayError> {
    let n = net.len();
    if initiators.len() < 2 || initiators.len() > n {
        return Err(OverlayError::TooManyInitiators {
            requested: initiators.len(),
            n,
        });
    }
    let mut seen = BTreeSet::new();
    for &v in initiators {
        if v >= n {
            return Err(OverlayError::InvalidInitiators(format!(
                "node {v} out of range for n={n}"
            )));
        }
        if !seen.insert(v) {
            return Err(OverlayError::InvalidInitiators(format!(
                "node {v} listed twice"
            )));
        }
    }
    Ok(())
}

fn pair_phase(
    net: &Network,
    registry: &mut OverlayRegistry,
    a: &mut WalkState,
    b: &mut WalkState,
    budget: usize,
    mode: PairPhaseMode,
) -> Result<(), OverlayError> {
    let (walk, partner, broker) = loop {
        if let Some(broker) = advance(net, registry, a, budget)? {
            break (a, b, broker);
        }
        if let Some(broker) = advance(net, registry, b, budget)? {
            break (b, a, broker);
        }
    };
    match mode {
        PairPhaseMode::LockStep => partner.halt_at(broker, walk.id()),
        PairPhaseMode::LockStepContinue => {
            partner
                .run_until_stop(net, registry, budget)
                .map_err(|cause| OverlayError::BuildFailed {
                    walk: partner.id(),
                    cause,
                })?
        }
    }
    Ok(())
}

/// One lock-step move; returns the broker if the walk intersected.
fn advance(
    net: &Network,
    registry: &mut OverlayRegistry,
    walk: &mut WalkState,
    budget: usize,
) -> Result<Option<NodeId>, OverlayError> {
    let id = walk.id();
    let fail = |cause| OverlayError::BuildFailed { walk: id, cause };
    if walk.steps() >= budget {
        return Err(fail(WalkError::StepBudgetExceeded { walk: id, budget }));
    }
    match walk.step(net, registry).map_err(fail)? {
        StepOutcome::Intersected { broker, .. } => Ok(Some(broker)),
        StepOutcome::Exhausted => Err(fail(WalkError::Exhausted(id))),
        StepOutcome::Extended(_) | StepOutcome::Backtracked(_) => Ok(None),
    }
}

/// Serializable summary of an [`OverlayResult`].
#[derive(Debug, Clone, Serialize)]
pub struct OverlayExport {
    pub initiators: Vec<NodeId>,
    pub brokers: Vec<NodeId>,
    pub active_path: Vec<NodeId>,
    pub active_path_size: usize,
    pub total_steps: usize,
    pub total_backtracks: usize,
    pub walks: Vec<WalkExport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct WalkExport {
    pub id: WalkId,
    pub initiator: NodeId,
    pub status: WalkStatus,
    /// Final stack, initiator to broker.
    pub path: Vec<NodeId>,
    /// All members in recruitment order, dead-end spurs included.
    pub recruited: Vec<NodeId>,
    pub steps: usize,
    pub backtracks: usize,
}

impl OverlayResult {
    fn assemble(
        walks: Vec<WalkState>,
        initiators: Vec<NodeId>,
        registry: &OverlayRegistry,
    ) -> Self {
        let active_path = walks
            .iter()
            .flat_map(|w| w.recruited().iter().copied())
            .collect();
        let active_path_edges = walks
            .iter()
            .flat_map(|w| w.edges().iter().map(|&(u, v)| (u.min(v), u.max(v))))
            .collect();
        OverlayResult {
            per_walk_steps: walks.iter().map(WalkState::steps).collect(),
            per_walk_backtracks: walks.iter().map(WalkState::backtracks).collect(),
            active_path,
            active_path_edges,
            brokers: registry.brokers().clone(),
            initiators,
            walks,
        }
    }

    pub fn total_steps(&self) -> usize {
        self.per_walk_steps.iter().sum()
    }

    pub fn total_backtracks(&self) -> usize {
        self.per_walk_backtracks.iter().sum()
    }

    pub fn export(&self) -> OverlayExport {
        OverlayExport {
            initiators: self.initiators.clone(),
            brokers: self.brokers.iter().copied().collect(),
            active_path: self.active_path.iter().copied().collect(),
            active_path_size: self.active_path.len(),
            total_steps: self.total_steps(),
            total_backtracks: self.total_backtracks(),
            walks: self
                .walks
                .iter()
                .map(|w| WalkExport {
                    id: w.id(),
                    initiator: w.initiator(),
                    status: w.status(),
                    path: w.path().to_vec(),
                    recruited: w.recruited().to_vec(),
                    steps: w.steps(),
                    backtracks: w.backtracks(),
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.export()).expect("overlay export serializes")
    }

    /// Walk traces as JSON lines, walk by walk. Empty unless tracing was on.
    pub fn trace_jsonl(&self) -> String {
        let mut out = String::new();
        for rec in self.walks.iter().flat_map(|w| w.trace().iter()) {
            out.push_str(&serde_json::to_string::<TraceRecord>(rec).expect("trace serializes"));
            out.push('\n');
        }
        out
    }
}
