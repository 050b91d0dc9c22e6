//! Overlay layers for distributed event-based systems, built by intersecting
//! directional random walks (DRWs) on connected unit-disk networks.
//!
//! Publishers and subscribers each launch a walk. A walk grows a loop-free
//! path, marks the neighborhoods of the nodes it has passed, and prefers
//! candidates with few marked neighbors, which pushes it away from the area
//! it already covers. A walk stops when it reaches a node owned by another
//! walk; that node becomes a broker. The union of all walks is the active
//! path of the overlay.
//!
//! The crate is organized bottom-up:
//!
//! - [`geom_graph`]: uniform random placement, unit-disk adjacency,
//!   connectivity, and network diameter.
//! - [`walk`]: a single walker with pluggable cost strategies, including the
//!   pure random walk baseline.
//! - [`registry`] and [`overlay`]: membership bookkeeping and the
//!   pair-then-sequential construction of the whole overlay.
//! - [`metrics`]: active-path size, depth, and Tukey box statistics.
//! - [`experiments`]: seeded replication sweeps with CSV output.
//!
//! Every random decision is drawn from a stream derived from a 64-bit seed
//! and a label (see [`rng`]), so identical inputs give bit-identical outputs.

pub mod experiments;
pub mod geom_graph;
mod hull;
pub mod metrics;
pub mod overlay;
pub mod registry;
pub mod rng;
pub mod walk;

pub use geom_graph::{generate_network, GraphError, GraphGenConfig, Network, NodeId, Point};
pub use metrics::{active_path_size, box_stats, depth, BoxStats, DepthValue, MetricsError};
pub use overlay::{
    build_overlay, build_overlay_with_initiators, select_initiators, OverlayBuildConfig,
    OverlayError, OverlayResult, PairPhaseMode,
};
pub use registry::OverlayRegistry;
pub use walk::{
    CostStrategy, MarkingMode, StepOutcome, WalkConfig, WalkError, WalkId, WalkState, WalkStatus,
};
