//! Seeded replication sweeps over network size, initiator count and
//! strategy, with CSV output and per-cell box statistics.
//!
//! Seeds are pure functions of the cell coordinates: the network for
//! replication `k` at size `n` depends only on `(base_seed, n, r, k)`, and the
//! initiators and walk streams only on that network seed and the initiator
//! count. Every strategy therefore runs on the same networks and the same
//! initiators, which pairs the samples across strategies.

use std::collections::HashMap;
use std::io::{self, Read, Write};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom_graph::{generate_network, GraphGenConfig, Network, DEFAULT_MAX_ATTEMPTS};
use crate::metrics::{self, BoxStats, MetricsError};
use crate::overlay::{build_overlay, OverlayBuildConfig, PairPhaseMode};
use crate::rng::derive_seed;
use crate::walk::{CostStrategy, MarkingMode, WalkConfig};

/// Initiator counts swept at 1000 nodes.
pub const INITIATORS_1000: [usize; 20] = [
    2, 3, 4, 5, 6, 7, 8, 9, 10, 20, 30, 40, 50, 75, 100, 250, 500, 625, 750, 875,
];
/// Initiator counts swept at 2000 nodes.
pub const INITIATORS_2000: [usize; 21] = [
    2, 3, 4, 5, 6, 7, 8, 9, 10, 20, 30, 40, 50, 75, 100, 250, 500, 1000, 1250, 1500, 1750,
];
/// Initiator counts swept at 3000 nodes.
pub const INITIATORS_3000: [usize; 22] = [
    2, 3, 4, 5, 6, 7, 8, 9, 10, 20, 30, 40, 50, 75, 100, 250, 500, 1000, 1500, 1875, 2250, 2625,
];

pub const DEFAULT_RADIUS: f64 = 0.05;
pub const FULL_REPLICATIONS: usize = 100;
pub const MIN_REPLICATIONS: usize = 10;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid scenario: {0}")]
    InvalidConfig(String),
    #[error("no successful records to summarize")]
    EmptyGroup,
    #[error("malformed records: {0}")]
    Malformed(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl From<MetricsError> for ExperimentError {
    fn from(_: MetricsError) -> Self {
        ExperimentError::EmptyGroup
    }
}

/// Radius used for a given network size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum RadiusRule {
    Fixed {
        r: f64,
    },
    /// Keeps the mean degree `n·π·r²` of the reference setting:
    /// `r = reference_r · √(reference_n / n)`.
    DensityMatched {
        reference_n: usize,
        reference_r: f64,
    },
}

impl RadiusRule {
    pub fn radius_for(&self, n: usize) -> f64 {
        match *self {
            RadiusRule::Fixed { r } => r,
            RadiusRule::DensityMatched {
                reference_n,
                reference_r,
            } => reference_r * (reference_n as f64 / n as f64).sqrt(),
        }
    }
}

/// Network size with the initiator counts swept at that size.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SizeCell {
    pub n: usize,
    pub initiator_counts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub sizes: Vec<SizeCell>,
    pub radius: RadiusRule,
    pub strategies: Vec<CostStrategy>,
    pub replications: usize,
    pub base_seed: u64,
    pub step_budget: Option<usize>,
    pub max_attempts: usize,
    pub marking: MarkingMode,
    pub pair_phase: PairPhaseMode,
    /// Informational; echoed in the CSV header.
    pub scale: f64,
    /// Fill `wall_time_ms`; off keeps the output byte-reproducible.
    pub record_wall_time: bool,
}

impl ScenarioConfig {
    /// Same initiator counts at every size, fixed radius.
    pub fn uniform(
        n_values: &[usize],
        r: f64,
        initiator_counts: &[usize],
        replications: usize,
    ) -> Self {
        ScenarioConfig {
            sizes: n_values
                .iter()
                .map(|&n| SizeCell {
                    n,
                    initiator_counts: initiator_counts.to_vec(),
                })
                .collect(),
            radius: RadiusRule::Fixed { r },
            strategies: vec![CostStrategy::FirstNeighborhood, CostStrategy::Pure],
            replications,
            base_seed: 0,
            step_budget: None,
            max_attempts: DEFAULT_MAX_ATTEMPTS,
            marking: MarkingMode::Lagged,
            pair_phase: PairPhaseMode::LockStep,
            scale: 1.0,
            record_wall_time: false,
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::InvalidConfig(m));
        if self.replications == 0 {
            return bad("replications must be >= 1".into());
        }
        if self.sizes.is_empty() || self.strategies.is_empty() {
            return bad("need at least one network size and one strategy".into());
        }
        for cell in &self.sizes {
            if cell.n < 2 {
                return bad(format!("n must be >= 2, got {}", cell.n));
            }
            if let Some(&i) = cell.initiator_counts.iter().find(|&&i| i < 2 || i > cell.n) {
                return bad(format!("initiator count {i} not in [2, {}]", cell.n));
            }
        }
        for s in &self.strategies {
            s.validate().map_err(ExperimentError::InvalidConfig)?;
        }
        Ok(())
    }

    /// Number of `(n, initiators)` cells.
    pub fn network_cell_count(&self) -> usize {
        self.sizes.iter().map(|c| c.initiator_counts.len()).sum()
    }

    /// Number of `(n, initiators, strategy)` cells.
    pub fn cell_count(&self) -> usize {
        self.network_cell_count() * self.strategies.len()
    }

    pub fn record_count(&self) -> usize {
        self.cell_count() * self.replications
    }
}

fn scaled_replications(scale: f64) -> usize {
    ((FULL_REPLICATIONS as f64 * scale).round() as usize).max(MIN_REPLICATIONS)
}

fn check_scale(scale: f64) -> Result<(), ExperimentError> {
    if !(scale > 0.0 && scale <= 1.0) {
        return Err(ExperimentError::InvalidConfig(format!(
            "scale must be in (0, 1], got {scale}"
        )));
    }
    Ok(())
}

fn keep_up_to(counts: &[usize], limit: f64) -> Vec<usize> {
    counts
        .iter()
        .copied()
        .filter(|&i| i as f64 <= limit)
        .collect()
}

/// The full sweep (n ∈ {1000, 2000, 3000}, r = 0.05, 100 networks per cell)
/// shrunk by `scale`: fewer replications (at least 10) and only initiator
/// counts up to `scale · n`.
pub fn full_scenario(scale: f64) -> Result<ScenarioConfig, ExperimentError> {
    check_scale(scale)?;
    let lists: [(usize, &[usize]); 3] = [
        (1000, &INITIATORS_1000),
        (2000, &INITIATORS_2000),
        (3000, &INITIATORS_3000),
    ];
    let mut cfg = ScenarioConfig::uniform(&[], DEFAULT_RADIUS, &[], scaled_replications(scale));
    cfg.sizes = lists
        .iter()
        .map(|&(n, counts)| SizeCell {
            n,
            initiator_counts: keep_up_to(counts, scale * n as f64),
        })
        .collect();
    cfg.scale = scale;
    Ok(cfg)
}

/// Smaller networks (200, 500, 1000 nodes) with the radius rescaled to keep
/// the mean degree of the 1000-node, r = 0.05 setting.
pub fn desk_scenario(scale: f64) -> Result<ScenarioConfig, ExperimentError> {
    check_scale(scale)?;
    let mut cfg = ScenarioConfig::uniform(&[], DEFAULT_RADIUS, &[], scaled_replications(scale));
    cfg.sizes = [200, 500, 1000]
        .iter()
        .map(|&n| SizeCell {
            n,
            initiator_counts: keep_up_to(&INITIATORS_1000, scale * n as f64),
        })
        .collect();
    cfg.radius = RadiusRule::DensityMatched {
        reference_n: 1000,
        reference_r: DEFAULT_RADIUS,
    };
    cfg.scale = scale;
    Ok(cfg)
}

/// Seed of the network used by replication `rep` at size `n`.
pub fn network_seed(base_seed: u64, n: usize, r: f64, rep: usize) -> u64 {
    let cell = derive_seed(base_seed, "cell", (n as u64) ^ r.to_bits().rotate_left(17));
    derive_seed(cell, "replication", rep as u64)
}

/// Seed of the overlay build (initiators and walks) on a given network.
pub fn overlay_seed(network_seed: u64, initiators: usize) -> u64 {
    derive_seed(network_seed, "overlay", initiators as u64)
}

/// One row of the records CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub n: usize,
    pub r: f64,
    pub strategy: String,
    pub initiators: usize,
    pub rep: usize,
    pub seed: u64,
    pub active_path_size: usize,
    /// Rounded to 6 decimals, as written.
    pub depth: f64,
    pub total_steps: usize,
    pub total_backtracks: usize,
    pub failed: bool,
    pub wall_time_ms: f64,
}

fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

/// Runs every cell and replication. Output order is fixed (size, initiator
/// count, strategy, replication) whatever the worker count.
pub fn run_scenario(
    cfg: &ScenarioConfig,
    jobs: usize,
) -> Result<Vec<ExperimentRecord>, ExperimentError> {
    cfg.validate()?;
    let units: Vec<(usize, usize)> = (0..cfg.sizes.len())
        .flat_map(|s| (0..cfg.replications).map(move |rep| (s, rep)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| ExperimentError::InvalidConfig(e.to_string()))?;
    let mut keyed: Vec<((usize, usize, usize, usize), ExperimentRecord)> = pool.install(|| {
        units
            .par_iter()
            .flat_map_iter(|&(s, rep)| run_unit(cfg, s, rep))
            .collect()
    });
    keyed.sort_by_key(|(k, _)| *k);
    Ok(keyed.into_iter().map(|(_, r)| r).collect())
}

/// All rows for one network (one size, one replication).
fn run_unit(
    cfg: &ScenarioConfig,
    size_idx: usize,
    rep: usize,
) -> Vec<((usize, usize, usize, usize), ExperimentRecord)> {
    let cell = &cfg.sizes[size_idx];
    let r = cfg.radius.radius_for(cell.n);
    let seed = network_seed(cfg.base_seed, cell.n, r, rep);
    let mut gen_cfg = GraphGenConfig::new(cell.n, r, seed);
    gen_cfg.max_attempts = cfg.max_attempts;
    let net = generate_network(&gen_cfg).ok();

    let mut out = Vec::with_capacity(cell.initiator_counts.len() * cfg.strategies.len());
    for (ci, &count) in cell.initiator_counts.iter().enumerate() {
        for (si, strategy) in cfg.strategies.iter().enumerate() {
            let record = match &net {
                Some(net) => run_build(cfg, net, *strategy, count, rep, seed),
                None => failed_record(cell.n, r, strategy, count, rep, seed),
            };
            out.push(((size_idx, ci, si, rep), record));
        }
    }
    out
}

fn failed_record(
    n: usize,
    r: f64,
    strategy: &CostStrategy,
    count: usize,
    rep: usize,
    seed: u64,
) -> ExperimentRecord {
    ExperimentRecord {
        n,
        r,
        strategy: strategy.label(),
        initiators: count,
        rep,
        seed,
        active_path_size: 0,
        depth: 0.0,
        total_steps: 0,
        total_backtracks: 0,
        failed: true,
        wall_time_ms: 0.0,
    }
}

fn run_build(
    cfg: &ScenarioConfig,
    net: &Network,
    strategy: CostStrategy,
    count: usize,
    rep: usize,
    seed: u64,
) -> ExperimentRecord {
    let mut walk = WalkConfig::new(strategy);
    walk.marking = cfg.marking;
    let mut build_cfg = OverlayBuildConfig::new(count, walk, overlay_seed(seed, count));
    build_cfg.step_budget = cfg.step_budget;
    build_cfg.pair_phase = cfg.pair_phase;

    let started = Instant::now();
    let built = build_overlay(net, &build_cfg);
    let elapsed = started.elapsed().as_secs_f64() * 1e3;
    let mut rec = failed_record(net.len(), net.radius(), &strategy, count, rep, seed);
    if let Ok(res) = built {
        let depth = metrics::depth(&res, net).map(|d| d.value()).unwrap_or(0.0);
        rec.active_path_size = metrics::active_path_size(&res);
        rec.depth = round6(depth);
        rec.total_steps = res.total_steps();
        rec.total_backtracks = res.total_backtracks();
        rec.failed = false;
    }
    if cfg.record_wall_time {
        rec.wall_time_ms = (elapsed * 1e3).round() / 1e3;
    }
    rec
}

/// `(n, initiators, strategy)` cells in which every replication failed.
pub fn wholly_failed_cells(records: &[ExperimentRecord]) -> Vec<(usize, usize, String)> {
    let mut seen: Vec<((usize, usize, String), bool)> = Vec::new();
    let mut index: HashMap<(usize, usize, String), usize> = HashMap::new();
    for rec in records {
        let key = (rec.n, rec.initiators, rec.strategy.clone());
        let i = *index.entry(key.clone()).or_insert_with(|| {
            seen.push((key, true));
            seen.len() - 1
        });
        seen[i].1 &= rec.failed;
    }
    seen.into_iter()
        .filter(|(_, all)| *all)
        .map(|(k, _)| k)
        .collect()
}

pub const RECORD_COLUMNS: [&str; 12] = [
    "n",
    "r",
    "strategy",
    "initiators",
    "rep",
    "seed",
    "active_path_size",
    "depth",
    "total_steps",
    "total_backtracks",
    "failed",
    "wall_time_ms",
];

/// Writes the metadata comment block, header, and one row per record.
pub fn write_records_csv<W: Write>(
    mut out: W,
    cfg: &ScenarioConfig,
    records: &[ExperimentRecord],
) -> Result<(), ExperimentError> {
    writeln!(out, "# drwnet experiment records")?;
    writeln!(out, "# version: {}", env!("CARGO_PKG_VERSION"))?;
    writeln!(out, "# scale: {}", cfg.scale)?;
    let radii: Vec<String> = cfg
        .sizes
        .iter()
        .map(|c| format!("n={} r={}", c.n, cfg.radius.radius_for(c.n)))
        .collect();
    writeln!(out, "# radius: {}", radii.join(", "))?;
    if let RadiusRule::DensityMatched {
        reference_n,
        reference_r,
    } = cfg.radius
    {
        writeln!(
            out,
            "# deviation: radius rescaled per size to match the mean degree of n={reference_n}, r={reference_r}"
        )?;
    }
    writeln!(
        out,
        "# pairing: all strategies share the network and initiator seeds of a replication"
    )?;
    writeln!(
        out,
        "# depth: 6 decimals; wall_time_ms: {}",
        if cfg.record_wall_time {
            "measured"
        } else {
            "disabled (0)"
        }
    )?;
    writeln!(
        out,
        "# config: {}",
        serde_json::to_string(cfg).expect("config serializes")
    )?;

    let mut w = csv::Writer::from_writer(out);
    w.write_record(RECORD_COLUMNS)?;
    for rec in records {
        w.write_record([
            rec.n.to_string(),
            rec.r.to_string(),
            rec.strategy.clone(),
            rec.initiators.to_string(),
            rec.rep.to_string(),
            rec.seed.to_string(),
            rec.active_path_size.to_string(),
            format!("{:.6}", rec.depth),
            rec.total_steps.to_string(),
            rec.total_backtracks.to_string(),
            u8::from(rec.failed).to_string(),
            format!("{:.3}", rec.wall_time_ms),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Deserialize)]
struct RawRecord {
    n: usize,
    r: f64,
    strategy: String,
    initiators: usize,
    rep: usize,
    seed: u64,
    active_path_size: usize,
    depth: f64,
    total_steps: usize,
    total_backtracks: usize,
    failed: u8,
    wall_time_ms: f64,
}

/// Parses a records CSV; `#` lines are skipped.
pub fn read_records_csv<R: Read>(input: R) -> Result<Vec<ExperimentRecord>, ExperimentError> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(input);
    let headers = reader.headers()?.clone();
    if headers.iter().ne(RECORD_COLUMNS.iter().copied()) {
        return Err(ExperimentError::Malformed(format!(
            "unexpected header: {:?}",
            headers.iter().collect::<Vec<_>>()
        )));
    }
    let mut out = Vec::new();
    for row in reader.deserialize::<RawRecord>() {
        let raw = row.map_err(|e| ExperimentError::Malformed(e.to_string()))?;
        if raw.failed > 1 {
            return Err(ExperimentError::Malformed(format!(
                "failed flag must be 0 or 1, got {}",
                raw.failed
            )));
        }
        out.push(ExperimentRecord {
            n: raw.n,
            r: raw.r,
            strategy: raw.strategy,
            initiators: raw.initiators,
            rep: raw.rep,
            seed: raw.seed,
            active_path_size: raw.active_path_size,
            depth: raw.depth,
            total_steps: raw.total_steps,
            total_backtracks: raw.total_backtracks,
            failed: raw.failed == 1,
            wall_time_ms: raw.wall_time_ms,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupKey {
    N,
    R,
    Strategy,
    Initiators,
}

impl GroupKey {
    pub fn name(self) -> &'static str {
        match self {
            GroupKey::N => "n",
            GroupKey::R => "r",
            GroupKey::Strategy => "strategy",
            GroupKey::Initiators => "initiators",
        }
    }

    pub fn parse(s: &str) -> Result<Self, ExperimentError> {
        match s.trim() {
            "n" => Ok(GroupKey::N),
            "r" => Ok(GroupKey::R),
            "strategy" => Ok(GroupKey::Strategy),
            "initiators" => Ok(GroupKey::Initiators),
            other => Err(ExperimentError::InvalidConfig(format!(
                "unknown group key {other:?}"
            ))),
        }
    }

    /// Parses a comma-separated key list such as `n,strategy,initiators`.
    pub fn parse_list(s: &str) -> Result<Vec<Self>, ExperimentError> {
        s.split(',')
            .filter(|t| !t.trim().is_empty())
            .map(GroupKey::parse)
            .collect()
    }

    fn value(self, rec: &ExperimentRecord) -> String {
        match self {
            GroupKey::N => rec.n.to_string(),
            GroupKey::R => rec.r.to_string(),
            GroupKey::Strategy => rec.strategy.clone(),
            GroupKey::Initiators => rec.initiators.to_string(),
        }
    }
}

pub const DEFAULT_GROUP: [GroupKey; 3] = [GroupKey::N, GroupKey::Strategy, GroupKey::Initiators];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    ActivePathSize,
    Depth,
    TotalSteps,
    TotalBacktracks,
}

impl Metric {
    pub const ALL: [Metric; 4] = [
        Metric::ActivePathSize,
        Metric::Depth,
        Metric::TotalSteps,
        Metric::TotalBacktracks,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::ActivePathSize => "active_path_size",
            Metric::Depth => "depth",
            Metric::TotalSteps => "total_steps",
            Metric::TotalBacktracks => "total_backtracks",
        }
    }

    pub fn of(self, rec: &ExperimentRecord) -> f64 {
        match self {
            Metric::ActivePathSize => rec.active_path_size as f64,
            Metric::Depth => rec.depth,
            Metric::TotalSteps => rec.total_steps as f64,
            Metric::TotalBacktracks => rec.total_backtracks as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub group: Vec<String>,
    pub metric: Metric,
    pub stats: BoxStats,
}

/// One [`BoxStats`] per group and metric over the successful records.
///
/// Groups appear in order of first occurrence; groups whose records all
/// failed are left out.
pub fn summarize(
    records: &[ExperimentRecord],
    keys: &[GroupKey],
) -> Result<Vec<SummaryRow>, ExperimentError> {
    let mut groups: Vec<(Vec<String>, Vec<&ExperimentRecord>)> = Vec::new();
    let mut index: HashMap<Vec<String>, usize> = HashMap::new();
    for rec in records.iter().filter(|r| !r.failed) {
        let key: Vec<String> = keys.iter().map(|k| k.value(rec)).collect();
        let i = *index.entry(key.clone()).or_insert_with(|| {
            groups.push((key, Vec::new()));
            groups.len() - 1
        });
        groups[i].1.push(rec);
    }
    if groups.is_empty() {
        return Err(ExperimentError::EmptyGroup);
    }
    let mut rows = Vec::with_capacity(groups.len() * Metric::ALL.len());
    for (group, members) in groups {
        for metric in Metric::ALL {
            let samples: Vec<f64> = members.iter().map(|r| metric.of(r)).collect();
            rows.push(SummaryRow {
                group: group.clone(),
                metric,
                stats: metrics::box_stats(&samples)?,
            });
        }
    }
    Ok(rows)
}

pub fn write_summary_csv<W: Write>(
    out: W,
    keys: &[GroupKey],
    rows: &[SummaryRow],
) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = keys.iter().map(|k| k.name()).collect();
    header.extend([
        "metric",
        "min",
        "q1",
        "median",
        "q3",
        "max",
        "lo_whisker",
        "hi_whisker",
        "outlier_count",
        "count",
    ]);
    w.write_record(&header)?;
    for row in rows {
        let s = &row.stats;
        let mut fields = row.group.clone();
        fields.push(row.metric.name().to_string());
        fields.extend(
            [
                s.min,
                s.q1,
                s.median,
                s.q3,
                s.max,
                s.lower_whisker,
                s.upper_whisker,
            ]
            .iter()
            .map(|v| format!("{v:.6}")),
        );
        fields.push(s.outliers.len().to_string());
        fields.push(s.count.to_string());
        w.write_record(&fields)?;
    }
    w.flush()?;
    Ok(())
}
