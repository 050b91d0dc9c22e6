use std::error::Error;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use drwnet::experiments::{self, GroupKey, ScenarioConfig, DEFAULT_GROUP};
use drwnet::{
    build_overlay, depth, generate_network, CostStrategy, GraphGenConfig, MarkingMode, Network,
    OverlayBuildConfig, PairPhaseMode, WalkConfig,
};

type CliResult = Result<(), Box<dyn Error>>;

/// Overlay construction with directional random walks on unit-disk networks.
#[derive(Debug, Parser)]
#[command(name = "drwnet", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a connected random unit-disk network and write it as JSON.
    Gen(GenArgs),
    /// Build one overlay and write the result as JSON.
    Build(BuildArgs),
    /// Run the replicated sweep and write records and summary CSVs.
    Experiment(ExperimentArgs),
    /// Summarize a records CSV to standard output.
    Stats(StatsArgs),
}

#[derive(Debug, Args)]
struct GenArgs {
    /// Number of nodes.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    n: u64,
    /// Communication radius in the unit square (clamped to sqrt 2).
    #[arg(long, value_parser = positive_f64)]
    r: f64,
    /// Seed for node placement.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Placement attempts before giving up on connectivity.
    #[arg(long, default_value_t = drwnet::geom_graph::DEFAULT_MAX_ATTEMPTS)]
    max_attempts: usize,
    /// Output JSON file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StrategyArg {
    Drw,
    Prw,
    Twohop,
    Weighted,
}

impl StrategyArg {
    fn resolve(self, alpha: f64, beta: f64) -> CostStrategy {
        match self {
            StrategyArg::Drw => CostStrategy::FirstNeighborhood,
            StrategyArg::Prw => CostStrategy::Pure,
            StrategyArg::Twohop => CostStrategy::TwoHopWeight,
            StrategyArg::Weighted => CostStrategy::weighted(alpha, beta),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MarkingArg {
    Lagged,
    Eager,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PairPhaseArg {
    Lockstep,
    Continue,
}

#[derive(Debug, Args)]
struct BuildArgs {
    /// Network JSON file written by `gen`.
    #[arg(long, conflicts_with_all = ["n", "r"], required_unless_present_all = ["n", "r"])]
    net: Option<PathBuf>,
    /// Generate the network in place with this many nodes (needs --r).
    #[arg(long, requires = "r", value_parser = clap::value_parser!(u64).range(2..))]
    n: Option<u64>,
    /// Radius for an in-place network (needs --n).
    #[arg(long, requires = "n", value_parser = positive_f64)]
    r: Option<f64>,
    /// Number of initiators launching walks.
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
    initiators: u64,
    /// Walk strategy.
    #[arg(long, value_enum, default_value_t = StrategyArg::Drw)]
    strategy: StrategyArg,
    /// Weight of marked first neighbors (weighted strategy).
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Weight of marked second neighbors (weighted strategy).
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    /// Seed for initiators and walks, and for an in-place network.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// When neighborhoods are marked.
    #[arg(long, value_enum, default_value_t = MarkingArg::Lagged)]
    marking: MarkingArg,
    /// Whether the first two walks stop together at their first meeting.
    #[arg(long, value_enum, default_value_t = PairPhaseArg::Lockstep)]
    pair_phase: PairPhaseArg,
    /// Let pure random walks revisit their own nodes.
    #[arg(long)]
    free_roaming: bool,
    /// Per-walk step budget (default 50 times the node count).
    #[arg(long)]
    budget: Option<usize>,
    /// Output JSON file for the overlay.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the per-step trace as JSON lines to this file.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    /// Fraction of the full protocol, in (0, 1].
    #[arg(long, default_value_t = 0.1, value_parser = scale_arg)]
    scale: f64,
    /// Comma-separated strategies.
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [StrategyArg::Drw, StrategyArg::Prw])]
    strategies: Vec<StrategyArg>,
    /// Weight of marked first neighbors (weighted strategy).
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Weight of marked second neighbors (weighted strategy).
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    /// Use 200, 500 and 1000 nodes with degree-matched radii.
    #[arg(long)]
    desk: bool,
    /// Base seed for all replications.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    jobs: u64,
    /// Record build wall time (makes the records CSV machine dependent).
    #[arg(long)]
    timing: bool,
    /// Directory receiving records.csv and summary.csv.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct StatsArgs {
    /// Records CSV written by `experiment`.
    #[arg(long = "in")]
    input: PathBuf,
    /// Comma-separated grouping columns: n, r, strategy, initiators.
    #[arg(long, default_value = "n,strategy,initiators", value_delimiter = ',', value_parser = group_arg)]
    group: Vec<GroupKey>,
}

fn positive_f64(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v > 0.0 => Ok(v),
        _ => Err(format!("expected a positive number, got {s:?}")),
    }
}

fn scale_arg(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v <= 1.0 => Ok(v),
        _ => Err(format!("scale must be in (0, 1], got {s:?}")),
    }
}

fn group_arg(s: &str) -> Result<GroupKey, String> {
    GroupKey::parse(s).map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let outcome = match cli.command {
        Command::Gen(args) => cmd_gen(args),
        Command::Build(args) => cmd_build(args),
        Command::Experiment(args) => cmd_experiment(args),
        Command::Stats(args) => cmd_stats(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn cmd_gen(args: GenArgs) -> CliResult {
    let mut cfg = GraphGenConfig::new(args.n as usize, args.r, args.seed);
    cfg.max_attempts = args.max_attempts;
    let net = generate_network(&cfg)?;
    net.save(&args.out)?;
    println!("n={}", net.len());
    println!("m={}", net.edge_count());
    println!("attempts={}", net.attempts());
    Ok(())
}

fn cmd_build(args: BuildArgs) -> CliResult {
    let net = match (&args.net, args.n, args.r) {
        (Some(path), _, _) => Network::load(path)?,
        (None, Some(n), Some(r)) => {
            generate_network(&GraphGenConfig::new(n as usize, r, args.seed))?
        }
        _ => unreachable!("clap enforces --net or --n/--r"),
    };
    let mut walk = WalkConfig::new(args.strategy.resolve(args.alpha, args.beta));
    walk.marking = match args.marking {
        MarkingArg::Lagged => MarkingMode::Lagged,
        MarkingArg::Eager => MarkingMode::Eager,
    };
    walk.free_roaming = args.free_roaming;
    walk.trace = args.trace.is_some();
    let mut cfg = OverlayBuildConfig::new(args.initiators as usize, walk, args.seed);
    cfg.step_budget = args.budget;
    cfg.pair_phase = match args.pair_phase {
        PairPhaseArg::Lockstep => PairPhaseMode::LockStep,
        PairPhaseArg::Continue => PairPhaseMode::LockStepContinue,
    };

    let result = build_overlay(&net, &cfg)?;
    if let Some(path) = &args.out {
        fs::write(path, result.to_json())?;
    }
    if let Some(path) = &args.trace {
        fs::write(path, result.trace_jsonl())?;
    }
    println!("active_path_size={}", drwnet::active_path_size(&result));
    println!("depth={:.6}", depth(&result, &net)?.value());
    Ok(())
}

fn cmd_experiment(args: ExperimentArgs) -> CliResult {
    let mut cfg: ScenarioConfig = if args.desk {
        experiments::desk_scenario(args.scale)?
    } else {
        experiments::full_scenario(args.scale)?
    };
    cfg.strategies = args
        .strategies
        .iter()
        .map(|s| s.resolve(args.alpha, args.beta))
        .collect();
    cfg.strategies.dedup();
    cfg.base_seed = args.seed;
    cfg.record_wall_time = args.timing;

    let records = experiments::run_scenario(&cfg, args.jobs as usize)?;
    fs::create_dir_all(&args.out_dir)?;
    let mut out = BufWriter::new(File::create(args.out_dir.join("records.csv"))?);
    experiments::write_records_csv(&mut out, &cfg, &records)?;
    out.flush()?;

    let failed = records.iter().filter(|r| r.failed).count();
    let dead = experiments::wholly_failed_cells(&records);
    if records.len() > failed {
        let rows = experiments::summarize(&records, &DEFAULT_GROUP)?;
        let mut out = BufWriter::new(File::create(args.out_dir.join("summary.csv"))?);
        experiments::write_summary_csv(&mut out, &DEFAULT_GROUP, &rows)?;
        out.flush()?;
    }

    println!("cells={}", cfg.cell_count());
    println!("records={}", records.len());
    println!("failed={failed}");
    if !dead.is_empty() {
        let (n, i, s) = &dead[0];
        return Err(format!(
            "{} cell(s) failed in every replication, first n={n} initiators={i} strategy={s}",
            dead.len()
        )
        .into());
    }
    Ok(())
}

fn cmd_stats(args: StatsArgs) -> CliResult {
    let records = experiments::read_records_csv(File::open(&args.input)?)?;
    let rows = experiments::summarize(&records, &args.group)?;
    let stdout = io::stdout();
    let mut out = stdout.lock();
    experiments::write_summary_csv(&mut out, &args.group, &rows)?;
    out.flush()?;
    Ok(())
}
