use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use chrono::TimeDelta;
use clap::{Args, Parser, Subcommand, ValueEnum};
use odflow::{AdjacencyOptions, GravityParams, ZoneIndex};
use odflow_cli::bench::{run_bench, BenchConfig, BenchTable, Solver};
use odflow_cli::error::{CliError, Context, Result};
use odflow_cli::pipeline::{
    build_cost, gravity_pairs, load_cost_matrix, load_zones, read_presence, run_estimate, run_extrapolate,
    write_estimate, write_gravity, CostKind, EstimateOptions, ExtrapolateOptions,
};
use odflow_cli::synth::{run_synthetic, write_synthetic, GroundTruth, ScenarioConfig, SynthCost};

#[derive(Parser)]
#[command(name = "odflow", version, about = "Origin-destination flows from aggregated presence counts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate flows and transition matrices from presence counts.
    Estimate(EstimateArgs),
    /// Multi-step, histogram-mixed and stationary results from a transition matrix.
    Extrapolate(ExtrapolateArgs),
    /// Fit the gravity baseline and compare it with the LP estimate.
    Gravity(GravityArgs),
    /// Time the closed-form and general solvers over growing n.
    Bench(BenchArgs),
    /// Score the estimator on a synthetic scenario with known flows.
    Synth(SynthArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum CostArg {
    Adjacency,
    Centroid,
    Nearest,
}

#[derive(Args)]
struct Inputs {
    /// Presence CSV: zone_id,interval_end,count
    presence: PathBuf,
    /// Zone polygons: `id;x,y;x,y;...` text, or GeoJSON (.json/.geojson)
    zones: PathBuf,
    /// GeoJSON property holding the zone id
    #[arg(long, default_value = "id")]
    id_key: String,
    #[arg(long, value_parser = parse_duration, default_value = "15m")]
    bucket: TimeDelta,
    /// Users every snapshot is scaled to
    #[arg(long, default_value_t = 1_000_000)]
    total: u64,
    #[arg(long, value_enum, default_value = "adjacency")]
    cost: CostArg,
    /// Dense cost matrix CSV, used instead of a geometric cost
    #[arg(long)]
    cost_matrix: Option<PathBuf>,
    /// Cost of adjacent zones in the adjacency metric
    #[arg(long, default_value_t = 0.1)]
    adjacent_cost: f64,
    /// Corner distance under which polygons count as touching
    #[arg(long, default_value_t = 0.0)]
    snap: f64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct EstimateArgs {
    #[command(flatten)]
    inputs: Inputs,
    /// Upper bound of the uniform cost noise; 0 disables it
    #[arg(long, default_value_t = 1e-4)]
    noise: f64,
    #[arg(long, default_value_t = 4)]
    randomizations: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Duration histogram weights h1,...,hH
    #[arg(long, value_delimiter = ',')]
    hist: Option<Vec<f64>>,
    /// Steps covered by the first histogram bin
    #[arg(long, default_value_t = 1)]
    hist_first_step: usize,
    /// Multi-step matrices to emit
    #[arg(long, value_delimiter = ',')]
    steps: Vec<usize>,
}

#[derive(Args)]
struct ExtrapolateArgs {
    /// One-step transition matrix CSV
    matrix: PathBuf,
    #[arg(long, value_delimiter = ',')]
    steps: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    hist: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1)]
    hist_first_step: usize,
    #[arg(long, value_parser = parse_duration, default_value = "15m")]
    bucket: TimeDelta,
    /// Trip duration to interpolate a transition matrix for
    #[arg(long, value_parser = parse_duration)]
    duration: Option<TimeDelta>,
    /// Also compute the stationary distribution
    #[arg(long)]
    stationary: bool,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 100_000)]
    max_iter: usize,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct GravityArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 0.1)]
    cost_floor: f64,
    /// Marginal tolerance relative to the total
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, default_value_t = 1000)]
    max_iter: usize,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SolverArg {
    ClosedForm,
    MinCostFlow,
}

#[derive(Args)]
struct BenchArgs {
    /// Sizes to test; defaults to 2^10..2^20 for the closed form and
    /// 2^5..2^10 for the general solver
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    #[arg(long = "solver", value_enum, default_values = ["closed-form", "min-cost-flow"])]
    solvers: Vec<SolverArg>,
    #[arg(long, default_value_t = 5)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1_000_000)]
    total_mass: u64,
    /// Largest n accepted by the general solver
    #[arg(long, default_value_t = 4096)]
    mcf_cap: usize,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum TruthArg {
    Diagonal,
    Optimal,
    Random,
}

#[derive(Clone, Copy, ValueEnum)]
enum SynthCostArg {
    TwoLevel,
    Adjacency,
    Grid,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 4)]
    width: usize,
    #[arg(long, default_value_t = 4)]
    height: usize,
    #[arg(long, value_enum, default_value = "optimal")]
    truth: TruthArg,
    #[arg(long, value_enum, default_value = "adjacency")]
    cost: SynthCostArg,
    #[arg(long, default_value_t = 1_000_000)]
    total: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 1)]
    randomizations: usize,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn parse_duration(s: &str) -> std::result::Result<TimeDelta, String> {
    let d = humantime::parse_duration(s).map_err(|e| e.to_string())?;
    TimeDelta::from_std(d).map_err(|e| e.to_string())
}

fn estimate_options(inputs: &Inputs) -> EstimateOptions {
    EstimateOptions {
        bucket: inputs.bucket,
        total: inputs.total,
        cost: match inputs.cost {
            CostArg::Adjacency => CostKind::Adjacency,
            CostArg::Centroid => CostKind::Centroid,
            CostArg::Nearest => CostKind::Nearest,
        },
        adjacency: AdjacencyOptions {
            adjacent_cost: inputs.adjacent_cost,
            snap_tolerance: inputs.snap,
        },
        ..EstimateOptions::default()
    }
}

fn cmd_estimate(a: &EstimateArgs) -> Result<()> {
    let opts = EstimateOptions {
        noise: a.noise,
        randomizations: a.randomizations,
        seed: a.seed,
        steps: a.steps.clone(),
        hist: a.hist.clone(),
        hist_first_step: a.hist_first_step,
        ..estimate_options(&a.inputs)
    };
    let est = run_estimate(
        &a.inputs.presence,
        &a.inputs.zones,
        a.inputs.cost_matrix.as_deref(),
        &a.inputs.id_key,
        &opts,
    )?;
    for r in &est.rejects {
        eprintln!("warning: line {}: unknown zone {:?}", r.line, r.zone_id);
    }
    if !est.series.gaps.is_empty() {
        eprintln!("warning: {} empty time buckets filled with zeros", est.series.gaps.len());
    }
    write_estimate(&est, &a.inputs.out)?;
    println!(
        "{} snapshots, {} pairs, {} randomizations; results in {}",
        est.series.len(),
        est.pairs.len(),
        est.pairs.first().map_or(0, |p| p.flows.len()),
        a.inputs.out.display()
    );
    Ok(())
}

fn cmd_extrapolate(a: &ExtrapolateArgs) -> Result<()> {
    let opts = ExtrapolateOptions {
        steps: a.steps.clone(),
        hist: a.hist.clone(),
        hist_first_step: a.hist_first_step,
        bucket: a.bucket,
        duration: a.duration,
        stationary: a.stationary,
        tol: a.tol,
        max_iter: a.max_iter,
    };
    run_extrapolate(&a.matrix, &opts, &a.out)?;
    println!("results in {}", a.out.display());
    Ok(())
}

fn cmd_gravity(a: &GravityArgs) -> Result<()> {
    let opts = estimate_options(&a.inputs);
    let zones = load_zones(&a.inputs.zones, &a.inputs.id_key)?;
    let index = ZoneIndex::from(&zones);
    let cost = match &a.inputs.cost_matrix {
        Some(p) => load_cost_matrix(p, &index)?,
        None => build_cost(&zones, opts.cost, opts.adjacency),
    };
    let parsed = read_presence(&a.inputs.presence, &index)?;
    let params = GravityParams {
        alpha: a.alpha,
        cost_floor: a.cost_floor,
        tol: a.tol,
        max_iter: a.max_iter,
    };
    let pairs = gravity_pairs(&parsed.records, &index, &cost, &opts, &params).context(a.inputs.presence.display())?;
    write_gravity(index.ids(), &pairs, &a.inputs.out)?;
    for (p, g) in pairs.iter().enumerate() {
        println!(
            "pair {}: {} sweeps, L1 {:.6}, cosine {:.6}",
            p + 1,
            g.iterations,
            g.comparison.l1,
            g.comparison.cosine
        );
    }
    Ok(())
}

fn cmd_bench(a: &BenchArgs) -> Result<()> {
    let mut table = BenchTable::default();
    let mut solvers = a.solvers.clone();
    solvers.dedup();
    for s in solvers {
        let (solver, default_sizes): (Solver, Vec<usize>) = match s {
            SolverArg::ClosedForm => (Solver::ClosedForm, (10..=20).map(|e| 1 << e).collect()),
            SolverArg::MinCostFlow => (Solver::MinCostFlow, (5..=10).map(|e| 1 << e).collect()),
        };
        let cfg = BenchConfig {
            sizes: a.sizes.clone().unwrap_or(default_sizes),
            trials: a.trials,
            seed: a.seed,
            total_mass: a.total_mass,
            solvers: vec![solver],
            min_cost_flow_cap: a.mcf_cap,
            min_sample: Duration::from_millis(2),
        };
        let part = run_bench(&cfg).map_err(|e| CliError::input(e.to_string()))?;
        table = table.merge(part);
    }
    write_bench(&table, &a.out)?;
    for r in &table.rows {
        println!(
            "{:<14} n={:<8} mean {:.3e} s  std {:.3e} s  min {:.3e} s",
            r.solver.name(),
            r.n,
            r.mean,
            r.std_dev,
            r.min
        );
    }
    for s in [Solver::ClosedForm, Solver::MinCostFlow] {
        if let Some(slope) = table.slope(s) {
            println!("{} log-log slope {slope:.3}", s.name());
        }
    }
    Ok(())
}

fn write_bench(table: &BenchTable, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).context(dir.display())?;
    let csv = dir.join("bench.csv");
    table
        .write_csv(BufWriter::new(File::create(&csv).context(csv.display())?))
        .context(csv.display())?;
    let svg = dir.join("bench.svg");
    fs::write(&svg, table.to_svg()).context(svg.display())?;
    Ok(())
}

fn cmd_synth(a: &SynthArgs) -> Result<()> {
    let cfg = ScenarioConfig {
        width: a.width,
        height: a.height,
        truth: match a.truth {
            TruthArg::Diagonal => GroundTruth::Diagonal,
            TruthArg::Optimal => GroundTruth::Optimal,
            TruthArg::Random => GroundTruth::Random,
        },
        cost: match a.cost {
            SynthCostArg::TwoLevel => SynthCost::TwoLevel,
            SynthCostArg::Adjacency => SynthCost::Adjacency,
            SynthCostArg::Grid => SynthCost::Grid,
        },
        total: a.total,
        seed: a.seed,
        noise: a.noise,
        randomizations: a.randomizations,
    };
    let report = run_synthetic(&cfg)?;
    write_synthetic(&report, &a.out)?;
    println!("truth objective     {}", report.truth_objective);
    println!("estimated objective {}", report.estimated_objective);
    println!("estimated trips     {}", report.estimated_total);
    println!("exact recovery      {}", report.exact_recovery());
    println!("LP      L1 {:.3}  cosine {:.6}", report.lp_score.l1, report.lp_score.cosine);
    println!(
        "gravity L1 {:.3}  cosine {:.6}",
        report.gravity_score.l1, report.gravity_score.cosine
    );
    Ok(())
}

fn main() -> ExitCode {
    // usage errors are input errors (1); clap's own code 2 means infeasible here
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Estimate(a) => cmd_estimate(a),
        Command::Extrapolate(a) => cmd_extrapolate(a),
        Command::Gravity(a) => cmd_gravity(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Synth(a) => cmd_synth(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
