//! Presence counts to averaged flows and transition matrices.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use chrono::{DateTime, SecondsFormat, TimeDelta, Utc};
use odflow::csv_io::{read_matrix_csv, write_flow_csv, write_marginals_csv, write_matrix_csv, write_snapshot_csv};
use odflow::geometry::{read_geojson, read_zone_text};
use odflow::ingestion::{ParsedPresence, PresenceRecord, RejectedRecord};
use odflow::{
    aggregate, average_flows, cost_adjacency, cost_centroid, cost_nearest_corner, duration_interpolate,
    gravity_fit, gravity_vs_lp_report, histogram_mix, k_step_power, normalize_pair, pair_stream, parse_presence,
    perturb_costs, row_normalize_dense, solve_lp, stationary_distribution, step_matrices, AdjacencyOptions,
    CostMatrix64, DenseMatrix, DurationHistogram, FlowComparison, FlowMatrix, GravityParams, Marginals,
    SnapshotSeries, StochasticMatrix64, ZoneIndex, ZoneSet64,
};

use crate::error::{CliError, Context, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CostKind {
    Adjacency,
    Centroid,
    Nearest,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateOptions {
    pub bucket: TimeDelta,
    /// Every snapshot is scaled to this many users.
    pub total: u64,
    pub cost: CostKind,
    pub adjacency: AdjacencyOptions<f64>,
    /// Upper bound of the uniform cost noise; 0 disables randomization.
    pub noise: f64,
    /// Number of noisy cost matrices, seeded `seed, seed + 1, ...`.
    pub randomizations: usize,
    pub seed: u64,
    /// Extra multi-step matrices to emit.
    pub steps: Vec<usize>,
    /// Duration histogram weights; normalised to sum 1.
    pub hist: Option<Vec<f64>>,
    /// Number of steps represented by the first histogram bin.
    pub hist_first_step: usize,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        Self {
            bucket: TimeDelta::minutes(15),
            total: 1_000_000,
            cost: CostKind::Adjacency,
            adjacency: AdjacencyOptions::default(),
            noise: 1e-4,
            randomizations: 4,
            seed: 0,
            steps: Vec::new(),
            hist: None,
            hist_first_step: 1,
        }
    }
}

/// One consecutive pair of snapshots and the flows estimated for it, one
/// per cost randomization.
#[derive(Debug, Clone, PartialEq)]
pub struct PairEstimate {
    pub from: DateTime<Utc>,
    pub to: DateTime<Utc>,
    pub marginals: Marginals,
    pub flows: Vec<FlowMatrix>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub ids: Vec<String>,
    pub series: SnapshotSeries,
    pub rejects: Vec<RejectedRecord>,
    pub pairs: Vec<PairEstimate>,
    /// Mean over all pairs and randomizations.
    pub mean_flow: DenseMatrix<f64>,
    pub one_step: StochasticMatrix64,
    pub multi_step: Vec<(usize, StochasticMatrix64)>,
    pub mixed: Option<StochasticMatrix64>,
}

pub fn load_zones(path: &Path, id_key: &str) -> Result<ZoneSet64> {
    let file = File::open(path).context(path.display())?;
    let reader = BufReader::new(file);
    let geojson = matches!(
        path.extension().and_then(|e| e.to_str()),
        Some("json" | "geojson")
    );
    let zones = if geojson {
        read_geojson(reader, id_key)
    } else {
        read_zone_text(reader)
    };
    zones.context(path.display())
}

pub fn build_cost(zones: &ZoneSet64, kind: CostKind, adjacency: AdjacencyOptions<f64>) -> CostMatrix64 {
    match kind {
        CostKind::Adjacency => cost_adjacency(zones, adjacency),
        CostKind::Centroid => cost_centroid(zones),
        CostKind::Nearest => cost_nearest_corner(zones),
    }
}

/// Reads a dense cost matrix CSV and reorders it to the zone order.
pub fn load_cost_matrix(path: &Path, zones: &ZoneIndex) -> Result<CostMatrix64> {
    let file = File::open(path).context(path.display())?;
    let (ids, m) = read_matrix_csv(BufReader::new(file)).context(path.display())?;
    let mut order = Vec::with_capacity(zones.len());
    for id in zones.ids() {
        let pos = ids
            .iter()
            .position(|x| x == id)
            .ok_or_else(|| CliError::input(format!("{}: zone {id:?} missing", path.display())))?;
        order.push(pos);
    }
    if ids.len() != zones.len() {
        return Err(CliError::input(format!(
            "{}: {} zones, expected {}",
            path.display(),
            ids.len(),
            zones.len()
        )));
    }
    let reordered = DenseMatrix::from_fn(zones.len(), zones.len(), |i, j| m[(order[i], order[j])]);
    CostMatrix64::new(reordered).context(path.display())
}

pub fn read_presence(path: &Path, zones: &ZoneIndex) -> Result<ParsedPresence> {
    let file = File::open(path).context(path.display())?;
    parse_presence(BufReader::new(file), zones).context(path.display())
}

/// The estimation pipeline on already parsed records.
pub fn estimate(
    records: &[PresenceRecord],
    rejects: Vec<RejectedRecord>,
    zones: &ZoneIndex,
    cost: &CostMatrix64,
    opts: &EstimateOptions,
) -> Result<Estimate> {
    if opts.randomizations == 0 {
        return Err(CliError::input("at least one randomization is required"));
    }
    if cost.n() != zones.len() {
        return Err(CliError::input(format!(
            "cost matrix has {} zones, zone set has {}",
            cost.n(),
            zones.len()
        )));
    }
    let series = aggregate(records, zones, opts.bucket)?;
    let pairs = pair_stream(&series)?;

    let costs: Vec<CostMatrix64> = if opts.noise > 0.0 {
        (0..opts.randomizations as u64)
            .map(|r| perturb_costs(cost, opts.noise, opts.seed.wrapping_add(r)))
            .collect::<std::result::Result<_, _>>()?
    } else {
        vec![cost.clone()]
    };

    let mut estimates = Vec::with_capacity(pairs.len());
    for pair in &pairs {
        let label = pair.from.interval_end.to_rfc3339_opts(SecondsFormat::Secs, true);
        let marginals = normalize_pair(&pair.from, &pair.to, opts.total).context(format!("pair at {label}"))?;
        let flows = costs
            .iter()
            .map(|c| solve_lp(&marginals, c).map(|s| s.flow))
            .collect::<std::result::Result<Vec<_>, _>>()
            .context(format!("pair at {label}"))?;
        estimates.push(PairEstimate {
            from: pair.from.interval_end,
            to: pair.to.interval_end,
            marginals,
            flows,
        });
    }

    let all: Vec<FlowMatrix> = estimates.iter().flat_map(|p| p.flows.iter().cloned()).collect();
    let mean_flow: DenseMatrix<f64> = average_flows(&all)?;
    let one_step = row_normalize_dense(&mean_flow)?;
    let multi_step = opts
        .steps
        .iter()
        .map(|&k| k_step_power(&one_step, k).map(|m| (k, m)))
        .collect::<std::result::Result<_, _>>()?;
    let mixed = match &opts.hist {
        Some(h) => Some(mix(&one_step, h, opts.hist_first_step, bin_minutes(opts.bucket))?),
        None => None,
    };

    Ok(Estimate {
        ids: zones.ids().to_vec(),
        series,
        rejects,
        pairs: estimates,
        mean_flow,
        one_step,
        multi_step,
        mixed,
    })
}

fn bin_minutes(bucket: TimeDelta) -> f64 {
    bucket.num_seconds() as f64 / 60.0
}

/// Histogram-weighted mixture of `p^first, p^(first+1), ...`.
pub fn mix(p: &StochasticMatrix64, weights: &[f64], first: usize, bin_width: f64) -> Result<StochasticMatrix64> {
    let sum: f64 = weights.iter().sum();
    if weights.is_empty() || !(sum > 0.0) {
        return Err(CliError::input("histogram weights must have a positive sum"));
    }
    let h = DurationHistogram::new(weights.iter().map(|w| w / sum).collect(), bin_width)?;
    let steps = step_matrices(p, first, h.len())?;
    Ok(histogram_mix(&steps, &h)?)
}

/// Parses presence and zones from files, then runs [`estimate`].
pub fn run_estimate(
    presence: &Path,
    zones_file: &Path,
    cost_file: Option<&Path>,
    id_key: &str,
    opts: &EstimateOptions,
) -> Result<Estimate> {
    let zones = load_zones(zones_file, id_key)?;
    let index = ZoneIndex::from(&zones);
    let cost = match cost_file {
        Some(path) => load_cost_matrix(path, &index)?,
        None => build_cost(&zones, opts.cost, opts.adjacency),
    };
    let parsed = read_presence(presence, &index)?;
    estimate(&parsed.records, parsed.rejects, &index, &cost, opts).context(presence.display())
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    Ok(BufWriter::new(File::create(&path).context(path.display())?))
}

/// Writes every product of the pipeline as CSV into `dir`.
pub fn write_estimate(est: &Estimate, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).context(dir.display())?;
    let ids = &est.ids;
    write_snapshot_csv(create(dir, "snapshots.csv")?, ids, &est.series)?;

    let mut rejects = create(dir, "rejects.csv")?;
    writeln!(rejects, "line,zone_id")?;
    for r in &est.rejects {
        writeln!(rejects, "{},{}", r.line, r.zone_id)?;
    }
    rejects.flush()?;

    let mut flows = create(dir, "flows.csv")?;
    writeln!(flows, "pair,from,to,randomization,origin,destination,count")?;
    for (p, pair) in est.pairs.iter().enumerate() {
        write_marginals_csv(create(dir, &format!("marginals_{}.csv", p + 1))?, ids, &pair.marginals)?;
        let (from, to) = (pair.from.to_rfc3339_opts(SecondsFormat::Secs, true), pair.to.to_rfc3339_opts(SecondsFormat::Secs, true));
        for (r, f) in pair.flows.iter().enumerate() {
            for (i, j, v) in f.iter() {
                writeln!(flows, "{},{from},{to},{r},{},{},{v}", p + 1, ids[i], ids[j])?;
            }
        }
    }
    flows.flush()?;
    if let Some(first) = est.pairs.first().and_then(|p| p.flows.first()) {
        write_flow_csv(create(dir, "flow_first.csv")?, ids, first)?;
    }

    write_matrix_csv(create(dir, "flow_mean.csv")?, ids, &est.mean_flow)?;
    write_matrix_csv(create(dir, "transition_1.csv")?, ids, est.one_step.matrix())?;
    for (k, m) in &est.multi_step {
        write_matrix_csv(create(dir, &format!("transition_{k}.csv"))?, ids, m.matrix())?;
    }
    if let Some(m) = &est.mixed {
        write_matrix_csv(create(dir, "transition_mixed.csv")?, ids, m.matrix())?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtrapolateOptions {
    pub steps: Vec<usize>,
    pub hist: Option<Vec<f64>>,
    pub hist_first_step: usize,
    pub bucket: TimeDelta,
    /// Trip duration to interpolate for, in the same unit as the bucket.
    pub duration: Option<TimeDelta>,
    pub stationary: bool,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for ExtrapolateOptions {
    fn default() -> Self {
        Self {
            steps: Vec::new(),
            hist: None,
            hist_first_step: 1,
            bucket: TimeDelta::minutes(15),
            duration: None,
            stationary: false,
            tol: 1e-10,
            max_iter: 100_000,
        }
    }
}

/// Reads a one-step transition matrix and writes the requested
/// extrapolations into `dir`.
pub fn run_extrapolate(matrix: &Path, opts: &ExtrapolateOptions, dir: &Path) -> Result<()> {
    let file = File::open(matrix).context(matrix.display())?;
    let (ids, m) = read_matrix_csv(BufReader::new(file)).context(matrix.display())?;
    let p = StochasticMatrix64::new(m).context(matrix.display())?;
    fs::create_dir_all(dir).context(dir.display())?;
    for &k in &opts.steps {
        let pk = k_step_power(&p, k)?;
        write_matrix_csv(create(dir, &format!("transition_{k}.csv"))?, &ids, pk.matrix())?;
    }
    if let Some(h) = &opts.hist {
        let mixed = mix(&p, h, opts.hist_first_step, bin_minutes(opts.bucket))?;
        write_matrix_csv(create(dir, "transition_mixed.csv")?, &ids, mixed.matrix())?;
    }
    if let Some(d) = opts.duration {
        let s = duration_matrix(&p, opts.bucket, d)?;
        write_matrix_csv(create(dir, "transition_duration.csv")?, &ids, s.matrix())?;
    }
    if opts.stationary {
        let st = stationary_distribution(&p, opts.tol, opts.max_iter)?;
        let mut out = create(dir, "stationary.csv")?;
        writeln!(out, "zone_id,probability")?;
        for (id, v) in ids.iter().zip(&st.distribution) {
            writeln!(out, "{id},{v}")?;
        }
        out.flush()?;
    }
    Ok(())
}

/// Transition matrix for a trip of length `duration`, interpolated between
/// the bracketing whole-step powers (the zero-step matrix is the identity).
pub fn duration_matrix(p: &StochasticMatrix64, bucket: TimeDelta, duration: TimeDelta) -> Result<StochasticMatrix64> {
    let t = bucket.num_seconds() as f64;
    let l = duration.num_seconds() as f64;
    if !(t > 0.0) || l < 0.0 {
        return Err(CliError::input("bucket must be positive and duration nonnegative"));
    }
    let k = (l / t).floor() as usize;
    let power = |k: usize| {
        if k == 0 {
            Ok(StochasticMatrix64::identity(p.n()))
        } else {
            k_step_power(p, k)
        }
    };
    let (s_k, s_k1) = (power(k)?, power(k + 1)?);
    Ok(duration_interpolate(&s_k, &s_k1, k as f64 * t, (k + 1) as f64 * t, l)?)
}

/// Gravity fit and LP estimate for one pair, side by side.
#[derive(Debug, Clone, PartialEq)]
pub struct GravityPair {
    pub from: DateTime<Utc>,
    pub gravity_flow: DenseMatrix<f64>,
    pub lp_flow: FlowMatrix,
    pub iterations: usize,
    pub comparison: FlowComparison<f64>,
}

pub fn gravity_pairs(
    records: &[PresenceRecord],
    zones: &ZoneIndex,
    cost: &CostMatrix64,
    opts: &EstimateOptions,
    params: &GravityParams<f64>,
) -> Result<Vec<GravityPair>> {
    let series = aggregate(records, zones, opts.bucket)?;
    let mut out = Vec::new();
    for pair in pair_stream(&series)? {
        let label = pair.from.interval_end.to_rfc3339_opts(SecondsFormat::Secs, true);
        let m = normalize_pair(&pair.from, &pair.to, opts.total).context(format!("pair at {label}"))?;
        let e1: Vec<f64> = m.gamma().iter().map(|&v| v as f64).collect();
        let e2: Vec<f64> = m.eta().iter().map(|&v| v as f64).collect();
        // the fit tolerance is absolute; scale it with the population
        let scaled = GravityParams {
            tol: params.tol * opts.total as f64,
            ..*params
        };
        let fit = gravity_fit(&e1, &e2, cost, &scaled).context(format!("pair at {label}"))?;
        let lp = solve_lp(&m, cost)?;
        let comparison = gravity_vs_lp_report(&fit.flow, &lp.flow)?;
        out.push(GravityPair {
            from: pair.from.interval_end,
            gravity_flow: fit.flow,
            lp_flow: lp.flow,
            iterations: fit.iterations,
            comparison,
        });
    }
    Ok(out)
}

pub fn write_gravity(ids: &[String], pairs: &[GravityPair], dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).context(dir.display())?;
    let mut report = create(dir, "gravity_report.csv")?;
    writeln!(report, "pair,from,iterations,l1,cosine,cosine_defined")?;
    for (p, g) in pairs.iter().enumerate() {
        writeln!(
            report,
            "{},{},{},{},{},{}",
            p + 1,
            g.from.to_rfc3339_opts(SecondsFormat::Secs, true),
            g.iterations,
            g.comparison.l1,
            g.comparison.cosine,
            g.comparison.cosine_defined
        )?;
        write_matrix_csv(create(dir, &format!("gravity_flow_{}.csv", p + 1))?, ids, &g.gravity_flow)?;
        write_flow_csv(create(dir, &format!("lp_flow_{}.csv", p + 1))?, ids, &g.lp_flow)?;
    }
    report.flush()?;
    Ok(())
}
