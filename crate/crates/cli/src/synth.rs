//! Synthetic scenarios with a known flow, for scoring the estimator.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use chrono::{TimeDelta, TimeZone, Utc};
use num_traits::Zero;
use odflow::csv_io::{write_flow_csv, write_matrix_csv};
use odflow::ingestion::{largest_remainder_real, PresenceRecord};
use odflow::{
    compare_flows, cost_adjacency, gravity_fit, min_cost_flow_solve, AdjacencyOptions, CostMatrix,
    CostMatrix64, CostMatrixQ, FlowComparison, FlowMatrix, GravityParams, Marginals, Rational, ZoneIndex,
    ZonePolygon, ZoneSet64,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use crate::error::{CliError, Context, Result};
use crate::pipeline::{estimate, Estimate, EstimateOptions};
use crate::simplex::sample_simplex_marginals;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroundTruth {
    /// Everybody stays put.
    Diagonal,
    /// An optimal flow for the scenario cost, found on a shuffled copy of
    /// the instance so that it need not coincide with the estimator's choice
    /// among tied optima.
    Optimal,
    /// Random flow, no optimality.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthCost {
    /// 0 on the diagonal, 1 elsewhere.
    TwoLevel,
    /// Adjacency metric of the grid cells.
    Adjacency,
    /// Manhattan distance between grid cells.
    Grid,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    /// Zones form a `width × height` grid of unit squares.
    pub width: usize,
    pub height: usize,
    pub truth: GroundTruth,
    pub cost: SynthCost,
    pub total: u64,
    pub seed: u64,
    pub noise: f64,
    pub randomizations: usize,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            width: 4,
            height: 4,
            truth: GroundTruth::Optimal,
            cost: SynthCost::Adjacency,
            total: 1_000_000,
            seed: 0,
            noise: 0.0,
            randomizations: 1,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(CliError::input("grid must have at least one zone"));
        }
        if self.total == 0 {
            return Err(CliError::input("total must be positive"));
        }
        if self.randomizations == 0 {
            return Err(CliError::input("at least one randomization is required"));
        }
        if self.noise < 0.0 || !self.noise.is_finite() {
            return Err(CliError::input("noise must be finite and nonnegative"));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.width * self.height
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthReport {
    pub ids: Vec<String>,
    pub truth: FlowMatrix,
    pub estimate: Estimate,
    /// Estimated flow of the first randomization.
    pub estimated_flow: FlowMatrix,
    /// Objectives evaluated exactly on the rational scenario cost.
    pub truth_objective: Rational,
    pub estimated_objective: Rational,
    pub estimated_total: u64,
    pub lp_score: FlowComparison<f64>,
    pub gravity_score: FlowComparison<f64>,
    pub gravity_flow: odflow::DenseMatrix<f64>,
}

impl SynthReport {
    pub fn exact_recovery(&self) -> bool {
        self.truth == self.estimated_flow
    }
}

pub fn grid_zones(width: usize, height: usize) -> ZoneSet64 {
    let zones = (0..height)
        .flat_map(|r| (0..width).map(move |c| (r, c)))
        .map(|(r, c)| {
            let (x, y) = (c as f64, r as f64);
            ZonePolygon::new(
                format!("z{r}_{c}"),
                vec![(x, y), (x + 1.0, y), (x + 1.0, y + 1.0), (x, y + 1.0)],
            )
            .expect("unit square is a valid polygon")
        })
        .collect();
    ZoneSet64::new(zones).expect("grid ids are unique")
}

/// The scenario cost in exact rationals.
pub fn scenario_cost(cfg: &ScenarioConfig, zones: &ZoneSet64) -> CostMatrixQ {
    let n = cfg.n();
    match cfg.cost {
        SynthCost::TwoLevel => CostMatrix::two_level(n, Rational::zero(), Rational::from_integer(1))
            .expect("n is at least one"),
        SynthCost::Adjacency => {
            let c = cost_adjacency(zones, AdjacencyOptions::default());
            let m = c.matrix().map(|v| Rational::approximate_float(v).expect("costs are small decimals"));
            CostMatrix::new(m).expect("adjacency costs are nonnegative")
        }
        SynthCost::Grid => {
            let w = cfg.width;
            let m = odflow::DenseMatrix::from_fn(n, n, |i, j| {
                let d = (i / w).abs_diff(j / w) + (i % w).abs_diff(j % w);
                Rational::from_integer(d as i64)
            });
            CostMatrix::new(m).expect("distances are nonnegative")
        }
    }
}

fn ground_truth(cfg: &ScenarioConfig, cost: &CostMatrixQ, rng: &mut ChaCha8Rng) -> FlowMatrix {
    let n = cfg.n();
    match cfg.truth {
        GroundTruth::Diagonal => {
            let m = sample_simplex_marginals(n, cfg.total, rng.random());
            FlowMatrix::from_triplets(n, n, m.gamma().iter().enumerate().map(|(i, &g)| (i, i, g)))
        }
        GroundTruth::Optimal => {
            let m = sample_simplex_marginals(n, cfg.total, rng.random());
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(rng);
            let shuffled = min_cost_flow_solve(&m.permuted(&perm), &cost.permuted(&perm))
                .expect("dimensions match")
                .flow;
            let mut inverse = vec![0; n];
            for (i, &p) in perm.iter().enumerate() {
                inverse[p] = i;
            }
            shuffled.permuted(&inverse)
        }
        GroundTruth::Random => {
            let weights: Vec<f64> = (0..n * n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
            let cells = largest_remainder_real(&weights, cfg.total).expect("exponential draws are positive");
            FlowMatrix::from_triplets(n, n, cells.into_iter().enumerate().map(|(p, v)| (p / n, p % n, v)))
        }
    }
}

/// Two presence snapshots a bucket apart whose counts are the row and
/// column sums of `truth`.
pub fn presence_from_flow(ids: &[String], truth: &FlowMatrix, bucket: TimeDelta) -> Vec<PresenceRecord> {
    let t0 = Utc.with_ymd_and_hms(2017, 3, 6, 8, 0, 0).unwrap();
    let t1 = t0 + bucket;
    let mut records = Vec::with_capacity(2 * ids.len());
    for (t, counts) in [(t0, truth.row_sums()), (t1, truth.col_sums())] {
        for (id, c) in ids.iter().zip(counts) {
            records.push(PresenceRecord {
                zone_id: id.clone(),
                interval_end: t,
                event_count: c,
            });
        }
    }
    records
}

pub fn run_synthetic(cfg: &ScenarioConfig) -> Result<SynthReport> {
    cfg.validate()?;
    let zones = grid_zones(cfg.width, cfg.height);
    let index = ZoneIndex::from(&zones);
    let ids = index.ids().to_vec();
    let cost_q = scenario_cost(cfg, &zones);
    let cost = CostMatrix64::new(cost_q.matrix().map(|v| num_traits::ToPrimitive::to_f64(&v).unwrap()))
        .expect("finite nonnegative");
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let truth = ground_truth(cfg, &cost_q, &mut rng);

    let opts = EstimateOptions {
        total: cfg.total,
        noise: cfg.noise,
        randomizations: cfg.randomizations,
        seed: cfg.seed,
        ..EstimateOptions::default()
    };
    let records = presence_from_flow(&ids, &truth, opts.bucket);
    let est = estimate(&records, Vec::new(), &index, &cost, &opts).context("synthetic estimate")?;
    let estimated_flow = est.pairs[0].flows[0].clone();

    let m = Marginals::new(truth.row_sums(), truth.col_sums())?;
    let e1: Vec<f64> = m.gamma().iter().map(|&v| v as f64).collect();
    let e2: Vec<f64> = m.eta().iter().map(|&v| v as f64).collect();
    let params = GravityParams {
        tol: 1e-9 * cfg.total as f64,
        ..GravityParams::default()
    };
    let gravity = gravity_fit(&e1, &e2, &cost, &params).context("gravity baseline")?;
    let truth_dense = truth.to_matrix::<f64>();

    Ok(SynthReport {
        truth_objective: truth.cost(&cost_q),
        estimated_objective: estimated_flow.cost(&cost_q),
        estimated_total: estimated_flow.total(),
        lp_score: compare_flows(&est.mean_flow, &truth_dense)?,
        gravity_score: compare_flows(&gravity.flow, &truth_dense)?,
        gravity_flow: gravity.flow,
        ids,
        truth,
        estimate: est,
        estimated_flow,
    })
}

pub fn write_synthetic(report: &SynthReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).context(dir.display())?;
    let file = |name: &str| -> Result<BufWriter<fs::File>> {
        let path = dir.join(name);
        Ok(BufWriter::new(fs::File::create(&path).context(path.display())?))
    };
    write_flow_csv(file("truth.csv")?, &report.ids, &report.truth)?;
    write_flow_csv(file("estimate.csv")?, &report.ids, &report.estimated_flow)?;
    write_matrix_csv(file("estimate_mean.csv")?, &report.ids, &report.estimate.mean_flow)?;
    write_matrix_csv(file("gravity.csv")?, &report.ids, &report.gravity_flow)?;
    let mut score = file("score.csv")?;
    writeln!(score, "method,l1,cosine,objective")?;
    writeln!(
        score,
        "truth,0,1,{}",
        report.truth_objective
    )?;
    writeln!(
        score,
        "lp,{},{},{}",
        report.lp_score.l1, report.lp_score.cosine, report.estimated_objective
    )?;
    writeln!(
        score,
        "gravity,{},{},",
        report.gravity_score.l1, report.gravity_score.cosine
    )?;
    score.flush()?;
    Ok(())
}
