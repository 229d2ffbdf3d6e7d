//! Runtime scaling of the closed-form trace maximizer against the general
//! min-cost-flow solver.

use std::fmt;
use std::hint::black_box;
use std::io::Write;
use std::time::{Duration, Instant};

use odflow::{min_cost_flow_solve, trace_max_value, CostMatrix64, DenseMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::plot::{loglog_svg, Series};
use crate::simplex::sample_simplex_marginals;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Solver {
    ClosedForm,
    MinCostFlow,
}

impl Solver {
    pub fn name(self) -> &'static str {
        match self {
            Solver::ClosedForm => "closed_form",
            Solver::MinCostFlow => "min_cost_flow",
        }
    }
}

impl fmt::Display for Solver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    /// Strictly increasing problem sizes.
    pub sizes: Vec<usize>,
    /// Timed trials per size, at least 3. One extra warm-up trial runs first
    /// and is discarded.
    pub trials: usize,
    pub seed: u64,
    pub total_mass: u64,
    pub solvers: Vec<Solver>,
    /// Largest n the general solver accepts; its dense state is `O(n²)`.
    pub min_cost_flow_cap: usize,
    /// The closed form is repeated until at least this much time has passed
    /// and the mean per call is recorded, so microsecond calls are not lost
    /// in timer resolution.
    pub min_sample: Duration,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            sizes: (10..=20).map(|e| 1 << e).collect(),
            trials: 5,
            seed: 0,
            total_mass: 1_000_000,
            solvers: vec![Solver::ClosedForm],
            min_cost_flow_cap: 4096,
            min_sample: Duration::from_millis(2),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum BenchError {
    #[error("invalid benchmark configuration: {0}")]
    InvalidConfig(String),
    #[error("n = {n} exceeds the min-cost-flow cap of {cap}")]
    AboveCap { n: usize, cap: usize },
    #[error("closed form at n = {n}, trial {trial}: value {value} but k - |eta - gamma|/2 = {expected}")]
    IdentityMismatch {
        n: usize,
        trial: usize,
        value: u64,
        expected: u64,
    },
    #[error("min-cost flow at n = {n}, trial {trial}: returned flow violates the marginals")]
    InfeasibleFlow { n: usize, trial: usize },
    #[error("timer reported zero elapsed time at n = {n}")]
    Timer { n: usize },
}

impl BenchConfig {
    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |m: &str| Err(BenchError::InvalidConfig(m.into()));
        if self.sizes.is_empty() || self.sizes[0] == 0 {
            return bad("sizes must be nonempty and positive");
        }
        if self.sizes.windows(2).any(|w| w[0] >= w[1]) {
            return bad("sizes must be strictly increasing");
        }
        if self.trials < 3 {
            return bad("at least 3 trials are needed for a standard deviation");
        }
        if self.total_mass == 0 {
            return bad("total mass must be positive");
        }
        if self.solvers.is_empty() {
            return bad("no solver selected");
        }
        if self.solvers.contains(&Solver::MinCostFlow) {
            if let Some(&n) = self.sizes.iter().find(|&&n| n > self.min_cost_flow_cap) {
                return Err(BenchError::AboveCap {
                    n,
                    cap: self.min_cost_flow_cap,
                });
            }
        }
        Ok(())
    }
}

/// Timing summary of one solver at one size, in seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub solver: Solver,
    pub n: usize,
    pub trials: usize,
    pub mean: f64,
    pub std_dev: f64,
    pub min: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BenchTable {
    pub rows: Vec<BenchRow>,
}

impl BenchTable {
    pub fn series(&self, solver: Solver) -> impl Iterator<Item = &BenchRow> {
        self.rows.iter().filter(move |r| r.solver == solver)
    }

    /// Least-squares slope of `log(min time)` against `log(n)`.
    pub fn slope(&self, solver: Solver) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self.series(solver).map(|r| (r.n as f64, r.min)).collect();
        loglog_slope(&pts)
    }

    /// Sizes of at least `from` where the closed form was slower than the
    /// general solver.
    pub fn ordering_violations(&self, from: usize) -> Vec<usize> {
        self.series(Solver::ClosedForm)
            .filter(|c| c.n >= from)
            .filter(|c| self.series(Solver::MinCostFlow).any(|g| g.n == c.n && c.min > g.min))
            .map(|c| c.n)
            .collect()
    }

    pub fn merge(mut self, other: BenchTable) -> Self {
        self.rows.extend(other.rows);
        self.rows.sort_by(|a, b| a.solver.cmp(&b.solver).then(a.n.cmp(&b.n)));
        self
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "solver,n,trials,mean_s,std_s,min_s")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{:e},{:e},{:e}",
                r.solver, r.n, r.trials, r.mean, r.std_dev, r.min
            )?;
        }
        Ok(())
    }

    pub fn to_svg(&self) -> String {
        let mut solvers: Vec<Solver> = self.rows.iter().map(|r| r.solver).collect();
        solvers.dedup();
        let series: Vec<Series> = solvers
            .iter()
            .map(|&s| Series {
                name: s.name().into(),
                points: self.series(s).map(|r| (r.n as f64, r.mean)).collect(),
            })
            .collect();
        loglog_svg("Solver runtime", "n (zones)", "mean wall time [s]", &series)
    }
}

pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if logs.len() < 2 {
        return None;
    }
    let m = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / m;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = logs.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = logs.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn trial_seed(seed: u64, n: usize, trial: usize) -> u64 {
    seed ^ (n as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (trial as u64).wrapping_mul(0xD1B5_4A32_D192_ED03)
}

/// Runs every enabled solver on every size, with fresh inputs per trial.
pub fn run_bench(cfg: &BenchConfig) -> Result<BenchTable, BenchError> {
    cfg.validate()?;
    let mut rows = Vec::new();
    for &solver in &cfg.solvers {
        for &n in &cfg.sizes {
            let mut times = Vec::with_capacity(cfg.trials);
            // trial 0 is the warm-up
            for trial in 0..=cfg.trials {
                let seed = trial_seed(cfg.seed, n, trial);
                let t = match solver {
                    Solver::ClosedForm => time_closed_form(n, cfg, seed, trial)?,
                    Solver::MinCostFlow => time_min_cost_flow(n, cfg, seed, trial)?,
                };
                if trial > 0 {
                    times.push(t);
                }
            }
            rows.push(summarize(solver, n, &times));
        }
    }
    Ok(BenchTable { rows })
}

fn time_closed_form(n: usize, cfg: &BenchConfig, seed: u64, trial: usize) -> Result<f64, BenchError> {
    let m = sample_simplex_marginals(n, cfg.total_mass, seed);
    let expected = m.k() - m.half_l1_gap();
    let start = Instant::now();
    let mut calls = 0u32;
    let mut value;
    loop {
        value = black_box(trace_max_value(black_box(&m)));
        calls += 1;
        if start.elapsed() >= cfg.min_sample {
            break;
        }
    }
    let elapsed = start.elapsed();
    if value != expected {
        return Err(BenchError::IdentityMismatch {
            n,
            trial,
            value,
            expected,
        });
    }
    if elapsed.is_zero() {
        return Err(BenchError::Timer { n });
    }
    Ok(elapsed.as_secs_f64() / f64::from(calls))
}

fn time_min_cost_flow(n: usize, cfg: &BenchConfig, seed: u64, trial: usize) -> Result<f64, BenchError> {
    let m = sample_simplex_marginals(n, cfg.total_mass, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed.rotate_left(17));
    let cost = CostMatrix64::new(DenseMatrix::from_fn(n, n, |_, _| f64::from(rng.random_range(0..=9u8))))
        .expect("integer costs are valid");
    let start = Instant::now();
    let solution = black_box(min_cost_flow_solve(&m, &cost).expect("dimensions match"));
    let elapsed = start.elapsed();
    if !solution.flow.satisfies(&m) {
        return Err(BenchError::InfeasibleFlow { n, trial });
    }
    if elapsed.is_zero() {
        return Err(BenchError::Timer { n });
    }
    Ok(elapsed.as_secs_f64())
}

fn summarize(solver: Solver, n: usize, times: &[f64]) -> BenchRow {
    let count = times.len() as f64;
    let mean = times.iter().sum::<f64>() / count;
    let var = times.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>() / (count - 1.0);
    BenchRow {
        solver,
        n,
        trials: times.len(),
        mean,
        std_dev: var.sqrt(),
        min: times.iter().copied().fold(f64::INFINITY, f64::min),
    }
}
