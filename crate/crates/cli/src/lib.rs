//! Command-line front end for odflow: the estimation pipeline, synthetic
//! scenarios and the solver scaling benchmark.

pub mod bench;
pub mod error;
pub mod pipeline;
pub mod plot;
pub mod simplex;
pub mod synth;

pub use bench::{run_bench, BenchConfig, BenchError, BenchRow, BenchTable, Solver};
pub use error::{CliError, ErrorKind};
pub use pipeline::{estimate, run_estimate, run_extrapolate, write_estimate, CostKind, Estimate, EstimateOptions};
pub use simplex::sample_simplex_marginals;
pub use synth::{run_synthetic, GroundTruth, ScenarioConfig, SynthCost, SynthReport};
