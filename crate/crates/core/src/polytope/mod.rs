//! Exact solvers over the transportation polytope of two presence vectors.

mod cost;
mod flow;
mod marginals;
mod min_cost_flow;
mod northwest;
mod sink_source;
mod solve;
mod trace_max;

pub use cost::{detect_two_level, CostMatrix, TwoLevelCost, TWO_LEVEL_TOLERANCE};
pub use flow::FlowMatrix;
pub use marginals::{check_feasible, Marginals};
pub use min_cost_flow::min_cost_flow_solve;
pub use northwest::northwest_corner_fill;
pub use sink_source::{augment_sink_source, SinkSourceConfig};
pub use solve::{solve_lp, LpSolution, SolveRoute};
pub use trace_max::{trace_max_value, trace_max_witness, TraceMaxWitness};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolytopeError {
    #[error("marginals must describe at least one zone")]
    Empty,
    #[error("marginal lengths differ: gamma has {gamma}, eta has {eta}")]
    LengthMismatch { gamma: usize, eta: usize },
    #[error("negative entry {value} at index {index} of {which}")]
    NegativeEntry {
        which: &'static str,
        index: usize,
        value: i64,
    },
    #[error("empty polytope: gamma sums to {gamma_sum} but eta sums to {eta_sum}")]
    SumMismatch { gamma_sum: u64, eta_sum: u64 },
    #[error("marginal total overflows u64")]
    Overflow,
    #[error("expected dimension {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("cost matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("cost entry ({row}, {col}) is negative or not finite")]
    InvalidCost { row: usize, col: usize },
    #[error("diagonal cost must be strictly below off-diagonal cost")]
    NotTwoLevel,
    #[error("virtual zone population {u} is below the required {required}")]
    SourceTooSmall { u: u64, required: u64 },
}
