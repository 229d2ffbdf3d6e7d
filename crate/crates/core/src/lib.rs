//! Origin–destination flow estimation from aggregated presence counts.

pub mod csv_io;
pub mod geometry;
pub mod gravity;
pub mod ingestion;
pub mod matrix;
pub mod polytope;
pub mod scalar;
pub mod transition;

pub use geometry::{
    cost_adjacency, cost_centroid, cost_nearest_corner, perturb_costs, AdjacencyOptions, GeometryError, ZonePolygon,
    ZoneSet,
};
pub use gravity::{compare_flows, gravity_fit, gravity_vs_lp_report, FlowComparison, GravityError, GravityFit, GravityParams};
pub use ingestion::{
    aggregate, average_flows, normalize_pair, pair_stream, parse_presence, IngestError, PresenceRecord,
    PresenceSnapshot, SnapshotSeries, ZoneIndex,
};
pub use matrix::DenseMatrix;
pub use polytope::{
    augment_sink_source, check_feasible, detect_two_level, min_cost_flow_solve, northwest_corner_fill, solve_lp,
    trace_max_value, trace_max_witness, CostMatrix, FlowMatrix, LpSolution, Marginals, PolytopeError,
    SinkSourceConfig, SolveRoute, TraceMaxWitness, TwoLevelCost,
};
pub use scalar::Scalar;
pub use transition::{
    chained_product, duration_interpolate, histogram_mix, k_step_power, propagate, row_normalize,
    row_normalize_dense, stationary_distribution, step_matrices, DurationHistogram, Stationary, StochasticMatrix,
    TransitionError,
};

/// Exact rational scalar.
pub type Rational = num_rational::Rational64;

pub type CostMatrix64 = CostMatrix<f64>;
pub type CostMatrixQ = CostMatrix<Rational>;
pub type LpSolution64 = LpSolution<f64>;

pub type StochasticMatrix64 = StochasticMatrix<f64>;
pub type StochasticMatrixQ = StochasticMatrix<Rational>;
pub type ZoneSet64 = ZoneSet<f64>;
pub type GravityFit64 = GravityFit<f64>;
