use crate::scalar::Scalar;

use super::{detect_two_level, min_cost_flow_solve, trace_max_value, trace_max_witness};
use super::{CostMatrix, FlowMatrix, Marginals, PolytopeError, TwoLevelCost};

/// Which solver produced an [`LpSolution`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SolveRoute<T> {
    /// Closed-form trace maximisation under the detected two-level cost.
    TraceMax(TwoLevelCost<T>),
    MinCostFlow,
}

/// An integral optimal flow and its cost.
#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution<T> {
    pub flow: FlowMatrix,
    pub objective: T,
    pub route: SolveRoute<T>,
}

/// Minimises `Σ c_ij x_ij` over the integral transportation polytope.
///
/// Costs with a single diagonal value below a single off-diagonal value are
/// solved in closed form; anything else goes to [`min_cost_flow_solve`].
pub fn solve_lp<T: Scalar>(m: &Marginals, c: &CostMatrix<T>) -> Result<LpSolution<T>, PolytopeError> {
    if c.n() != m.n() {
        return Err(PolytopeError::DimensionMismatch {
            expected: m.n(),
            found: c.n(),
        });
    }
    match detect_two_level(c) {
        Some(levels) => {
            let z = trace_max_value(m);
            let witness = trace_max_witness(m);
            Ok(LpSolution {
                flow: witness.flow,
                objective: levels.objective(m.k(), z),
                route: SolveRoute::TraceMax(levels),
            })
        }
        None => min_cost_flow_solve(m, c),
    }
}
