//! Doubly-constrained gravity model fitted by iterative proportional
//! fitting, used as a baseline next to the transportation-polytope
//! estimate.

use num_traits::Float;
use thiserror::Error;

use crate::matrix::DenseMatrix;
use crate::polytope::{CostMatrix, FlowMatrix};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GravityError {
    #[error("expected dimension {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("marginal entries must be finite and nonnegative")]
    InvalidMarginal,
    #[error("marginal totals differ: {origin} vs {destination}")]
    Unbalanced { origin: f64, destination: f64 },
    #[error("alpha, cost floor and tolerance must be positive, max_iter at least 1")]
    InvalidParams,
    #[error("zone {zone} has production but no reachable attraction")]
    ZeroProduction { zone: usize },
    #[error("zone {zone} has attraction but no reachable production")]
    ZeroAttraction { zone: usize },
    #[error("no convergence after {iterations} sweeps (residual {residual})")]
    NonConvergence { iterations: usize, residual: f64 },
}

/// Relative tolerance on the equality of the two marginal totals.
pub const BALANCE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GravityParams<T> {
    /// Distance-decay exponent.
    pub alpha: T,
    /// Costs below this are raised to it before the decay is applied.
    pub cost_floor: T,
    /// Absolute tolerance on every row and column sum.
    pub tol: T,
    pub max_iter: usize,
}

impl<T: Float> Default for GravityParams<T> {
    fn default() -> Self {
        Self {
            alpha: T::one(),
            cost_floor: T::from(0.1).unwrap(),
            tol: T::from(1e-9).unwrap(),
            max_iter: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GravityFit<T> {
    pub flow: DenseMatrix<T>,
    /// Origin balancing factors.
    pub a: Vec<T>,
    /// Destination balancing factors.
    pub b: Vec<T>,
    pub iterations: usize,
    /// L1 marginal residual after each sweep.
    pub residual_history: Vec<T>,
}

/// Fits `x_ij = A_i B_j e1_i e2_j / max(c_ij, floor)^α` by alternately
/// rescaling `A` (rows) and `B` (columns) from all-ones until both marginals
/// match within `params.tol`.
pub fn gravity_fit<T: Float + Scalar>(
    e1: &[T],
    e2: &[T],
    c: &CostMatrix<T>,
    params: &GravityParams<T>,
) -> Result<GravityFit<T>, GravityError> {
    let n = e1.len();
    for found in [e2.len(), c.n()] {
        if found != n {
            return Err(GravityError::DimensionMismatch { expected: n, found });
        }
    }
    if e1.iter().chain(e2).any(|&v| v < T::zero() || !Float::is_finite(v)) {
        return Err(GravityError::InvalidMarginal);
    }
    if !(params.alpha > T::zero() && params.cost_floor > T::zero() && params.tol > T::zero()) || params.max_iter == 0 {
        return Err(GravityError::InvalidParams);
    }
    let (s1, s2) = (e1.iter().copied().sum::<T>(), e2.iter().copied().sum::<T>());
    let scale = s1.max(s2);
    if scale > T::zero() && (s1 - s2).abs() > T::tol(BALANCE_TOLERANCE) * scale {
        return Err(GravityError::Unbalanced {
            origin: s1.to_f64().unwrap(),
            destination: s2.to_f64().unwrap(),
        });
    }

    // Deterrence already multiplied by the attraction of the destination:
    // w_ij = e2_j / max(c_ij, floor)^α.
    let deterrence = DenseMatrix::from_fn(n, n, |i, j| e2[j] / c.get(i, j).max(params.cost_floor).powf(params.alpha));

    let mut a = vec![T::one(); n];
    let mut b = vec![T::one(); n];
    let mut history = Vec::new();
    for iteration in 1..=params.max_iter {
        for i in 0..n {
            let denom: T = deterrence.row(i).iter().zip(&b).map(|(&w, &bj)| w * bj).sum();
            a[i] = rescale(e1[i], denom).ok_or(GravityError::ZeroProduction { zone: i })?;
        }
        let mut col_denoms = vec![T::zero(); n];
        for i in 0..n {
            let ai = a[i] * e1[i];
            for (d, &w) in col_denoms.iter_mut().zip(deterrence.row(i)) {
                *d += ai * w;
            }
        }
        for j in 0..n {
            // column sum j is B_j · col_denoms[j], and col_denoms carries e2_j
            b[j] = if e2[j] == T::zero() {
                T::one()
            } else if col_denoms[j] > T::zero() {
                e2[j] / col_denoms[j]
            } else {
                return Err(GravityError::ZeroAttraction { zone: j });
            };
        }

        let flow = assemble(e1, &deterrence, &a, &b);
        let (l1, worst) = residuals(&flow, e1, e2);
        history.push(l1);
        if worst < params.tol {
            return Ok(GravityFit {
                flow,
                a,
                b,
                iterations: iteration,
                residual_history: history,
            });
        }
    }
    Err(GravityError::NonConvergence {
        iterations: params.max_iter,
        residual: history.last().and_then(|r| r.to_f64()).unwrap_or(f64::NAN),
    })
}

/// Balancing factor `1 / denom` for a zone with positive marginal; 1 for an
/// empty zone. `None` when mass has nowhere to go.
fn rescale<T: Float>(marginal: T, denom: T) -> Option<T> {
    if marginal == T::zero() {
        Some(T::one())
    } else if denom > T::zero() {
        Some(T::one() / denom)
    } else {
        None
    }
}

fn assemble<T: Float + Scalar>(e1: &[T], deterrence: &DenseMatrix<T>, a: &[T], b: &[T]) -> DenseMatrix<T> {
    let n = e1.len();
    DenseMatrix::from_fn(n, n, |i, j| a[i] * e1[i] * b[j] * deterrence[(i, j)])
}

/// (L1 residual over both marginals, largest single residual).
fn residuals<T: Float + Scalar>(x: &DenseMatrix<T>, e1: &[T], e2: &[T]) -> (T, T) {
    let mut l1 = T::zero();
    let mut worst = T::zero();
    for (s, &e) in x.row_sums().into_iter().zip(e1).chain(x.col_sums().into_iter().zip(e2)) {
        let r = (s - e).abs();
        l1 = l1 + r;
        worst = worst.max(r);
    }
    (l1, worst)
}

/// Side-by-side comparison of a real-valued flow and an integral one.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowComparison<T> {
    /// `Σ |g_ij − x_ij|`.
    pub l1: T,
    /// Cosine similarity of the flattened matrices; 0 when undefined.
    pub cosine: T,
    /// False when either matrix is all zeros.
    pub cosine_defined: bool,
    /// Row sums of the first flow minus those of the second.
    pub row_residuals: Vec<T>,
    pub col_residuals: Vec<T>,
}

pub fn gravity_vs_lp_report<T: Float + Scalar>(
    flow_gravity: &DenseMatrix<T>,
    flow_lp: &FlowMatrix,
) -> Result<FlowComparison<T>, GravityError> {
    compare_flows(flow_gravity, &flow_lp.to_matrix())
}

/// [`gravity_vs_lp_report`] for two dense flows.
pub fn compare_flows<T: Float + Scalar>(
    first: &DenseMatrix<T>,
    second: &DenseMatrix<T>,
) -> Result<FlowComparison<T>, GravityError> {
    if first.nrows() != second.nrows() {
        return Err(GravityError::DimensionMismatch {
            expected: first.nrows(),
            found: second.nrows(),
        });
    }
    if first.ncols() != second.ncols() {
        return Err(GravityError::DimensionMismatch {
            expected: first.ncols(),
            found: second.ncols(),
        });
    }
    let (mut l1, mut dot, mut n1, mut n2) = (T::zero(), T::zero(), T::zero(), T::zero());
    for (&g, &x) in first.as_slice().iter().zip(second.as_slice()) {
        l1 = l1 + (g - x).abs();
        dot = dot + g * x;
        n1 = n1 + g * g;
        n2 = n2 + x * x;
    }
    let cosine_defined = n1 > T::zero() && n2 > T::zero();
    let cosine = if cosine_defined { dot / (n1.sqrt() * n2.sqrt()) } else { T::zero() };
    let diff = |a: Vec<T>, b: Vec<T>| a.into_iter().zip(b).map(|(p, q)| p - q).collect();
    Ok(FlowComparison {
        l1,
        cosine,
        cosine_defined,
        row_residuals: diff(first.row_sums(), second.row_sums()),
        col_residuals: diff(first.col_sums(), second.col_sums()),
    })
}
