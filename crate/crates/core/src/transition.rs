//! Row-stochastic transition matrices derived from estimated flows, and the
//! multi-step, duration and histogram extrapolations built from them.

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use thiserror::Error;

use crate::matrix::DenseMatrix;
use crate::polytope::FlowMatrix;
use crate::scalar::Scalar;

/// Absolute tolerance on row sums of a stochastic matrix.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TransitionError {
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("entry ({row}, {col}) outside [0, 1]")]
    EntryOutOfRange { row: usize, col: usize },
    #[error("row {row} sums to {sum}, expected 1")]
    RowSum { row: usize, sum: f64 },
    #[error("negative flow at ({row}, {col})")]
    NegativeFlow { row: usize, col: usize },
    #[error("expected dimension {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("at least one step is required")]
    ZeroSteps,
    #[error("no transition matrices supplied")]
    EmptyList,
    #[error("duration {l} outside [{t_k}, {t_k1}]")]
    DurationOutOfRange { l: f64, t_k: f64, t_k1: f64 },
    #[error("histogram has {weights} bins but {matrices} matrices were supplied")]
    HistogramLength { weights: usize, matrices: usize },
    #[error("histogram weights must be nonnegative and sum to 1 (sum {sum})")]
    InvalidHistogram { sum: f64 },
    #[error("bin width must be positive")]
    InvalidBinWidth,
    #[error("stationary iteration did not converge: {0}")]
    NonConvergence(NonConvergence),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NonConvergence {
    /// A closed class of the chain has this period (> 1); iterates oscillate.
    Periodic { period: usize },
    /// Iteration budget spent with the last L1 step still above tolerance.
    MaxIterations { iterations: usize },
}

impl std::fmt::Display for NonConvergence {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NonConvergence::Periodic { period } => write!(f, "chain has a closed class of period {period}"),
            NonConvergence::MaxIterations { iterations } => write!(f, "still moving after {iterations} iterations"),
        }
    }
}

/// Square matrix with entries in `[0, 1]` and unit row sums.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticMatrix<T> {
    p: DenseMatrix<T>,
}

impl<T: Scalar> StochasticMatrix<T> {
    /// Validates entries and row sums to within [`ROW_SUM_TOLERANCE`].
    pub fn new(p: DenseMatrix<T>) -> Result<Self, TransitionError> {
        if !p.is_square() {
            return Err(TransitionError::NotSquare {
                rows: p.nrows(),
                cols: p.ncols(),
            });
        }
        let tol = T::tol(ROW_SUM_TOLERANCE);
        for i in 0..p.nrows() {
            for (j, &v) in p.row(i).iter().enumerate() {
                if !v.is_finite_val() || v < T::zero() - tol || v > T::one() + tol {
                    return Err(TransitionError::EntryOutOfRange { row: i, col: j });
                }
            }
            let sum: T = p.row(i).iter().copied().sum();
            if (sum - T::one()).abs_val() > tol {
                return Err(TransitionError::RowSum {
                    row: i,
                    sum: sum.to_f64().unwrap_or(f64::NAN),
                });
            }
        }
        Ok(Self { p })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self, TransitionError> {
        Self::new(DenseMatrix::from_rows(rows))
    }

    pub fn identity(n: usize) -> Self {
        Self {
            p: DenseMatrix::identity(n),
        }
    }

    pub fn n(&self) -> usize {
        self.p.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.p[(i, j)]
    }

    pub fn matrix(&self) -> &DenseMatrix<T> {
        &self.p
    }

    pub fn into_matrix(self) -> DenseMatrix<T> {
        self.p
    }

    /// Largest deviation of a row sum from 1.
    pub fn row_sum_error(&self) -> T {
        self.p
            .row_sums()
            .into_iter()
            .fold(T::zero(), |m, s| m.max_val((s - T::one()).abs_val()))
    }

    /// Product of two stochastic matrices, which is again stochastic.
    pub fn compose(&self, other: &Self) -> Result<Self, TransitionError> {
        check_dim(self.n(), other.n())?;
        Ok(Self {
            p: self.p.matmul(&other.p),
        })
    }
}

fn check_dim(expected: usize, found: usize) -> Result<(), TransitionError> {
    if expected == found {
        Ok(())
    } else {
        Err(TransitionError::DimensionMismatch { expected, found })
    }
}

/// Divides each row of an integral flow by its total. Empty rows become
/// the identity row: an origin nobody leaves keeps its (zero) population.
pub fn row_normalize<T: Scalar>(x: &FlowMatrix) -> StochasticMatrix<T> {
    assert_eq!(x.n_rows(), x.n_cols(), "flow matrix must be square");
    let mut p = DenseMatrix::zeros(x.n_rows(), x.n_cols());
    let sums = x.row_sums();
    for (i, j, v) in x.iter() {
        p[(i, j)] = T::from_count(v) / T::from_count(sums[i]);
    }
    for (i, &s) in sums.iter().enumerate() {
        if s == 0 {
            p[(i, i)] = T::one();
        }
    }
    StochasticMatrix { p }
}

/// [`row_normalize`] for real-valued flows such as averages of several
/// integral solutions.
pub fn row_normalize_dense<T: Scalar>(x: &DenseMatrix<T>) -> Result<StochasticMatrix<T>, TransitionError> {
    if !x.is_square() {
        return Err(TransitionError::NotSquare {
            rows: x.nrows(),
            cols: x.ncols(),
        });
    }
    let n = x.nrows();
    let mut p = DenseMatrix::zeros(n, n);
    for i in 0..n {
        let row = x.row(i);
        if let Some(j) = row.iter().position(|&v| v < T::zero() || !v.is_finite_val()) {
            return Err(TransitionError::NegativeFlow { row: i, col: j });
        }
        let sum: T = row.iter().copied().sum();
        if sum == T::zero() {
            p[(i, i)] = T::one();
        } else {
            for (dst, &v) in p.row_mut(i).iter_mut().zip(row) {
                *dst = v / sum;
            }
        }
    }
    Ok(StochasticMatrix { p })
}

/// One step of the chain applied to a presence vector: `pᵀ e`.
pub fn propagate<T: Scalar>(p: &StochasticMatrix<T>, e: &[T]) -> Result<Vec<T>, TransitionError> {
    check_dim(p.n(), e.len())?;
    Ok(p.p.transpose_mul_vec(e))
}

/// `pᵏ` by repeated squaring.
pub fn k_step_power<T: Scalar>(p: &StochasticMatrix<T>, k: usize) -> Result<StochasticMatrix<T>, TransitionError> {
    if k == 0 {
        return Err(TransitionError::ZeroSteps);
    }
    let mut result: Option<DenseMatrix<T>> = None;
    let mut base = p.p.clone();
    let mut e = k;
    loop {
        if e & 1 == 1 {
            result = Some(match result {
                None => base.clone(),
                Some(r) => r.matmul(&base),
            });
        }
        e >>= 1;
        if e == 0 {
            break;
        }
        base = base.matmul(&base);
    }
    Ok(StochasticMatrix {
        p: result.expect("k >= 1 sets at least one bit"),
    })
}

/// Operator for `steps` transitions that cycle through `ps` in order: step
/// `j` (from 0) uses `ps[j mod len]`. The result `M` satisfies
/// `E_{steps} = Mᵀ E_0`, i.e. `M = ps[0] · ps[1] · … `.
pub fn chained_product<T: Scalar>(
    ps: &[StochasticMatrix<T>],
    steps: usize,
) -> Result<StochasticMatrix<T>, TransitionError> {
    let first = ps.first().ok_or(TransitionError::EmptyList)?;
    if steps == 0 {
        return Err(TransitionError::ZeroSteps);
    }
    for p in ps {
        check_dim(first.n(), p.n())?;
    }
    if ps.len() == 1 {
        return k_step_power(first, steps);
    }

    // One full cycle, powered, then the leftover prefix.
    let cycle = ps[1..].iter().fold(first.p.clone(), |acc, p| acc.matmul(&p.p));
    let full = steps / ps.len();
    let rest = steps % ps.len();
    let mut out = if full > 0 {
        k_step_power(&StochasticMatrix { p: cycle }, full)?.p
    } else {
        DenseMatrix::identity(first.n())
    };
    for p in &ps[..rest] {
        out = out.matmul(&p.p);
    }
    Ok(StochasticMatrix { p: out })
}

/// Transition matrix for a duration `l` between two sampled horizons
/// `t_k < t_k1`, mixing `s_k` and `s_k1` linearly so that `l = t_k` gives
/// `s_k` and `l = t_k1` gives `s_k1`.
pub fn duration_interpolate<T: Scalar>(
    s_k: &StochasticMatrix<T>,
    s_k1: &StochasticMatrix<T>,
    t_k: T,
    t_k1: T,
    l: T,
) -> Result<StochasticMatrix<T>, TransitionError> {
    check_dim(s_k.n(), s_k1.n())?;
    if !(t_k < t_k1) || l < t_k || l > t_k1 {
        let f = |v: T| v.to_f64().unwrap_or(f64::NAN);
        return Err(TransitionError::DurationOutOfRange {
            l: f(l),
            t_k: f(t_k),
            t_k1: f(t_k1),
        });
    }
    let w = (t_k1 - l) / (t_k1 - t_k);
    Ok(StochasticMatrix {
        p: s_k.p.scale(w).add(&s_k1.p.scale(T::one() - w)),
    })
}

/// Discretised trip-duration distribution. Bin `i` covers trips of about
/// `i + 1` sampling intervals of length `bin_width`.
#[derive(Debug, Clone, PartialEq)]
pub struct DurationHistogram<T> {
    weights: Vec<T>,
    bin_width: T,
}

impl<T: Scalar> DurationHistogram<T> {
    pub fn new(weights: Vec<T>, bin_width: T) -> Result<Self, TransitionError> {
        let sum: T = weights.iter().copied().sum();
        let bad_sum = || TransitionError::InvalidHistogram {
            sum: sum.to_f64().unwrap_or(f64::NAN),
        };
        if weights.is_empty() || weights.iter().any(|&w| w < T::zero() || !w.is_finite_val()) {
            return Err(bad_sum());
        }
        if (sum - T::one()).abs_val() > T::tol(ROW_SUM_TOLERANCE) {
            return Err(bad_sum());
        }
        if !(bin_width > T::zero()) {
            return Err(TransitionError::InvalidBinWidth);
        }
        Ok(Self { weights, bin_width })
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn bin_width(&self) -> T {
        self.bin_width
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// `Σᵢ hᵢ Sᵢ` where `ss[i]` is the transition matrix for bin `i`.
pub fn histogram_mix<T: Scalar>(
    ss: &[StochasticMatrix<T>],
    h: &DurationHistogram<T>,
) -> Result<StochasticMatrix<T>, TransitionError> {
    if ss.len() != h.len() {
        return Err(TransitionError::HistogramLength {
            weights: h.len(),
            matrices: ss.len(),
        });
    }
    let n = ss[0].n();
    let mut out = DenseMatrix::zeros(n, n);
    for (s, &w) in ss.iter().zip(&h.weights) {
        check_dim(n, s.n())?;
        if w != T::zero() {
            out = out.add(&s.p.scale(w));
        }
    }
    Ok(StochasticMatrix { p: out })
}

/// `[p^first, p^(first+1), …]`, `count` matrices, for feeding
/// [`histogram_mix`] when the first histogram bin corresponds to `first`
/// sampling intervals.
pub fn step_matrices<T: Scalar>(
    p: &StochasticMatrix<T>,
    first: usize,
    count: usize,
) -> Result<Vec<StochasticMatrix<T>>, TransitionError> {
    let mut out = Vec::with_capacity(count);
    if count == 0 {
        return Ok(out);
    }
    let mut current = k_step_power(p, first)?;
    for _ in 0..count {
        let next = current.compose(p)?;
        out.push(current);
        current = next;
    }
    Ok(out)
}

/// Result of [`stationary_distribution`].
#[derive(Debug, Clone, PartialEq)]
pub struct Stationary<T> {
    pub distribution: Vec<T>,
    pub iterations: usize,
}

/// Power iteration `f ← pᵀ f` from the uniform distribution until two
/// successive iterates are closer than `tol` in L1.
///
/// Chains with a periodic closed class are reported up front: from a
/// generic start their iterates cycle instead of settling.
pub fn stationary_distribution<T: Scalar>(
    p: &StochasticMatrix<T>,
    tol: T,
    max_iter: usize,
) -> Result<Stationary<T>, TransitionError> {
    if let Some(period) = closed_class_period(p) {
        return Err(TransitionError::NonConvergence(NonConvergence::Periodic { period }));
    }
    let n = p.n();
    let mut f = vec![T::one() / T::from_count(n as u64); n];
    for iteration in 1..=max_iter {
        let next = p.p.transpose_mul_vec(&f);
        let step: T = next.iter().zip(&f).map(|(&a, &b)| (a - b).abs_val()).sum();
        f = next;
        if step < tol {
            return Ok(Stationary {
                distribution: f,
                iterations: iteration,
            });
        }
    }
    Err(TransitionError::NonConvergence(NonConvergence::MaxIterations { iterations: max_iter }))
}

/// Largest period among the closed communicating classes, if any exceeds 1.
fn closed_class_period<T: Scalar>(p: &StochasticMatrix<T>) -> Option<usize> {
    let n = p.n();
    let mut graph = DiGraph::<(), ()>::with_capacity(n, 0);
    let nodes: Vec<_> = (0..n).map(|_| graph.add_node(())).collect();
    for i in 0..n {
        for (j, &v) in p.p.row(i).iter().enumerate() {
            if v > T::zero() {
                graph.add_edge(nodes[i], nodes[j], ());
            }
        }
    }

    let mut class_of = vec![usize::MAX; n];
    let classes = tarjan_scc(&graph);
    for (c, members) in classes.iter().enumerate() {
        for v in members {
            class_of[v.index()] = c;
        }
    }

    let mut worst = 1;
    for (c, members) in classes.iter().enumerate() {
        let closed = members
            .iter()
            .all(|&u| graph.neighbors(u).all(|v| class_of[v.index()] == c));
        if !closed {
            continue;
        }
        // BFS levels inside the class; the period is the gcd of
        // level[u] + 1 - level[v] over the class's edges.
        let mut level = vec![usize::MAX; n];
        let root = members[0].index();
        level[root] = 0;
        let mut queue = std::collections::VecDeque::from([root]);
        let mut period = 0usize;
        while let Some(u) = queue.pop_front() {
            for v in graph.neighbors(nodes[u]) {
                let v = v.index();
                if level[v] == usize::MAX {
                    level[v] = level[u] + 1;
                    queue.push_back(v);
                } else {
                    period = gcd(period, (level[u] + 1).abs_diff(level[v]));
                }
            }
        }
        worst = worst.max(period);
    }
    (worst > 1).then_some(worst)
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}
