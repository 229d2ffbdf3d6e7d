use crate::matrix::DenseMatrix;
use crate::scalar::Scalar;

use super::PolytopeError;

/// Absolute tolerance used when recognising a two-level cost matrix.
pub const TWO_LEVEL_TOLERANCE: f64 = 1e-12;

/// Square matrix of nonnegative, finite per-unit movement costs.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix<T> {
    c: DenseMatrix<T>,
}

impl<T: Scalar> CostMatrix<T> {
    pub fn new(c: DenseMatrix<T>) -> Result<Self, PolytopeError> {
        if !c.is_square() {
            return Err(PolytopeError::NotSquare {
                rows: c.nrows(),
                cols: c.ncols(),
            });
        }
        if c.nrows() == 0 {
            return Err(PolytopeError::Empty);
        }
        for i in 0..c.nrows() {
            for j in 0..c.ncols() {
                let v = c[(i, j)];
                if !v.is_finite_val() || v < T::zero() {
                    return Err(PolytopeError::InvalidCost { row: i, col: j });
                }
            }
        }
        Ok(Self { c })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self, PolytopeError> {
        if rows.iter().any(|r| r.len() != rows.len()) {
            return Err(PolytopeError::NotSquare {
                rows: rows.len(),
                cols: rows.first().map_or(0, Vec::len),
            });
        }
        Self::new(DenseMatrix::from_rows(rows))
    }

    /// Cost `diag` on the diagonal and `off` everywhere else.
    pub fn two_level(n: usize, diag: T, off: T) -> Result<Self, PolytopeError> {
        Self::new(DenseMatrix::from_fn(n, n, |i, j| if i == j { diag } else { off }))
    }

    pub fn n(&self) -> usize {
        self.c.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.c[(i, j)]
    }

    pub fn row(&self, i: usize) -> &[T] {
        self.c.row(i)
    }

    pub fn matrix(&self) -> &DenseMatrix<T> {
        &self.c
    }

    pub fn into_matrix(self) -> DenseMatrix<T> {
        self.c
    }

    /// Entry `(i, j)` of the result is entry `(perm[i], perm[j])` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.n());
        Self {
            c: DenseMatrix::from_fn(self.n(), self.n(), |i, j| self.c[(perm[i], perm[j])]),
        }
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n()).all(|i| (0..i).all(|j| self.c[(i, j)] == self.c[(j, i)]))
    }
}

/// Cost that is `diag_cost` for staying and `off_cost` for any move, with
/// `diag_cost < off_cost`. Minimising such a cost is the same as maximising
/// the trace of the flow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoLevelCost<T> {
    diag_cost: T,
    off_cost: T,
}

impl<T: Scalar> TwoLevelCost<T> {
    pub fn new(diag_cost: T, off_cost: T) -> Result<Self, PolytopeError> {
        if diag_cost < off_cost {
            Ok(Self { diag_cost, off_cost })
        } else {
            Err(PolytopeError::NotTwoLevel)
        }
    }

    pub fn diag_cost(&self) -> T {
        self.diag_cost
    }

    pub fn off_cost(&self) -> T {
        self.off_cost
    }

    /// Total cost of moving `k` units of which `trace` stay put.
    pub fn objective(&self, k: u64, trace: u64) -> T {
        self.off_cost * T::from_count(k) - (self.off_cost - self.diag_cost) * T::from_count(trace)
    }
}

/// Recognises matrices with one value on the diagonal and a strictly larger
/// value everywhere off it, within [`TWO_LEVEL_TOLERANCE`]. Needs `n ≥ 2`.
pub fn detect_two_level<T: Scalar>(c: &CostMatrix<T>) -> Option<TwoLevelCost<T>> {
    let n = c.n();
    if n < 2 {
        return None;
    }
    let tol = T::tol(TWO_LEVEL_TOLERANCE);
    let d = c.get(0, 0);
    let o = c.get(0, 1);
    for i in 0..n {
        for (j, &v) in c.row(i).iter().enumerate() {
            let reference = if i == j { d } else { o };
            if (v - reference).abs_val() > tol {
                return None;
            }
        }
    }
    if o - d > tol {
        Some(TwoLevelCost { diag_cost: d, off_cost: o })
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Rational64 as Q;

    #[test]
    fn zero_one_cost_is_two_level() {
        let c = CostMatrix::two_level(3, 0.0, 1.0).unwrap();
        assert_eq!(detect_two_level(&c), Some(TwoLevelCost::new(0.0, 1.0).unwrap()));
    }

    #[test]
    fn three_levels_are_rejected() {
        let c = CostMatrix::from_rows(&[
            vec![0.0, 0.1, 1.0],
            vec![0.1, 0.0, 1.0],
            vec![1.0, 1.0, 0.0],
        ])
        .unwrap();
        assert_eq!(detect_two_level(&c), None);
    }

    #[test]
    fn equal_levels_are_rejected() {
        let c = CostMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert_eq!(detect_two_level(&c), None);
        assert!(TwoLevelCost::new(1.0, 1.0).is_err());
    }

    #[test]
    fn tolerance_is_absolute_1e12() {
        let c = CostMatrix::from_rows(&[vec![0.0, 1.0 + 5e-13], vec![1.0, 0.0]]).unwrap();
        assert!(detect_two_level(&c).is_some());
        let c = CostMatrix::from_rows(&[vec![0.0, 1.0 + 1e-9], vec![1.0, 0.0]]).unwrap();
        assert!(detect_two_level(&c).is_none());
    }

    #[test]
    fn rejects_negative_and_nonfinite() {
        assert!(matches!(
            CostMatrix::from_rows(&[vec![0.0, -1.0], vec![1.0, 0.0]]),
            Err(PolytopeError::InvalidCost { row: 0, col: 1 })
        ));
        assert!(CostMatrix::from_rows(&[vec![f64::INFINITY]]).is_err());
        assert!(CostMatrix::from_rows(&[vec![0.0, 1.0]]).is_err());
    }

    #[test]
    fn works_over_rationals() {
        let c = CostMatrix::two_level(2, Q::from_integer(0), Q::new(1, 3)).unwrap();
        let t = detect_two_level(&c).unwrap();
        assert_eq!(t.objective(4, 3), Q::new(1, 3));
    }
}
