use crate::matrix::DenseMatrix;
use crate::scalar::Scalar;

use super::{CostMatrix, Marginals, PolytopeError};

/// Parameters of the virtual zone that absorbs and emits users when the
/// observed totals differ between two times. No defaults: the virtual
/// population and the vanish/spawn prices are modelling choices.
#[derive(Debug, Clone, PartialEq)]
pub struct SinkSourceConfig<T> {
    /// Population of the virtual zone at the first time.
    pub u: u64,
    /// Cost of a user disappearing from each zone.
    pub vanish_cost: Vec<T>,
    /// Cost of a user appearing in each zone.
    pub spawn_cost: Vec<T>,
}

/// Appends a sink/source zone so that unequal totals give balanced
/// marginals `(e1, u)` and `(e2, u + δ)` with `δ = Σe1 − Σe2`.
///
/// The extra row of the cost matrix holds the spawn costs, the extra column
/// the vanish costs, and the corner is 0.
pub fn augment_sink_source<T: Scalar>(
    e1: &[u64],
    e2: &[u64],
    c: &CostMatrix<T>,
    cfg: &SinkSourceConfig<T>,
) -> Result<(Marginals, CostMatrix<T>), PolytopeError> {
    let n = e1.len();
    if e2.len() != n {
        return Err(PolytopeError::LengthMismatch {
            gamma: n,
            eta: e2.len(),
        });
    }
    for found in [c.n(), cfg.vanish_cost.len(), cfg.spawn_cost.len()] {
        if found != n {
            return Err(PolytopeError::DimensionMismatch { expected: n, found });
        }
    }

    let total1: i128 = e1.iter().map(|&v| v as i128).sum();
    let total2: i128 = e2.iter().map(|&v| v as i128).sum();
    let delta = total1 - total2;
    let required = (-delta).max(0);
    let last = cfg.u as i128 + delta;
    if last < 0 {
        return Err(PolytopeError::SourceTooSmall {
            u: cfg.u,
            required: required as u64,
        });
    }

    let mut gamma = e1.to_vec();
    gamma.push(cfg.u);
    let mut eta = e2.to_vec();
    eta.push(u64::try_from(last).map_err(|_| PolytopeError::Overflow)?);
    let marginals = Marginals::new(gamma, eta)?;

    let cost = DenseMatrix::from_fn(n + 1, n + 1, |i, j| match (i == n, j == n) {
        (false, false) => c.get(i, j),
        (false, true) => cfg.vanish_cost[i],
        (true, false) => cfg.spawn_cost[j],
        (true, true) => T::zero(),
    });
    Ok((marginals, CostMatrix::new(cost)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polytope::check_feasible;

    fn cfg(u: u64, n: usize) -> SinkSourceConfig<f64> {
        SinkSourceConfig {
            u,
            vanish_cost: vec![5.0; n],
            spawn_cost: vec![6.0; n],
        }
    }

    #[test]
    fn more_users_leaving_than_arriving() {
        let c = CostMatrix::two_level(2, 0.0, 1.0).unwrap();
        let (m, cost) = augment_sink_source(&[3, 1], &[2, 1], &c, &cfg(0, 2)).unwrap();
        assert_eq!(m.gamma(), &[3, 1, 0]);
        assert_eq!(m.eta(), &[2, 1, 1]);
        assert_eq!(m.k(), 4);
        assert_eq!(cost.row(0), &[0.0, 1.0, 5.0]);
        assert_eq!(cost.row(2), &[6.0, 6.0, 0.0]);
    }

    #[test]
    fn balanced_totals() {
        let c = CostMatrix::two_level(2, 0.0, 1.0).unwrap();
        let (m, _) = augment_sink_source(&[2, 5], &[4, 3], &c, &cfg(3, 2)).unwrap();
        assert_eq!(m.gamma(), &[2, 5, 3]);
        assert_eq!(m.eta(), &[4, 3, 3]);
    }

    #[test]
    fn virtual_population_must_cover_growth() {
        let c = CostMatrix::two_level(2, 0.0, 1.0).unwrap();
        assert_eq!(
            augment_sink_source(&[1, 1], &[2, 2], &c, &cfg(1, 2)),
            Err(PolytopeError::SourceTooSmall { u: 1, required: 2 })
        );
        let (m, _) = augment_sink_source(&[1, 1], &[2, 2], &c, &cfg(2, 2)).unwrap();
        assert_eq!(m.gamma(), &[1, 1, 2]);
        assert_eq!(m.eta(), &[2, 2, 0]);
        let signed = |v: &[u64]| v.iter().map(|&x| x as i64).collect::<Vec<_>>();
        assert!(check_feasible(&signed(m.gamma()), &signed(m.eta())).is_ok());
    }

    #[test]
    fn dimension_checks() {
        let c = CostMatrix::two_level(3, 0.0, 1.0).unwrap();
        assert!(augment_sink_source(&[1, 1], &[1, 1], &c, &cfg(0, 2)).is_err());
        let c = CostMatrix::two_level(2, 0.0, 1.0).unwrap();
        assert!(augment_sink_source(&[1, 1], &[1], &c, &cfg(0, 2)).is_err());
    }
}
