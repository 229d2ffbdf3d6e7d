use super::PolytopeError;

/// Row sums (`gamma`, mass leaving each zone) and column sums (`eta`, mass
/// arriving) of a square transportation polytope. Both sum to `k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Marginals {
    gamma: Vec<u64>,
    eta: Vec<u64>,
    k: u64,
}

impl Marginals {
    pub fn new(gamma: Vec<u64>, eta: Vec<u64>) -> Result<Self, PolytopeError> {
        if gamma.is_empty() && eta.is_empty() {
            return Err(PolytopeError::Empty);
        }
        if gamma.len() != eta.len() {
            return Err(PolytopeError::LengthMismatch {
                gamma: gamma.len(),
                eta: eta.len(),
            });
        }
        let gamma_sum = checked_sum(&gamma)?;
        let eta_sum = checked_sum(&eta)?;
        if gamma_sum != eta_sum {
            return Err(PolytopeError::SumMismatch { gamma_sum, eta_sum });
        }
        Ok(Self {
            gamma,
            eta,
            k: gamma_sum,
        })
    }

    pub fn n(&self) -> usize {
        self.gamma.len()
    }

    /// Row sums.
    pub fn gamma(&self) -> &[u64] {
        &self.gamma
    }

    /// Column sums.
    pub fn eta(&self) -> &[u64] {
        &self.eta
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    /// Applies the same reordering to both marginals: entry `i` of the result
    /// is entry `perm[i]` of the input.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.n());
        Self {
            gamma: perm.iter().map(|&p| self.gamma[p]).collect(),
            eta: perm.iter().map(|&p| self.eta[p]).collect(),
            k: self.k,
        }
    }

    /// `½‖η − γ‖₁`, the mass that has to leave the diagonal.
    pub fn half_l1_gap(&self) -> u64 {
        let twice: u64 = self
            .gamma
            .iter()
            .zip(&self.eta)
            .map(|(&g, &e)| g.abs_diff(e))
            .sum();
        twice / 2
    }
}

fn checked_sum(v: &[u64]) -> Result<u64, PolytopeError> {
    v.iter()
        .try_fold(0u64, |acc, &x| acc.checked_add(x))
        .ok_or(PolytopeError::Overflow)
}

/// Validates signed presence vectors as marginals of a nonempty polytope.
///
/// The polytope is nonempty exactly when both vectors have the same total;
/// on mismatch the error carries both sums.
pub fn check_feasible(gamma: &[i64], eta: &[i64]) -> Result<Marginals, PolytopeError> {
    if gamma.len() != eta.len() {
        return Err(PolytopeError::LengthMismatch {
            gamma: gamma.len(),
            eta: eta.len(),
        });
    }
    let to_unsigned = |which: &'static str, v: &[i64]| -> Result<Vec<u64>, PolytopeError> {
        v.iter()
            .enumerate()
            .map(|(index, &value)| {
                u64::try_from(value).map_err(|_| PolytopeError::NegativeEntry { which, index, value })
            })
            .collect()
    };
    Marginals::new(to_unsigned("gamma", gamma)?, to_unsigned("eta", eta)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_zone_example_is_feasible() {
        let m = check_feasible(&[3, 1], &[2, 2]).unwrap();
        assert_eq!(m.k(), 4);
        assert_eq!(m.n(), 2);
    }

    #[test]
    fn all_zero_is_feasible_with_zero_mass() {
        let m = check_feasible(&[0, 0], &[0, 0]).unwrap();
        assert_eq!(m.k(), 0);
    }

    #[test]
    fn sum_mismatch_reports_both_sums() {
        assert_eq!(
            check_feasible(&[1, 1], &[3, 0]),
            Err(PolytopeError::SumMismatch {
                gamma_sum: 2,
                eta_sum: 3
            })
        );
    }

    #[test]
    fn rejects_negative_and_ragged_input() {
        assert!(matches!(
            check_feasible(&[1, -1], &[0, 0]),
            Err(PolytopeError::NegativeEntry { which: "gamma", index: 1, value: -1 })
        ));
        assert!(matches!(
            check_feasible(&[1], &[1, 0]),
            Err(PolytopeError::LengthMismatch { gamma: 1, eta: 2 })
        ));
        assert_eq!(check_feasible(&[], &[]), Err(PolytopeError::Empty));
    }

    #[test]
    fn half_gap() {
        let m = check_feasible(&[4, 0, 1], &[1, 3, 1]).unwrap();
        assert_eq!(m.half_l1_gap(), 3);
    }
}
