use super::{northwest_corner_fill, FlowMatrix, Marginals};

/// Largest trace over all integral flows with the given marginals:
/// `Σᵢ min(ηᵢ, γᵢ)`. One pass, constant extra space.
pub fn trace_max_value(m: &Marginals) -> u64 {
    m.gamma().iter().zip(m.eta()).map(|(&g, &e)| g.min(e)).sum()
}

/// An optimal flow for trace maximisation together with the pieces of its
/// construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceMaxWitness {
    /// Reordering that puts zones with `ηᵢ ≤ γᵢ` first; position `p` holds
    /// original zone `permutation[p]`.
    pub permutation: Vec<usize>,
    /// Number of zones with `ηᵢ ≤ γᵢ`. Equals `n` when `η = γ`.
    pub split: usize,
    /// Row mass still to place after the diagonal, for the first `split`
    /// zones in permuted order.
    pub residual_gamma: Vec<u64>,
    /// Column mass still to place, for the remaining `n − split` zones.
    pub residual_eta: Vec<u64>,
    pub flow: FlowMatrix,
}

impl TraceMaxWitness {
    /// Mass placed off the diagonal.
    pub fn residual_mass(&self) -> u64 {
        self.residual_gamma.iter().sum()
    }
}

/// Builds an integral flow attaining [`trace_max_value`].
///
/// Zones where the arriving mass does not exceed the leaving mass keep all
/// of their arrivals on the diagonal; the others keep all of their
/// departures. What is left forms a rectangular polytope between the first
/// group (as origins) and the second (as destinations), filled with the
/// northwest-corner rule. At most `2n − 1` entries are nonzero.
pub fn trace_max_witness(m: &Marginals) -> TraceMaxWitness {
    let n = m.n();
    let (gamma, eta) = (m.gamma(), m.eta());

    if gamma == eta {
        return TraceMaxWitness {
            permutation: (0..n).collect(),
            split: n,
            residual_gamma: vec![0; n],
            residual_eta: Vec::new(),
            flow: FlowMatrix::from_triplets(n, n, (0..n).map(|i| (i, i, gamma[i]))),
        };
    }

    let mut permutation: Vec<usize> = (0..n).filter(|&i| eta[i] <= gamma[i]).collect();
    let split = permutation.len();
    permutation.extend((0..n).filter(|&i| eta[i] > gamma[i]));

    let (leaving_zones, arriving_zones) = permutation.split_at(split);
    let residual_gamma: Vec<u64> = leaving_zones.iter().map(|&i| gamma[i] - eta[i]).collect();
    let residual_eta: Vec<u64> = arriving_zones.iter().map(|&i| eta[i] - gamma[i]).collect();

    let block = northwest_corner_fill(&residual_gamma, &residual_eta)
        .expect("residual marginals have equal totals when the outer marginals do");

    let diagonal = (0..n).map(|i| (i, i, gamma[i].min(eta[i])));
    let off_diagonal = block
        .iter()
        .map(|(a, b, v)| (leaving_zones[a], arriving_zones[b], v))
        .collect::<Vec<_>>();
    let flow = FlowMatrix::from_triplets(n, n, diagonal.chain(off_diagonal));

    TraceMaxWitness {
        permutation,
        split,
        residual_gamma,
        residual_eta,
        flow,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polytope::check_feasible;

    #[test]
    fn two_zone_example() {
        let m = check_feasible(&[3, 1], &[2, 2]).unwrap();
        assert_eq!(trace_max_value(&m), 3);
        let w = trace_max_witness(&m);
        assert_eq!(w.flow.to_dense(), vec![vec![2, 1], vec![0, 1]]);
        assert_eq!(w.split, 1);
        assert_eq!(w.permutation, vec![0, 1]);
        assert_eq!(w.residual_gamma, vec![1]);
        assert_eq!(w.residual_eta, vec![1]);
    }

    #[test]
    fn balanced_marginals_give_the_diagonal() {
        let m = check_feasible(&[5, 0, 7], &[5, 0, 7]).unwrap();
        assert_eq!(trace_max_value(&m), 12);
        let w = trace_max_witness(&m);
        assert_eq!(w.flow.to_dense(), vec![vec![5, 0, 0], vec![0, 0, 0], vec![0, 0, 7]]);
        assert_eq!(w.split, 3);
        assert_eq!(w.residual_mass(), 0);
    }

    #[test]
    fn three_zone_value_matches_enumeration() {
        let m = check_feasible(&[4, 0, 1], &[1, 3, 1]).unwrap();
        let oracle = odflow_oracle::max_trace(m.gamma(), m.eta()).unwrap();
        assert_eq!(oracle, 2);
        assert_eq!(trace_max_value(&m), 2);
        let w = trace_max_witness(&m);
        assert!(w.flow.satisfies(&m));
        assert_eq!(w.flow.trace(), 2);
        // zones 0 and 2 have eta <= gamma; zone 1 receives the residual
        assert_eq!(w.permutation, vec![0, 2, 1]);
        assert_eq!(w.flow.to_dense(), vec![vec![1, 3, 0], vec![0, 0, 0], vec![0, 0, 1]]);
    }

    #[test]
    fn ties_go_to_the_leaving_group() {
        let m = check_feasible(&[2, 1, 0], &[2, 0, 1]).unwrap();
        let w = trace_max_witness(&m);
        assert_eq!(w.split, 2);
        assert_eq!(w.permutation, vec![0, 1, 2]);
        assert_eq!(w.flow.to_dense(), vec![vec![2, 0, 0], vec![0, 0, 1], vec![0, 0, 0]]);
    }

    #[test]
    fn zero_mass_zones_are_kept() {
        let m = check_feasible(&[0, 0, 3, 0], &[0, 3, 0, 0]).unwrap();
        let w = trace_max_witness(&m);
        assert!(w.flow.satisfies(&m));
        assert_eq!(w.flow.n_rows(), 4);
        assert_eq!(w.flow.to_dense()[2][1], 3);
    }
}
