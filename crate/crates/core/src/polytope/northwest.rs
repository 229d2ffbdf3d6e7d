use super::{FlowMatrix, PolytopeError};

/// Northwest-corner rule: a feasible integral point of the rectangular
/// transportation polytope with the given row and column sums.
///
/// Walks from the top-left cell, shipping as much as the current row and
/// column allow and then advancing whichever is exhausted (the row on ties).
/// At most `p + q − 1` entries are nonzero and the walk is `O(p + q)`.
pub fn northwest_corner_fill(row_marginals: &[u64], col_marginals: &[u64]) -> Result<FlowMatrix, PolytopeError> {
    let row_total: u64 = row_marginals.iter().sum();
    let col_total: u64 = col_marginals.iter().sum();
    if row_total != col_total {
        return Err(PolytopeError::SumMismatch {
            gamma_sum: row_total,
            eta_sum: col_total,
        });
    }

    let (p, q) = (row_marginals.len(), col_marginals.len());
    let mut entries = Vec::with_capacity((p + q).saturating_sub(1));
    let (mut i, mut j) = (0, 0);
    let mut row_left = row_marginals.first().copied().unwrap_or(0);
    let mut col_left = col_marginals.first().copied().unwrap_or(0);
    while i < p && j < q {
        let amount = row_left.min(col_left);
        if amount > 0 {
            entries.push((i, j, amount));
        }
        row_left -= amount;
        col_left -= amount;
        if row_left == 0 {
            i += 1;
            row_left = row_marginals.get(i).copied().unwrap_or(0);
        } else {
            j += 1;
            col_left = col_marginals.get(j).copied().unwrap_or(0);
        }
    }
    Ok(FlowMatrix::from_triplets(p, q, entries))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hand_executed_example() {
        let y = northwest_corner_fill(&[3, 2], &[1, 4]).unwrap();
        assert_eq!(y.to_dense(), vec![vec![1, 2], vec![0, 2]]);
    }

    #[test]
    fn single_cell() {
        let y = northwest_corner_fill(&[9], &[9]).unwrap();
        assert_eq!(y.to_dense(), vec![vec![9]]);
    }

    #[test]
    fn forced_point_with_zero_marginals() {
        let y = northwest_corner_fill(&[0, 5], &[5, 0]).unwrap();
        assert_eq!(y.to_dense(), vec![vec![0, 0], vec![5, 0]]);
    }

    #[test]
    fn rejects_unequal_totals() {
        assert!(matches!(
            northwest_corner_fill(&[1, 2], &[4]),
            Err(PolytopeError::SumMismatch { gamma_sum: 3, eta_sum: 4 })
        ));
    }

    fn balanced() -> impl Strategy<Value = (Vec<u64>, Vec<u64>)> {
        (prop::collection::vec(0u64..20, 1..12), 1usize..12, any::<u64>()).prop_map(|(rows, q, seed)| {
            let total: u64 = rows.iter().sum();
            // spread the total over q columns deterministically from the seed
            let mut cols = vec![0u64; q];
            let mut s = seed;
            for _ in 0..total {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                cols[(s >> 33) as usize % q] += 1;
            }
            (rows, cols)
        })
    }

    proptest! {
        #[test]
        fn feasible_and_sparse((rows, cols) in balanced()) {
            let y = northwest_corner_fill(&rows, &cols).unwrap();
            prop_assert_eq!(y.row_sums(), rows.clone());
            prop_assert_eq!(y.col_sums(), cols.clone());
            prop_assert!(y.nnz() < rows.len() + cols.len());
        }
    }
}
