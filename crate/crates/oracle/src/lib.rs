//! Exhaustive oracles over small integral transportation polytopes.
//!
//! Every function here walks the full set of nonnegative integer matrices
//! with the given row and column sums. The optimizing variants memoize on
//! `(row, remaining column sums)`, which visits the same set of matrices
//! without re-expanding identical suffixes. Nothing in this crate shares code
//! with the solvers it is used to check.

use std::collections::HashMap;

/// Calls `visit` once for every nonnegative integer matrix with the given
/// row and column sums. Intended for tiny instances only.
pub fn for_each_table(rows: &[u64], cols: &[u64], mut visit: impl FnMut(&[Vec<u64>])) {
    if rows.iter().sum::<u64>() != cols.iter().sum::<u64>() {
        return;
    }
    let mut table = vec![vec![0u64; cols.len()]; rows.len()];
    let mut remaining = cols.to_vec();
    fill_row(rows, 0, &mut remaining, &mut table, &mut visit);
}

fn fill_row(
    rows: &[u64],
    r: usize,
    remaining: &mut Vec<u64>,
    table: &mut Vec<Vec<u64>>,
    visit: &mut impl FnMut(&[Vec<u64>]),
) {
    if r == rows.len() {
        if remaining.iter().all(|&c| c == 0) {
            visit(table);
        }
        return;
    }
    let mut row = vec![0u64; remaining.len()];
    let mut compositions = Vec::new();
    compose(rows[r], 0, remaining, &mut row, &mut compositions);
    for comp in compositions {
        for (j, &v) in comp.iter().enumerate() {
            remaining[j] -= v;
        }
        table[r] = comp.clone();
        fill_row(rows, r + 1, remaining, table, visit);
        for (j, &v) in comp.iter().enumerate() {
            remaining[j] += v;
        }
    }
}

/// All ways to write `left` as an ordered sum with part `j` at most `caps[j]`.
fn compose(left: u64, j: usize, caps: &[u64], row: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
    if j == caps.len() {
        if left == 0 {
            out.push(row.clone());
        }
        return;
    }
    let tail_cap: u64 = caps[j + 1..].iter().sum();
    let lo = left.saturating_sub(tail_cap);
    let hi = left.min(caps[j]);
    if lo > hi {
        return;
    }
    for v in lo..=hi {
        row[j] = v;
        compose(left - v, j + 1, caps, row, out);
    }
    row[j] = 0;
}

/// Number of integral points of the polytope.
pub fn count_tables(rows: &[u64], cols: &[u64]) -> u64 {
    let mut count = 0;
    for_each_table(rows, cols, |_| count += 1);
    count
}

/// Minimum of `sum_ij cost[i][j] * x[i][j]` over all integral points, or
/// `None` when the polytope is empty. `cost` is rows-by-cols.
pub fn min_cost(rows: &[u64], cols: &[u64], cost: &[Vec<i64>]) -> Option<i64> {
    if rows.iter().sum::<u64>() != cols.iter().sum::<u64>() {
        return None;
    }
    let mut memo = HashMap::new();
    best_from(rows, 0, cols.to_vec(), &|r, comp: &[u64]| {
        comp.iter()
            .zip(&cost[r])
            .map(|(&x, &c)| x as i64 * c)
            .sum::<i64>()
    }, &mut memo, Goal::Min)
}

/// Maximum trace over all integral points of a square polytope.
pub fn max_trace(rows: &[u64], cols: &[u64]) -> Option<i64> {
    if rows.iter().sum::<u64>() != cols.iter().sum::<u64>() {
        return None;
    }
    let mut memo = HashMap::new();
    best_from(rows, 0, cols.to_vec(), &|r, comp: &[u64]| comp[r] as i64, &mut memo, Goal::Max)
}

#[derive(Clone, Copy)]
enum Goal {
    Min,
    Max,
}

fn best_from(
    rows: &[u64],
    r: usize,
    remaining: Vec<u64>,
    score: &dyn Fn(usize, &[u64]) -> i64,
    memo: &mut HashMap<(usize, Vec<u64>), Option<i64>>,
    goal: Goal,
) -> Option<i64> {
    if r == rows.len() {
        return remaining.iter().all(|&c| c == 0).then_some(0);
    }
    if let Some(&v) = memo.get(&(r, remaining.clone())) {
        return v;
    }
    let mut row = vec![0u64; remaining.len()];
    let mut compositions = Vec::new();
    compose(rows[r], 0, &remaining, &mut row, &mut compositions);
    let mut best: Option<i64> = None;
    for comp in compositions {
        let next: Vec<u64> = remaining.iter().zip(&comp).map(|(a, b)| a - b).collect();
        if let Some(rest) = best_from(rows, r + 1, next, score, memo, goal) {
            let total = rest + score(r, &comp);
            best = Some(match (best, goal) {
                (None, _) => total,
                (Some(b), Goal::Min) => b.min(total),
                (Some(b), Goal::Max) => b.max(total),
            });
        }
    }
    memo.insert((r, remaining), best);
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_small_polytopes() {
        // 2x2 with margins (3,1)/(2,2): x11 in {1,2}
        assert_eq!(count_tables(&[3, 1], &[2, 2]), 2);
        assert_eq!(count_tables(&[1, 1], &[3, 0]), 0);
        assert_eq!(count_tables(&[0, 0], &[0, 0]), 1);
        // 3x3 all-ones margins: permutation matrices
        assert_eq!(count_tables(&[1, 1, 1], &[1, 1, 1]), 6);
    }

    #[test]
    fn memoized_agrees_with_plain_enumeration() {
        let rows = [4, 0, 1, 2];
        let cols = [1, 3, 1, 2];
        let cost = vec![
            vec![0, 3, 1, 7],
            vec![2, 0, 5, 1],
            vec![4, 1, 0, 2],
            vec![9, 2, 6, 0],
        ];
        let mut plain_min = i64::MAX;
        let mut plain_trace = 0;
        for_each_table(&rows, &cols, |t| {
            let c: i64 = (0..4)
                .flat_map(|i| (0..4).map(move |j| (i, j)))
                .map(|(i, j)| t[i][j] as i64 * cost[i][j])
                .sum();
            plain_min = plain_min.min(c);
            plain_trace = plain_trace.max((0..4).map(|i| t[i][i] as i64).sum());
        });
        assert_eq!(min_cost(&rows, &cols, &cost), Some(plain_min));
        assert_eq!(max_trace(&rows, &cols), Some(plain_trace));
    }

    #[test]
    fn max_trace_small_cases() {
        assert_eq!(max_trace(&[3, 1], &[2, 2]), Some(3));
        assert_eq!(max_trace(&[4, 0, 1], &[1, 3, 1]), Some(2));
        assert_eq!(max_trace(&[5, 0, 7], &[5, 0, 7]), Some(12));
    }
}
