use crate::scalar::Scalar;

use super::{CostMatrix, FlowMatrix, LpSolution, Marginals, PolytopeError, SolveRoute};

/// Exact integral optimum of `min Σ c_ij x_ij` over the transportation
/// polytope, for arbitrary nonnegative costs.
///
/// Successive shortest paths on the complete bipartite network (origins on
/// one side, destinations on the other) with Johnson potentials and a dense
/// `O(n²)` Dijkstra per augmentation. Among equal tentative distances the
/// origin with the lowest index is settled first, then the destination with
/// the lowest index, so the returned flow is a deterministic function of the
/// input.
pub fn min_cost_flow_solve<T: Scalar>(m: &Marginals, c: &CostMatrix<T>) -> Result<LpSolution<T>, PolytopeError> {
    let n = m.n();
    if c.n() != n {
        return Err(PolytopeError::DimensionMismatch {
            expected: n,
            found: c.n(),
        });
    }

    let mut network = Network::new(m, c);
    network.run();
    let flow = network.into_flow();
    let objective = flow.cost(c);
    Ok(LpSolution {
        flow,
        objective,
        route: SolveRoute::MinCostFlow,
    })
}

struct Network<'a, T> {
    n: usize,
    cost: &'a CostMatrix<T>,
    supply: Vec<u64>,
    demand: Vec<u64>,
    remaining: u64,
    /// Dense row-major flow.
    x: Vec<u64>,
    pot_row: Vec<T>,
    pot_col: Vec<T>,
    // Dijkstra scratch, reused between rounds.
    dist_row: Vec<Option<T>>,
    dist_col: Vec<Option<T>>,
    done_row: Vec<bool>,
    done_col: Vec<bool>,
    pred_row: Vec<Option<usize>>,
    pred_col: Vec<usize>,
}

impl<'a, T: Scalar> Network<'a, T> {
    fn new(m: &Marginals, cost: &'a CostMatrix<T>) -> Self {
        let n = m.n();
        // Column potentials start at the cheapest arc into each column so
        // that every forward reduced cost is nonnegative.
        let pot_col = (0..n)
            .map(|j| (0..n).map(|i| cost.get(i, j)).fold(cost.get(0, j), T::min_val))
            .collect();
        Self {
            n,
            cost,
            supply: m.gamma().to_vec(),
            demand: m.eta().to_vec(),
            remaining: m.k(),
            x: vec![0; n * n],
            pot_row: vec![T::zero(); n],
            pot_col,
            dist_row: vec![None; n],
            dist_col: vec![None; n],
            done_row: vec![false; n],
            done_col: vec![false; n],
            pred_row: vec![None; n],
            pred_col: vec![0; n],
        }
    }

    fn run(&mut self) {
        while self.remaining > 0 {
            let (target, dist) = self.shortest_path();
            self.update_potentials(dist);
            self.augment(target);
        }
    }

    /// Multi-source Dijkstra from every origin with supply left, stopping at
    /// the first settled destination with demand left.
    fn shortest_path(&mut self) -> (usize, T) {
        let n = self.n;
        for i in 0..n {
            self.dist_row[i] = (self.supply[i] > 0).then(T::zero);
            self.done_row[i] = false;
            self.pred_row[i] = None;
            self.dist_col[i] = None;
            self.done_col[i] = false;
        }

        loop {
            let node = self.next_node().expect("a feasible network always reaches a destination with demand");
            match node {
                Node::Row(i, d) => {
                    self.done_row[i] = true;
                    let costs = self.cost.row(i);
                    for j in 0..n {
                        if self.done_col[j] {
                            continue;
                        }
                        let reduced = (costs[j] + self.pot_row[i] - self.pot_col[j]).max_val(T::zero());
                        let nd = d + reduced;
                        if self.dist_col[j].is_none_or(|cur| nd < cur) {
                            self.dist_col[j] = Some(nd);
                            self.pred_col[j] = i;
                        }
                    }
                }
                Node::Col(j, d) => {
                    self.done_col[j] = true;
                    if self.demand[j] > 0 {
                        return (j, d);
                    }
                    for i in 0..n {
                        if self.done_row[i] || self.x[i * n + j] == 0 {
                            continue;
                        }
                        let reduced = (self.pot_col[j] - self.cost.get(i, j) - self.pot_row[i]).max_val(T::zero());
                        let nd = d + reduced;
                        if self.dist_row[i].is_none_or(|cur| nd < cur) {
                            self.dist_row[i] = Some(nd);
                            self.pred_row[i] = Some(j);
                        }
                    }
                }
            }
        }
    }

    fn next_node(&self) -> Option<Node<T>> {
        let mut best: Option<Node<T>> = None;
        let better = |d: T, best: &Option<Node<T>>| best.as_ref().is_none_or(|b| d < b.dist());
        for i in 0..self.n {
            if let (false, Some(d)) = (self.done_row[i], self.dist_row[i]) {
                if better(d, &best) {
                    best = Some(Node::Row(i, d));
                }
            }
        }
        for j in 0..self.n {
            if let (false, Some(d)) = (self.done_col[j], self.dist_col[j]) {
                if better(d, &best) {
                    best = Some(Node::Col(j, d));
                }
            }
        }
        best
    }

    fn update_potentials(&mut self, target_dist: T) {
        for i in 0..self.n {
            self.pot_row[i] += match (self.done_row[i], self.dist_row[i]) {
                (true, Some(d)) => d,
                _ => target_dist,
            };
            self.pot_col[i] += match (self.done_col[i], self.dist_col[i]) {
                (true, Some(d)) => d,
                _ => target_dist,
            };
        }
    }

    fn augment(&mut self, target: usize) {
        let n = self.n;
        // (row, col, forward?) arcs from the destination back to the source.
        let mut path = Vec::new();
        let mut j = target;
        let source = loop {
            let i = self.pred_col[j];
            path.push((i, j, true));
            match self.pred_row[i] {
                None => break i,
                Some(prev) => {
                    path.push((i, prev, false));
                    j = prev;
                }
            }
        };

        let mut amount = self.supply[source].min(self.demand[target]);
        for &(i, j, forward) in &path {
            if !forward {
                amount = amount.min(self.x[i * n + j]);
            }
        }
        debug_assert!(amount > 0);
        for &(i, j, forward) in &path {
            if forward {
                self.x[i * n + j] += amount;
            } else {
                self.x[i * n + j] -= amount;
            }
        }
        self.supply[source] -= amount;
        self.demand[target] -= amount;
        self.remaining -= amount;
    }

    fn into_flow(self) -> FlowMatrix {
        let n = self.n;
        FlowMatrix::from_triplets(
            n,
            n,
            self.x.iter().enumerate().map(|(p, &v)| (p / n, p % n, v)),
        )
    }
}

enum Node<T> {
    Row(usize, T),
    Col(usize, T),
}

impl<T: Copy> Node<T> {
    fn dist(&self) -> T {
        match *self {
            Node::Row(_, d) | Node::Col(_, d) => d,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polytope::check_feasible;
    use num_rational::Rational64 as Q;

    fn solve(gamma: &[i64], eta: &[i64], c: &[Vec<f64>]) -> LpSolution<f64> {
        let m = check_feasible(gamma, eta).unwrap();
        min_cost_flow_solve(&m, &CostMatrix::from_rows(c).unwrap()).unwrap()
    }

    #[test]
    fn two_zone_example() {
        let s = solve(&[3, 1], &[2, 2], &[vec![0.0, 1.0], vec![1.0, 0.0]]);
        assert_eq!(s.flow.to_dense(), vec![vec![2, 1], vec![0, 1]]);
        assert_eq!(s.objective, 1.0);
    }

    #[test]
    fn detour_example_routes_via_third_zone() {
        let c = vec![
            vec![0.0, 10.0, 1.0],
            vec![10.0, 0.0, 1.0],
            vec![1.0, 1.0, 0.0],
        ];
        let s = solve(&[3, 1, 1], &[2, 2, 1], &c);
        assert_eq!(s.flow.to_dense(), vec![vec![2, 0, 1], vec![0, 1, 0], vec![0, 1, 0]]);
        assert_eq!(s.objective, 2.0);
    }

    #[test]
    fn balanced_two_level_stays_put() {
        let s = solve(&[2, 7], &[2, 7], &[vec![0.5, 3.0], vec![3.0, 0.5]]);
        assert_eq!(s.flow.to_dense(), vec![vec![2, 0], vec![0, 7]]);
        assert_eq!(s.objective, 4.5);
    }

    #[test]
    fn single_zone() {
        let s = solve(&[1], &[1], &[vec![7.0]]);
        assert_eq!(s.flow.to_dense(), vec![vec![1]]);
        assert_eq!(s.objective, 7.0);
    }

    #[test]
    fn only_feasible_point() {
        let s = solve(&[2, 0], &[0, 2], &[vec![0.0, 3.0], vec![5.0, 0.0]]);
        assert_eq!(s.flow.to_dense(), vec![vec![0, 2], vec![0, 0]]);
        assert_eq!(s.objective, 6.0);
    }

    #[test]
    fn zero_mass() {
        let s = solve(&[0, 0], &[0, 0], &[vec![0.0, 1.0], vec![1.0, 0.0]]);
        assert_eq!(s.flow.nnz(), 0);
        assert_eq!(s.objective, 0.0);
    }

    #[test]
    fn exact_over_rationals() {
        let m = check_feasible(&[3, 1], &[2, 2]).unwrap();
        let c = CostMatrix::from_rows(&[
            vec![Q::new(1, 7), Q::new(1, 3)],
            vec![Q::new(2, 3), Q::new(1, 9)],
        ])
        .unwrap();
        let s = min_cost_flow_solve(&m, &c).unwrap();
        assert_eq!(s.flow.to_dense(), vec![vec![2, 1], vec![0, 1]]);
        assert_eq!(s.objective, Q::new(2, 7) + Q::new(1, 3) + Q::new(1, 9));
    }

    #[test]
    fn dimension_mismatch() {
        let m = check_feasible(&[1, 1], &[1, 1]).unwrap();
        let c = CostMatrix::two_level(3, 0.0, 1.0).unwrap();
        assert!(matches!(
            min_cost_flow_solve(&m, &c),
            Err(PolytopeError::DimensionMismatch { expected: 2, found: 3 })
        ));
    }

    #[test]
    fn matches_enumeration_on_a_fixed_instance() {
        let gamma = [4u64, 0, 1, 2];
        let eta = [1u64, 3, 1, 2];
        let cost = vec![
            vec![0i64, 3, 1, 7],
            vec![2, 0, 5, 1],
            vec![4, 1, 0, 2],
            vec![9, 2, 6, 0],
        ];
        let expected = odflow_oracle::min_cost(&gamma, &eta, &cost).unwrap();
        let m = Marginals::new(gamma.to_vec(), eta.to_vec()).unwrap();
        let c = CostMatrix::from_rows(
            &cost.iter().map(|r| r.iter().map(|&v| v as f64).collect()).collect::<Vec<_>>(),
        )
        .unwrap();
        let s = min_cost_flow_solve(&m, &c).unwrap();
        assert!(s.flow.satisfies(&m));
        assert_eq!(s.objective, expected as f64);
    }
}
