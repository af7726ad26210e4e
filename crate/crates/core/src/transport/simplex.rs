//! Transportation simplex for the balanced discrete transport problem.
//!
//! Basic solutions are spanning trees of the bipartite row/column graph
//! (`n + m − 1` basic cells, some possibly degenerate at zero flow).

use std::collections::VecDeque;

use super::TransportError;

const MAX_PIVOTS_PER_CELL: usize = 50;

pub(crate) struct Solution {
    pub flow: Vec<(usize, usize, f64)>,
    pub cost: f64,
}

struct Tableau<'a> {
    n: usize,
    m: usize,
    cost: &'a [f64],
    // Basic cells and their flows.
    basis: Vec<(usize, usize)>,
    flow: Vec<f64>,
    is_basic: Vec<bool>,
    u: Vec<f64>,
    v: Vec<f64>,
}

impl<'a> Tableau<'a> {
    fn c(&self, i: usize, j: usize) -> f64 {
        self.cost[i * self.m + j]
    }

    fn north_west(n: usize, m: usize, cost: &'a [f64], a: &[f64], b: &[f64]) -> Self {
        let mut basis = Vec::with_capacity(n + m - 1);
        let mut flow = Vec::with_capacity(n + m - 1);
        let mut ra = a.to_vec();
        let mut rb = b.to_vec();
        let (mut i, mut j) = (0, 0);
        loop {
            let q = ra[i].min(rb[j]);
            basis.push((i, j));
            flow.push(q);
            ra[i] -= q;
            rb[j] -= q;
            if i == n - 1 && j == m - 1 {
                break;
            }
            // Advance along exactly one axis so the basis stays a tree.
            if j == m - 1 || (i < n - 1 && ra[i] <= rb[j]) {
                i += 1;
            } else {
                j += 1;
            }
        }
        let mut is_basic = vec![false; n * m];
        for &(i, j) in &basis {
            is_basic[i * m + j] = true;
        }
        Tableau { n, m, cost, basis, flow, is_basic, u: vec![0.0; n], v: vec![0.0; m] }
    }

    // Adjacency over nodes 0..n (rows) and n..n+m (columns), as basis indices.
    fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n + self.m];
        for (k, &(i, j)) in self.basis.iter().enumerate() {
            adj[i].push(k);
            adj[self.n + j].push(k);
        }
        adj
    }

    fn update_potentials(&mut self, adj: &[Vec<usize>]) {
        let total = self.n + self.m;
        let mut seen = vec![false; total];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        self.u[0] = 0.0;
        while let Some(node) = queue.pop_front() {
            for &k in &adj[node] {
                let (i, j) = self.basis[k];
                let other = if node < self.n { self.n + j } else { i };
                if seen[other] {
                    continue;
                }
                seen[other] = true;
                if other < self.n {
                    self.u[i] = self.c(i, j) - self.v[j];
                } else {
                    self.v[j] = self.c(i, j) - self.u[i];
                }
                queue.push_back(other);
            }
        }
        debug_assert!(seen.iter().all(|s| *s), "basis is not spanning");
    }

    fn reduced(&self, i: usize, j: usize) -> f64 {
        self.c(i, j) - self.u[i] - self.v[j]
    }

    // Tree path from row `i` to column `j` as a list of basis indices,
    // starting at the edge incident to row `i`.
    fn path(&self, adj: &[Vec<usize>], i: usize, j: usize) -> Vec<usize> {
        let total = self.n + self.m;
        let mut parent_edge = vec![usize::MAX; total];
        let mut seen = vec![false; total];
        let start = self.n + j;
        let goal = i;
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(node) = queue.pop_front() {
            if node == goal {
                break;
            }
            for &k in &adj[node] {
                let (bi, bj) = self.basis[k];
                let other = if node < self.n { self.n + bj } else { bi };
                if !seen[other] {
                    seen[other] = true;
                    parent_edge[other] = k;
                    queue.push_back(other);
                }
            }
        }
        // Walk back from the row to the column.
        let mut edges = Vec::new();
        let mut node = goal;
        while node != start {
            let k = parent_edge[node];
            edges.push(k);
            let (bi, bj) = self.basis[k];
            node = if node < self.n { self.n + bj } else { bi };
        }
        edges
    }
}

/// Solves `min Σ c_ij γ_ij` over couplings of `a` (rows) and `b` (columns).
/// `cost` is row-major `n × m`. Both marginals must have equal totals.
pub(crate) fn solve(a: &[f64], b: &[f64], cost: &[f64]) -> Result<Solution, TransportError> {
    let (n, m) = (a.len(), b.len());
    let mut t = Tableau::north_west(n, m, cost, a, b);
    let scale = cost.iter().fold(0.0f64, |s, c| s.max(c.abs())).max(1e-300);
    let tol = 1e-12 * scale;
    let max_pivots = MAX_PIVOTS_PER_CELL * n * m + 100;
    let mut bland = false;

    for _ in 0..max_pivots {
        let adj = t.adjacency();
        t.update_potentials(&adj);

        // Pricing: Dantzig (most negative) normally; Bland (first negative
        // in index order) after a degenerate pivot.
        let mut entering = None;
        let mut best = -tol;
        'scan: for i in 0..n {
            for j in 0..m {
                if t.is_basic[i * m + j] {
                    continue;
                }
                let r = t.reduced(i, j);
                if r < best {
                    entering = Some((i, j));
                    if bland {
                        break 'scan;
                    }
                    best = r;
                }
            }
        }
        let Some((ei, ej)) = entering else {
            return finish(&t, a, b);
        };

        // Cycle: entering cell (+), then alternating −,+,… along the path.
        let path = t.path(&adj, ei, ej);
        let mut theta = f64::INFINITY;
        let mut leave = usize::MAX;
        for (pos, &k) in path.iter().enumerate() {
            if pos % 2 == 0 {
                let f = t.flow[k];
                let (bi, bj) = t.basis[k];
                let better = f < theta
                    || (f == theta && leave != usize::MAX && (bi, bj) < t.basis[leave]);
                if better {
                    theta = f;
                    leave = k;
                }
            }
        }
        for (pos, &k) in path.iter().enumerate() {
            if pos % 2 == 0 {
                t.flow[k] -= theta;
            } else {
                t.flow[k] += theta;
            }
        }
        bland = theta == 0.0;
        let (li, lj) = t.basis[leave];
        t.is_basic[li * m + lj] = false;
        t.is_basic[ei * m + ej] = true;
        t.basis[leave] = (ei, ej);
        t.flow[leave] = theta;
    }
    Err(TransportError::SolverStall(format!("no convergence within {max_pivots} pivots")))
}

// Optimality certificate: primal feasibility, dual feasibility and a
// vanishing duality gap.
fn finish(t: &Tableau<'_>, a: &[f64], b: &[f64]) -> Result<Solution, TransportError> {
    let (n, m) = (t.n, t.m);
    let scale = t.cost.iter().fold(0.0f64, |s, c| s.max(c.abs())).max(1e-300);
    let mut min_reduced = 0.0f64;
    for i in 0..n {
        for j in 0..m {
            min_reduced = min_reduced.min(t.reduced(i, j));
        }
    }
    if min_reduced < -1e-8 * scale {
        return Err(TransportError::SolverStall(format!("dual infeasibility {min_reduced:e}")));
    }
    let mut flow = Vec::with_capacity(t.basis.len());
    let mut primal = 0.0;
    for (&(i, j), &f) in t.basis.iter().zip(&t.flow) {
        if f < -1e-12 {
            return Err(TransportError::SolverStall(format!("negative flow {f:e} at ({i}, {j})")));
        }
        if f > 0.0 {
            primal += f * t.c(i, j);
            flow.push((i, j, f));
        }
    }
    let dual: f64 = a.iter().zip(&t.u).map(|(x, y)| x * y).sum::<f64>()
        + b.iter().zip(&t.v).map(|(x, y)| x * y).sum::<f64>();
    if (primal - dual).abs() > 1e-8 * primal.abs().max(scale) {
        return Err(TransportError::SolverStall(format!("duality gap {:e}", primal - dual)));
    }
    flow.sort_by_key(|x| (x.0, x.1));
    Ok(Solution { flow, cost: primal })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_instance() {
        let a = [0.2, 0.3, 0.5];
        let b = [0.5, 0.25, 0.25];
        let cost = [4.0, 8.0, 8.0, 16.0, 24.0, 16.0, 8.0, 16.0, 24.0];
        let s = solve(&a, &b, &cost).unwrap();
        let brute = brute_force(&a, &b, &cost);
        assert!((s.cost - brute).abs() < 1e-12, "{} vs {brute}", s.cost);
    }

    // Enumerates a fine lattice of 3×3 plans through the 4 free entries.
    fn brute_force(a: &[f64], b: &[f64], cost: &[f64]) -> f64 {
        let steps = 100;
        let mut best = f64::INFINITY;
        let q = |k: usize| k as f64 / steps as f64 * 0.5;
        for p00 in 0..=steps {
            for p01 in 0..=steps {
                for p10 in 0..=steps {
                    for p11 in 0..=steps {
                        let (g00, g01, g10, g11) = (q(p00), q(p01), q(p10), q(p11));
                        let g02 = a[0] - g00 - g01;
                        let g12 = a[1] - g10 - g11;
                        let g20 = b[0] - g00 - g10;
                        let g21 = b[1] - g01 - g11;
                        let g22 = a[2] - g20 - g21;
                        let g = [g00, g01, g02, g10, g11, g12, g20, g21, g22];
                        if g.iter().any(|x| *x < -1e-12) || (g02 + g12 + g22 - b[2]).abs() > 1e-9 {
                            continue;
                        }
                        best = best.min(g.iter().zip(cost).map(|(x, c)| x * c).sum());
                    }
                }
            }
        }
        best
    }

    #[test]
    fn degenerate_instance_terminates() {
        // Equal masses on a symmetric cost: every NW step is degenerate.
        let n = 6;
        let a = vec![1.0 / n as f64; n];
        let mut cost = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                cost[i * n + j] = ((i + j) % n) as f64;
            }
        }
        let s = solve(&a, &a, &cost).unwrap();
        assert!(s.cost.abs() < 1e-12);
    }
}
