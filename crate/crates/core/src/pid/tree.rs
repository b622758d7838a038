//! Spanning-tree bases of an `m × n` transportation polytope.
//!
//! Cells of a spanning tree of the bipartite row/column graph are determined
//! by the marginals and the remaining cells. Every non-tree cell spans one
//! free coordinate: the signed cycle it closes through the tree. Picking the
//! tree of maximum weight keeps small cells out of it, so a cell near zero is
//! only ever moved by its own coordinate and never recomputed by
//! subtraction.

use std::collections::VecDeque;

#[derive(Debug, Clone)]
pub(super) struct TreeBasis {
    /// Non-tree cells, one per free coordinate.
    pub free: Vec<usize>,
    /// Signed cells moved by each free coordinate.
    pub cycles: Vec<Vec<(usize, f64)>>,
    /// Leaf elimination order: `(leaf node, tree cell, neighbour node)`.
    elimination: Vec<(usize, usize, usize)>,
    in_tree: Vec<bool>,
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

impl TreeBasis {
    /// Nodes `0..m` are rows and `m..m+n` columns; cell `i·n + j` joins
    /// row `i` and column `j`.
    pub fn max_weight(m: usize, n: usize, q: &[f64]) -> Self {
        let nodes = m + n;
        let mut order: Vec<usize> = (0..m * n).collect();
        order.sort_by(|&a, &b| q[b].total_cmp(&q[a]).then(a.cmp(&b)));
        let mut parent: Vec<usize> = (0..nodes).collect();
        let mut in_tree = vec![false; m * n];
        let mut edges = 0;
        for cell in order {
            if edges + 1 == nodes {
                break;
            }
            let (a, b) = (find(&mut parent, cell / n), find(&mut parent, m + cell % n));
            if a != b {
                parent[a] = b;
                in_tree[cell] = true;
                edges += 1;
            }
        }

        let mut adjacent: Vec<Vec<(usize, usize)>> = vec![Vec::new(); nodes];
        for cell in (0..m * n).filter(|&c| in_tree[c]) {
            let (r, c) = (cell / n, m + cell % n);
            adjacent[r].push((cell, c));
            adjacent[c].push((cell, r));
        }

        // Rooted at node 0: parent links give tree paths.
        let mut up: Vec<Option<(usize, usize)>> = vec![None; nodes];
        let mut depth = vec![0usize; nodes];
        let mut seen = vec![false; nodes];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        while let Some(v) = queue.pop_front() {
            for &(cell, u) in &adjacent[v] {
                if !seen[u] {
                    seen[u] = true;
                    up[u] = Some((cell, v));
                    depth[u] = depth[v] + 1;
                    queue.push_back(u);
                }
            }
        }
        let path = |mut a: usize, mut b: usize| -> Vec<usize> {
            let (mut from_a, mut from_b) = (Vec::new(), Vec::new());
            while a != b {
                if depth[a] >= depth[b] {
                    let (cell, p) = up[a].expect("connected tree");
                    from_a.push(cell);
                    a = p;
                } else {
                    let (cell, p) = up[b].expect("connected tree");
                    from_b.push(cell);
                    b = p;
                }
            }
            from_a.extend(from_b.into_iter().rev());
            from_a
        };

        let free: Vec<usize> = (0..m * n).filter(|&c| !in_tree[c]).collect();
        let cycles = free
            .iter()
            .map(|&cell| {
                // Closing the cycle: column j back to row i through the tree
                // with alternating signs, starting negative.
                let mut cycle = vec![(cell, 1.0)];
                let mut sign = -1.0;
                for c in path(m + cell % n, cell / n) {
                    cycle.push((c, sign));
                    sign = -sign;
                }
                cycle
            })
            .collect();

        let mut degree: Vec<usize> = adjacent.iter().map(Vec::len).collect();
        let mut removed = vec![false; m * n];
        let mut leaves: VecDeque<usize> = (0..nodes).filter(|&v| degree[v] == 1).collect();
        let mut elimination = Vec::with_capacity(nodes.saturating_sub(1));
        while let Some(v) = leaves.pop_front() {
            if degree[v] != 1 {
                continue;
            }
            let &(cell, u) = adjacent[v]
                .iter()
                .find(|(cell, _)| !removed[*cell])
                .expect("leaf has an edge");
            removed[cell] = true;
            degree[v] = 0;
            degree[u] -= 1;
            elimination.push((v, cell, u));
            if degree[u] == 1 {
                leaves.push_back(u);
            }
        }

        Self {
            free,
            cycles,
            elimination,
            in_tree,
        }
    }

    /// Recomputes the tree cells of `q` from the marginals and the non-tree
    /// cells.
    pub fn complete(&self, m: usize, n: usize, q: &mut [f64], supply: &[f64], demand: &[f64]) {
        let mut residual: Vec<f64> = supply.iter().chain(demand).copied().collect();
        for cell in (0..m * n).filter(|&c| !self.in_tree[c]) {
            residual[cell / n] -= q[cell];
            residual[m + cell % n] -= q[cell];
        }
        for &(leaf, cell, other) in &self.elimination {
            let v = residual[leaf];
            q[cell] = v.max(0.0);
            residual[other] -= v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cycles_preserve_marginals() {
        let (m, n) = (3, 4);
        let q: Vec<f64> = (0..12).map(|k| ((k * 5) % 7) as f64 + 0.5).collect();
        let basis = TreeBasis::max_weight(m, n, &q);
        assert_eq!(basis.free.len(), (m - 1) * (n - 1));
        for cycle in &basis.cycles {
            let mut rows = vec![0.0; m];
            let mut cols = vec![0.0; n];
            for &(cell, s) in cycle {
                rows[cell / n] += s;
                cols[cell % n] += s;
            }
            assert!(rows.iter().chain(&cols).all(|v| *v == 0.0));
        }
    }

    #[test]
    fn completion_restores_tree_cells() {
        let (m, n) = (3, 3);
        let q: Vec<f64> = vec![0.2, 0.05, 0.05, 0.01, 0.3, 0.02, 0.1, 0.07, 0.2];
        let supply: Vec<f64> = q.chunks(n).map(|r| r.iter().sum()).collect();
        let demand: Vec<f64> = (0..n).map(|j| (0..m).map(|i| q[i * n + j]).sum()).collect();
        let basis = TreeBasis::max_weight(m, n, &q);
        let mut scrambled = q.clone();
        for (cell, t) in scrambled.iter_mut().zip(&basis.in_tree) {
            if *t {
                *cell = 9.0;
            }
        }
        basis.complete(m, n, &mut scrambled, &supply, &demand);
        for (a, b) in scrambled.iter().zip(&q) {
            assert!((a - b).abs() < 1e-15);
        }
        // The smallest cells stay outside the tree.
        assert!(!basis.in_tree[3] && !basis.in_tree[5]);
    }
}
