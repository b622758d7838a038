//! Dense two-phase simplex for small linear programs in equality form
//!
//! ```text
//! minimize c·x  subject to  A x = b,  x >= 0
//! ```
//!
//! Pricing is Dantzig's rule; after a run of degenerate pivots it falls back
//! to Bland's rule until the objective moves again, which rules out cycling.

use crate::error::{Error, Result};

const PIVOT_EPS: f64 = 1e-11;
const OPT_EPS: f64 = 1e-12;
const FEAS_EPS: f64 = 1e-9;
const DEGENERATE_RUN: usize = 50;

/// An equality-form linear program.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    /// Constraint rows, each of length `objective.len()`.
    pub rows: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub pivots: usize,
}

struct Tableau {
    width: usize,
    cells: Vec<f64>,
    /// Reduced-cost row; last entry is minus the objective value.
    cost: Vec<f64>,
    basis: Vec<usize>,
    pivots: usize,
}

impl Tableau {
    fn rows(&self) -> usize {
        self.basis.len()
    }

    #[inline]
    fn at(&self, r: usize, c: usize) -> f64 {
        self.cells[r * self.width + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.width - 1)
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.width;
        let inv = 1.0 / self.at(pr, pc);
        for c in 0..w {
            self.cells[pr * w + c] *= inv;
        }
        self.cells[pr * w + pc] = 1.0;
        let prow: Vec<f64> = self.cells[pr * w..(pr + 1) * w].to_vec();
        for r in 0..self.rows() {
            if r == pr {
                continue;
            }
            let f = self.cells[r * w + pc];
            if f != 0.0 {
                for c in 0..w {
                    self.cells[r * w + c] -= f * prow[c];
                }
                self.cells[r * w + pc] = 0.0;
            }
        }
        let f = self.cost[pc];
        if f != 0.0 {
            for c in 0..w {
                self.cost[c] -= f * prow[c];
            }
            self.cost[pc] = 0.0;
        }
        self.basis[pr] = pc;
        self.pivots += 1;
    }

    /// Runs simplex iterations over the columns `< active`.
    fn optimize(&mut self, active: usize, max_pivots: usize) -> Result<()> {
        let mut degenerate = 0usize;
        loop {
            let bland = degenerate >= DEGENERATE_RUN;
            let mut enter = None;
            let mut best = -OPT_EPS;
            for c in 0..active {
                let rc = self.cost[c];
                if rc < best {
                    enter = Some(c);
                    if bland {
                        break;
                    }
                    best = rc;
                }
            }
            let Some(pc) = enter else { return Ok(()) };

            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows() {
                let a = self.at(r, pc);
                if a > PIVOT_EPS {
                    let ratio = self.rhs(r).max(0.0) / a;
                    let better = match leave {
                        None => true,
                        Some((lr, lratio)) => {
                            ratio < lratio - 1e-15
                                || (ratio <= lratio + 1e-15 && self.basis[r] < self.basis[lr])
                        }
                    };
                    if better {
                        leave = Some((r, ratio));
                    }
                }
            }
            let Some((pr, ratio)) = leave else {
                return Err(Error::Unbounded);
            };
            if ratio <= 1e-15 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.pivot(pr, pc);
            if self.pivots > max_pivots {
                return Err(Error::InvalidArgument(format!(
                    "simplex exceeded {max_pivots} pivots"
                )));
            }
        }
    }
}

impl LinearProgram {
    pub fn solve(&self) -> Result<LpSolution> {
        let n = self.objective.len();
        let m = self.rows.len();
        if self.rhs.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: self.rhs.len(),
            });
        }
        if let Some(r) = self.rows.iter().find(|r| r.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: r.len(),
            });
        }
        let width = n + m + 1;
        let mut cells = vec![0.0; m * width];
        for (r, (row, &b)) in self.rows.iter().zip(&self.rhs).enumerate() {
            let sign = if b < 0.0 { -1.0 } else { 1.0 };
            for (c, &a) in row.iter().enumerate() {
                cells[r * width + c] = sign * a;
            }
            cells[r * width + n + r] = 1.0;
            cells[r * width + width - 1] = sign * b;
        }
        // Phase one: minimize the sum of artificials.
        let mut cost = vec![0.0; width];
        for r in 0..m {
            for c in 0..width {
                if !(n..n + m).contains(&c) {
                    cost[c] -= cells[r * width + c];
                }
            }
        }
        let mut t = Tableau {
            width,
            cells,
            cost,
            basis: (n..n + m).collect(),
            pivots: 0,
        };
        let max_pivots = 50 * (n + m) + 1000;
        t.optimize(n + m, max_pivots)?;
        let scale = 1.0 + self.rhs.iter().map(|b| b.abs()).sum::<f64>();
        if -t.cost[width - 1] > FEAS_EPS * scale {
            return Err(Error::Infeasible);
        }

        // Drive artificials out of the basis; rows where that is impossible
        // are redundant and dropped.
        let mut r = 0;
        while r < t.rows() {
            if t.basis[r] >= n {
                let col = (0..n)
                    .filter(|&c| t.at(r, c).abs() > 1e-9)
                    .max_by(|&a, &b| t.at(r, a).abs().total_cmp(&t.at(r, b).abs()));
                match col {
                    Some(c) => t.pivot(r, c),
                    None => {
                        let w = t.width;
                        t.cells.drain(r * w..(r + 1) * w);
                        t.basis.remove(r);
                        continue;
                    }
                }
            }
            r += 1;
        }

        // Phase two over the original columns.
        let mut cost = vec![0.0; width];
        cost[..n].copy_from_slice(&self.objective);
        for (r, &bv) in t.basis.iter().enumerate() {
            let cb = self.objective[bv];
            if cb != 0.0 {
                for c in 0..width {
                    cost[c] -= cb * t.cells[r * width + c];
                }
            }
        }
        t.cost = cost;
        t.optimize(n, max_pivots)?;

        let mut x = vec![0.0; n];
        for (r, &bv) in t.basis.iter().enumerate() {
            x[bv] = t.rhs(r).max(0.0);
        }
        let objective = self.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
        Ok(LpSolution {
            x,
            objective,
            pivots: t.pivots,
        })
    }
}

/// Minimizes `Σ cost[i][j]·X[i][j]` over nonnegative `X` with row sums
/// `supply` and column sums `demand` (totals must agree).
pub fn solve_transportation(cost: &[Vec<f64>], supply: &[f64], demand: &[f64]) -> Result<LpSolution> {
    let (m, n) = (supply.len(), demand.len());
    let mut rows = Vec::with_capacity(m + n);
    for i in 0..m {
        let mut row = vec![0.0; m * n];
        row[i * n..(i + 1) * n].iter_mut().for_each(|v| *v = 1.0);
        rows.push(row);
    }
    for j in 0..n {
        let mut row = vec![0.0; m * n];
        (0..m).for_each(|i| row[i * n + j] = 1.0);
        rows.push(row);
    }
    LinearProgram {
        objective: cost.iter().flatten().copied().collect(),
        rows,
        rhs: supply.iter().chain(demand).copied().collect(),
    }
    .solve()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_lp() {
        // min -x - y  s.t. x + 2y + s1 = 4, 3x + y + s2 = 6
        let lp = LinearProgram {
            objective: vec![-1.0, -1.0, 0.0, 0.0],
            rows: vec![vec![1.0, 2.0, 1.0, 0.0], vec![3.0, 1.0, 0.0, 1.0]],
            rhs: vec![4.0, 6.0],
        };
        let s = lp.solve().unwrap();
        assert!((s.objective + 2.8).abs() < 1e-12);
        assert!((s.x[0] - 1.6).abs() < 1e-12 && (s.x[1] - 1.2).abs() < 1e-12);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let lp = LinearProgram {
            objective: vec![1.0],
            rows: vec![vec![1.0], vec![1.0]],
            rhs: vec![1.0, 2.0],
        };
        assert!(matches!(lp.solve(), Err(Error::Infeasible)));
        let lp = LinearProgram {
            objective: vec![-1.0, 0.0],
            rows: vec![vec![1.0, -1.0]],
            rhs: vec![0.0],
        };
        assert!(matches!(lp.solve(), Err(Error::Unbounded)));
    }

    #[test]
    fn negative_rhs_and_redundant_rows() {
        let lp = LinearProgram {
            objective: vec![1.0, 2.0],
            rows: vec![vec![-1.0, -1.0], vec![2.0, 2.0]],
            rhs: vec![-1.0, 2.0],
        };
        let s = lp.solve().unwrap();
        assert!((s.objective - 1.0).abs() < 1e-12);
    }

    #[test]
    fn transportation_matches_enumeration() {
        // 2x2: one free parameter t = X[0][0] in [max(0, r0 - c1), min(r0, c0)].
        let cost = vec![vec![1.0, 3.0], vec![2.0, -1.0]];
        let (r, c) = ([0.3, 0.7], [0.6, 0.4]);
        let s = solve_transportation(&cost, &r, &c).unwrap();
        let lo = (r[0] - c[1]).max(0.0);
        let hi = r[0].min(c[0]);
        let value = |t: f64| {
            let x = [t, r[0] - t, c[0] - t, r[1] - c[0] + t];
            x[0] * 1.0 + x[1] * 3.0 + x[2] * 2.0 - x[3]
        };
        let best = value(lo).min(value(hi));
        assert!((s.objective - best).abs() < 1e-12);
    }
}
