//! Minimization of `I_Q(Y; U | C)` over couplings `Q` that keep the `(Y, C)`
//! and `(Y, U)` marginals of `P`.
//!
//! For every `y` the feasible set is a transportation polytope over `(c, u)`
//! with row sums `P(y, c)` and column sums `P(y, u)`. Up to a constant the
//! objective is `f(q) = Σ q ln q − Σ_{cu} Q(c,u) ln Q(c,u)`, whose gradient
//! is `ln Q(y | c, u)`.
//!
//! Every iteration solves the linear subproblem on each polytope, which gives
//! the Frank–Wolfe vertex and the duality gap `⟨∇f, Q − S⟩ ≥ f(Q) − f*`
//! used as the stopping certificate. The step is either toward `S` with an
//! exact line search or, when the problem is small enough, a Newton step on
//! `f − (1/t) Σ ln q` with `t` raised each time the iterate is centered.
//! Optima routinely sit on the boundary (whole `(c, u)` columns vanish),
//! where plain Frank–Wolfe only converges sublinearly; on the central path
//! the gap is at most `cells / t`.

use std::f64::consts::LN_2;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use super::tree::TreeBasis;
use super::{Algorithm, SolveDiagnostics, SolverConfig};
use crate::dist::{conditional_mutual_information, Axis, JointPmf3};
use crate::error::Result;
use crate::lp::solve_transportation;

/// Cells moved by one coordinate, with their signs.
type SignedCells = Vec<(usize, f64)>;

/// Largest free dimension for which barrier Newton steps are formed.
const NEWTON_MAX_DIM: usize = 1500;
/// Mass below this is treated as absent when building the polytopes.
const SUPPORT_EPS: f64 = 1e-300;
const FRACTION_TO_BOUNDARY: f64 = 0.995;
const BARRIER_GROWTH: f64 = 8.0;
/// Squared Newton decrement of `t·F_t` below which `t` is raised.
const CENTERING_TOL: f64 = 1e-3;

struct Slice {
    y: usize,
    /// Active conditioning symbols (rows) and unique-axis symbols (cols).
    rows: Vec<usize>,
    cols: Vec<usize>,
    supply: Vec<f64>,
    demand: Vec<f64>,
    /// Dense `rows × cols` coupling.
    q: Vec<f64>,
    basis: TreeBasis,
    /// Offset of this slice's coordinates in the reduced vector.
    free_offset: usize,
}

impl Slice {
    fn m(&self) -> usize {
        self.rows.len()
    }

    fn n(&self) -> usize {
        self.cols.len()
    }

    fn nfree(&self) -> usize {
        self.basis.free.len()
    }

    fn rebuild_basis(&mut self) {
        self.basis = TreeBasis::max_weight(self.m(), self.n(), &self.q);
    }

    /// Recomputes the tree cells so the marginals hold to rounding error.
    fn repair(&mut self) {
        let (m, n) = (self.m(), self.n());
        self.basis.complete(m, n, &mut self.q, &self.supply, &self.demand);
    }
}

struct Problem {
    slices: Vec<Slice>,
    nc: usize,
    nu: usize,
    nfree: usize,
}

/// Outcome of one minimization.
pub(crate) struct Solution {
    pub value_bits: f64,
    pub coupling: JointPmf3,
    pub diagnostics: SolveDiagnostics,
}

/// Adds `a` at `k` of a sparse accumulator.
fn accumulate(v: &mut [f64], nz: &mut Vec<usize>, k: usize, a: f64) {
    if !nz.contains(&k) {
        nz.push(k);
    }
    v[k] += a;
}

impl Problem {
    /// `joint` is oriented as `(Y, C, U)`.
    fn new(joint: &JointPmf3) -> Self {
        let [ny, nc, nu] = joint.dims();
        let mut slices = Vec::new();
        let mut free = 0;
        for y in 0..ny {
            let row_mass: Vec<f64> = (0..nc).map(|c| (0..nu).map(|u| joint.get(y, c, u)).sum()).collect();
            let col_mass: Vec<f64> = (0..nu).map(|u| (0..nc).map(|c| joint.get(y, c, u)).sum()).collect();
            let py: f64 = row_mass.iter().sum();
            if py <= SUPPORT_EPS {
                continue;
            }
            let rows: Vec<usize> = (0..nc).filter(|&c| row_mass[c] > SUPPORT_EPS).collect();
            let cols: Vec<usize> = (0..nu).filter(|&u| col_mass[u] > SUPPORT_EPS).collect();
            let supply: Vec<f64> = rows.iter().map(|&c| row_mass[c]).collect();
            let mut demand: Vec<f64> = cols.iter().map(|&u| col_mass[u]).collect();
            // Rows and columns of a slice must carry identical totals.
            let (ts, td): (f64, f64) = (supply.iter().sum(), demand.iter().sum());
            demand.iter_mut().for_each(|d| *d *= ts / td);
            let q: Vec<f64> = supply
                .iter()
                .flat_map(|&r| demand.iter().map(move |&d| r * d / ts))
                .collect();
            let basis = TreeBasis::max_weight(rows.len(), cols.len(), &q);
            let mut s = Slice {
                y,
                rows,
                cols,
                supply,
                demand,
                q,
                basis,
                free_offset: free,
            };
            s.repair();
            free += s.nfree();
            slices.push(s);
        }
        Self {
            slices,
            nc,
            nu,
            nfree: free,
        }
    }

    fn cells(&self) -> usize {
        self.slices.iter().map(|s| s.q.len()).sum()
    }

    fn column_mass(&self) -> Vec<f64> {
        let mut col = vec![0.0; self.nc * self.nu];
        for s in &self.slices {
            for (i, &c) in s.rows.iter().enumerate() {
                for (j, &u) in s.cols.iter().enumerate() {
                    col[c * self.nu + u] += s.q[i * s.n() + j];
                }
            }
        }
        col
    }

    /// Gradient `ln q − ln Q(c,u)` per slice cell (nats).
    fn gradient(&self, col: &[f64]) -> Vec<Vec<f64>> {
        self.slices
            .iter()
            .map(|s| {
                let n = s.n();
                let mut g = Vec::with_capacity(s.q.len());
                for (i, &c) in s.rows.iter().enumerate() {
                    for (j, &u) in s.cols.iter().enumerate() {
                        let q = s.q[i * n + j].max(SUPPORT_EPS);
                        let qc = col[c * self.nu + u].max(SUPPORT_EPS);
                        g.push(q.ln() - qc.ln());
                    }
                }
                g
            })
            .collect()
    }

    /// Frank–Wolfe vertices and the duality gap in nats.
    fn linear_subproblem(&self, grad: &[Vec<f64>]) -> Result<(Vec<Vec<f64>>, f64)> {
        let mut vertices = Vec::with_capacity(self.slices.len());
        let mut gap = 0.0;
        for (s, g) in self.slices.iter().zip(grad) {
            if s.nfree() == 0 {
                vertices.push(s.q.clone());
                continue;
            }
            let current: f64 = s.q.iter().zip(g).map(|(q, g)| q * g).sum();
            let cost: Vec<Vec<f64>> = g.chunks(s.n()).map(<[f64]>::to_vec).collect();
            let sol = solve_transportation(&cost, &s.supply, &s.demand)?;
            gap += current - sol.objective;
            vertices.push(sol.x);
        }
        Ok((vertices, gap.max(0.0)))
    }

    /// `φ'(α)` of `f` along `q + α d` (nats).
    fn directional_derivative(&self, dir: &[Vec<f64>], alpha: f64) -> f64 {
        let mut col = vec![0.0; self.nc * self.nu];
        let mut dcol = vec![0.0; self.nc * self.nu];
        let mut total = 0.0;
        for (s, d) in self.slices.iter().zip(dir) {
            for (i, &c) in s.rows.iter().enumerate() {
                for (j, &u) in s.cols.iter().enumerate() {
                    let k = i * s.n() + j;
                    let moved = s.q[k] + alpha * d[k];
                    col[c * self.nu + u] += moved;
                    dcol[c * self.nu + u] += d[k];
                    if d[k] != 0.0 {
                        total += d[k] * moved.max(SUPPORT_EPS).ln();
                    }
                }
            }
        }
        for (&qc, &dc) in col.iter().zip(&dcol) {
            if dc != 0.0 {
                total -= dc * qc.max(SUPPORT_EPS).ln();
            }
        }
        total
    }

    /// Largest `α` keeping every cell nonnegative.
    fn max_step(&self, dir: &[Vec<f64>]) -> f64 {
        let mut amax = f64::INFINITY;
        for (s, d) in self.slices.iter().zip(dir) {
            for (&q, &dk) in s.q.iter().zip(d) {
                if dk < 0.0 {
                    amax = amax.min(q / -dk);
                }
            }
        }
        amax
    }

    /// Minimizes the convex `φ(α)` on `[0, amax]` by Illinois regula falsi
    /// on `φ'`.
    fn line_search(&self, dir: &[Vec<f64>], amax: f64) -> f64 {
        let d0 = self.directional_derivative(dir, 0.0);
        if !(d0 < 0.0) {
            return 0.0;
        }
        let accept = 1e-4 * d0.abs();
        let dp = self.directional_derivative(dir, amax);
        if dp <= 0.0 || dp.abs() <= accept {
            return amax;
        }
        let (mut lo, mut flo) = (0.0, d0);
        let (mut hi, mut fhi) = (amax, dp);
        let mut side = 0i8;
        for _ in 0..100 {
            let mid = (lo * fhi - hi * flo) / (fhi - flo);
            let mid = if mid.is_finite() && mid > lo && mid < hi { mid } else { 0.5 * (lo + hi) };
            let fm = self.directional_derivative(dir, mid);
            if fm.abs() <= accept || hi - lo <= 1e-15 * hi.max(1e-300) {
                return mid;
            }
            if fm < 0.0 {
                lo = mid;
                flo = fm;
                if side == -1 {
                    fhi *= 0.5;
                }
                side = -1;
            } else {
                hi = mid;
                fhi = fm;
                if side == 1 {
                    flo *= 0.5;
                }
                side = 1;
            }
        }
        lo
    }

    fn apply(&mut self, dir: &[Vec<f64>], alpha: f64) {
        for (s, d) in self.slices.iter_mut().zip(dir) {
            for (q, dk) in s.q.iter_mut().zip(d) {
                *q = (*q + alpha * dk).max(0.0);
            }
            s.repair();
        }
    }

    /// Newton step for `F_t = f − (1/t) Σ ln q` in the cycle coordinates of
    /// the current tree bases, with the squared Newton decrement of `F_t`.
    ///
    /// Per `(c, u)` column with cells `w` summing to `S` the cell Hessian of
    /// `f` is `diag(1/w) − 11ᵀ/S`, accumulated as the PSD sum
    /// `Σ_{i<j} (w_i w_j / S) (e_i/w_i − e_j/w_j)(e_i/w_i − e_j/w_j)ᵀ` to
    /// avoid cancellation. The reduced system is Jacobi-scaled before the
    /// Cholesky solve.
    fn barrier_newton_direction(&self, grad: &[Vec<f64>], col: &[f64], t: f64) -> Option<(Vec<Vec<f64>>, f64)> {
        let nf = self.nfree;
        let mut g = DVector::<f64>::zeros(nf);
        let mut h = DMatrix::<f64>::zeros(nf, nf);
        // Per (c, u): (q, coordinates moving the cell with their signs).
        let mut by_column: Vec<Vec<(f64, SignedCells)>> = vec![Vec::new(); self.nc * self.nu];
        for (s, gs) in self.slices.iter().zip(grad) {
            let mut by_cell: Vec<Vec<(usize, f64)>> = vec![Vec::new(); s.q.len()];
            for (k, cycle) in s.basis.cycles.iter().enumerate() {
                for &(cell, sign) in cycle {
                    by_cell[cell].push((s.free_offset + k, sign));
                }
            }
            // Cells without coordinates still shape their column's block.
            for (cell, touch) in by_cell.into_iter().enumerate() {
                let q = s.q[cell].max(SUPPORT_EPS);
                let gc = gs[cell] - 1.0 / (t * q);
                let w = 1.0 / (t * q * q);
                for &(k, a) in &touch {
                    g[k] += a * gc;
                    for &(l, b) in &touch {
                        h[(k, l)] += w * a * b;
                    }
                }
                let (i, j) = (cell / s.n(), cell % s.n());
                by_column[s.rows[i] * self.nu + s.cols[j]].push((q, touch));
            }
        }
        let mut v = vec![0.0; nf];
        let mut nz: Vec<usize> = Vec::new();
        for (cu, cells) in by_column.iter().enumerate() {
            let total = col[cu].max(SUPPORT_EPS);
            for (x, (wi, ti)) in cells.iter().enumerate() {
                for (wj, tj) in &cells[x + 1..] {
                    for &(k, a) in ti {
                        accumulate(&mut v, &mut nz, k, a / wi);
                    }
                    for &(k, a) in tj {
                        accumulate(&mut v, &mut nz, k, -a / wj);
                    }
                    let weight = wi * wj / total;
                    for &k in &nz {
                        for &l in &nz {
                            h[(k, l)] += weight * v[k] * v[l];
                        }
                    }
                    for &k in &nz {
                        v[k] = 0.0;
                    }
                    nz.clear();
                }
            }
        }

        let scale: DVector<f64> = h.diagonal().map(|d| 1.0 / d.max(f64::MIN_POSITIVE).sqrt());
        for k in 0..nf {
            for l in 0..nf {
                h[(k, l)] *= scale[k] * scale[l];
            }
        }
        let step = h.cholesky()?.solve(&(-g.component_mul(&scale))).component_mul(&scale);
        if step.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let decrement = -g.dot(&step);

        let mut dir: Vec<Vec<f64>> = self.slices.iter().map(|s| vec![0.0; s.q.len()]).collect();
        for (s, d) in self.slices.iter().zip(dir.iter_mut()) {
            for (k, cycle) in s.basis.cycles.iter().enumerate() {
                let v = step[s.free_offset + k];
                for &(cell, sign) in cycle {
                    d[cell] += sign * v;
                }
            }
        }
        Some((dir, decrement))
    }

    /// `φ'(α)` of `F_t` along `q + α d`.
    fn barrier_directional_derivative(&self, dir: &[Vec<f64>], alpha: f64, t: f64) -> f64 {
        let mut total = self.directional_derivative(dir, alpha);
        for (s, d) in self.slices.iter().zip(dir) {
            for (&q, &dk) in s.q.iter().zip(d) {
                if dk != 0.0 {
                    total -= dk / (t * (q + alpha * dk));
                }
            }
        }
        total
    }

    fn barrier_line_search(&self, dir: &[Vec<f64>], amax: f64, t: f64) -> f64 {
        let dphi = |a: f64| self.barrier_directional_derivative(dir, a, t);
        let d0 = dphi(0.0);
        if !(d0 < 0.0) {
            return 0.0;
        }
        let first = amax.min(1.0);
        if dphi(first) <= 0.0 {
            return first;
        }
        let (mut lo, mut hi) = (0.0, first);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            let v = dphi(mid);
            if v.abs() <= 1e-3 * d0.abs() {
                return mid;
            }
            if v < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    fn to_joint(&self, dims: [usize; 3]) -> Result<JointPmf3> {
        let mut mass = vec![0.0; dims.iter().product()];
        for s in &self.slices {
            for (i, &c) in s.rows.iter().enumerate() {
                for (j, &u) in s.cols.iter().enumerate() {
                    mass[(s.y * dims[1] + c) * dims[2] + u] = s.q[i * s.n() + j];
                }
            }
        }
        let total: f64 = mass.iter().sum();
        mass.iter_mut().for_each(|m| *m /= total);
        JointPmf3::new(dims, mass)
    }
}

/// Minimizes `I_Q(Y; U | C)` for `joint` oriented as `(Y, C, U)`.
pub(crate) fn minimize(joint: &JointPmf3, config: &SolverConfig) -> Result<Solution> {
    let start = Instant::now();
    let mut problem = Problem::new(joint);
    let use_newton = config.algorithm == Algorithm::BarrierNewton && problem.nfree <= NEWTON_MAX_DIM;
    let mut iterations = 0;
    let mut gap_bits = f64::INFINITY;
    let mut converged = problem.nfree == 0;
    let mut t = 0.0;
    let mut stalled = 0;
    // Best certified iterate so far: (gap in bits, couplings).
    let mut best: Option<(f64, Vec<Vec<f64>>)> = None;
    if converged {
        gap_bits = 0.0;
    }

    while !converged && iterations < config.max_iterations {
        iterations += 1;
        let col = problem.column_mass();
        let grad = problem.gradient(&col);
        let (vertices, gap) = problem.linear_subproblem(&grad)?;
        gap_bits = gap / LN_2;
        if gap_bits <= config.tolerance {
            converged = true;
            break;
        }
        if best.as_ref().is_none_or(|(b, _)| gap_bits < *b) {
            best = Some((gap_bits, problem.slices.iter().map(|s| s.q.clone()).collect()));
        }

        let moved = if use_newton {
            if t == 0.0 {
                t = (problem.cells() as f64 / gap.max(1e-300)).clamp(1.0, 1e6);
            }
            problem.slices.iter_mut().for_each(Slice::rebuild_basis);
            let Some((dir, decrement)) = problem.barrier_newton_direction(&grad, &col, t) else {
                // Numerically exhausted; the best certified iterate stands.
                break;
            };
            if decrement * t < CENTERING_TOL {
                t *= BARRIER_GROWTH;
                continue;
            }
            let amax = FRACTION_TO_BOUNDARY * problem.max_step(&dir);
            let alpha = problem.barrier_line_search(&dir, amax, t);
            if alpha > 0.0 {
                problem.apply(&dir, alpha);
                true
            } else {
                t *= BARRIER_GROWTH;
                continue;
            }
        } else {
            let dir: Vec<Vec<f64>> = problem
                .slices
                .iter()
                .zip(&vertices)
                .map(|(s, v)| v.iter().zip(&s.q).map(|(a, b)| a - b).collect())
                .collect();
            let alpha = problem.line_search(&dir, 1.0);
            if alpha > 0.0 {
                problem.apply(&dir, alpha);
            }
            alpha > 0.0
        };
        stalled = if moved { 0 } else { stalled + 1 };
        if stalled >= 5 {
            break;
        }
    }

    // The last step of an unconverged run is uncertified; fall back to the
    // iterate with the smallest measured gap.
    if !converged {
        if let Some((b, qs)) = best {
            for (s, q) in problem.slices.iter_mut().zip(qs) {
                s.q = q;
            }
            gap_bits = b;
        }
    }
    let coupling = problem.to_joint(joint.dims())?;
    let value_bits = conditional_mutual_information(&coupling, Axis::Y, Axis::F)?;
    Ok(Solution {
        value_bits,
        coupling,
        diagnostics: SolveDiagnostics {
            iterations,
            gap: gap_bits,
            converged,
            wall_time: start.elapsed(),
        },
    })
}
