//! Exhaustive reference for `Uni(Y; B | F)` on all-binary joints.
//!
//! With binary axes each `y`-slice of `Δ_P` is a 2×2 coupling with fixed
//! margins, i.e. a single scalar `t_y = Q(y, f=0, b=0)` in an interval. The
//! objective restricted to `(t_0, t_1)` is convex, so its partial minimum
//! over `t_1` is convex in `t_0`. The oracle grids `t_0`, minimizes over
//! `t_1` by golden-section search at every grid point, then refines `t_0`
//! by golden-section search inside the bracket around the best grid point.
//! The objective is evaluated from entropies, independently of the solver.

use crate::dist::{entropy, JointPmf3};
use crate::error::{Error, Result};

const GOLDEN_ITERS: usize = 90;

struct BinarySlices {
    /// Per `y`: `(P(y,f=0), P(y,f=1), P(y,b=0), P(y,b=1))`.
    margins: [[f64; 4]; 2],
}

impl BinarySlices {
    fn interval(&self, y: usize) -> (f64, f64) {
        let [r0, _, c0, c1] = self.margins[y];
        ((r0 - c1).max(0.0), r0.min(c0))
    }

    fn cells(&self, y: usize, t: f64) -> [f64; 4] {
        let [r0, r1, c0, _] = self.margins[y];
        // (f,b) = (0,0), (0,1), (1,0), (1,1)
        [t, (r0 - t).max(0.0), (c0 - t).max(0.0), (r1 - c0 + t).max(0.0)]
    }

    /// `I_Q(Y; B | F) = H(Y,F) + H(F,B) − H(Y,F,B) − H(F)`.
    fn objective(&self, t: [f64; 2]) -> f64 {
        let q = [self.cells(0, t[0]), self.cells(1, t[1])];
        let yfb: Vec<f64> = q.iter().flatten().copied().collect();
        let yf: Vec<f64> = q.iter().flat_map(|c| [c[0] + c[1], c[2] + c[3]]).collect();
        let fb: Vec<f64> = (0..4).map(|k| q[0][k] + q[1][k]).collect();
        let f = [fb[0] + fb[1], fb[2] + fb[3]];
        entropy(&yf) + entropy(&fb) - entropy(&yfb) - entropy(&f)
    }
}

fn golden_min(lo: f64, hi: f64, mut f: impl FnMut(f64) -> f64) -> (f64, f64) {
    if hi - lo <= 0.0 {
        return (lo, f(lo));
    }
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..GOLDEN_ITERS {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = f(x2);
        }
    }
    // Endpoints are candidates too: the minimum may sit on the boundary.
    [(x1, f1), (x2, f2), (lo, f(lo)), (hi, f(hi))]
        .into_iter()
        .min_by(|p, q| p.1.total_cmp(&q.1))
        .expect("nonempty")
}

/// Minimum of `I_Q(Y; B | F)` over `Δ_P` for a joint with all axes binary.
pub fn brute_force_unique(joint: &JointPmf3, resolution: usize) -> Result<f64> {
    if joint.dims() != [2, 2, 2] {
        return Err(Error::Unsupported(format!(
            "brute-force oracle needs binary axes, got {:?}",
            joint.dims()
        )));
    }
    if resolution < 2 {
        return Err(Error::InvalidArgument("grid resolution must be >= 2".into()));
    }
    let mut margins = [[0.0; 4]; 2];
    for (y, m) in margins.iter_mut().enumerate() {
        let g = |f, b| joint.get(y, f, b);
        *m = [g(0, 0) + g(0, 1), g(1, 0) + g(1, 1), g(0, 0) + g(1, 0), g(0, 1) + g(1, 1)];
    }
    let s = BinarySlices { margins };
    let (lo0, hi0) = s.interval(0);
    let (lo1, hi1) = s.interval(1);
    let inner = |t0: f64| golden_min(lo1, hi1, |t1| s.objective([t0, t1])).1;

    let step = (hi0 - lo0) / (resolution - 1) as f64;
    let grid: Vec<f64> = (0..resolution).map(|k| inner(lo0 + step * k as f64)).collect();
    let (best_k, best_grid) = grid
        .iter()
        .copied()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("nonempty grid");
    let a = lo0 + step * best_k.saturating_sub(1) as f64;
    let b = (lo0 + step * (best_k + 1) as f64).min(hi0);
    let (_, refined) = golden_min(a, b, inner);
    Ok(best_grid.min(refined).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn gates() {
        assert!(brute_force_unique(&fixtures::and_gate(), 400).unwrap() < 1e-9);
        assert!(brute_force_unique(&fixtures::copy_gate(), 50).unwrap() < 1e-12);
        assert!(brute_force_unique(&fixtures::xor_gate(), 200).unwrap() < 1e-9);
    }

    #[test]
    fn y_equals_b_with_useless_f() {
        // B = Y and F independent: every coupling leaves I(Y;B|F) = 1 bit.
        let j = JointPmf3::from_fn([2, 2, 2], |y, _f, b| if y == b { 0.25 } else { 0.0 }).unwrap();
        assert!((brute_force_unique(&j, 100).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_non_binary() {
        let j = JointPmf3::new([3, 1, 1], vec![0.2, 0.3, 0.5]).unwrap();
        assert!(matches!(brute_force_unique(&j, 10), Err(Error::Unsupported(_))));
    }
}
