//! Blackwell sufficiency of `P_{F|Y}` over `P_{B|Y}`.
//!
//! `F` is sufficient for `B` exactly when some row-stochastic `T` (from `F`
//! symbols to `B` symbols) satisfies `P_YB(y, b) = Σ_f P_YF(y, f) T(f, b)`.
//! The search minimizes the ℓ1 residual of that identity as a linear
//! program, so nearly-feasible instances report a small residual instead of
//! failing outright.

use serde::Serialize;

use crate::dist::{Axis, Channel, JointPmf3, PairPmf};
use crate::error::{Error, Result};
use crate::lp::LinearProgram;

/// Tolerance for exact fixtures.
pub const EXACT_TOL: f64 = 1e-8;
/// Tolerance when cross-checking against solver output.
pub const SOLVER_TOL: f64 = 1e-5;

#[derive(Debug, Clone, Serialize)]
pub struct GarblingCertificate {
    #[serde(rename = "T", serialize_with = "serialize_rows")]
    pub garbling: Channel,
    /// ℓ1 distance between `P_YB` and the image of `P_YF` under `T`.
    pub residual: f64,
}

fn serialize_rows<S: serde::Serializer>(c: &Channel, s: S) -> Result<S::Ok, S::Error> {
    c.rows().serialize(s)
}

/// Outcome of a garbling search; the certificate is the best `T` found even
/// when it does not reach the tolerance.
#[derive(Debug, Clone, Serialize)]
pub struct BlackwellVerdict {
    pub sufficient: bool,
    #[serde(flatten)]
    pub certificate: GarblingCertificate,
}

/// `Σ_f P_YF(y, f) T(f, b)` laid out like `P_YB`.
pub fn garbled_image(p_yf: &PairPmf, t: &Channel) -> Vec<f64> {
    let mut out = vec![0.0; p_yf.rows() * t.outputs()];
    for y in 0..p_yf.rows() {
        for f in 0..p_yf.cols() {
            let p = p_yf.get(y, f);
            for b in 0..t.outputs() {
                out[y * t.outputs() + b] += p * t.get(f, b);
            }
        }
    }
    out
}

fn l1_residual(p_yf: &PairPmf, p_yb: &PairPmf, t: &Channel) -> f64 {
    garbled_image(p_yf, t)
        .iter()
        .zip(p_yb.mass())
        .map(|(a, b)| (a - b).abs())
        .sum()
}

pub fn find_garbling(p_yf: &PairPmf, p_yb: &PairPmf, tol: f64) -> Result<BlackwellVerdict> {
    if p_yf.rows() != p_yb.rows() {
        return Err(Error::DimensionMismatch {
            expected: p_yf.rows(),
            found: p_yb.rows(),
        });
    }
    let (ny, nf, nb) = (p_yf.rows(), p_yf.cols(), p_yb.cols());
    let pf = p_yf.col_marginal();
    let active: Vec<usize> = (0..nf).filter(|&f| pf[f] > 0.0).collect();
    let nt = active.len() * nb;
    let nvars = nt + 2 * ny * nb;

    let mut objective = vec![0.0; nvars];
    objective[nt..].iter_mut().for_each(|c| *c = 1.0);
    let mut rows = Vec::with_capacity(ny * nb + active.len());
    let mut rhs = Vec::with_capacity(ny * nb + active.len());
    for y in 0..ny {
        for b in 0..nb {
            let mut row = vec![0.0; nvars];
            for (k, &f) in active.iter().enumerate() {
                row[k * nb + b] = p_yf.get(y, f);
            }
            let e = y * nb + b;
            row[nt + e] = 1.0;
            row[nt + ny * nb + e] = -1.0;
            rows.push(row);
            rhs.push(p_yb.get(y, b));
        }
    }
    for k in 0..active.len() {
        let mut row = vec![0.0; nvars];
        row[k * nb..(k + 1) * nb].iter_mut().for_each(|v| *v = 1.0);
        rows.push(row);
        rhs.push(1.0);
    }
    let sol = LinearProgram { objective, rows, rhs }.solve()?;

    let mut matrix = vec![1.0 / nb as f64; nf * nb];
    for (k, &f) in active.iter().enumerate() {
        let row = &sol.x[k * nb..(k + 1) * nb];
        let s: f64 = row.iter().sum();
        for b in 0..nb {
            matrix[f * nb + b] = (row[b] / s).clamp(0.0, 1.0);
        }
    }
    let garbling = Channel::new(nf, nb, matrix)?;
    let residual = l1_residual(p_yf, p_yb, &garbling);
    Ok(BlackwellVerdict {
        sufficient: residual <= tol,
        certificate: GarblingCertificate { garbling, residual },
    })
}

/// Whether `P_{F|Y}` is Blackwell sufficient for `P_{B|Y}` under `joint`.
pub fn blackwell_sufficient(joint: &JointPmf3, tol: f64) -> Result<BlackwellVerdict> {
    find_garbling(&joint.pair(Axis::Y, Axis::F), &joint.pair(Axis::Y, Axis::B), tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn noisy_copy(eps_f: f64, eps_b: f64) -> JointPmf3 {
        // Y uniform; F = Y through BSC(eps_f); B = F through BSC(eps_b).
        JointPmf3::from_fn([2, 2, 2], |y, f, b| {
            let pf = if f == y { 1.0 - eps_f } else { eps_f };
            let pb = if b == f { 1.0 - eps_b } else { eps_b };
            0.5 * pf * pb
        })
        .unwrap()
    }

    #[test]
    fn identical_sources_use_identity() {
        let j = JointPmf3::from_fn([2, 2, 2], |y, f, b| {
            if f != b {
                0.0
            } else if f == y {
                0.4
            } else {
                0.1
            }
        })
        .unwrap();
        let v = blackwell_sufficient(&j, EXACT_TOL).unwrap();
        assert!(v.sufficient);
        assert!(v.certificate.residual < 1e-15);
        assert_eq!(v.certificate.garbling, Channel::identity(2).unwrap());
    }

    #[test]
    fn constructed_bsc_garbling() {
        let j = noisy_copy(0.0, 0.1);
        let v = blackwell_sufficient(&j, EXACT_TOL).unwrap();
        assert!(v.sufficient);
        for (a, b) in v.certificate.garbling.matrix().iter().zip(Channel::bsc(0.1).unwrap().matrix()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn b_carrying_extra_information_is_infeasible() {
        // Y uniform, F independent noise, B = Y.
        let j = JointPmf3::from_fn([2, 2, 2], |y, _f, b| if b == y { 0.25 } else { 0.0 }).unwrap();
        let v = blackwell_sufficient(&j, 1e-6).unwrap();
        assert!(!v.sufficient);
        // Oracle: T rows (t0, 1-t0), (t1, 1-t1); image of P_YF is the
        // constant row (t0+t1)/4 per y, so the residual is
        // 2·|1/2 − s| + 2·|s| with s = (t0+t1)/4 ∈ [0, 1/2], minimized at 1.
        assert!((v.certificate.residual - 1.0).abs() < 1e-12);
    }

    #[test]
    fn motivational_example_roles() {
        let j = fixtures::motivational_example();
        let v = blackwell_sufficient(&j, EXACT_TOL).unwrap();
        assert!(v.sufficient, "{v:?}");
        let reconstructed = garbled_image(&j.pair(Axis::Y, Axis::F), &v.certificate.garbling);
        for (a, b) in reconstructed.iter().zip(j.pair(Axis::Y, Axis::B).mass()) {
            assert!((a - b).abs() <= EXACT_TOL);
        }
        let swapped = blackwell_sufficient(&j.swap_sources(), EXACT_TOL).unwrap();
        assert!(!swapped.sufficient);
    }

    #[test]
    fn zero_mass_rows_are_uniform() {
        let j = JointPmf3::from_fn([2, 3, 2], |y, f, b| {
            if f == 2 {
                0.0
            } else if f == y && b == y {
                0.5
            } else {
                0.0
            }
        })
        .unwrap();
        let v = blackwell_sufficient(&j, EXACT_TOL).unwrap();
        assert!(v.sufficient);
        assert_eq!(v.certificate.garbling.rows()[2], vec![0.5, 0.5]);
    }

    #[test]
    fn alphabet_mismatch() {
        let a = PairPmf::new(2, 2, vec![0.25; 4]).unwrap();
        let b = PairPmf::new(3, 2, vec![1.0 / 6.0; 6]).unwrap();
        assert!(find_garbling(&a, &b, EXACT_TOL).is_err());
    }

    #[test]
    fn json_shape() {
        let v = blackwell_sufficient(&noisy_copy(0.0, 0.1), EXACT_TOL).unwrap();
        let json = serde_json::to_value(&v).unwrap();
        assert!(json["sufficient"].as_bool().unwrap());
        assert!(json["residual"].is_number());
        assert_eq!(json["T"].as_array().unwrap().len(), 2);
    }
}
