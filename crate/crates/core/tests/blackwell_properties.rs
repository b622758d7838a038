mod common;

use proptest::prelude::*;
use spuriousness::blackwell::{blackwell_sufficient, garbled_image, SOLVER_TOL};
use spuriousness::dist::{Axis, Channel, JointPmf3};
use spuriousness::pid::{solve_unique_information, SolverConfig};

fn stochastic_rows(rows: usize, cols: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(0.0..1.0f64, cols), rows).prop_map(|rs| {
        rs.into_iter()
            .map(|r| {
                let s: f64 = r.iter().sum::<f64>() + 1e-3;
                r.iter().map(|v| (v + 1e-3 / r.len() as f64) / s).collect()
            })
            .collect()
    })
}

/// `P(y, f)` arbitrary and `B` drawn from `F` through a random channel.
fn garbled_joint() -> impl Strategy<Value = JointPmf3> {
    (2usize..5, 2usize..5, 2usize..5).prop_flat_map(|(ny, nf, nb)| {
        (common::sparse_weights(ny * nf), stochastic_rows(nf, nb)).prop_map(move |(w, t)| {
            let total: f64 = w.iter().sum();
            JointPmf3::from_fn([ny, nf, nb], |y, f, b| w[y * nf + f] / total * t[f][b]).unwrap()
        })
    })
}

/// `B` a nearly clean copy of `Y`, `F` a heavily corrupted one, both
/// conditionally independent given `Y`.
fn leaking_joint() -> impl Strategy<Value = JointPmf3> {
    (2usize..5, 0.0..0.05f64, 0.35..0.9f64, prop::collection::vec(0.2..1.0f64, 4)).prop_map(
        |(k, clean, noisy, py)| {
            let sym = |eps: f64, a: usize, b: usize| if a == b { 1.0 - eps } else { eps / (k - 1) as f64 };
            let noisy = noisy * (k - 1) as f64 / k as f64;
            let total: f64 = py[..k].iter().sum();
            JointPmf3::from_fn([k, k, k], |y, f, b| py[y] / total * sym(noisy, y, f) * sym(clean, y, b)).unwrap()
        },
    )
}

fn uni_b(j: &JointPmf3) -> f64 {
    let u = solve_unique_information(j, Axis::B, &SolverConfig::default()).unwrap();
    assert!(u.diagnostics.converged);
    u.bits
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn garblings_have_no_unique_information(j in garbled_joint()) {
        let v = blackwell_sufficient(&j, 1e-9).unwrap();
        prop_assert!(v.certificate.residual <= 1e-9, "residual {}", v.certificate.residual);
        prop_assert!(uni_b(&j) <= 1e-5);
    }

    #[test]
    fn leaking_sources_are_not_garblings(j in leaking_joint()) {
        let v = blackwell_sufficient(&j, 1e-9).unwrap();
        prop_assert!(v.certificate.residual > 1e-3, "residual {}", v.certificate.residual);
        prop_assert!(uni_b(&j) > 1e-3);
    }

    #[test]
    fn theorem_both_directions(j in prop_oneof![garbled_joint(), leaking_joint(), common::joint(4)]) {
        let residual = blackwell_sufficient(&j, 1e-9).unwrap().certificate.residual;
        let uni = uni_b(&j);
        if residual <= 1e-9 {
            prop_assert!(uni <= 1e-5, "residual {residual} but Uni {uni}");
        }
        if uni <= 1e-9 {
            prop_assert!(residual <= SOLVER_TOL, "Uni {uni} but residual {residual}");
        }
    }

    #[test]
    fn certificates_reconstruct_within_tolerance(j in prop_oneof![garbled_joint(), common::joint(3)]) {
        let tol = 1e-8;
        let v = blackwell_sufficient(&j, tol).unwrap();
        let t: &Channel = &v.certificate.garbling;
        prop_assert!(t.rows().iter().all(|r| (r.iter().sum::<f64>() - 1.0).abs() <= 1e-12));
        if v.sufficient {
            let image = garbled_image(&j.pair(Axis::Y, Axis::F), t);
            for (a, b) in image.iter().zip(j.pair(Axis::Y, Axis::B).mass()) {
                prop_assert!((a - b).abs() <= tol);
            }
        }
    }
}
