mod common;

use proptest::prelude::*;
use spuriousness::dist::{mutual_information, Axis, JointPmf3};
use spuriousness::pid::{brute_force_unique, pid_decompose, solve_unique_information, SolverConfig};

fn uni_b(j: &JointPmf3) -> f64 {
    let u = solve_unique_information(j, Axis::B, &SolverConfig::default()).unwrap();
    assert!(u.diagnostics.converged, "{:?}", u.diagnostics);
    u.bits
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn decomposition_identity_and_signs(j in common::joint(4)) {
        let r = pid_decompose(&j, &SolverConfig::default()).unwrap();
        prop_assert!(r.converged(), "{r:?}");
        let sum: f64 = r.terms().iter().sum();
        prop_assert!((sum - r.total_mi).abs() <= 1e-6);
        for t in r.terms() {
            prop_assert!(t >= -1e-8, "{r:?}");
        }
        prop_assert!(r.report().gap <= 1e-9);
    }

    #[test]
    fn unique_information_is_bounded_by_mutual_information(j in common::joint(4)) {
        let u = uni_b(&j);
        prop_assert!(u <= mutual_information(&j.pair(Axis::Y, Axis::B)) + 1e-8);
    }

    #[test]
    fn adding_spurious_features_never_lowers_unique_information((dims, w) in common::joint4(3)) {
        // Axes are (Y, F, B, B'): compare Uni(Y; (B, B') | F) with Uni(Y; B | F).
        let grown = uni_b(&common::merge_last(dims, &w));
        let base = uni_b(&common::drop_last(dims, &w));
        prop_assert!(grown >= base - 1e-6, "{grown} < {base}");
    }

    #[test]
    fn adding_core_features_never_raises_unique_information((dims, w) in common::joint4(3)) {
        // Axes are (Y, F, B, F'): compare Uni(Y; B | (F, F')) with Uni(Y; B | F).
        let grown = uni_b(&common::merge_first_and_last(dims, &w));
        let base = uni_b(&common::drop_last(dims, &w));
        prop_assert!(grown <= base + 1e-6, "{grown} > {base}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn agrees_with_brute_force_on_binary_joints(j in common::joint_with_dims([2, 2, 2])) {
        let oracle = brute_force_unique(&j, 200).unwrap();
        let solver = uni_b(&j);
        prop_assert!((oracle - solver).abs() <= 1e-4, "oracle {oracle} solver {solver}");
    }

    #[test]
    fn relabeling_leaves_terms_unchanged(
        (j, seed) in (common::joint(4), any::<u64>())
    ) {
        let cfg = SolverConfig::default();
        let base = pid_decompose(&j, &cfg).unwrap();
        let mut relabeled = j.clone();
        for (k, axis) in Axis::ALL.into_iter().enumerate() {
            let n = j.dim(axis);
            // Rotation by a seed-dependent offset.
            let shift = ((seed >> (8 * k)) as usize) % n;
            let perm: Vec<usize> = (0..n).map(|i| (i + shift) % n).collect();
            relabeled = relabeled.relabel(axis, &perm).unwrap();
        }
        let other = pid_decompose(&relabeled, &cfg).unwrap();
        for (a, b) in base.terms().iter().zip(other.terms()) {
            prop_assert!((a - b).abs() <= 1e-8, "{base:?} vs {other:?}");
        }
    }

    #[test]
    fn returned_coupling_is_feasible(j in common::joint(4)) {
        for axis in [Axis::B, Axis::F] {
            let u = solve_unique_information(&j, axis, &SolverConfig::default()).unwrap();
            for (a, b) in [(Axis::Y, Axis::F), (Axis::Y, Axis::B)] {
                for (x, y) in j.pair(a, b).mass().iter().zip(u.coupling.pair(a, b).mass()) {
                    prop_assert!((x - y).abs() <= 1e-10);
                }
            }
            prop_assert!(u.coupling.mass().iter().all(|&m| m >= 0.0));
        }
    }
}
