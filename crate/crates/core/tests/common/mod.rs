#![allow(dead_code)]

pub mod gradient;

use proptest::prelude::*;
use spuriousness::dist::JointPmf3;

/// Weights in `[0, 1)` where roughly a fifth of the cells are forced to zero
/// so boundary optima and empty slices show up regularly.
pub fn sparse_weights(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec((0.0..1.0f64, 0u8..5), len).prop_map(|cells| {
        let mut w: Vec<f64> = cells.into_iter().map(|(v, z)| if z == 0 { 0.0 } else { v }).collect();
        if w.iter().all(|&v| v == 0.0) {
            w[0] = 1.0;
        }
        w
    })
}

pub fn joint_with_dims(dims: [usize; 3]) -> impl Strategy<Value = JointPmf3> {
    sparse_weights(dims.iter().product()).prop_map(move |w| JointPmf3::from_weights(dims, &w).unwrap())
}

/// Random joint with every axis of size 2..=max.
pub fn joint(max: usize) -> impl Strategy<Value = JointPmf3> {
    (2..=max, 2..=max, 2..=max).prop_flat_map(|(a, b, c)| joint_with_dims([a, b, c]))
}

/// Random four-variable weights `w[((y·n1 + x1)·n2 + x2)·n3 + x3]`.
pub fn joint4(max: usize) -> impl Strategy<Value = ([usize; 4], Vec<f64>)> {
    (2..=max, 2..=max, 2..=max, 2..=max)
        .prop_flat_map(|(a, b, c, d)| (Just([a, b, c, d]), sparse_weights(a * b * c * d)))
}

/// Groups axes 2 and 3 of a four-variable table into one axis.
pub fn merge_last(dims: [usize; 4], w: &[f64]) -> JointPmf3 {
    JointPmf3::from_weights([dims[0], dims[1], dims[2] * dims[3]], w).unwrap()
}

/// Drops axis 3 of a four-variable table.
pub fn drop_last(dims: [usize; 4], w: &[f64]) -> JointPmf3 {
    let [a, b, c, d] = dims;
    let mut out = vec![0.0; a * b * c];
    for (k, v) in w.iter().enumerate() {
        out[k / d] += v;
    }
    JointPmf3::from_weights([a, b, c], &out).unwrap()
}

/// Groups axes 1 and 3 of a four-variable table, i.e. `(Y, (X1, X3), X2)`.
pub fn merge_first_and_last(dims: [usize; 4], w: &[f64]) -> JointPmf3 {
    let [a, b, c, d] = dims;
    let mut out = vec![0.0; a * b * d * c];
    for y in 0..a {
        for x1 in 0..b {
            for x2 in 0..c {
                for x3 in 0..d {
                    let src = ((y * b + x1) * c + x2) * d + x3;
                    let dst = (y * (b * d) + x1 * d + x3) * c + x2;
                    out[dst] = w[src];
                }
            }
        }
    }
    JointPmf3::from_weights([a, b * d, c], &out).unwrap()
}
