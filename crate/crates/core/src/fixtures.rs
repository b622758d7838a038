//! Small reference distributions with known decompositions.

use crate::dist::JointPmf3;

/// `Z = (Z1, Z2, Z3)` uniform, `N ~ Bern(1/2)`, `A = (Z1, Z2, Z3 ⊕ N)`,
/// `B = (Z2, N)`; laid out as `Y = Z`, `F = A`, `B = B`.
pub fn motivational_example() -> JointPmf3 {
    let mut mass = vec![0.0; 8 * 8 * 4];
    for z in 0..8usize {
        let (z1, z2, z3) = (z >> 2 & 1, z >> 1 & 1, z & 1);
        for n in 0..2usize {
            let a = z1 << 2 | z2 << 1 | (z3 ^ n);
            let b = z2 << 1 | n;
            mass[(z * 8 + a) * 4 + b] += 1.0 / 16.0;
        }
    }
    JointPmf3::new([8, 8, 4], mass).expect("valid fixture")
}

fn binary_gate(g: impl Fn(usize, usize) -> usize) -> JointPmf3 {
    JointPmf3::from_fn([2, 2, 2], |y, f, b| if g(f, b) == y { 0.25 } else { 0.0 }).expect("valid gate")
}

/// `Y = F ∧ B` with `F, B` iid uniform bits.
pub fn and_gate() -> JointPmf3 {
    binary_gate(|f, b| f & b)
}

/// `Y = F ⊕ B` with `F, B` iid uniform bits.
pub fn xor_gate() -> JointPmf3 {
    binary_gate(|f, b| f ^ b)
}

/// `F = B = Y` with `Y` a uniform bit.
pub fn copy_gate() -> JointPmf3 {
    JointPmf3::from_fn([2, 2, 2], |y, f, b| if y == f && f == b { 0.5 } else { 0.0 }).expect("valid gate")
}
