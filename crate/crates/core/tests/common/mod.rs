#![allow(dead_code)]

pub mod net;

use povmsim_core::operator::c64;
use povmsim_core::{Operator, Povm};

pub fn pauli() -> [Operator; 3] {
    let z = c64(0.0, 0.0);
    let o = c64(1.0, 0.0);
    let i = c64(0.0, 1.0);
    [
        Operator::from_rows(2, &[z, o, o, z]).unwrap(),
        Operator::from_rows(2, &[z, -i, i, z]).unwrap(),
        Operator::from_rows(2, &[o, z, z, -o]).unwrap(),
    ]
}

/// Bloch form `E = α I + (1/2) b·σ`, returned as `(α, b)`.
pub fn bloch(e: &Operator) -> (f64, [f64; 3]) {
    let m = e.matrix();
    let alpha = 0.5 * (m[(0, 0)].re + m[(1, 1)].re);
    (alpha, [2.0 * m[(1, 0)].re, 2.0 * m[(1, 0)].im, m[(0, 0)].re - m[(1, 1)].re])
}

pub fn max_effect_diff(a: &Povm, b: &Povm) -> f64 {
    a.max_deviation(b).unwrap()
}
