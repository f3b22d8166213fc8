//! Real coordinates of Hermitian matrices.
//!
//! A `k×k` Hermitian matrix has `k²` coordinates: the `k` diagonal entries,
//! then for each pair `i < j` (row-major) `√2 Re X_ij` and `√2 Im X_ij`.
//! With this scaling `Re tr(XY) = svec(X)·svec(Y)`.

use std::f64::consts::SQRT_2;

use nalgebra::DMatrix;

use crate::operator::{c64, Operator, C64};

pub fn coord_count(k: usize) -> usize {
    k * k
}

/// Coordinates `(re, im)` of the off-diagonal pair `(i, j)`, `i < j`.
pub fn offdiag_coords(k: usize, i: usize, j: usize) -> (usize, usize) {
    debug_assert!(i < j && j < k);
    let pair = i * (2 * k - i - 1) / 2 + (j - i - 1);
    (k + 2 * pair, k + 2 * pair + 1)
}

pub fn svec(x: &Operator) -> Vec<f64> {
    let mut out = vec![0.0; coord_count(x.dim())];
    svec_into(x.matrix(), &mut out);
    out
}

pub(crate) fn svec_into(x: &DMatrix<C64>, out: &mut [f64]) {
    let k = x.nrows();
    for i in 0..k {
        out[i] = x[(i, i)].re;
    }
    let mut c = k;
    for i in 0..k {
        for j in i + 1..k {
            let z = (x[(i, j)] + x[(j, i)].conj()) * 0.5;
            out[c] = SQRT_2 * z.re;
            out[c + 1] = SQRT_2 * z.im;
            c += 2;
        }
    }
}

pub fn smat(v: &[f64], k: usize) -> Operator {
    Operator::from_matrix(smat_matrix(v, k))
}

pub(crate) fn smat_matrix(v: &[f64], k: usize) -> DMatrix<C64> {
    debug_assert_eq!(v.len(), coord_count(k));
    let mut m = DMatrix::zeros(k, k);
    for i in 0..k {
        m[(i, i)] = c64(v[i], 0.0);
    }
    let mut c = k;
    for i in 0..k {
        for j in i + 1..k {
            let z = c64(v[c], v[c + 1]) / SQRT_2;
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
            c += 2;
        }
    }
    m
}

/// Coordinates of the identity.
pub fn identity_coords(k: usize) -> Vec<f64> {
    let mut v = vec![0.0; coord_count(k)];
    v[..k].iter_mut().for_each(|x| *x = 1.0);
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::trace_product;
    use proptest::prelude::*;

    fn hermitian(k: usize, raw: &[f64]) -> Operator {
        smat(&raw[..k * k], k)
    }

    #[test]
    fn pair_indexing_is_dense() {
        for k in 1..6 {
            let mut seen = vec![false; k * k];
            seen[..k].iter_mut().for_each(|s| *s = true);
            for i in 0..k {
                for j in i + 1..k {
                    let (re, im) = offdiag_coords(k, i, j);
                    assert!(!seen[re] && !seen[im]);
                    seen[re] = true;
                    seen[im] = true;
                }
            }
            assert!(seen.iter().all(|&s| s));
        }
    }

    proptest! {
        #[test]
        fn isometry(k in 1usize..5, a in proptest::collection::vec(-1.0f64..1.0, 16), b in proptest::collection::vec(-1.0f64..1.0, 16)) {
            let x = hermitian(k, &a);
            let y = hermitian(k, &b);
            let lhs = trace_product(&x, &y);
            let rhs: f64 = svec(&x).iter().zip(svec(&y)).map(|(p, q)| p * q).sum();
            prop_assert!((lhs - rhs).abs() < 1e-13);
            prop_assert!(smat(&svec(&x), k).max_abs_diff(&x) < 1e-15);
        }
    }
}
