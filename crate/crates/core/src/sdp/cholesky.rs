use nalgebra::DMatrix;

/// Dense Cholesky factor of a real symmetric matrix.
///
/// Pivots that fall below a relative threshold (dependent rows, or loss of
/// definiteness through rounding) are replaced by a huge value, which pins
/// the corresponding unknown near zero; callers refine the solution against
/// the unfactored matrix.
#[derive(Clone, Debug)]
pub(crate) struct Cholesky {
    l: DMatrix<f64>,
    pub replaced: usize,
}

const PIVOT_REL: f64 = 1e-14;
const PIVOT_BIG: f64 = 1e64;

impl Cholesky {
    pub fn factor(a: &DMatrix<f64>) -> Self {
        let n = a.nrows();
        let mut l = a.clone();
        let scale = (0..n).fold(0.0f64, |m, i| m.max(a[(i, i)].abs())).max(f64::MIN_POSITIVE);
        let mut replaced = 0;
        for j in 0..n {
            for k in 0..j {
                let ljk = l[(j, k)];
                if ljk == 0.0 {
                    continue;
                }
                let (left, mut right) = l.columns_range_pair_mut(k, j);
                let src = left.rows_range(j..n);
                let mut dst = right.rows_range_mut(j..n);
                dst.axpy(-ljk, &src, 1.0);
            }
            let mut d = l[(j, j)];
            let diag = if a[(j, j)] > 0.0 { a[(j, j)] } else { scale };
            if !(d > PIVOT_REL * diag) || !d.is_finite() {
                replaced += 1;
                d = PIVOT_BIG * diag;
                if !l.column(j).rows_range(j + 1..n).iter().all(|v| v.is_finite()) {
                    l.column_mut(j).rows_range_mut(j + 1..n).fill(0.0);
                }
            }
            let s = d.sqrt();
            l[(j, j)] = s;
            for i in j + 1..n {
                l[(i, j)] /= s;
            }
        }
        for j in 0..n {
            for i in 0..j {
                l[(i, j)] = 0.0;
            }
        }
        Self { l, replaced }
    }

    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.dim();
        for j in 0..n {
            b[j] /= self.l[(j, j)];
            let bj = b[j];
            if bj != 0.0 {
                for i in j + 1..n {
                    b[i] -= self.l[(i, j)] * bj;
                }
            }
        }
        for j in (0..n).rev() {
            let mut acc = b[j];
            for i in j + 1..n {
                acc -= self.l[(i, j)] * b[i];
            }
            b[j] = acc / self.l[(j, j)];
        }
    }

    pub fn solve_matrix(&self, b: &mut DMatrix<f64>) {
        for mut col in b.column_iter_mut() {
            self.solve_in_place(col.as_mut_slice());
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_spd_system() {
        let m = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0]);
        let f = Cholesky::factor(&m);
        assert_eq!(f.replaced, 0);
        let mut b = vec![1.0, 2.0, 3.0];
        f.solve_in_place(&mut b);
        let r = &m * nalgebra::DVector::from_vec(b) - nalgebra::DVector::from_vec(vec![1.0, 2.0, 3.0]);
        assert!(r.norm() < 1e-14);
    }

    #[test]
    fn dependent_row_is_regularized() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 1.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 2.0]);
        let f = Cholesky::factor(&m);
        assert_eq!(f.replaced, 1);
        let mut b = vec![1.0, 1.0, 2.0];
        f.solve_in_place(&mut b);
        assert!((b[0] - 1.0).abs() < 1e-12 && b[1].abs() < 1e-12 && (b[2] - 1.0).abs() < 1e-12);
    }
}
