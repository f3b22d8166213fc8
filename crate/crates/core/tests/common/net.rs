//! Brute-force visibility bounds for qubit POVMs from a fixed net of
//! projective measurements, solved as linear programs.

use microlp::{ComparisonOp, OptimizationDirection, Problem};
use povmsim_core::Povm;

use super::bloch;

/// Unit vectors from a `k×k` grid on each face of the cube, normalized.
/// Every unit vector lies within angle `√2/(k−1)` of one of them.
pub struct Net {
    pub dirs: Vec<[f64; 3]>,
    pub angle: f64,
}

impl Net {
    pub fn cube(k: usize) -> Self {
        let mut dirs = Vec::with_capacity(6 * k * k);
        for axis in 0..3 {
            for sign in [-1.0, 1.0] {
                for i in 0..k {
                    for j in 0..k {
                        let u = -1.0 + 2.0 * i as f64 / (k - 1) as f64;
                        let w = -1.0 + 2.0 * j as f64 / (k - 1) as f64;
                        let mut p = [0.0; 3];
                        p[axis] = sign;
                        p[(axis + 1) % 3] = u;
                        p[(axis + 2) % 3] = w;
                        let n = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
                        dirs.push([p[0] / n, p[1] / n, p[2] / n]);
                    }
                }
            }
        }
        Net { dirs, angle: 2f64.sqrt() / (k - 1) as f64 }
    }

    /// Largest `v` with `Φ_v(E)` a mixture of relabeled net measurements
    /// whose Bloch vectors are scaled by `scale`. `scale = 1` is an inner
    /// bound; `scale = 1/cos(angle)` covers every projective measurement.
    pub fn visibility(&self, e: &Povm, scale: f64) -> f64 {
        let n = e.outcomes();
        let forms: Vec<(f64, [f64; 3])> = e.effects().iter().map(bloch).collect();
        let mut lp = Problem::new(OptimizationDirection::Maximize);
        let v = lp.add_var(1.0, (0.0, 1.0));
        // rows[a][c]: c = 0 identity part, 1..4 Bloch components
        let mut rows: Vec<Vec<Vec<(microlp::Variable, f64)>>> = vec![vec![Vec::new(); 4]; n];
        for a in 0..n {
            let t = lp.add_var(0.0, (0.0, f64::INFINITY));
            rows[a][0].push((t, 1.0));
            for c in 0..3 {
                rows[a][c + 1].push((v, -forms[a].1[c]));
            }
        }
        for m in &self.dirs {
            for i in 0..n {
                for j in i + 1..n {
                    let p = lp.add_var(0.0, (0.0, f64::INFINITY));
                    rows[i][0].push((p, 0.5));
                    rows[j][0].push((p, 0.5));
                    for c in 0..3 {
                        rows[i][c + 1].push((p, scale * m[c]));
                        rows[j][c + 1].push((p, -scale * m[c]));
                    }
                }
            }
        }
        for (a, r) in rows.iter().enumerate() {
            lp.add_constraint(r[0].as_slice(), ComparisonOp::Eq, forms[a].0);
            for c in 1..4 {
                lp.add_constraint(r[c].as_slice(), ComparisonOp::Eq, 0.0);
            }
        }
        lp.solve().expect("net program is feasible at v = 0").into_solution().expect("no integer variables").objective()
    }
}
