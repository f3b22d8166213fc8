use nalgebra::{DMatrix, DVector};

use super::VisibilityResult;
use crate::constructions::verify_decomposition;
use crate::operator::{c64, eigh_sorted, Operator, C64};
use crate::povm::{NoiseModel, Povm, ProjectiveMeasurement, SimulationEntry, SimulationModel};
use crate::sdp::svec;

const WEIGHT_THRESHOLD: f64 = 1e-7;
const PROJECTIVITY_TOL: f64 = 1e-6;
const MODEL_TOL: f64 = 1e-8;

/// Reads a projective simulation off the optimal blocks of a depolarizing
/// visibility program, if every weighted block is projective.
pub fn extract_model(result: &VisibilityResult) -> Option<SimulationModel> {
    extract(result).map(|(model, _)| model)
}

/// Closest family of orthogonal projectors to near-projective `O_a`.
fn round_projectors(ops: &[Operator], d: usize) -> Option<Vec<Operator>> {
    let mut cols: Vec<DVector<C64>> = Vec::new();
    let mut owner = Vec::new();
    for (a, o) in ops.iter().enumerate() {
        let (vals, vecs) = eigh_sorted(o.matrix());
        for (i, &l) in vals.iter().enumerate() {
            if l > 0.5 {
                cols.push(vecs.column(i).into_owned());
                owner.push(a);
            }
        }
    }
    if cols.len() != d {
        return None;
    }
    let v = DMatrix::from_columns(&cols);
    let gram = v.adjoint() * &v;
    let (vals, vecs) = eigh_sorted(&gram);
    if vals[0] <= 0.5 {
        return None;
    }
    let inv_sqrt = DMatrix::from_diagonal(&DVector::from_iterator(d, vals.iter().map(|l| c64(1.0 / l.sqrt(), 0.0))));
    let ortho = &v * (&vecs * inv_sqrt * vecs.adjoint());
    let mut out = vec![Operator::zeros(d); ops.len()];
    for (j, &a) in owner.iter().enumerate() {
        let c = ortho.column(j);
        let proj = Operator::from_matrix(&c * c.adjoint());
        out[a] += &proj;
    }
    Some(out)
}

pub(crate) fn extract(result: &VisibilityResult) -> Option<(SimulationModel, f64)> {
    if result.noise != NoiseModel::Depolarizing {
        return None;
    }
    let blocks = result.blocks.as_ref()?;
    let target = &result.target;
    let d = target.dim();
    let n = target.outcomes();
    let mut measurements = Vec::new();
    for b in blocks.iter().filter(|b| b.weight > WEIGHT_THRESHOLD) {
        let ops: Vec<Operator> = b.effects.iter().map(|f| f.scale(1.0 / b.weight)).collect();
        let residual = ops.iter().map(|o| (o * o).max_abs_diff(o)).fold(0.0, f64::max);
        if residual > PROJECTIVITY_TOL {
            log::debug!("rank vector {} (weight {:.3e}) is not projective: residual {residual:.3e}", b.ranks, b.weight);
            return None;
        }
        measurements.push(round_projectors(&ops, d)?);
    }
    if measurements.is_empty() {
        return None;
    }
    // Refit weights and visibility for the rounded projectors.
    let k = d * d;
    let m = measurements.len();
    let mut a = DMatrix::zeros(n * k, m + 1);
    let mut rhs = DVector::zeros(n * k);
    for out in 0..n {
        let e = target.effect(out);
        let mixed = Operator::identity(d).scale(e.trace().re / d as f64);
        let dir = svec(&(e - &mixed));
        let base = svec(&mixed);
        for c in 0..k {
            rhs[out * k + c] = base[c];
            a[(out * k + c, m)] = -dir[c];
        }
        for (j, meas) in measurements.iter().enumerate() {
            let p = svec(&meas[out]);
            for c in 0..k {
                a[(out * k + c, j)] = p[c];
            }
        }
    }
    let sol = a.svd(true, true).solve(&rhs, 1e-12).ok()?;
    let v = sol[m];
    if (v - result.v).abs() > 1e-6 || sol.iter().take(m).any(|&q| q < -1e-9) {
        log::debug!("refit rejected: v {v:.10} vs {:.10}", result.v);
        return None;
    }
    let total: f64 = sol.iter().take(m).map(|q| q.max(0.0)).sum();
    let mut entries = Vec::with_capacity(m);
    for (j, meas) in measurements.into_iter().enumerate() {
        let q = sol[j].max(0.0) / total;
        if q <= 0.0 {
            continue;
        }
        let pm = ProjectiveMeasurement::new(Povm::new(meas).ok()?).ok()?;
        entries.push(SimulationEntry { weight: q, measurement: pm });
    }
    let model = SimulationModel::new(entries).ok()?;
    let report = verify_decomposition(&model, &target.depolarize_unchecked(v), MODEL_TOL).ok()?;
    if !report.passed() {
        log::debug!("extracted model deviates by {:.3e}", report.max_deviation);
        return None;
    }
    Some((model, v))
}
