use std::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::DVector;

use super::hesse::{clifford_group, hesse_triples, v_gate};
use super::{displacement, hesse_vectors, qubit_fiducial, ray_permutation, sic_vectors};
use crate::error::{Error, Result};
use crate::operator::{c64, generate_group, phase, Operator, StateVector, C64};
use crate::povm::{Povm, ProjectiveMeasurement, SimulationEntry, SimulationModel};

const RAY_TOL: f64 = 1e-9;

/// Parameters of the six-measurement decomposition of the noisy flagged qubit SIC.
#[derive(Clone, Debug, PartialEq)]
pub struct FlaggedSic2Params {
    pub d: usize,
    pub epsilon: f64,
    pub lambda: f64,
    pub kappa: f64,
    pub theta: f64,
    pub v: f64,
}

/// `ε = 1/(4 + d + (d-2)√3 + 2√(6 + 2√3(d-2)))`, `v = 1 - dε`,
/// `κ = 1 - (d-1)ε`, `λ = 1 - (d-2)ε`, `tan²θ = 1 - 2(d-2)ε`.
pub fn fsic2_params(d: usize) -> FlaggedSic2Params {
    if !(2..=14).contains(&d) {
        log::warn!("flagged qubit SIC model is only established for 2 <= d <= 14 (got {d})");
    }
    let s3 = 3f64.sqrt();
    let n = d as f64;
    let epsilon = 1.0 / (4.0 + n + (n - 2.0) * s3 + 2.0 * (6.0 + 2.0 * s3 * (n - 2.0)).sqrt());
    let tan2 = 1.0 - 2.0 * (n - 2.0) * epsilon;
    FlaggedSic2Params {
        d,
        epsilon,
        lambda: 1.0 - (n - 2.0) * epsilon,
        kappa: 1.0 - (n - 1.0) * epsilon,
        theta: tan2.sqrt().atan(),
        v: 1.0 - n * epsilon,
    }
}

/// Closed form of `v` written directly in `d`.
pub fn fsic2_visibility(d: f64) -> f64 {
    let s3 = 3f64.sqrt();
    let root = 2.0 * (2.0 * s3 * d - 4.0 * s3 + 6.0).sqrt();
    (s3 * d + root - 2.0 * s3 + 4.0) / (d + s3 * d + root - 2.0 * s3 + 4.0)
}

impl FlaggedSic2Params {
    /// Largest residual among `2λcos²θ = 1`, `(d-1)ε + κ = 1`, `v = 1 - dε`.
    pub fn residual(&self) -> f64 {
        let n = self.d as f64;
        [
            2.0 * self.lambda * self.theta.cos().powi(2) - 1.0,
            (n - 1.0) * self.epsilon + self.kappa - 1.0,
            self.v - (1.0 - n * self.epsilon),
        ]
        .iter()
        .fold(0.0f64, |m, r| m.max(r.abs()))
    }
}

/// All sign patterns in `{-1, 1}^n`.
fn sign_patterns(n: usize) -> impl Iterator<Item = Vec<f64>> {
    (0..1usize << n).map(move |mask| (0..n).map(|j| if mask >> j & 1 == 1 { -1.0 } else { 1.0 }).collect())
}

fn unit(amps: DVector<C64>) -> Result<StateVector> {
    StateVector::from_dvector(amps)
}

fn theta_vector(theta: f64) -> DVector<C64> {
    DVector::from_vec(vec![c64(theta.cos(), 0.0), phase(-PI / 4.0) * theta.sin()])
}

/// Qubit symmetries `g` (from `<U, σ_x, σ_z>`, `U = exp(2πi/3 |φ₂><φ₂|)`)
/// with the outcome permutation they induce, one per image pair `{π(0), π(1)}`.
fn sic2_pair_representatives() -> Result<Vec<(Operator, Vec<usize>)>> {
    let fid = qubit_fiducial();
    let u = Operator::projector_phase(&fid.projector(), 2.0 * PI / 3.0);
    let one = c64(1.0, 0.0);
    let zero = c64(0.0, 0.0);
    let sx = Operator::from_rows(2, &[zero, one, one, zero])?;
    let sz = Operator::real_diagonal(&[1.0, -1.0]);
    let group = generate_group(&[u, sx, sz], 48)?;
    let vectors = sic_vectors(&fid);
    let mut reps: Vec<(Operator, Vec<usize>)> = Vec::new();
    for g in group.elements() {
        let perm = ray_permutation(g, &vectors, RAY_TOL)
            .ok_or_else(|| Error::Construction("qubit symmetry does not permute the SIC".into()))?;
        let key = (perm[0].min(perm[1]), perm[0].max(perm[1]));
        if !reps.iter().any(|(_, p)| (p[0].min(p[1]), p[0].max(p[1])) == key) {
            reps.push((g.clone(), perm));
        }
    }
    if reps.len() != 6 {
        return Err(Error::Construction(format!("expected 6 outcome pairs, found {}", reps.len())));
    }
    Ok(reps)
}

fn fsic2_phases(p: &FlaggedSic2Params) -> Result<(f64, f64)> {
    let n = p.d as f64;
    let xi = 1.0 / p.epsilon - n + 1.0;
    let a = (xi - n + 3.0).sqrt();
    let b = xi.sqrt();
    let c = n - 3.0;
    let w0 = phase(PI / 4.0) * a;
    let (alpha, beta) = if p.d == 3 {
        (PI / 4.0 + PI, 0.0)
    } else {
        let cos_delta = -(n - 2.0) / (2.0 * b);
        if cos_delta.abs() > 1.0 {
            return Err(Error::Construction(format!(
                "no phases solve the orthogonality condition in d = {} (triangle inequality fails)",
                p.d
            )));
        }
        let delta = cos_delta.acos();
        let e_beta = -w0 / (phase(delta) * b + c);
        let beta = e_beta.arg();
        (beta + delta, beta)
    };
    let residual = (w0 + phase(alpha) * b + phase(beta) * c).norm();
    if residual > 1e-10 * (1.0 + b) {
        return Err(Error::Construction(format!("phase solve residual {residual:.3e}")));
    }
    Ok((alpha, beta))
}

/// The six intermediate unit-trace POVMs `F^{(ij)}` on `d + 2` outcomes,
/// keyed by their qubit outcome pair.
pub fn fsic2_intermediate(d: usize) -> Result<Vec<([usize; 2], Povm)>> {
    check_fsic2_dim(d)?;
    let p = fsic2_params(d);
    let flags = d - 2;
    let plus = StateVector::from_dvector(theta_vector(p.theta))?.projector();
    let minus = StateVector::from_dvector(theta_vector(-p.theta))?.projector();
    let flag_diag = |kappa_at: Option<usize>| -> Operator {
        let diag: Vec<f64> = (0..flags).map(|j| if Some(j) == kappa_at { p.kappa } else { p.epsilon }).collect();
        Operator::real_diagonal(&diag)
    };
    let one = Operator::unit(2, 1, 1).scale(2.0 * p.epsilon);
    let mut out = Vec::new();
    for (g, perm) in sic2_pair_representatives()? {
        let mut effects = vec![Operator::zeros(d); d + 2];
        effects[perm[0]] = plus.conjugate_by(&g).scale(p.lambda).direct_sum(&flag_diag(None));
        effects[perm[1]] = minus.conjugate_by(&g).scale(p.lambda).direct_sum(&flag_diag(None));
        for j in 0..flags {
            effects[4 + j] = one.conjugate_by(&g).direct_sum(&flag_diag(Some(j)));
        }
        let mut pair = [perm[0], perm[1]];
        pair.sort_unstable();
        out.push((pair, Povm::new(effects)?));
    }
    Ok(out)
}

fn check_fsic2_dim(d: usize) -> Result<()> {
    if !(3..=14).contains(&d) {
        return Err(Error::OutOfRange(format!("flagged qubit SIC model requires 3 <= d <= 14, got {d}")));
    }
    Ok(())
}

/// `6·2^{d-2}` rank-one projective measurements whose uniform mixture is
/// `Φ_v(fsic2(d))`.
pub fn fsic2_model(d: usize) -> Result<SimulationModel> {
    check_fsic2_dim(d)?;
    let p = fsic2_params(d);
    let (alpha, beta) = fsic2_phases(&p)?;
    let flags = d - 2;
    let (sl, se, sk) = (p.lambda.sqrt(), p.epsilon.sqrt(), p.kappa.sqrt());
    let reps = sic2_pair_representatives()?;
    let weight = 1.0 / (reps.len() * (1usize << flags)) as f64;
    let mut entries = Vec::new();
    for (g, perm) in &reps {
        let lift = g.direct_sum(&Operator::identity(flags));
        for s in sign_patterns(flags) {
            let mut vectors = Vec::with_capacity(d);
            let mut outcomes = Vec::with_capacity(d);
            for (sign, outcome, theta) in [(1.0, perm[0], p.theta), (-1.0, perm[1], -p.theta)] {
                let mut amps = DVector::zeros(d);
                amps.rows_mut(0, 2).copy_from(&(theta_vector(theta) * c64(sl, 0.0)));
                for j in 0..flags {
                    amps[2 + j] = c64(sign * se * s[j], 0.0);
                }
                vectors.push(unit(amps)?);
                outcomes.push(outcome);
            }
            for m in 0..flags {
                let mut amps = DVector::zeros(d);
                amps[1] = c64((2.0 * p.epsilon).sqrt(), 0.0);
                for j in 0..flags {
                    amps[2 + j] = if j == m { phase(alpha) * (sk * s[j]) } else { phase(beta) * (se * s[j]) };
                }
                vectors.push(unit(amps)?);
                outcomes.push(4 + m);
            }
            let rotated: Vec<StateVector> =
                vectors.iter().map(|v| v.transformed(&lift)).collect::<Result<_>>()?;
            let measurement = ProjectiveMeasurement::from_basis(&rotated, &outcomes, d + 2)?;
            entries.push(SimulationEntry { weight, measurement });
        }
    }
    SimulationModel::new(entries)
}

/// Root of the flagged-Hesse consistency equation and the parameters it fixes.
#[derive(Clone, Debug, PartialEq)]
pub struct FlaggedHesseParams {
    pub d: usize,
    pub theta: f64,
    pub phi: f64,
    pub epsilon: f64,
    pub lambda: f64,
    pub kappa: f64,
    pub v: f64,
    /// `|f(θ, φ)|` of the consistency equation.
    pub residual: f64,
}

/// `f(θ,φ) = (d-3)(1 - s_θ²s_φ²)e^{i(8π/9+φ)} + s_θ² e^{i(2π/3+3φ)} + 2√2 c_θ s_θ`.
pub fn fsic3_residual(d: usize, theta: f64, phi: f64) -> C64 {
    fsic3_eval(d as f64, theta, phi).0
}

/// `v = 3 / (2d/(3 s_θ² s_φ² - 1) - (d-3))`.
pub fn fsic3_visibility(d: usize, theta: f64, phi: f64) -> f64 {
    let n = d as f64;
    let q = 3.0 * theta.sin().powi(2) * phi.sin().powi(2) - 1.0;
    3.0 / (2.0 * n / q - (n - 3.0))
}

/// Residual and its partial derivatives in `θ` and `φ`.
fn fsic3_eval(n: f64, theta: f64, phi: f64) -> (C64, C64, C64) {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    let e1 = phase(8.0 * PI / 9.0 + phi);
    let e3 = phase(2.0 * PI / 3.0 + 3.0 * phi);
    let i = c64(0.0, 1.0);
    let m = n - 3.0;
    let f = e1 * (m * (1.0 - st * st * sp * sp)) + e3 * (st * st) + 2.0 * 2f64.sqrt() * ct * st;
    let f_theta = e1 * (-2.0 * m * st * ct * sp * sp) + e3 * (2.0 * st * ct) + 2.0 * 2f64.sqrt() * (2.0 * theta).cos();
    let f_phi = e1 * (c64(-2.0 * m * st * st * sp * cp, 0.0) + i * (m * (1.0 - st * st * sp * sp)))
        + e3 * (i * 3.0 * st * st);
    (f, f_theta, f_phi)
}

fn newton(n: f64, mut theta: f64, mut phi: f64) -> Option<(f64, f64, f64)> {
    let mut r = fsic3_eval(n, theta, phi).0.norm();
    for _ in 0..100 {
        if r <= 1e-14 {
            break;
        }
        let (f, ft, fp) = fsic3_eval(n, theta, phi);
        let det = ft.re * fp.im - fp.re * ft.im;
        if det.abs() < 1e-300 {
            return None;
        }
        let dt = -(fp.im * f.re - fp.re * f.im) / det;
        let dp = -(-ft.im * f.re + ft.re * f.im) / det;
        let mut step = 1.0;
        loop {
            let (t1, p1) = (theta + step * dt, phi + step * dp);
            let r1 = fsic3_eval(n, t1, p1).0.norm();
            if r1 < r || step < 1e-6 {
                theta = t1;
                phi = p1;
                r = r1;
                break;
            }
            step *= 0.5;
        }
    }
    Some((theta, phi, r))
}

/// `cos θ|0> + sin θ (e^{iφ}|1> + e^{-iφ}|2>)/√2`.
fn theta_phi_vector(theta: f64, phi: f64) -> DVector<C64> {
    let s = theta.sin() * FRAC_1_SQRT_2;
    DVector::from_vec(vec![c64(theta.cos(), 0.0), phase(phi) * s, phase(-phi) * s])
}

/// `(|0> + e^{-8πi/9}|1> + e^{8πi/9}|2>)/√3`.
fn alpha_vector() -> StateVector {
    StateVector::new(vec![c64(1.0, 0.0), phase(-8.0 * PI / 9.0), phase(8.0 * PI / 9.0)]).expect("nonzero")
}

/// `|u₁>, h₆V|u₁>, h₉V²|u₁>` for the bases of outcomes 1, 6 and 9.
fn fsic3_block_vectors(theta: f64, phi: f64) -> Result<[StateVector; 3]> {
    let u1 = StateVector::from_dvector(theta_phi_vector(theta, phi))?;
    let v = v_gate();
    let u6 = u1.transformed(&(&displacement(3, 5) * &v))?;
    let u9 = u1.transformed(&(&displacement(3, 8) * &(&v * &v)))?;
    Ok([u1, u6, u9])
}

fn completeness_defect(p: &FlaggedHesseParams) -> Result<f64> {
    let mut acc = alpha_vector().projector().scale(3.0 * (p.d as f64 - 3.0) * p.epsilon);
    for u in fsic3_block_vectors(p.theta, p.phi)? {
        acc += &u.projector().scale(p.lambda);
    }
    Ok(acc.max_abs_diff(&Operator::identity(3)))
}

fn params_at(d: usize, theta: f64, phi: f64, residual: f64) -> FlaggedHesseParams {
    let n = d as f64;
    let v = fsic3_visibility(d, theta, phi);
    let epsilon = (1.0 - v) / n;
    FlaggedHesseParams {
        d,
        theta,
        phi,
        epsilon,
        lambda: 1.0 - (n - 3.0) * epsilon,
        kappa: 1.0 - (n - 1.0) * epsilon,
        v,
        residual,
    }
}

/// Every distinct root of the consistency equation with a visibility in `(0, 1)`,
/// sorted by decreasing `v`.
///
/// Damped Newton on the real and imaginary parts, started from a 64×64 grid
/// over `[0, π] × [0, 2π)`; roots agreeing modulo `2π` within `1e-7` are merged.
pub fn fsic3_roots(d: usize) -> Result<Vec<FlaggedHesseParams>> {
    if d < 4 {
        return Err(Error::OutOfRange(format!("flagged Hesse SIC needs d >= 4, got {d}")));
    }
    const GRID: usize = 64;
    let n = d as f64;
    let wrap = |x: f64| x.rem_euclid(2.0 * PI);
    let close = |a: f64, b: f64| {
        let diff = (wrap(a) - wrap(b)).abs();
        diff.min(2.0 * PI - diff) < 1e-7
    };
    let mut roots: Vec<FlaggedHesseParams> = Vec::new();
    for i in 0..GRID {
        for j in 0..GRID {
            let t0 = PI * i as f64 / (GRID - 1) as f64;
            let p0 = 2.0 * PI * j as f64 / GRID as f64;
            let Some((t, p, r)) = newton(n, t0, p0) else { continue };
            if r > 1e-12 {
                continue;
            }
            let q = 3.0 * t.sin().powi(2) * p.sin().powi(2) - 1.0;
            if q <= 0.0 {
                continue;
            }
            let cand = params_at(d, wrap(t), wrap(p), r);
            if !(cand.v > 0.0 && cand.v < 1.0) {
                continue;
            }
            if !roots.iter().any(|x| close(x.theta, cand.theta) && close(x.phi, cand.phi)) {
                roots.push(cand);
            }
        }
    }
    roots.sort_by(|a, b| b.v.total_cmp(&a.v).then(a.theta.total_cmp(&b.theta)).then(a.phi.total_cmp(&b.phi)));
    Ok(roots)
}

/// Maximum-visibility root whose intermediate measurement is complete.
pub fn fsic3_params(d: usize) -> Result<FlaggedHesseParams> {
    let roots = fsic3_roots(d)?;
    for r in &roots {
        if completeness_defect(r)? <= 1e-9 {
            return Ok(r.clone());
        }
    }
    Err(Error::Construction(format!("no admissible root of the consistency equation in d = {d}")))
}

/// Clifford element and induced permutation for each triple of the Hesse model.
fn fsic3_triple_representatives() -> Result<Vec<(Operator, Vec<usize>)>> {
    let vectors = hesse_vectors();
    let group = clifford_group();
    let mut by_key: Vec<([usize; 3], Operator, Vec<usize>)> = Vec::new();
    for c in group.elements() {
        let perm = ray_permutation(c, &vectors, RAY_TOL)
            .ok_or_else(|| Error::Construction("Clifford element does not permute the Hesse SIC".into()))?;
        let mut key = [perm[0], perm[5], perm[8]];
        key.sort_unstable();
        if !by_key.iter().any(|(k, _, _)| *k == key) {
            by_key.push((key, c.clone(), perm));
        }
    }
    let mut reps = Vec::with_capacity(72);
    for triple in hesse_triples()? {
        let (_, c, perm) = by_key
            .iter()
            .find(|(k, _, _)| *k == triple)
            .ok_or_else(|| Error::Construction(format!("triple {triple:?} is not a Clifford image of (1,6,9)")))?;
        reps.push((c.clone(), perm.clone()));
    }
    Ok(reps)
}

/// The 72 intermediate unit-trace POVMs `F^{(ijk)}` on `d + 6` outcomes.
pub fn fsic3_intermediate(d: usize) -> Result<Vec<([usize; 3], Povm)>> {
    let p = fsic3_params(d)?;
    let flags = d - 3;
    let block = fsic3_block_vectors(p.theta, p.phi)?;
    let alpha = alpha_vector();
    let flag_diag = |kappa_at: Option<usize>| -> Operator {
        let diag: Vec<f64> = (0..flags).map(|j| if Some(j) == kappa_at { p.kappa } else { p.epsilon }).collect();
        Operator::real_diagonal(&diag)
    };
    let mut out = Vec::new();
    for (c, perm) in fsic3_triple_representatives()? {
        let mut effects = vec![Operator::zeros(d); d + 6];
        for (u, a) in block.iter().zip([0, 5, 8]) {
            effects[perm[a]] = u.projector().conjugate_by(&c).scale(p.lambda).direct_sum(&flag_diag(None));
        }
        let a_proj = alpha.projector().conjugate_by(&c).scale(3.0 * p.epsilon);
        for m in 0..flags {
            effects[9 + m] = a_proj.direct_sum(&flag_diag(Some(m)));
        }
        let mut key = [perm[0], perm[5], perm[8]];
        key.sort_unstable();
        out.push((key, Povm::new(effects)?));
    }
    Ok(out)
}

/// `72·2^{d-3}` rank-one projective measurements whose uniform mixture is
/// `Φ_v(fsic3(d))`.
pub fn fsic3_model(d: usize) -> Result<SimulationModel> {
    if !(4..=9).contains(&d) {
        return Err(Error::OutOfRange(format!("flagged Hesse model requires 4 <= d <= 9, got {d}")));
    }
    let p = fsic3_params(d)?;
    let flags = d - 3;
    let n = d as f64;
    let (sl, se, sk) = (p.lambda.sqrt(), p.epsilon.sqrt(), p.kappa.sqrt());
    let (flag_alpha, flag_beta) = if flags == 1 {
        (0.0, 0.0)
    } else {
        let cos = -(n - 2.0) * p.epsilon / (2.0 * (p.epsilon * p.kappa).sqrt());
        if cos.abs() > 1.0 {
            return Err(Error::Construction(format!("flag phases have no solution in d = {d}")));
        }
        (cos.acos(), 0.0)
    };
    let k = phase(flag_alpha) * (p.epsilon * p.kappa).sqrt() + phase(flag_beta) * ((n - 4.0) * p.epsilon);
    let block = fsic3_block_vectors(p.theta, p.phi)?;
    let alpha = alpha_vector();
    let couplings: Vec<C64> = block
        .iter()
        .map(|u| -alpha.inner(u) * (3.0 * p.lambda * p.epsilon).sqrt() / k.conj())
        .collect();
    if let Some(bad) = couplings.iter().find(|z| (z.norm() - 1.0).abs() > 1e-9) {
        return Err(Error::Construction(format!("flag coupling has modulus {}", bad.norm())));
    }
    let reps = fsic3_triple_representatives()?;
    let weight = 1.0 / (reps.len() * (1usize << flags)) as f64;
    let mut entries = Vec::new();
    for (c, perm) in &reps {
        let lift = c.direct_sum(&Operator::identity(flags));
        for s in sign_patterns(flags) {
            let mut vectors = Vec::with_capacity(d);
            let mut outcomes = Vec::with_capacity(d);
            for ((u, coupling), a) in block.iter().zip(&couplings).zip([0, 5, 8]) {
                let mut amps = DVector::zeros(d);
                amps.rows_mut(0, 3).copy_from(&(u.amplitudes() * c64(sl, 0.0)));
                for j in 0..flags {
                    amps[3 + j] = coupling * (se * s[j]);
                }
                vectors.push(unit(amps)?);
                outcomes.push(perm[a]);
            }
            for m in 0..flags {
                let mut amps = DVector::zeros(d);
                amps.rows_mut(0, 3).copy_from(&(alpha.amplitudes() * c64((3.0 * p.epsilon).sqrt(), 0.0)));
                for j in 0..flags {
                    amps[3 + j] =
                        if j == m { phase(flag_alpha) * (sk * s[j]) } else { phase(flag_beta) * (se * s[j]) };
                }
                vectors.push(unit(amps)?);
                outcomes.push(9 + m);
            }
            let rotated: Vec<StateVector> =
                vectors.iter().map(|v| v.transformed(&lift)).collect::<Result<_>>()?;
            let measurement = ProjectiveMeasurement::from_basis(&rotated, &outcomes, d + 6)?;
            entries.push(SimulationEntry { weight, measurement });
        }
    }
    SimulationModel::new(entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::{fsic2, fsic3, verify_decomposition};

    #[test]
    fn fsic2_closed_forms_agree() {
        for d in 2..=14 {
            let p = fsic2_params(d);
            assert!(p.residual() < 1e-10, "d={d}");
            assert!((p.v - fsic2_visibility(d as f64)).abs() < 1e-12);
            assert!((p.lambda - 1.0 / (2.0 * p.theta.cos().powi(2))).abs() < 1e-12);
        }
        assert!((fsic2_params(2).v - (2.0f64 / 3.0).sqrt()).abs() < 1e-12);
        let limit = (3.0 - 3f64.sqrt()) / 2.0;
        let gaps: Vec<f64> = [1e3, 1e6, 1e10].iter().map(|&d| fsic2_visibility(d) - limit).collect();
        assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2] && gaps[2] > 0.0);
        assert!(gaps[0] < 0.02 && gaps[2] < 1e-5);
    }

    #[test]
    fn fsic2_intermediate_has_unit_traces() {
        let parts = fsic2_intermediate(4).unwrap();
        assert_eq!(parts.len(), 6);
        for (pair, povm) in &parts {
            assert!(povm.validate().is_valid(), "{pair:?}");
            for (a, e) in povm.effects().iter().enumerate() {
                let t = e.trace().re;
                let active = pair.contains(&a) || a >= 4;
                assert!((t - if active { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn fsic2_model_reproduces_noisy_povm() {
        for d in 3..=6 {
            let model = fsic2_model(d).unwrap();
            assert_eq!(model.len(), 6 << (d - 2));
            let target = fsic2(d).unwrap().depolarize(fsic2_params(d).v).unwrap();
            let report = verify_decomposition(&model, &target, 1e-9).unwrap();
            assert!(report.passed(), "d={d}: {report:?}");
        }
    }

    #[test]
    fn fsic2_out_of_range() {
        assert!(fsic2_model(15).is_err());
        assert!(fsic2_model(2).is_err());
    }

    #[test]
    fn fsic3_roots_match_reference_visibilities() {
        for (d, v) in [(4, 0.78233002), (5, 0.77339360), (6, 0.76576302)] {
            let p = fsic3_params(d).unwrap();
            assert!((p.v - v).abs() < 5e-9, "d={d}: {}", p.v);
            assert!(p.residual <= 1e-10);
            assert!(fsic3_residual(d, p.theta, p.phi).norm() <= 1e-10);
        }
    }

    #[test]
    fn clifford_average_of_alpha() {
        let alpha = alpha_vector();
        let mut acc = Operator::zeros(3);
        let group = clifford_group();
        for c in group.elements() {
            acc += &alpha.transformed(c).unwrap().projector();
        }
        let avg = acc.scale(1.0 / group.len() as f64);
        assert!(avg.max_abs_diff(&Operator::identity(3).scale(1.0 / 3.0)) < 1e-12);
    }

    #[test]
    fn fsic3_intermediate_is_complete() {
        let parts = fsic3_intermediate(4).unwrap();
        assert_eq!(parts.len(), 72);
        for (_, povm) in &parts {
            assert!(povm.validate().is_valid());
        }
    }

    #[test]
    fn fsic3_model_reproduces_noisy_povm() {
        for d in 4..=5 {
            let model = fsic3_model(d).unwrap();
            assert_eq!(model.len(), 72 << (d - 3));
            let target = fsic3(d).unwrap().depolarize(fsic3_params(d).unwrap().v).unwrap();
            let report = verify_decomposition(&model, &target, 1e-9).unwrap();
            assert!(report.passed(), "d={d}: {report:?}");
        }
    }
}
