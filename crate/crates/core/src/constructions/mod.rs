//! Named POVMs (SICs and their flagged extensions) and analytic projective
//! simulation models for their noisy versions.

mod flagged;
mod hesse;

pub use flagged::{
    fsic2_intermediate, fsic2_model, fsic2_params, fsic2_visibility, fsic3_intermediate, fsic3_model, fsic3_params,
    fsic3_residual, fsic3_roots, fsic3_visibility,
    FlaggedHesseParams, FlaggedSic2Params,
};
pub use hesse::{
    clifford_group, hesse_simulation_model, hesse_triples, hesse_visibility, noisy_fiducial_sum, sl23_group,
};

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{Error, Result};
use crate::operator::{c64, phase, Operator, StateVector, C64};
use crate::povm::{Povm, SimulationModel};
use crate::tolerance::Tolerances;

/// Shift and clock matrices `X = Σ|j⊕1><j|`, `Z = Σ ω^j |j><j|`, `ω = e^{2πi/d}`.
pub fn weyl_heisenberg(d: usize) -> (Operator, Operator) {
    assert!(d >= 2, "Weyl-Heisenberg operators need d >= 2");
    let mut x = Operator::zeros(d);
    for j in 0..d {
        x.set((j + 1) % d, j, c64(1.0, 0.0));
    }
    let z = Operator::diagonal(&(0..d).map(|j| phase(2.0 * PI * j as f64 / d as f64)).collect::<Vec<_>>());
    (x, z)
}

/// `X^{a₀} Z^{a₁}` with `a = a₀ d + a₁`.
pub fn displacement(d: usize, a: usize) -> Operator {
    let (x, z) = weyl_heisenberg(d);
    &x.pow((a / d) as u32) * &z.pow((a % d) as u32)
}

/// A fiducial together with the parameters it was generated from.
#[derive(Clone, Debug)]
pub struct SicFamilyPoint {
    pub d: usize,
    pub fiducial: StateVector,
    pub parameters: Vec<f64>,
}

impl SicFamilyPoint {
    pub fn povm(&self) -> Result<Povm> {
        sic_from_fiducial(&self.fiducial)
    }
}

/// The `d²` vectors `X^{a₀}Z^{a₁}|φ>`.
pub fn sic_vectors(fiducial: &StateVector) -> Vec<StateVector> {
    let d = fiducial.dim();
    (0..d * d)
        .map(|a| fiducial.transformed(&displacement(d, a)).expect("unitary image of a unit vector"))
        .collect()
}

/// Largest deviation of `|<ψ_a|ψ_b>|²` from `1/(d+1)` over `a ≠ b`.
pub fn sic_overlap_defect(vectors: &[StateVector]) -> f64 {
    let d = vectors.first().map(|v| v.dim()).unwrap_or(1);
    let target = 1.0 / (d as f64 + 1.0);
    let mut worst = 0.0f64;
    for (a, u) in vectors.iter().enumerate() {
        for w in &vectors[a + 1..] {
            worst = worst.max((u.inner(w).norm_sqr() - target).abs());
        }
    }
    worst
}

/// Weyl-Heisenberg covariant SIC with effects `|ψ_a><ψ_a|/d`.
pub fn sic_from_fiducial(fiducial: &StateVector) -> Result<Povm> {
    sic_from_fiducial_with(fiducial, &Tolerances::default())
}

pub fn sic_from_fiducial_with(fiducial: &StateVector, tol: &Tolerances) -> Result<Povm> {
    let d = fiducial.dim();
    if d < 2 {
        return Err(Error::OutOfRange("SIC fiducials need d >= 2".into()));
    }
    let vectors = sic_vectors(fiducial);
    let defect = sic_overlap_defect(&vectors);
    if defect > tol.sic_overlap {
        return Err(Error::NotSic { deviation: defect });
    }
    Povm::new(vectors.iter().map(|v| v.projector().scale(1.0 / d as f64)).collect())
}

/// `√((3+√3)/6)|0> + e^{-iπ/4}√((3-√3)/6)|1>`.
pub fn qubit_fiducial() -> StateVector {
    let s3 = 3f64.sqrt();
    StateVector::new(vec![c64(((3.0 + s3) / 6.0).sqrt(), 0.0), phase(-PI / 4.0) * ((3.0 - s3) / 6.0).sqrt()])
        .expect("nonzero")
}

/// `(|1> - e^{iθ}|2>)/√2`.
pub fn qutrit_fiducial(theta: f64) -> StateVector {
    StateVector::new(vec![c64(0.0, 0.0), c64(FRAC_1_SQRT_2, 0.0), -phase(theta) * FRAC_1_SQRT_2]).expect("nonzero")
}

/// The ququart fiducial
/// `√2|0> + z(1-z)(φ^{3/2}+z̄)|1> + (2-√2)i|2> + z(1-z)(φ^{3/2}-z̄)|3>`, normalized,
/// with `z = e^{iπ/4}` and `φ` the golden ratio.
pub fn ququart_fiducial() -> StateVector {
    let z = phase(PI / 4.0);
    let golden = (1.0 + 5f64.sqrt()) / 2.0;
    let g32 = c64(golden.powf(1.5), 0.0);
    let pref = z * (c64(1.0, 0.0) - z);
    StateVector::new(vec![
        c64(2f64.sqrt(), 0.0),
        pref * (g32 + z.conj()),
        c64(0.0, 2.0 - 2f64.sqrt()),
        pref * (g32 - z.conj()),
    ])
    .expect("nonzero")
}

pub fn sic2() -> Povm {
    sic_from_fiducial(&qubit_fiducial()).expect("qubit fiducial is a SIC fiducial").labeled("sic2")
}

/// Qutrit SIC from `|φ^{(θ)}>`. The canonical range is `θ ∈ [0, π/9]`;
/// other angles still give SICs.
pub fn qutrit_sic(theta: f64) -> Result<Povm> {
    if !(-1e-12..=PI / 9.0 + 1e-12).contains(&theta) {
        log::warn!("theta = {theta} lies outside the fundamental domain [0, pi/9]");
    }
    Ok(sic_from_fiducial(&qutrit_fiducial(theta))?.labeled(format!("sic3:{theta}")))
}

/// Nine vectors of the Hesse SIC, the columns of
/// ```text
///  0   0   0  -1  -ω² -ω   1   ω   ω²
///  1   ω   ω²  0   0   0  -1  -ω² -ω
/// -1  -ω² -ω   1   ω   ω²  0   0   0
/// ```
/// each divided by √2.
pub fn hesse_vectors() -> Vec<StateVector> {
    let w = |k: i32| phase(2.0 * PI * k as f64 / 3.0);
    let zero = c64(0.0, 0.0);
    let rows: [[C64; 9]; 3] = [
        [zero, zero, zero, -w(0), -w(2), -w(1), w(0), w(1), w(2)],
        [w(0), w(1), w(2), zero, zero, zero, -w(0), -w(2), -w(1)],
        [-w(0), -w(2), -w(1), w(0), w(1), w(2), zero, zero, zero],
    ];
    (0..9).map(|col| StateVector::new(rows.iter().map(|r| r[col]).collect()).expect("nonzero column")).collect()
}

pub fn hesse_sic() -> Povm {
    Povm::new(hesse_vectors().iter().map(|v| v.projector().scale(1.0 / 3.0)).collect())
        .expect("nine 3x3 effects")
        .labeled("hesse")
}

pub fn norrell_sic() -> Povm {
    qutrit_sic(PI / 9.0).expect("valid fiducial").labeled("norrell")
}

pub fn sic4() -> Povm {
    sic_from_fiducial(&ququart_fiducial()).expect("ququart fiducial is a SIC fiducial").labeled("sic4")
}

/// Qubit SIC embedded in `d` dimensions with `d - 2` flag outcomes.
pub fn fsic2(d: usize) -> Result<Povm> {
    if d < 3 {
        return Err(Error::OutOfRange(format!("fsic2 needs d >= 3, got {d}")));
    }
    Ok(sic2().flag(d - 2)?.labeled(format!("fsic2:{d}")))
}

/// Hesse SIC embedded in `d` dimensions with `d - 3` flag outcomes.
pub fn fsic3(d: usize) -> Result<Povm> {
    if d < 4 {
        return Err(Error::OutOfRange(format!("fsic3 needs d >= 4, got {d}")));
    }
    Ok(hesse_sic().flag(d - 3)?.labeled(format!("fsic3:{d}")))
}

/// Resolves `sic2`, `sic3:θ`, `hesse`, `norrell`, `sic4`, `fsic2:d`, `fsic3:d`.
pub fn named_povm(name: &str) -> Result<Povm> {
    let (head, arg) = match name.split_once(':') {
        Some((h, a)) => (h, Some(a)),
        None => (name, None),
    };
    let parse_dim = |a: Option<&str>| -> Result<usize> {
        a.ok_or_else(|| Error::Construction(format!("{head} needs a dimension, e.g. {head}:4")))?
            .parse()
            .map_err(|_| Error::Construction(format!("invalid dimension in {name}")))
    };
    match (head, arg) {
        ("sic2", None) => Ok(sic2()),
        ("hesse", None) => Ok(hesse_sic()),
        ("norrell", None) => Ok(norrell_sic()),
        ("sic4", None) => Ok(sic4()),
        ("sic3", a) => {
            let theta: f64 = a
                .unwrap_or("0")
                .parse()
                .map_err(|_| Error::Construction(format!("invalid angle in {name}")))?;
            qutrit_sic(theta)
        }
        ("fsic2", a) => fsic2(parse_dim(a)?),
        ("fsic3", a) => fsic3(parse_dim(a)?),
        _ => Err(Error::Construction(format!("unknown POVM name '{name}'"))),
    }
}

/// Permutation `π` with `u|v_a> ∝ |v_{π(a)}>`, if `u` permutes the rays.
pub fn ray_permutation(u: &Operator, vectors: &[StateVector], tol: f64) -> Option<Vec<usize>> {
    vectors
        .iter()
        .map(|v| {
            let image = v.transformed(u).ok()?;
            vectors.iter().position(|w| (w.inner(&image).norm() - 1.0).abs() <= tol)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecompositionReport {
    /// Largest elementwise deviation between the simulated and target effects.
    pub max_deviation: f64,
    pub projectivity_residuals: Vec<f64>,
    pub tolerance: f64,
}

impl DecompositionReport {
    pub fn passed(&self) -> bool {
        self.max_deviation <= self.tolerance && self.projectivity_residuals.iter().all(|&r| r <= self.tolerance)
    }

    pub fn max_projectivity_residual(&self) -> f64 {
        self.projectivity_residuals.iter().copied().fold(0.0, f64::max)
    }
}

pub fn verify_decomposition(model: &SimulationModel, target: &Povm, tol: f64) -> Result<DecompositionReport> {
    let simulated = model.apply();
    let max_deviation = simulated.max_deviation(target)?;
    let projectivity_residuals = model.entries().iter().map(|e| e.measurement.povm().projectivity_residual()).collect();
    Ok(DecompositionReport { max_deviation, projectivity_residuals, tolerance: tol })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::povm::{ProjectiveMeasurement, SimulationEntry};

    #[test]
    fn weyl_heisenberg_basics() {
        let (x, z) = weyl_heisenberg(2);
        let sx = Operator::from_rows(2, &[c64(0., 0.), c64(1., 0.), c64(1., 0.), c64(0., 0.)]).unwrap();
        assert!(x.max_abs_diff(&sx) < 1e-15);
        assert!(z.max_abs_diff(&Operator::real_diagonal(&[1.0, -1.0])) < 1e-15);
        let (_, z3) = weyl_heisenberg(3);
        let w = phase(2.0 * PI / 3.0);
        assert!((z3.get(1, 1) - w).norm() < 1e-15 && (z3.get(2, 2) - w * w).norm() < 1e-15);
        for d in 2..7 {
            let (x, z) = weyl_heisenberg(d);
            assert!(x.pow(d as u32).max_abs_diff(&Operator::identity(d)) < 1e-12);
            assert!(z.pow(d as u32).max_abs_diff(&Operator::identity(d)) < 1e-12);
        }
    }

    #[test]
    fn named_sics_are_sics() {
        for p in [sic2(), hesse_sic(), norrell_sic(), sic4(), qutrit_sic(PI / 18.0).unwrap()] {
            assert!(p.validate().is_valid(), "{:?}", p.label());
            let d = p.dim() as f64;
            for a in 0..p.outcomes() {
                for b in 0..a {
                    let overlap = crate::operator::trace_product(p.effect(a), p.effect(b)) * d * d;
                    assert!((overlap - 1.0 / (d + 1.0)).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn non_sic_fiducial_rejected() {
        let f = StateVector::basis(3, 0);
        assert!(matches!(sic_from_fiducial(&f), Err(Error::NotSic { .. })));
    }

    #[test]
    fn hesse_columns_are_the_theta_zero_orbit() {
        let a = hesse_sic();
        let b = qutrit_sic(0.0).unwrap();
        assert!(a.max_deviation(&b).unwrap() < 1e-12);
    }

    #[test]
    fn named_povm_parsing() {
        assert_eq!(named_povm("fsic2:4").unwrap().outcomes(), 6);
        assert_eq!(named_povm("fsic3:5").unwrap().outcomes(), 11);
        assert_eq!(named_povm("sic3:0.1").unwrap().dim(), 3);
        assert!(named_povm("fsic3").is_err());
        assert!(named_povm("bogus").is_err());
    }

    #[test]
    fn decomposition_of_a_basis_is_exact() {
        let m = ProjectiveMeasurement::from_basis(&[StateVector::basis(2, 0), StateVector::basis(2, 1)], &[0, 1], 2)
            .unwrap();
        let target = m.povm().clone();
        let model = SimulationModel::new(vec![SimulationEntry { weight: 1.0, measurement: m }]).unwrap();
        let report = verify_decomposition(&model, &target, 1e-12).unwrap();
        assert_eq!(report.max_deviation, 0.0);
        assert!(report.passed());
    }
}
