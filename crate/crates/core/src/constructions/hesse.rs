use std::f64::consts::PI;

use super::{displacement, weyl_heisenberg};
use crate::error::{Error, Result};
use crate::operator::{c64, generate_group, phase, Operator, StateVector, UnitarySet};
use crate::povm::{ProjectiveMeasurement, SimulationEntry, SimulationModel};

const RAY_TOL: f64 = 1e-9;

/// `(1 + 4 cos(π/9)) / 6`.
pub fn hesse_visibility() -> f64 {
    (1.0 + 4.0 * (PI / 9.0).cos()) / 6.0
}

/// `V = exp(2πi/3 |0><0|)`.
pub(crate) fn v_gate() -> Operator {
    Operator::diagonal(&[phase(2.0 * PI / 3.0), c64(1.0, 0.0), c64(1.0, 0.0)])
}

/// `W = exp(2πi/3 |ν><ν|)` with `|ν> = (|0> + ω|1> + ω|2>)/√3`.
pub(crate) fn w_gate() -> Operator {
    let w = phase(2.0 * PI / 3.0);
    let nu = StateVector::new(vec![c64(1.0, 0.0), w, w]).expect("nonzero");
    Operator::projector_phase(&nu.projector(), 2.0 * PI / 3.0)
}

/// `|ξ> = (|0> + 2e^{-5πi/9}|1> + 2e^{5πi/9}|2>)/3`.
pub(crate) fn xi() -> StateVector {
    StateVector::new(vec![c64(1.0, 0.0), phase(-5.0 * PI / 9.0) * 2.0, phase(5.0 * PI / 9.0) * 2.0]).expect("nonzero")
}

/// `SL(2,3) = <V, W>`, 24 elements modulo phase.
pub fn sl23_group() -> UnitarySet {
    generate_group(&[v_gate(), w_gate()], 24).expect("SL(2,3) has 24 elements")
}

/// Projective Clifford group `<X, V, W>` in dimension 3, 216 elements.
pub fn clifford_group() -> UnitarySet {
    let (x, _) = weyl_heisenberg(3);
    generate_group(&[x, v_gate(), w_gate()], 216).expect("PC(3) has 216 elements")
}

/// `(1/72) Σ_{s ∈ SL(2,3)} s|ξ><ξ|s†`, the part of the simulated first effect
/// coming from the orbit of `|ξ>`.
pub fn noisy_fiducial_sum() -> Operator {
    let x = xi();
    let mut acc = Operator::zeros(3);
    for s in sl23_group().elements() {
        acc += &x.transformed(s).expect("unitary").projector();
    }
    acc.scale(1.0 / 72.0)
}

fn same_ray(a: &StateVector, b: &StateVector) -> bool {
    (a.inner(b).norm() - 1.0).abs() <= RAY_TOL
}

struct Grouping {
    bases: Vec<[usize; 3]>,
    rays: Vec<StateVector>,
    outcome: Vec<usize>,
}

fn group_orbit() -> Result<Grouping> {
    let x = xi();
    let mut rays: Vec<StateVector> = Vec::new();
    for c in clifford_group().elements() {
        let image = x.transformed(c)?;
        if !rays.iter().any(|r| same_ray(r, &image)) {
            rays.push(image);
        }
    }
    if rays.len() != 216 {
        return Err(Error::Construction(format!("orbit of xi has {} rays, expected 216", rays.len())));
    }
    // Ray h_a s|ξ> contributes to outcome a.
    let sl = sl23_group();
    let mut outcome = vec![usize::MAX; rays.len()];
    for a in 0..9 {
        let h = displacement(3, a);
        for s in sl.elements() {
            let image = x.transformed(&(&h * s))?;
            let idx = rays
                .iter()
                .position(|r| same_ray(r, &image))
                .ok_or_else(|| Error::Construction("Weyl-Heisenberg image left the Clifford orbit".into()))?;
            if outcome[idx] != usize::MAX && outcome[idx] != a {
                return Err(Error::Construction(format!("ray {idx} claimed by two outcomes")));
            }
            outcome[idx] = a;
        }
    }
    if outcome.iter().any(|&a| a == usize::MAX) {
        return Err(Error::Construction("orbit ray without an outcome".into()));
    }
    let orthogonal = |i: usize, j: usize| rays[i].inner(&rays[j]).norm() <= RAY_TOL;
    let mut used = vec![false; rays.len()];
    let mut bases = Vec::with_capacity(72);
    for i in 0..rays.len() {
        if used[i] {
            continue;
        }
        let j = (i + 1..rays.len()).find(|&j| !used[j] && orthogonal(i, j));
        let k = j.and_then(|j| (j + 1..rays.len()).find(|&k| !used[k] && orthogonal(i, k) && orthogonal(j, k)));
        match (j, k) {
            (Some(j), Some(k)) => {
                used[i] = true;
                used[j] = true;
                used[k] = true;
                bases.push([i, j, k]);
            }
            _ => return Err(Error::Construction(format!("ray {i} has no orthogonal completion"))),
        }
    }
    Ok(Grouping { bases, rays, outcome })
}

/// Equiprobable mixture of 72 orthonormal bases reproducing
/// `Φ_v(E_Hesse)` at `v = (1 + 4cos(π/9))/6`.
pub fn hesse_simulation_model() -> Result<(SimulationModel, f64)> {
    let g = group_orbit()?;
    let mut entries = Vec::with_capacity(g.bases.len());
    for basis in &g.bases {
        let vectors: Vec<StateVector> = basis.iter().map(|&i| g.rays[i].clone()).collect();
        let outcomes: Vec<usize> = basis.iter().map(|&i| g.outcome[i]).collect();
        let measurement = ProjectiveMeasurement::from_basis(&vectors, &outcomes, 9)?;
        entries.push(SimulationEntry { weight: 1.0 / g.bases.len() as f64, measurement });
    }
    Ok((SimulationModel::new(entries)?, hesse_visibility()))
}

/// Outcome triples `(i, j, k)`, `i < j < k`, of the 72 bases in the Hesse model.
pub fn hesse_triples() -> Result<Vec<[usize; 3]>> {
    let g = group_orbit()?;
    Ok(g.bases
        .iter()
        .map(|b| {
            let mut t = [g.outcome[b[0]], g.outcome[b[1]], g.outcome[b[2]]];
            t.sort_unstable();
            t
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::{hesse_sic, qutrit_fiducial, verify_decomposition};

    #[test]
    fn group_orders() {
        assert_eq!(sl23_group().len(), 24);
        assert_eq!(clifford_group().len(), 216);
        let (x, z) = weyl_heisenberg(3);
        assert_eq!(generate_group(&[x, z], 100).unwrap().len(), 9);
    }

    #[test]
    fn sl23_stabilizes_hesse_fiducial() {
        let phi = qutrit_fiducial(0.0);
        for s in sl23_group().elements() {
            assert!(same_ray(&phi, &phi.transformed(s).unwrap()));
        }
    }

    #[test]
    fn noisy_fiducial_identity() {
        let v = hesse_visibility();
        let phi = qutrit_fiducial(0.0).projector();
        let expected = &phi.scale(v / 3.0) + &Operator::identity(3).scale((1.0 - v) / 9.0);
        assert!(noisy_fiducial_sum().max_abs_diff(&expected) < 1e-12);
    }

    #[test]
    fn model_reproduces_noisy_hesse() {
        let (model, v) = hesse_simulation_model().unwrap();
        assert_eq!(model.len(), 72);
        assert!(model.entries().iter().all(|e| e.weight == 1.0 / 72.0));
        let target = hesse_sic().depolarize(v).unwrap();
        let report = verify_decomposition(&model, &target, 1e-10).unwrap();
        assert!(report.passed(), "{report:?}");
    }

    #[test]
    fn xi_sits_in_basis_one_six_nine() {
        let triples = hesse_triples().unwrap();
        assert_eq!(triples.len(), 72);
        assert_eq!(triples[0], [0, 5, 8]);
        let unique: std::collections::HashSet<_> = triples.iter().collect();
        assert_eq!(unique.len(), 72);
    }
}
