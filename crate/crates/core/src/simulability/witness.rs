use rayon::prelude::*;
use serde::Serialize;

use super::accept;
use super::program::{add_rank_vector_rows, rank_vectors};
use crate::error::{Error, Result};
use crate::operator::{eigh_sorted, Operator, StateVector};
use crate::povm::{Povm, RankVector};
use crate::sdp::{identity_coords, solve, ConicProblem, RowKind, Sense, SolverOptions};

/// Unit vectors `|ψ_a⟩` of a rank-one POVM `Ẽ_a ∝ |ψ_a⟩⟨ψ_a|`.
fn target_states(target: &Povm) -> Result<Vec<StateVector>> {
    target
        .effects()
        .iter()
        .enumerate()
        .map(|(a, e)| {
            let (vals, vecs) = eigh_sorted(e.matrix());
            let top = *vals.last().unwrap();
            let second = if vals.len() > 1 { vals[vals.len() - 2] } else { 0.0 };
            if top <= 1e-9 || second.abs() > 1e-9 * top.max(1.0) {
                return Err(Error::NotRankOne(format!("effect {a} has spectrum {vals:?}")));
            }
            StateVector::from_dvector(vecs.column(vals.len() - 1).into_owned())
        })
        .collect()
}

/// `(1/d) Σ_a ⟨ψ_a|E_a|ψ_a⟩`.
pub fn witness_value(e: &Povm, target: &Povm) -> Result<f64> {
    if e.dim() != target.dim() {
        return Err(Error::DimensionMismatch { expected: target.dim(), found: e.dim() });
    }
    if e.outcomes() != target.outcomes() {
        return Err(Error::DimensionMismatch { expected: target.outcomes(), found: e.outcomes() });
    }
    let states = target_states(target)?;
    let d = e.dim() as f64;
    Ok(states
        .iter()
        .zip(e.effects())
        .map(|(psi, ea)| {
            let amps = psi.amplitudes();
            (amps.adjoint() * ea.matrix() * amps)[(0, 0)].re
        })
        .sum::<f64>()
        / d)
}

#[derive(Clone, Debug, Serialize)]
pub struct PackageBound {
    pub index: usize,
    pub first: RankVector,
    pub len: usize,
    /// `None` when the package failed to solve.
    pub beta: Option<f64>,
    pub error: Option<String>,
}

#[derive(Clone, Debug)]
pub struct WitnessAnsatzResult {
    pub target: Povm,
    pub beta: f64,
    pub v_beta: f64,
    pub per_package: Vec<PackageBound>,
}

impl WitnessAnsatzResult {
    pub fn failed_packages(&self) -> usize {
        self.per_package.iter().filter(|p| p.beta.is_none()).count()
    }
}

fn package_bound(projectors: &[Operator], d: usize, ranks: &[RankVector], opts: &SolverOptions) -> Result<f64> {
    let mut pb = ConicProblem::new(Sense::Maximize);
    let id = identity_coords(d);
    let mut all = Vec::new();
    for r in ranks {
        let vars: Vec<_> = r.support().into_iter().map(|a| (a, pb.add_psd(d))).collect();
        add_rank_vector_rows(&mut pb, d, r, &vars);
        for &(a, f) in &vars {
            pb.set_objective_hermitian(f, &projectors[a].scale(1.0 / d as f64));
            all.push(f);
        }
    }
    let mut norm = pb.row(RowKind::Linking);
    for &f in &all {
        norm = norm.coords(f, &id);
    }
    norm.rhs(d as f64).add();
    let sol = solve(&pb, opts);
    accept(&sol)?;
    Ok(sol.objective)
}

/// Largest witness value `β` over the criterion, evaluated package by package.
pub fn witness_bound(target: &Povm, package_size: usize) -> Result<WitnessAnsatzResult> {
    witness_bound_with(target, package_size, &SolverOptions::default())
}

pub fn witness_bound_with(target: &Povm, package_size: usize, opts: &SolverOptions) -> Result<WitnessAnsatzResult> {
    target.ensure_valid(&Default::default())?;
    if package_size == 0 {
        return Err(Error::OutOfRange("package size must be positive".into()));
    }
    let states = target_states(target)?;
    let projectors: Vec<Operator> = states.iter().map(|s| s.projector()).collect();
    let d = target.dim();
    let n = target.outcomes();
    let all: Vec<usize> = (0..n).collect();
    let ranks = rank_vectors(n, d, &all, None)?;
    let per_package: Vec<PackageBound> = ranks
        .par_chunks(package_size)
        .enumerate()
        .map(|(index, chunk)| {
            let (beta, error) = match package_bound(&projectors, d, chunk, opts) {
                Ok(b) => (Some(b), None),
                Err(e) => (None, Some(e.to_string())),
            };
            PackageBound { index, first: chunk[0].clone(), len: chunk.len(), beta, error }
        })
        .collect();
    let beta = per_package.iter().filter_map(|p| p.beta).fold(f64::NEG_INFINITY, f64::max);
    if !beta.is_finite() {
        return Err(Error::Solver("every package failed".into()));
    }
    let df = d as f64;
    Ok(WitnessAnsatzResult { target: target.clone(), beta, v_beta: (df * beta - 1.0) / (df - 1.0), per_package })
}
