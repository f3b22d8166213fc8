//! Projective simulability programs: feasibility, visibility thresholds,
//! dual witnesses, witness-ansatz bounds and model extraction.

mod extract;
mod program;
mod witness;

use serde::Serialize;

pub use extract::extract_model;
pub use witness::{witness_bound, witness_bound_with, witness_value, PackageBound, WitnessAnsatzResult};

use crate::error::{Error, Result};
use crate::operator::{trace_product, Operator};
use crate::povm::{NoiseModel, Povm, RankVector, SimulationModel};
use crate::sdp::{smat, solve, ConicSolution, SolverOptions, Status};
use program::{build, Mode, Program};

/// Effects this close to multiples of the identity are treated as trivial.
const TRIVIAL_TOL: f64 = 1e-12;

/// Accepted residuals when the solver stops without certifying optimality.
const NEAR_OPTIMAL: f64 = 1e-6;

#[derive(Clone, Debug, Serialize)]
pub struct SolveStats {
    pub status: Status,
    pub iterations: usize,
    pub wall_ms: f64,
    pub objective: f64,
    pub dual_objective: f64,
    pub gap: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub blocks: usize,
    pub rows: usize,
}

impl SolveStats {
    fn from_solution(sol: &ConicSolution) -> Self {
        Self {
            status: sol.status,
            iterations: sol.iterations,
            wall_ms: sol.wall_time.as_secs_f64() * 1e3,
            objective: sol.objective,
            dual_objective: sol.dual_objective,
            gap: sol.gap,
            primal_residual: sol.primal_residual,
            dual_residual: sol.dual_residual,
            blocks: sol.diagnostics.blocks,
            rows: sol.diagnostics.rows,
        }
    }

    fn trivial() -> Self {
        Self {
            status: Status::Optimal,
            iterations: 0,
            wall_ms: 0.0,
            objective: 1.0,
            dual_objective: 1.0,
            gap: 0.0,
            primal_residual: 0.0,
            dual_residual: 0.0,
            blocks: 0,
            rows: 0,
        }
    }
}

/// The operators `F_{a|r}` of one rank vector in an optimal solution.
#[derive(Clone, Debug)]
pub struct RankBlock {
    pub ranks: RankVector,
    /// `q_r = (1/d) Σ_a tr F_{a|r}`.
    pub weight: f64,
    /// One operator per outcome; zero where `r_a = 0`.
    pub effects: Vec<Operator>,
}

#[derive(Clone, Debug)]
pub struct VisibilityResult {
    pub target: Povm,
    pub v: f64,
    pub noise: NoiseModel,
    /// The value is the threshold itself rather than an upper bound.
    pub exact: bool,
    pub blocks: Option<Vec<RankBlock>>,
    pub extracted_model: Option<SimulationModel>,
    pub worst_noise: Option<Povm>,
    pub certificate: Option<WitnessCertificate>,
    pub stats: SolveStats,
}

/// Dual solution of a visibility program: `W(E) = Σ_a tr(Γ_a E_a)` is
/// nonnegative on every POVM satisfying the criterion.
#[derive(Clone, Debug)]
pub struct WitnessCertificate {
    pub noise: NoiseModel,
    pub gammas: Vec<Operator>,
    /// Multiplier of `Σ_a N_a = (1 - v)I` in the worst-case program.
    pub aux: Option<Operator>,
    /// `1 + Σ_a tr(Γ_a E_a)`.
    pub predicted_threshold: f64,
    pub gap: f64,
    /// Outcomes that entered the program; the others carry `Γ_a = 0`.
    pub active: Vec<bool>,
}

impl WitnessCertificate {
    pub fn witness(&self, e: &Povm) -> Result<f64> {
        if e.outcomes() != self.gammas.len() {
            return Err(Error::DimensionMismatch { expected: self.gammas.len(), found: e.outcomes() });
        }
        if e.dim() != self.gammas[0].dim() {
            return Err(Error::DimensionMismatch { expected: self.gammas[0].dim(), found: e.dim() });
        }
        Ok(self.gammas.iter().zip(e.effects()).map(|(g, ea)| trace_product(g, ea)).sum())
    }

    /// `1 + Σ tr(Γ_a E_a) - (1/d) Σ tr(E_a) tr(Γ_a)`, zero for a depolarizing optimum below 1.
    pub fn identity_defect(&self, e: &Povm) -> Result<f64> {
        let d = e.dim() as f64;
        let w = self.witness(e)?;
        let mixed: f64 = self.gammas.iter().zip(e.effects()).map(|(g, ea)| ea.trace().re * g.trace().re).sum::<f64>() / d;
        Ok(1.0 + w - mixed)
    }
}

#[derive(Clone, Debug, Default)]
pub struct VisibilityOptions {
    pub solver: SolverOptions,
    /// Restrict the program to these rank vectors.
    pub ranks: Option<Vec<RankVector>>,
    pub keep_blocks: bool,
    /// Try to read off a projective model from the optimal blocks.
    pub extract: bool,
}

impl VisibilityOptions {
    pub fn extracting() -> Self {
        Self { extract: true, keep_blocks: true, ..Self::default() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Feasibility {
    /// The criterion holds and is sufficient here (`d ≤ 3`).
    Simulable,
    /// The criterion holds; for `d ≥ 4` this alone does not prove simulability.
    CriterionSatisfied,
    /// The criterion fails, so no projective simulation exists.
    NotSimulable,
}

#[derive(Clone, Debug)]
pub struct FeasibilityReport {
    pub outcome: Feasibility,
    pub stats: SolveStats,
}

fn accept(sol: &ConicSolution) -> Result<()> {
    match sol.status {
        Status::Optimal => Ok(()),
        Status::IterLimit if sol.primal_residual <= NEAR_OPTIMAL && sol.dual_residual <= NEAR_OPTIMAL && sol.gap <= NEAR_OPTIMAL => {
            log::warn!("accepting near-optimal solution: {:?}", sol.diagnostics.message);
            Ok(())
        }
        other => Err(Error::Solver(format!(
            "{other:?} after {} iterations (gap {:.2e}, residuals {:.2e}/{:.2e}){}",
            sol.iterations,
            sol.gap,
            sol.primal_residual,
            sol.dual_residual,
            sol.diagnostics.message.as_deref().map(|m| format!(": {m}")).unwrap_or_default()
        ))),
    }
}

fn validated(p: &Povm) -> Result<()> {
    p.ensure_valid(&Default::default())
}

/// Decides the rank-vector criterion for `p` itself.
pub fn feasibility(p: &Povm, ranks: Option<&[RankVector]>) -> Result<FeasibilityReport> {
    feasibility_with(p, ranks, &SolverOptions::default())
}

pub fn feasibility_with(p: &Povm, ranks: Option<&[RankVector]>, opts: &SolverOptions) -> Result<FeasibilityReport> {
    validated(p)?;
    if ranks.is_none() && p.is_trivial(TRIVIAL_TOL) {
        return Ok(FeasibilityReport { outcome: Feasibility::Simulable, stats: SolveStats::trivial() });
    }
    let prog = build(p, Mode::Feasibility, ranks)?;
    let sol = solve(&prog.problem, opts);
    let stats = SolveStats::from_solution(&sol);
    let outcome = match sol.status {
        Status::PrimalInfeasible => Feasibility::NotSimulable,
        _ => {
            accept(&sol)?;
            if p.dim() <= 3 {
                Feasibility::Simulable
            } else {
                Feasibility::CriterionSatisfied
            }
        }
    };
    Ok(FeasibilityReport { outcome, stats })
}

pub fn visibility(p: &Povm, noise: NoiseModel) -> Result<VisibilityResult> {
    visibility_with(p, noise, &VisibilityOptions { extract: p.dim() > 3, ..Default::default() })
}

pub fn visibility_with(p: &Povm, noise: NoiseModel, opts: &VisibilityOptions) -> Result<VisibilityResult> {
    validated(p)?;
    if opts.ranks.is_none() && p.is_trivial(TRIVIAL_TOL) {
        return Ok(VisibilityResult {
            target: p.clone(),
            v: 1.0,
            noise,
            exact: true,
            blocks: None,
            extracted_model: None,
            worst_noise: None,
            certificate: None,
            stats: SolveStats::trivial(),
        });
    }
    let mode = match noise {
        NoiseModel::Depolarizing => Mode::Depolarizing,
        NoiseModel::WorstCase => Mode::WorstCase,
    };
    let prog = build(p, mode, opts.ranks.as_deref())?;
    let sol = solve(&prog.problem, &opts.solver);
    accept(&sol)?;
    let v = sol.scalar(prog.v.unwrap()).clamp(0.0, 1.0);
    let certificate = Some(certificate_from(&prog, &sol, p, noise));
    let worst_noise = if noise == NoiseModel::WorstCase && v < 1.0 - 1e-9 {
        let effects: Vec<Operator> = (0..p.outcomes())
            .map(|a| match prog.noise.iter().find(|(b, _)| *b == a) {
                Some((_, nv)) => sol.hermitian(*nv).scale(1.0 / (1.0 - v)),
                None => Operator::zeros(p.dim()),
            })
            .collect();
        Some(Povm::from_approximate(&effects)?)
    } else {
        None
    };
    let blocks = if opts.keep_blocks || opts.extract { Some(read_blocks(&prog, &sol)) } else { None };
    let mut result = VisibilityResult {
        target: p.clone(),
        v,
        noise,
        exact: p.dim() <= 3,
        blocks,
        extracted_model: None,
        worst_noise,
        certificate,
        stats: SolveStats::from_solution(&sol),
    };
    if opts.extract {
        if let Some((model, v_model)) = extract::extract(&result) {
            result.extracted_model = Some(model);
            result.v = v_model;
            result.exact = true;
        }
    }
    if !opts.keep_blocks {
        result.blocks = None;
    }
    Ok(result)
}

fn read_blocks(prog: &Program, sol: &ConicSolution) -> Vec<RankBlock> {
    let d = prog.dim;
    prog.blocks
        .iter()
        .map(|b| {
            let mut effects = vec![Operator::zeros(d); prog.outcomes];
            for &(a, f) in &b.vars {
                effects[a] = sol.hermitian(f);
            }
            let weight = effects.iter().map(|e| e.trace().re).sum::<f64>() / d as f64;
            RankBlock { ranks: b.ranks.clone(), weight, effects }
        })
        .collect()
}

fn gather(rows: &[(crate::sdp::RowId, Vec<f64>)], sol: &ConicSolution, d: usize) -> Operator {
    let mut coords = vec![0.0; d * d];
    for (row, w) in rows {
        let u = sol.dual(*row);
        coords.iter_mut().zip(w).for_each(|(c, wi)| *c += u * wi);
    }
    smat(&coords, d)
}

fn certificate_from(prog: &Program, sol: &ConicSolution, p: &Povm, noise: NoiseModel) -> WitnessCertificate {
    let d = prog.dim;
    let gammas: Vec<Operator> = prog.coupling.iter().map(|rows| gather(rows, sol, d)).collect();
    let active = prog.coupling.iter().map(|rows| !rows.is_empty()).collect();
    let aux = if prog.noise_rows.is_empty() { None } else { Some(gather(&prog.noise_rows, sol, d)) };
    let predicted_threshold = 1.0 + gammas.iter().zip(p.effects()).map(|(g, e)| trace_product(g, e)).sum::<f64>();
    WitnessCertificate { noise, gammas, aux, predicted_threshold, gap: (sol.objective - sol.dual_objective).abs(), active }
}

/// Witness operators `Γ_a` from the dual of the visibility program.
pub fn dual_certificate(p: &Povm, noise: NoiseModel) -> Result<WitnessCertificate> {
    dual_certificate_with(p, noise, &SolverOptions::default())
}

pub fn dual_certificate_with(p: &Povm, noise: NoiseModel, opts: &SolverOptions) -> Result<WitnessCertificate> {
    if p.is_trivial(TRIVIAL_TOL) {
        return Err(Error::NoWitness("effects proportional to the identity are simulable".into()));
    }
    let result = visibility_with(p, noise, &VisibilityOptions { solver: *opts, ..Default::default() })?;
    if result.v >= 1.0 - 1e-7 {
        return Err(Error::NoWitness(format!("visibility {:.9} means the criterion is satisfied", result.v)));
    }
    Ok(result.certificate.expect("solved programs carry a certificate"))
}

#[derive(Clone, Debug, Serialize)]
pub struct ThresholdReport {
    pub depolarizing: f64,
    pub worst_case: f64,
    pub worst_case_flagged: f64,
    /// `v* ≤ ṽ*`.
    pub noise_order: bool,
    /// `ṽ*(flag(E)) ≥ ṽ*(E)`.
    pub flag_monotone: bool,
}

impl ThresholdReport {
    pub fn passed(&self) -> bool {
        self.noise_order && self.flag_monotone
    }
}

/// Compares depolarizing and worst-case thresholds and the effect of adding a flag dimension.
pub fn threshold_relation_check(p: &Povm) -> Result<ThresholdReport> {
    let depolarizing = visibility(p, NoiseModel::Depolarizing)?.v;
    let worst_case = visibility(p, NoiseModel::WorstCase)?.v;
    let worst_case_flagged = visibility(&p.flag(1)?, NoiseModel::WorstCase)?.v;
    Ok(ThresholdReport {
        depolarizing,
        worst_case,
        worst_case_flagged,
        noise_order: depolarizing <= worst_case + 1e-6,
        flag_monotone: worst_case_flagged >= worst_case - 1e-6,
    })
}
