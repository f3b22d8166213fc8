//! See-saw search for the most non-projective POVM.
//!
//! Each round computes the visibility of the current POVM, reads a witness
//! off the dual optimum, and moves to the POVM violating that witness most.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::operator::{c64, Operator};
use crate::povm::{NoiseModel, Povm};
use crate::sdp::{identity_coords, solve, ConicProblem, RowKind, ConicSolution, Sense, SolverOptions, Status, VarId};
use crate::simulability::{visibility_with, VisibilityOptions, VisibilityResult, WitnessCertificate};

/// Outcomes with a smaller trace are reported as unused.
pub const INACTIVE_TRACE: f64 = 1e-6;

/// Rounds without an accepted step before a run counts as converged.
const PATIENCE: usize = 3;

/// Objective of the violator program in step (iii) of the see-saw.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Violator {
    /// Minimize `W(E)` over POVMs, as in [`best_violator`].
    Linear,
    /// Minimize `W(E) / W(N(E))` with `N(E)_a = tr(E_a) I/d`: the visibility
    /// bound the witness implies for `E`. Never larger than the current
    /// threshold. Used for depolarizing noise only; worst-case searches fall
    /// back to [`Violator::Linear`].
    #[default]
    Relative,
}

#[derive(Clone, Copy, Debug)]
pub struct SearchOptions {
    pub max_iter: usize,
    /// Minimal decrease of the visibility for a step to be accepted.
    pub tol: f64,
    pub restarts: usize,
    pub seed: u64,
    pub violator: Violator,
    pub solver: SolverOptions,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self { max_iter: 50, tol: 1e-5, restarts: 20, seed: 0, violator: Violator::Relative, solver: SolverOptions::default() }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SearchStep {
    /// Index into [`SearchTrace::snapshots`] of the POVM evaluated in this round.
    pub snapshot: usize,
    pub visibility: f64,
    pub gap: f64,
    /// Decrease of the visibility relative to the current iterate; negative when rejected.
    pub improvement: f64,
    pub accepted: bool,
    /// Fraction of the way from the current iterate to the violator.
    pub step: f64,
}

#[derive(Clone, Debug)]
pub struct SearchTrace {
    pub seed: u64,
    pub noise: NoiseModel,
    pub iterations: Vec<SearchStep>,
    /// Every POVM evaluated, starting with the initial one.
    pub snapshots: Vec<Povm>,
    pub converged: bool,
    pub best_povm: Povm,
    pub best: VisibilityResult,
    /// Set when a solver failure ended this run early.
    pub error: Option<String>,
}

impl SearchTrace {
    pub fn active_outcomes(&self) -> Vec<usize> {
        self.best_povm.active_outcomes(INACTIVE_TRACE)
    }

    /// Visibilities of the accepted iterates, starting with the initial POVM.
    pub fn accepted_visibilities(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (i, s) in self.iterations.iter().enumerate() {
            if i == 0 || s.accepted {
                out.push(s.visibility);
            }
        }
        out
    }
}

fn normalize(effects: &[Operator]) -> Option<Povm> {
    Povm::from_approximate(effects).ok()
}

/// Random POVM from Gaussian squares `G_a = g_a g_a†` with complex Gaussian
/// vectors `g_a`, symmetrized to sum to the identity. For `n ≥ d` the effects
/// are rank one, so for `d < n ≤ d²` the POVM is almost surely not simulable;
/// fewer outcomes get `g_a` with `⌈d/n⌉` columns.
pub fn random_povm(d: usize, n: usize, seed: u64) -> Result<Povm> {
    if d == 0 || n == 0 {
        return Err(Error::OutOfRange("dimension and outcome count must be positive".into()));
    }
    if n == 1 {
        return Povm::new(vec![Operator::identity(d)]);
    }
    let rank = d.div_ceil(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let gs: Vec<Operator> = (0..n)
            .map(|_| {
                let a = DMatrix::from_fn(d, rank, |_, _| {
                    let re: f64 = StandardNormal.sample(&mut rng);
                    let im: f64 = StandardNormal.sample(&mut rng);
                    c64(re, im)
                });
                Operator::from_matrix(&a * a.adjoint())
            })
            .collect();
        if let Some(p) = normalize(&gs) {
            return Ok(p);
        }
    }
}

fn violator_program(g: &[Operator], d: usize) -> (ConicProblem, Vec<VarId>) {
    let mut pb = ConicProblem::new(Sense::Maximize);
    let vars: Vec<VarId> = g.iter().map(|_| pb.add_psd(d)).collect();
    let id = identity_coords(d);
    for c in 0..d * d {
        let mut row = pb.row(RowKind::Linking);
        for &v in &vars {
            row = row.coord(v, c, 1.0);
        }
        row.rhs(id[c]).add();
    }
    (pb, vars)
}

fn near_optimal(sol: &ConicSolution) -> bool {
    sol.status == Status::Optimal || (sol.primal_residual <= 1e-6 && sol.dual_residual <= 1e-6 && sol.gap <= 1e-6)
}

fn solve_violator(pb: &ConicProblem, vars: &[VarId], opts: &SolverOptions) -> Result<(f64, Vec<Operator>)> {
    let sol = solve(pb, opts);
    if !near_optimal(&sol) {
        return Err(Error::Solver(format!("violator program ended with {:?}", sol.status)));
    }
    Ok((sol.objective, vars.iter().map(|&v| sol.hermitian(v)).collect()))
}

/// POVM minimizing the witness `Σ_a tr(Γ_a E_a)`, i.e. violating it most.
///
/// Flat optima resolve to the analytic center of the optimal face, which
/// favours mixed effects.
pub fn best_violator(cert: &WitnessCertificate, d: usize, n: usize) -> Result<Povm> {
    best_violator_near(cert, d, n, None, &SolverOptions::default())
}

/// As [`best_violator`]; among optimal POVMs prefers the one overlapping
/// most with `previous`.
pub fn best_violator_near(cert: &WitnessCertificate, d: usize, n: usize, previous: Option<&Povm>, opts: &SolverOptions) -> Result<Povm> {
    if cert.gammas.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: cert.gammas.len() });
    }
    if cert.gammas.iter().any(|g| g.dim() != d) {
        return Err(Error::DimensionMismatch { expected: d, found: cert.gammas[0].dim() });
    }
    let g: Vec<Operator> = cert.gammas.iter().map(|x| x.scale(-1.0)).collect();
    let (mut pb, vars) = violator_program(&g, d);
    for (&v, ga) in vars.iter().zip(&g) {
        pb.set_objective_hermitian(v, ga);
    }
    let (best, effects) = solve_violator(&pb, &vars, opts)?;
    let effects = match previous {
        Some(prev) if prev.dim() == d && prev.outcomes() == n => {
            let (mut pb, vars) = violator_program(&g, d);
            let slack = pb.add_nonneg();
            let mut row = pb.row(RowKind::Linking);
            for (&v, ga) in vars.iter().zip(&g) {
                row = row.hermitian(v, ga);
            }
            row.scalar(slack, -1.0).rhs(best - 1e-7 * best.abs().max(1.0)).add();
            for (&v, pa) in vars.iter().zip(prev.effects()) {
                pb.set_objective_hermitian(v, pa);
            }
            match solve_violator(&pb, &vars, opts) {
                Ok((_, e)) => e,
                Err(err) => {
                    log::debug!("tie-break program failed: {err}");
                    effects
                }
            }
        }
        _ => effects,
    };
    normalize(&effects).ok_or_else(|| Error::Solver("violator effects do not sum to an invertible operator".into()))
}

/// POVM minimizing `W(E) / W(N(E))`, via the homogenized program
/// `min Σ tr(Γ_a X_a)` s.t. `Σ X_a = tI`, `(1/d) Σ tr(X_a) tr(Γ_a) = 1`.
/// Outcomes with `tr Γ_a = 0` stay unused.
pub fn relative_violator(cert: &WitnessCertificate, d: usize, opts: &SolverOptions) -> Result<Povm> {
    let mut pb = ConicProblem::new(Sense::Minimize);
    let live: Vec<bool> = cert.gammas.iter().map(|g| g.trace().re > 1e-9).collect();
    let vars: Vec<Option<VarId>> = live.iter().map(|&l| if l { Some(pb.add_psd(d)) } else { None }).collect();
    let t = pb.add_nonneg();
    let id = identity_coords(d);
    for c in 0..d * d {
        let mut row = pb.row(RowKind::Linking);
        for v in vars.iter().flatten() {
            row = row.coord(*v, c, 1.0);
        }
        row.scalar(t, -id[c]).rhs(0.0).add();
    }
    let mut row = pb.row(RowKind::Linking);
    for (v, g) in vars.iter().zip(&cert.gammas) {
        if let Some(v) = v {
            let w: Vec<f64> = id.iter().map(|x| x * g.trace().re / d as f64).collect();
            row = row.coords(*v, &w);
        }
    }
    row.rhs(1.0).add();
    for (v, g) in vars.iter().zip(&cert.gammas) {
        if let Some(v) = v {
            pb.set_objective_hermitian(*v, g);
        }
    }
    let sol = solve(&pb, opts);
    if !near_optimal(&sol) {
        return Err(Error::Solver(format!("violator program ended with {:?}", sol.status)));
    }
    let tv = sol.scalar(t);
    if !(tv > 0.0) {
        return Err(Error::Solver("relative violator has no normalization".into()));
    }
    let effects: Vec<Operator> = vars
        .iter()
        .map(|v| match v {
            Some(v) => sol.hermitian(*v).scale(1.0 / tv),
            None => Operator::zeros(d),
        })
        .collect();
    normalize(&effects).ok_or_else(|| Error::Solver("violator effects do not sum to an invertible operator".into()))
}

fn mix(a: &Povm, b: &Povm, t: f64) -> Option<Povm> {
    let effects: Vec<Operator> = a.effects().iter().zip(b.effects()).map(|(x, y)| &x.scale(1.0 - t) + &y.scale(t)).collect();
    normalize(&effects)
}

fn evaluate(p: &Povm, noise: NoiseModel, opts: &SearchOptions) -> Result<VisibilityResult> {
    p.ensure_valid(&Default::default())?;
    visibility_with(p, noise, &VisibilityOptions { solver: opts.solver, ..Default::default() })
}

/// One see-saw run from `initial`.
pub fn seesaw_run(initial: &Povm, noise: NoiseModel, opts: &SearchOptions, seed: u64) -> Result<SearchTrace> {
    let d = initial.dim();
    let n = initial.outcomes();
    let mut current = evaluate(initial, noise, opts)?;
    let mut trace = SearchTrace {
        seed,
        noise,
        iterations: vec![SearchStep {
            snapshot: 0,
            visibility: current.v,
            gap: current.stats.gap,
            improvement: 0.0,
            accepted: true,
            step: 0.0,
        }],
        snapshots: vec![initial.clone()],
        converged: false,
        best_povm: initial.clone(),
        best: current.clone(),
        error: None,
    };
    let mut idle = 0;
    let mut violator: Option<Povm> = None;
    for _ in 0..opts.max_iter {
        let Some(cert) = current.certificate.as_ref().filter(|_| current.v < 1.0 - 1e-7) else {
            trace.converged = true;
            break;
        };
        if violator.is_none() {
            let next = match (opts.violator, noise) {
                (Violator::Relative, NoiseModel::Depolarizing) => relative_violator(cert, d, &opts.solver),
                _ => best_violator_near(cert, d, n, Some(&trace.best_povm), &opts.solver),
            };
            match next {
                Ok(p) => violator = Some(p),
                Err(e) => {
                    trace.error = Some(e.to_string());
                    break;
                }
            }
        }
        let step = 0.5f64.powi(idle as i32);
        let Some(candidate) = mix(&trace.best_povm, violator.as_ref().unwrap(), step) else {
            trace.error = Some("degenerate candidate".into());
            break;
        };
        let result = match evaluate(&candidate, noise, opts) {
            Ok(r) => r,
            Err(e) => {
                trace.error = Some(e.to_string());
                break;
            }
        };
        let improvement = current.v - result.v;
        let accepted = improvement > opts.tol;
        trace.snapshots.push(candidate.clone());
        trace.iterations.push(SearchStep {
            snapshot: trace.snapshots.len() - 1,
            visibility: result.v,
            gap: result.stats.gap,
            improvement,
            accepted,
            step,
        });
        log::debug!("seed {seed}: v {:.8} -> {:.8} (step {step}) {}", current.v, result.v, if accepted { "accepted" } else { "rejected" });
        if accepted {
            trace.best_povm = candidate;
            trace.best = result.clone();
            current = result;
            violator = None;
            idle = 0;
        } else {
            idle += 1;
            if idle >= PATIENCE {
                trace.converged = true;
                break;
            }
        }
    }
    Ok(trace)
}

/// Runs `opts.restarts` see-saw searches in parallel: the first from
/// `initial` (or a random POVM when absent), the others from
/// [`random_povm`] with seeds `opts.seed + i`. Traces come back in restart order.
pub fn seesaw_all(initial: Option<&Povm>, d: usize, n: usize, noise: NoiseModel, opts: &SearchOptions) -> Result<Vec<SearchTrace>> {
    if let Some(p) = initial {
        if p.dim() != d || p.outcomes() != n {
            return Err(Error::DimensionMismatch { expected: d, found: p.dim() });
        }
        p.ensure_valid(&Default::default())?;
    }
    let restarts = opts.restarts.max(1);
    let runs: Vec<Result<SearchTrace>> = (0..restarts)
        .into_par_iter()
        .map(|i| {
            let seed = opts.seed.wrapping_add(i as u64);
            let start = match (i, initial) {
                (0, Some(p)) => p.clone(),
                _ => random_povm(d, n, seed)?,
            };
            seesaw_run(&start, noise, opts, seed)
        })
        .collect();
    let mut traces = Vec::new();
    let mut last_err = None;
    for r in runs {
        match r {
            Ok(t) => traces.push(t),
            Err(e) => {
                log::warn!("restart failed: {e}");
                last_err = Some(e);
            }
        }
    }
    if traces.is_empty() {
        return Err(last_err.unwrap_or_else(|| Error::Solver("no restarts".into())));
    }
    Ok(traces)
}

/// Best trace over all restarts, by visibility and then seed.
pub fn seesaw(initial: Option<&Povm>, d: usize, n: usize, noise: NoiseModel, opts: &SearchOptions) -> Result<SearchTrace> {
    let traces = seesaw_all(initial, d, n, noise, opts)?;
    Ok(best_of(traces))
}

pub fn best_of(traces: Vec<SearchTrace>) -> SearchTrace {
    traces
        .into_iter()
        .min_by(|a, b| a.best.v.total_cmp(&b.best.v).then(a.seed.cmp(&b.seed)))
        .expect("at least one trace")
}

/// Groups final visibilities that lie within `radius` of each other; returns
/// `(representative visibility, count)` in increasing order.
pub fn fixed_points(traces: &[SearchTrace], radius: f64) -> Vec<(f64, usize)> {
    let mut vs: Vec<f64> = traces.iter().map(|t| t.best.v).collect();
    vs.sort_by(f64::total_cmp);
    let mut out: Vec<(f64, usize)> = Vec::new();
    let mut anchor = f64::NEG_INFINITY;
    for v in vs {
        match out.last_mut() {
            Some((_, c)) if v - anchor <= radius => *c += 1,
            _ => {
                anchor = v;
                out.push((v, 1));
            }
        }
    }
    out
}
