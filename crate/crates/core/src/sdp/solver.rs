//! Homogeneous self-dual interior-point method with Nesterov–Todd scaling
//! and Mehrotra predictor-corrector steps.

use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use super::hermitian::{coord_count, smat_matrix, svec_into};
use super::problem::{Cone, ConicProblem, RowId, Sense, VarId};
use super::schur::{BlockRows, SchurFactor, SchurPlan};
use super::standard::{presolve, Presolved, StandardForm, VarBlocks};
use crate::operator::{c64, Operator, C64};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SolverOptions {
    pub feas_tol: f64,
    pub gap_tol: f64,
    pub max_iter: usize,
    pub presolve: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { feas_tol: 1e-8, gap_tol: 1e-8, max_iter: 200, presolve: true }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Status {
    Optimal,
    /// The dual multipliers form a Farkas certificate.
    PrimalInfeasible,
    /// The primal values form an improving ray.
    DualInfeasible,
    IterLimit,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Diagnostics {
    pub blocks: usize,
    pub rows: usize,
    pub removed_blocks: usize,
    pub removed_rows: usize,
    pub groups: usize,
    pub linking_rows: usize,
    /// Largest number of replaced Cholesky pivots in any iteration.
    pub replaced_pivots: usize,
    pub message: Option<String>,
}

#[derive(Clone, Debug)]
pub struct ConicSolution {
    pub status: Status,
    /// Primal objective in the problem's own sense.
    pub objective: f64,
    pub dual_objective: f64,
    /// `|objective - dual_objective| / max(1, mean |objective|)`.
    pub gap: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
    pub wall_time: Duration,
    pub diagnostics: Diagnostics,
    cones: Vec<Cone>,
    primal: Vec<Vec<f64>>,
    duals: Vec<f64>,
    slacks: Vec<Vec<f64>>,
}

impl ConicSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == Status::Optimal
    }

    pub fn coords(&self, var: VarId) -> &[f64] {
        &self.primal[var.0]
    }

    pub fn scalar(&self, var: VarId) -> f64 {
        self.primal[var.0][0]
    }

    pub fn hermitian(&self, var: VarId) -> Operator {
        to_operator(self.cones[var.0], &self.primal[var.0])
    }

    /// Multiplier `u` of an equality row, with `c - Aᵀu` dual feasible for
    /// minimization and `Aᵀu - c` for maximization.
    pub fn dual(&self, row: RowId) -> f64 {
        self.duals[row.0]
    }

    pub fn duals(&self) -> &[f64] {
        &self.duals
    }

    pub fn slack_coords(&self, var: VarId) -> &[f64] {
        &self.slacks[var.0]
    }

    /// Dual slack of a variable, PSD at an optimal solution.
    pub fn slack(&self, var: VarId) -> Operator {
        to_operator(self.cones[var.0], &self.slacks[var.0])
    }
}

fn to_operator(cone: Cone, v: &[f64]) -> Operator {
    match cone {
        Cone::Psd(k) => Operator::from_matrix(smat_matrix(v, k)),
        _ => Operator::from_matrix(DMatrix::from_element(1, 1, c64(v[0], 0.0))),
    }
}

pub fn solve(problem: &ConicProblem, opts: &SolverOptions) -> ConicSolution {
    let start = Instant::now();
    let (form, var_map) = StandardForm::from_problem(problem);
    let mut diag = Diagnostics { blocks: form.sizes.len(), rows: form.rows.len(), ..Default::default() };
    let reduction = if opts.presolve {
        match presolve(&form) {
            Presolved::Infeasible(msg) => {
                diag.message = Some(format!("presolve: {msg}"));
                return finish(problem, &form, &var_map, Status::PrimalInfeasible, Raw::zeros(&form), 0, start, diag);
            }
            Presolved::Reduced(red) => Some(red),
        }
    } else {
        None
    };
    let work = reduction.as_ref().map_or(&form, |r| &r.form);
    diag.removed_blocks = form.sizes.len() - work.sizes.len();
    diag.removed_rows = form.rows.len() - work.rows.len();
    let mut ipm = Ipm::new(work, opts);
    diag.groups = ipm.plan.num_groups();
    diag.linking_rows = ipm.plan.num_linking();
    if let Some(y) = ipm.linear_inconsistency() {
        diag.message = Some("equality constraints are inconsistent".into());
        let zeros = vec![0.0; work.num_coords()];
        let y = match &reduction {
            Some(red) => red.postsolve(&form, &zeros, &y).1,
            None => y,
        };
        let raw = Raw { x: vec![0.0; form.num_coords()], y, pres: f64::NAN, dres: f64::NAN };
        return finish(problem, &form, &var_map, Status::PrimalInfeasible, raw, 0, start, diag);
    }
    let (status, raw, iters) = ipm.run(&mut diag);
    let raw = match &reduction {
        Some(red) => {
            let (x, y) = red.postsolve(&form, &raw.x, &raw.y);
            Raw { x, y, pres: raw.pres, dres: raw.dres }
        }
        None => raw,
    };
    finish(problem, &form, &var_map, status, raw, iters, start, diag)
}

/// Solution of the standard form, already normalized.
struct Raw {
    x: Vec<f64>,
    y: Vec<f64>,
    pres: f64,
    dres: f64,
}

impl Raw {
    fn zeros(form: &StandardForm) -> Self {
        Raw { x: vec![0.0; form.num_coords()], y: vec![0.0; form.rows.len()], pres: f64::NAN, dres: f64::NAN }
    }
}

#[allow(clippy::too_many_arguments)]
fn finish(
    problem: &ConicProblem,
    form: &StandardForm,
    var_map: &[VarBlocks],
    status: Status,
    raw: Raw,
    iterations: usize,
    start: Instant,
    diagnostics: Diagnostics,
) -> ConicSolution {
    let sign = if problem.sense() == Sense::Maximize { -1.0 } else { 1.0 };
    let s = form.dual_slack(&raw.y);
    let mut primal = Vec::with_capacity(var_map.len());
    let mut slacks = Vec::with_capacity(var_map.len());
    for (v, blocks) in var_map.iter().enumerate() {
        match *blocks {
            VarBlocks::Single(b) => {
                let n = problem.cones()[v].coords();
                let off = form.offsets[b];
                primal.push(raw.x[off..off + n].to_vec());
                slacks.push(s[off..off + n].to_vec());
            }
            VarBlocks::Split(p, q) => {
                primal.push(vec![raw.x[form.offsets[p]] - raw.x[form.offsets[q]]]);
                slacks.push(vec![s[form.offsets[p]]]);
            }
        }
    }
    let pobj: f64 = sign * form.c.iter().zip(&raw.x).map(|(a, b)| a * b).sum::<f64>();
    let dobj: f64 = sign * form.b.iter().zip(&raw.y).map(|(a, b)| a * b).sum::<f64>();
    let duals = raw.y.iter().map(|y| sign * y).collect();
    ConicSolution {
        status,
        objective: pobj,
        dual_objective: dobj,
        gap: (pobj - dobj).abs() / (0.5 * (pobj.abs() + dobj.abs())).max(1.0),
        primal_residual: raw.pres,
        dual_residual: raw.dres,
        iterations,
        wall_time: start.elapsed(),
        diagnostics,
        cones: problem.cones().to_vec(),
        primal,
        duals,
        slacks,
    }
}

struct Scaling {
    g: DMatrix<C64>,
    ginv: DMatrix<C64>,
    lambda: Vec<f64>,
    /// Matrix of `Z ↦ W Z W` in Hermitian coordinates.
    d: DMatrix<f64>,
}

fn psd_factor(m: &DMatrix<C64>) -> DMatrix<C64> {
    if let Some(ch) = m.clone().cholesky() {
        return ch.l();
    }
    let eig = m.clone().symmetric_eigen();
    let top = eig.eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b));
    let floor = (top * 1e-30).max(1e-300);
    let mut l = eig.eigenvectors;
    for (j, &ev) in eig.eigenvalues.iter().enumerate() {
        let r = ev.max(floor).sqrt();
        l.column_mut(j).scale_mut(r);
    }
    l
}

fn nt_scaling(x: &[f64], s: &[f64], k: usize) -> Option<Scaling> {
    let xm = smat_matrix(x, k);
    let sm = smat_matrix(s, k);
    let l = psd_factor(&xm);
    let r = psd_factor(&sm);
    let svd = (r.adjoint() * &l).svd(true, true);
    let u = svd.u?;
    let v = svd.v_t?.adjoint();
    let lambda: Vec<f64> = svd.singular_values.iter().copied().collect();
    if lambda.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
        return None;
    }
    let isq = DMatrix::from_diagonal(&DVector::from_iterator(k, lambda.iter().map(|l| c64(1.0 / l.sqrt(), 0.0))));
    let g = &l * &v * &isq;
    let ginv = &isq * u.adjoint() * r.adjoint();
    let w = &g * g.adjoint();
    let n = coord_count(k);
    let mut d = DMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    let mut col = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        let b = smat_matrix(&e, k);
        e[j] = 0.0;
        let wbw = &w * b * &w;
        svec_into(&wbw, &mut col);
        d.column_mut(j).copy_from_slice(&col);
    }
    // Symmetrize against rounding.
    let d = (&d + d.transpose()) * 0.5;
    Some(Scaling { g, ginv, lambda, d })
}

/// Largest `α ≤ 1`-agnostic step keeping `Λ + α M ⪰ 0`; `f64::INFINITY` when unbounded.
fn max_step(lambda: &[f64], m: &DMatrix<C64>) -> f64 {
    let k = lambda.len();
    let scaled = DMatrix::from_fn(k, k, |i, j| m[(i, j)] / (lambda[i] * lambda[j]).sqrt());
    let min = if k == 1 {
        scaled[(0, 0)].re
    } else {
        let h = (&scaled + scaled.adjoint()) * c64(0.5, 0.0);
        h.symmetric_eigenvalues().iter().fold(f64::INFINITY, |a, &b| a.min(b))
    };
    if min < 0.0 { -1.0 / min } else { f64::INFINITY }
}

const REFINEMENT_STEPS: usize = 5;
/// Iterations without improvement before giving up on a nearly solved problem.
const NO_PROGRESS: usize = 8;
const NO_PROGRESS_MERIT: f64 = 1e3;
/// Relative residual below which `Ax = b` counts as consistent.
const LINEAR_TOL: f64 = 1e-9;

/// Iterate with the smallest scaled residual seen so far.
struct Best {
    merit: f64,
    since: usize,
    x: Vec<f64>,
    y: Vec<f64>,
    tau: f64,
    pres: f64,
    dres: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += alpha * xi);
}

struct Direction {
    dx: Vec<f64>,
    dy: Vec<f64>,
    ds: Vec<f64>,
    dtau: f64,
    dkappa: f64,
}

struct Ipm<'a> {
    form: &'a StandardForm,
    opts: &'a SolverOptions,
    blocks: Vec<BlockRows>,
    plan: SchurPlan,
}

struct NewtonSystem<'s> {
    factor: SchurFactor,
    scalings: &'s [Scaling],
    p: Vec<f64>,
    dx1: Vec<f64>,
    denom: f64,
}

impl<'a> Ipm<'a> {
    fn new(form: &'a StandardForm, opts: &'a SolverOptions) -> Self {
        let nb = form.sizes.len();
        let mut per_block: Vec<Vec<(usize, usize, f64)>> = vec![Vec::new(); nb];
        for (r, row) in form.rows.iter().enumerate() {
            for (&i, &v) in row.idx.iter().zip(&row.val) {
                let b = form.block_of(i);
                per_block[b].push((r, i - form.offsets[b], v));
            }
        }
        let blocks: Vec<BlockRows> = per_block
            .into_iter()
            .enumerate()
            .map(|(b, entries)| {
                let k = form.sizes[b];
                let mut rows: Vec<usize> = entries.iter().map(|e| e.0).collect();
                rows.sort_unstable();
                rows.dedup();
                let mut a = DMatrix::zeros(rows.len(), coord_count(k));
                for (r, c, v) in entries {
                    let ri = rows.binary_search(&r).unwrap();
                    a[(ri, c)] += v;
                }
                BlockRows { k, offset: form.offsets[b], rows, a }
            })
            .collect();
        let plan = SchurPlan::new(form.rows.len(), &form.kinds, &blocks);
        Self { form, opts, blocks, plan }
    }

    fn m(&self) -> usize {
        self.form.rows.len()
    }

    fn n(&self) -> usize {
        self.form.num_coords()
    }

    fn seg<'v>(&self, v: &'v [f64], b: usize) -> &'v [f64] {
        let blk = &self.blocks[b];
        &v[blk.offset..blk.offset + coord_count(blk.k)]
    }

    fn per_block(&self, f: impl Fn(usize) -> Vec<f64> + Sync + Send) -> Vec<f64> {
        let parts: Vec<Vec<f64>> = (0..self.blocks.len()).into_par_iter().map(f).collect();
        let mut out = Vec::with_capacity(self.n());
        for p in parts {
            out.extend(p);
        }
        out
    }

    fn apply_a(&self, x: &[f64]) -> Vec<f64> {
        let parts: Vec<DVector<f64>> = (0..self.blocks.len())
            .into_par_iter()
            .map(|b| &self.blocks[b].a * DVector::from_column_slice(self.seg(x, b)))
            .collect();
        let mut out = vec![0.0; self.m()];
        for (blk, p) in self.blocks.iter().zip(parts) {
            for (&r, v) in blk.rows.iter().zip(p.iter()) {
                out[r] += v;
            }
        }
        out
    }

    fn apply_at(&self, y: &[f64]) -> Vec<f64> {
        self.per_block(|b| {
            let blk = &self.blocks[b];
            let yr = DVector::from_iterator(blk.rows.len(), blk.rows.iter().map(|&r| y[r]));
            (blk.a.tr_mul(&yr)).as_slice().to_vec()
        })
    }

    fn apply_d(&self, scalings: &[Scaling], v: &[f64]) -> Vec<f64> {
        self.per_block(|b| (&scalings[b].d * DVector::from_column_slice(self.seg(v, b))).as_slice().to_vec())
    }

    /// `M⁻¹ r` with iterative refinement against the unfactored `A D Aᵀ`.
    fn schur_solve(&self, sys: &SchurFactor, scalings: &[Scaling], rhs: &[f64]) -> Vec<f64> {
        let mut y = sys.solve(&self.plan, rhs);
        let target = 1e-15 * norm(rhs);
        let mut last = f64::INFINITY;
        for _ in 0..REFINEMENT_STEPS {
            let my = self.apply_a(&self.apply_d(scalings, &self.apply_at(&y)));
            let resid: Vec<f64> = rhs.iter().zip(&my).map(|(a, b)| a - b).collect();
            let r = norm(&resid);
            if r <= target || r > 0.5 * last {
                break;
            }
            last = r;
            let corr = sys.solve(&self.plan, &resid);
            axpy(1.0, &corr, &mut y);
        }
        y
    }

    /// Farkas vector `y` with `Aᵀy = 0` and `bᵀy = 1` when `Ax = b` has no
    /// solution at all. Dependent rows show up as replaced pivots of `AAᵀ`;
    /// with `y₀` the pinned solution of `AAᵀy = b` and `r = b - AAᵀy₀`, the
    /// candidate is `r - (AAᵀ)⁺AAᵀr`, checked directly before it is returned.
    fn linear_inconsistency(&self) -> Option<Vec<f64>> {
        let eye: Vec<DMatrix<f64>> = self.blocks.iter().map(|b| DMatrix::identity(coord_count(b.k), coord_count(b.k))).collect();
        let factor = SchurFactor::factor(&self.plan, &self.blocks, &eye);
        if factor.replaced == 0 {
            return None;
        }
        let b = &self.form.b;
        let gram = |v: &[f64]| self.apply_a(&self.apply_at(v));
        let y0 = factor.solve(&self.plan, b);
        let r: Vec<f64> = b.iter().zip(gram(&y0)).map(|(a, c)| a - c).collect();
        if norm(&r) <= LINEAR_TOL * norm(b).max(1.0) {
            return None;
        }
        let z = factor.solve(&self.plan, &gram(&r));
        let f: Vec<f64> = r.iter().zip(&z).map(|(a, c)| a - c).collect();
        let bf = dot(b, &f);
        if !(bf > 0.0) {
            return None;
        }
        let f: Vec<f64> = f.iter().map(|v| v / bf).collect();
        (norm(&self.apply_at(&f)) <= self.opts.feas_tol).then_some(f)
    }

    fn newton_system<'s>(&self, scalings: &'s [Scaling], tau: f64, kappa: f64) -> NewtonSystem<'s> {
        let dmats: Vec<DMatrix<f64>> = scalings.iter().map(|s| s.d.clone()).collect();
        let factor = SchurFactor::factor(&self.plan, &self.blocks, &dmats);
        let dc = self.apply_d(scalings, &self.form.c);
        let mut rhs = self.apply_a(&dc);
        axpy(1.0, &self.form.b, &mut rhs);
        let p = self.schur_solve(&factor, scalings, &rhs);
        let mut dx1 = self.apply_d(scalings, &self.apply_at(&p));
        axpy(-1.0, &dc, &mut dx1);
        let denom = -dot(&self.form.c, &dx1) + dot(&self.form.b, &p) + kappa / tau;
        NewtonSystem { factor, scalings, p, dx1, denom }
    }

    #[allow(clippy::too_many_arguments)]
    fn direction(
        &self,
        sys: &NewtonSystem,
        eta: f64,
        rp: &[f64],
        rd: &[f64],
        rg: f64,
        rx: &[f64],
        rtau: f64,
        tau: f64,
        kappa: f64,
    ) -> Direction {
        let eta_rd: Vec<f64> = rd.iter().map(|v| eta * v).collect();
        let d_rd = self.apply_d(sys.scalings, &eta_rd);
        let mut rhs: Vec<f64> = rp.iter().map(|v| eta * v).collect();
        axpy(-1.0, &self.apply_a(rx), &mut rhs);
        axpy(1.0, &self.apply_a(&d_rd), &mut rhs);
        let q = self.schur_solve(&sys.factor, sys.scalings, &rhs);
        let mut dx0 = rx.to_vec();
        axpy(-1.0, &d_rd, &mut dx0);
        axpy(1.0, &self.apply_d(sys.scalings, &self.apply_at(&q)), &mut dx0);
        let c = &self.form.c;
        let b = &self.form.b;
        let dtau = (eta * rg + dot(c, &dx0) - dot(b, &q) + rtau / tau) / sys.denom;
        let mut dy = q;
        axpy(dtau, &sys.p, &mut dy);
        let mut dx = dx0;
        axpy(dtau, &sys.dx1, &mut dx);
        let mut ds = eta_rd;
        axpy(-1.0, &self.apply_at(&dy), &mut ds);
        axpy(dtau, c, &mut ds);
        let dkappa = (rtau - kappa * dtau) / tau;
        Direction { dx, dy, ds, dtau, dkappa }
    }

    /// Scaled directions `G⁻¹ dX G⁻*` and `G* dS G` per block.
    fn scaled(&self, scalings: &[Scaling], dir: &Direction) -> Vec<(DMatrix<C64>, DMatrix<C64>)> {
        (0..self.blocks.len())
            .into_par_iter()
            .map(|b| {
                let k = self.blocks[b].k;
                let sc = &scalings[b];
                let dx = smat_matrix(self.seg(&dir.dx, b), k);
                let ds = smat_matrix(self.seg(&dir.ds, b), k);
                (&sc.ginv * dx * sc.ginv.adjoint(), sc.g.adjoint() * ds * &sc.g)
            })
            .collect()
    }

    fn step_length(&self, scalings: &[Scaling], scaled: &[(DMatrix<C64>, DMatrix<C64>)], dir: &Direction, tau: f64, kappa: f64) -> f64 {
        let cone = (0..self.blocks.len())
            .into_par_iter()
            .map(|b| max_step(&scalings[b].lambda, &scaled[b].0).min(max_step(&scalings[b].lambda, &scaled[b].1)))
            .reduce(|| f64::INFINITY, f64::min);
        let mut alpha = cone;
        if dir.dtau < 0.0 {
            alpha = alpha.min(-tau / dir.dtau);
        }
        if dir.dkappa < 0.0 {
            alpha = alpha.min(-kappa / dir.dkappa);
        }
        alpha
    }

    #[allow(unused_assignments)]
    fn run(&mut self, diag: &mut Diagnostics) -> (Status, Raw, usize) {
        let n = self.n();
        let m = self.m();
        let form = self.form;
        let opts = self.opts;
        let nu: f64 = self.blocks.iter().map(|b| b.k as f64).sum();
        let mut x = vec![0.0; n];
        for blk in &self.blocks {
            for i in 0..blk.k {
                x[blk.offset + i] = 1.0;
            }
        }
        let mut s = x.clone();
        let mut y = vec![0.0; m];
        let mut tau = 1.0;
        let mut kappa = 1.0;
        let bnorm = norm(&form.b).max(1.0);
        let cnorm = norm(&form.c).max(1.0);
        let mut stalls = 0;
        let mut iter = 0;
        let mut best: Option<Best> = None;
        let status;
        let mut pres;
        let mut dres;
        loop {
            let ax = self.apply_a(&x);
            let aty = self.apply_at(&y);
            let rp: Vec<f64> = form.b.iter().zip(&ax).map(|(b, a)| tau * b - a).collect();
            let rd: Vec<f64> = (0..n).map(|i| tau * form.c[i] - aty[i] - s[i]).collect();
            let cx = dot(&form.c, &x);
            let by = dot(&form.b, &y);
            let rg = kappa + cx - by;
            let mu = (dot(&x, &s) + tau * kappa) / (nu + 1.0);
            pres = norm(&rp) / tau / bnorm;
            dres = norm(&rd) / tau / cnorm;
            let pobj = cx / tau;
            let dobj = by / tau;
            let gap = (pobj - dobj).abs() / (0.5 * (pobj.abs() + dobj.abs())).max(1.0);
            log::debug!(
                "iter {iter:3} pobj {pobj:+.10e} dobj {dobj:+.10e} pres {pres:.2e} dres {dres:.2e} gap {gap:.2e} mu {mu:.2e} tau {tau:.2e} kappa {kappa:.2e}"
            );
            if pres <= opts.feas_tol && dres <= opts.feas_tol && gap <= opts.gap_tol {
                status = Status::Optimal;
                break;
            }
            let merit = (pres / opts.feas_tol).max(dres / opts.feas_tol).max(gap / opts.gap_tol);
            match &mut best {
                Some(b) if merit >= b.merit => {
                    b.since += 1;
                    if b.since >= NO_PROGRESS && b.merit <= NO_PROGRESS_MERIT {
                        diag.message = Some(format!("no progress for {NO_PROGRESS} iterations at iteration {iter}"));
                        status = Status::IterLimit;
                        break;
                    }
                }
                _ => best = Some(Best { merit, since: 0, x: x.clone(), y: y.clone(), tau, pres, dres }),
            }
            if tau < kappa {
                let aty_s: Vec<f64> = aty.iter().zip(&s).map(|(a, b)| a + b).collect();
                if by > 0.0 && norm(&aty_s) / by <= opts.feas_tol {
                    let scale = 1.0 / by;
                    let (pr, dr) = (pres, dres);
                    return (
                        Status::PrimalInfeasible,
                        Raw { x: vec![0.0; n], y: y.iter().map(|v| v * scale).collect(), pres: pr, dres: dr },
                        iter,
                    );
                }
                if cx < 0.0 && norm(&ax) / (-cx) <= opts.feas_tol {
                    let scale = -1.0 / cx;
                    let (pr, dr) = (pres, dres);
                    return (
                        Status::DualInfeasible,
                        Raw { x: x.iter().map(|v| v * scale).collect(), y: vec![0.0; m], pres: pr, dres: dr },
                        iter,
                    );
                }
            }
            if iter >= opts.max_iter {
                diag.message = Some(format!("iteration limit {} reached", opts.max_iter));
                status = Status::IterLimit;
                break;
            }
            let scalings: Option<Vec<Scaling>> =
                (0..self.blocks.len()).into_par_iter().map(|b| nt_scaling(self.seg(&x, b), self.seg(&s, b), self.blocks[b].k)).collect();
            let Some(scalings) = scalings else {
                diag.message = Some(format!("scaling breakdown at iteration {iter}"));
                status = Status::IterLimit;
                break;
            };
            let sys = self.newton_system(&scalings, tau, kappa);
            diag.replaced_pivots = diag.replaced_pivots.max(sys.factor.replaced);
            // Predictor.
            let rx_aff: Vec<f64> = x.iter().map(|v| -v).collect();
            let aff = self.direction(&sys, 1.0, &rp, &rd, rg, &rx_aff, -tau * kappa, tau, kappa);
            let aff_scaled = self.scaled(&scalings, &aff);
            let alpha_aff = self.step_length(&scalings, &aff_scaled, &aff, tau, kappa).min(1.0);
            let sigma = (1.0 - alpha_aff).powi(3).clamp(0.0, 1.0);
            // Corrector.
            let rx = self.per_block(|b| {
                let sc = &scalings[b];
                let k = self.blocks[b].k;
                let (dxa, dsa) = &aff_scaled[b];
                let prod = dxa * dsa;
                let sym = (&prod + prod.adjoint()) * c64(0.5, 0.0);
                let u = DMatrix::from_fn(k, k, |i, j| {
                    let mut rc = -sym[(i, j)];
                    if i == j {
                        rc += c64(sigma * mu - sc.lambda[i] * sc.lambda[i], 0.0);
                    }
                    rc * (2.0 / (sc.lambda[i] + sc.lambda[j]))
                });
                let r = &sc.g * u * sc.g.adjoint();
                let mut out = vec![0.0; coord_count(k)];
                svec_into(&r, &mut out);
                out
            });
            let rtau = -tau * kappa + sigma * mu - aff.dtau * aff.dkappa;
            let dir = self.direction(&sys, 1.0 - sigma, &rp, &rd, rg, &rx, rtau, tau, kappa);
            let scaled = self.scaled(&scalings, &dir);
            let alpha = (0.99 * self.step_length(&scalings, &scaled, &dir, tau, kappa)).min(1.0);
            if !alpha.is_finite() || dir.dx.iter().chain(&dir.dy).any(|v| !v.is_finite()) {
                diag.message = Some(format!("non-finite search direction at iteration {iter}"));
                status = Status::IterLimit;
                break;
            }
            log::trace!("iter {iter:3} sigma {sigma:.2e} alpha_aff {alpha_aff:.3} alpha {alpha:.3} replaced {}", sys.factor.replaced);
            axpy(alpha, &dir.dx, &mut x);
            axpy(alpha, &dir.dy, &mut y);
            axpy(alpha, &dir.ds, &mut s);
            tau += alpha * dir.dtau;
            kappa += alpha * dir.dkappa;
            iter += 1;
            if alpha < 1e-8 {
                stalls += 1;
                if stalls >= 3 {
                    diag.message = Some(format!("stalled at iteration {iter} (step {alpha:.1e})"));
                    status = Status::IterLimit;
                    break;
                }
            } else {
                stalls = 0;
            }
        }
        if status != Status::Optimal {
            if let Some(b) = best {
                (x, y, tau, pres, dres) = (b.x, b.y, b.tau, b.pres, b.dres);
            }
        }
        let inv = 1.0 / tau;
        (status, Raw { x: x.iter().map(|v| v * inv).collect(), y: y.iter().map(|v| v * inv).collect(), pres, dres }, iter)
    }
}
