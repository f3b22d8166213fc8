//! Assembly of the rank-vector programs.

use crate::error::{Error, Result};
use crate::operator::Operator;
use crate::povm::{enumerate_rank_vectors, Povm, RankVector};
use crate::sdp::{identity_coords, svec, ConicProblem, RowId, RowKind, Sense, VarId};

/// Effects with smaller trace are left out of the depolarizing and
/// feasibility programs; their blocks would be forced to zero anyway.
pub(crate) const ACTIVE_TRACE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Mode {
    Feasibility,
    Depolarizing,
    WorstCase,
}

pub(crate) struct RankBlockVars {
    pub ranks: RankVector,
    /// `(outcome, F_{a|r})` for every outcome with `r_a > 0`.
    pub vars: Vec<(usize, VarId)>,
}

pub(crate) struct Program {
    pub problem: ConicProblem,
    pub dim: usize,
    pub outcomes: usize,
    pub v: Option<VarId>,
    pub blocks: Vec<RankBlockVars>,
    /// Per outcome: coupling rows with the coordinate weights of their left-hand side.
    pub coupling: Vec<Vec<(RowId, Vec<f64>)>>,
    pub noise: Vec<(usize, VarId)>,
    pub noise_rows: Vec<(RowId, Vec<f64>)>,
}

fn unit_coords(n: usize, c: usize) -> Vec<f64> {
    let mut w = vec![0.0; n];
    w[c] = 1.0;
    w
}

/// Trace constraints `tr F_a = (r_a/d) Σ_b tr F_b` and `Σ_a F_a ∝ I` for one rank vector.
pub(crate) fn add_rank_vector_rows(pb: &mut ConicProblem, d: usize, r: &RankVector, vars: &[(usize, VarId)]) {
    let id = identity_coords(d);
    let df = d as f64;
    for &(a, fa) in &vars[..vars.len() - 1] {
        let ra = r.0[a] as f64 / df;
        let mut row = pb.row(RowKind::Local);
        for &(_, fb) in vars {
            let w = if fb == fa { 1.0 - ra } else { -ra };
            let weights: Vec<f64> = id.iter().map(|x| x * w).collect();
            row = row.coords(fb, &weights);
        }
        row.add();
    }
    for c in d..d * d {
        let mut row = pb.row(RowKind::Local);
        for &(_, fb) in vars {
            row = row.coord(fb, c, 1.0);
        }
        row.add();
    }
    for i in 0..d - 1 {
        let mut row = pb.row(RowKind::Local);
        for &(_, fb) in vars {
            for j in 0..d {
                let w = if i == j { 1.0 - 1.0 / df } else { -1.0 / df };
                row = row.coord(fb, j, w);
            }
        }
        row.add();
    }
}

/// Outcomes that enter the program, in order.
pub(crate) fn active_outcomes(p: &Povm, mode: Mode) -> Vec<usize> {
    match mode {
        Mode::WorstCase => (0..p.outcomes()).collect(),
        _ => p.active_outcomes(ACTIVE_TRACE),
    }
}

/// Rank vectors over all `n` outcomes supported on `active`.
pub(crate) fn rank_vectors(n: usize, d: usize, active: &[usize], subset: Option<&[RankVector]>) -> Result<Vec<RankVector>> {
    match subset {
        Some(list) => {
            let mut out = Vec::with_capacity(list.len());
            for r in list {
                if r.len() != n || r.dim() != d {
                    return Err(Error::OutOfRange(format!("rank vector {r} does not match {n} outcomes in dimension {d}")));
                }
                if r.support().iter().all(|a| active.contains(a)) {
                    out.push(r.clone());
                }
            }
            Ok(out)
        }
        None => Ok(enumerate_rank_vectors(active.len(), d)
            .map(|r| {
                let mut full = vec![0; n];
                for (i, &a) in active.iter().enumerate() {
                    full[a] = r.0[i];
                }
                RankVector(full)
            })
            .collect()),
    }
}

pub(crate) fn build(p: &Povm, mode: Mode, subset: Option<&[RankVector]>) -> Result<Program> {
    let d = p.dim();
    let n = p.outcomes();
    let k = d * d;
    let active = active_outcomes(p, mode);
    if active.is_empty() {
        return Err(Error::InvalidPovm("all effects vanish".into()));
    }
    let ranks = rank_vectors(n, d, &active, subset)?;
    let sense = if mode == Mode::Feasibility { Sense::Minimize } else { Sense::Maximize };
    let mut pb = ConicProblem::new(sense);
    let mut blocks = Vec::with_capacity(ranks.len());
    let mut users: Vec<Vec<VarId>> = vec![Vec::new(); n];
    for r in ranks {
        let vars: Vec<(usize, VarId)> = r.support().into_iter().map(|a| (a, pb.add_psd(d))).collect();
        for &(a, f) in &vars {
            users[a].push(f);
        }
        add_rank_vector_rows(&mut pb, d, &r, &vars);
        blocks.push(RankBlockVars { ranks: r, vars });
    }
    let v = match mode {
        Mode::Feasibility => None,
        _ => {
            let v = pb.add_nonneg();
            pb.set_objective_scalar(v, 1.0);
            Some(v)
        }
    };
    let noise: Vec<(usize, VarId)> = if mode == Mode::WorstCase { active.iter().map(|&a| (a, pb.add_psd(d))).collect() } else { Vec::new() };
    let id = identity_coords(d);
    let dm = d as f64;
    let mut coupling = vec![Vec::new(); n];
    let last = *active.last().unwrap();
    for &a in &active {
        let e = p.effect(a);
        let tr = e.trace().re;
        let e_c = svec(e);
        let mixed = svec(&Operator::identity(d).scale(tr / dm));
        let noise_var = noise.iter().find(|(b, _)| *b == a).map(|(_, nv)| *nv);
        if a != last {
            for c in 0..k {
                let mut row = pb.row(RowKind::Linking);
                for &f in &users[a] {
                    row = row.coord(f, c, 1.0);
                }
                row = match mode {
                    Mode::Feasibility => row.rhs(e_c[c]),
                    Mode::Depolarizing => row.scalar(v.unwrap(), -(e_c[c] - mixed[c])).rhs(mixed[c]),
                    Mode::WorstCase => row.scalar(v.unwrap(), -e_c[c]).coord(noise_var.unwrap(), c, -1.0),
                };
                coupling[a].push((row.add(), unit_coords(k, c)));
            }
        } else {
            let mut row = pb.row(RowKind::Linking);
            for &f in &users[a] {
                row = row.coords(f, &id);
            }
            row = match mode {
                Mode::Feasibility | Mode::Depolarizing => row.rhs(tr),
                Mode::WorstCase => {
                    let neg: Vec<f64> = id.iter().map(|x| -x).collect();
                    row.scalar(v.unwrap(), -tr).coords(noise_var.unwrap(), &neg)
                }
            };
            coupling[a].push((row.add(), id.clone()));
        }
    }
    let mut noise_rows = Vec::new();
    match mode {
        Mode::Depolarizing => {
            let t = pb.add_nonneg();
            pb.row(RowKind::Linking).scalar(v.unwrap(), 1.0).scalar(t, 1.0).rhs(1.0).add();
        }
        Mode::WorstCase => {
            for c in 0..k {
                let mut row = pb.row(RowKind::Linking);
                for &(_, nv) in &noise {
                    row = row.coord(nv, c, 1.0);
                }
                let row = row.scalar(v.unwrap(), id[c]).rhs(id[c]).add();
                noise_rows.push((row, unit_coords(k, c)));
            }
        }
        Mode::Feasibility => {}
    }
    Ok(Program { problem: pb, dim: d, outcomes: n, v, blocks, coupling, noise, noise_rows })
}
