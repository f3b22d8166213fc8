//! Acceptance checks, one line per criterion.
//!
//! Runs without the libtest harness so the report is always printed. The
//! process exits nonzero when any criterion fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::cell::RefCell;
use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use common::net::Net;
use povmsim_core::constructions::*;
use povmsim_core::operator::{c64, phase, trace_product, Operator, StateVector};
use povmsim_core::povm::{enumerate_rank_vectors, PostProcessing};
use povmsim_core::search::{fixed_points, random_povm, seesaw_all, SearchOptions};
use povmsim_core::simulability::{visibility, visibility_with, witness_bound, VisibilityOptions, VisibilityResult};
use povmsim_core::{NoiseModel, Povm, ProjectiveMeasurement, SimulationEntry, SimulationModel};

const GAP_TOL: f64 = 1e-6;

thread_local! {
    static MAX_GAP: RefCell<(f64, usize)> = const { RefCell::new((0.0, 0)) };
}

fn record(r: &VisibilityResult) {
    MAX_GAP.with(|g| {
        let mut g = g.borrow_mut();
        g.0 = g.0.max(r.stats.gap);
        g.1 += 1;
    });
}

fn solve(p: &Povm, noise: NoiseModel) -> VisibilityResult {
    let r = visibility(p, noise).expect("visibility program");
    record(&r);
    r
}

/// Outcome of one criterion: pass flag and a short summary.
type Check = (bool, String);

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

fn c1() -> Check {
    let t = Instant::now();
    let r = solve(&sic2(), NoiseModel::Depolarizing);
    let el = t.elapsed();
    let ok = within(r.v, 0.81650, 1e-4) && within(r.v, (2.0f64 / 3.0).sqrt(), 1e-4) && el < Duration::from_secs(5);
    (ok, format!("v* = {:.6} (target 0.81650 ± 1e-4), {:.2?} (< 5 s)", r.v, el))
}

fn c2() -> Check {
    let t = Instant::now();
    let r = solve(&hesse_sic(), NoiseModel::Depolarizing);
    let el = t.elapsed();
    let closed = (1.0 + 4.0 * (PI / 9.0).cos()) / 6.0;
    let ranks = enumerate_rank_vectors(9, 3).count();
    let ok = within(r.v, 0.79313, 1e-4) && within(r.v, closed, 1e-4) && r.exact && el < Duration::from_secs(120);
    (ok, format!("v* = {:.6} vs {closed:.6}, exact = {}, {ranks} rank vectors, {:.2?} (< 2 min)", r.v, r.exact, el))
}

fn c3() -> Check {
    let samples = 25;
    let curve: Vec<f64> = (0..samples)
        .map(|i| {
            let theta = PI / 9.0 * i as f64 / (samples - 1) as f64;
            solve(&qutrit_sic(theta).unwrap(), NoiseModel::Depolarizing).v
        })
        .collect();
    let first = curve[0];
    let last = curve[samples - 1];
    let lo = curve.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = curve.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let ok = within(first, 0.7931, 1e-4) && within(last, 0.8058, 5e-4) && hi - lo > 1e-3;
    (ok, format!("θ=0: {first:.6} (0.7931), θ=π/9: {last:.6} (0.8058 ± 5e-4), range [{lo:.6}, {hi:.6}]"))
}

fn c4() -> Check {
    let a = witness_bound(&sic2(), 10).unwrap();
    let c = witness_bound(&hesse_sic(), 55).unwrap();
    let beta_a = 1.0 / 6f64.sqrt() + 0.5;
    let beta_c = 4.0 / 9.0 * (1.0 + (PI / 9.0).cos());
    let vb = |beta: f64, d: f64| (d * beta - 1.0) / (d - 1.0);
    // v_β column of the table: √(2/3) and (1 + 4cos(π/9))/6
    let col_a = (2.0f64 / 3.0).sqrt();
    let col_c = (1.0 + 4.0 * (PI / 9.0).cos()) / 6.0;
    let ok = within(a.beta, beta_a, 1e-6)
        && within(c.beta, beta_c, 1e-6)
        && within(a.v_beta, vb(a.beta, 2.0), 1e-12)
        && within(c.v_beta, vb(c.beta, 3.0), 1e-12)
        && within(a.v_beta, col_a, 1e-6)
        && within(c.v_beta, col_c, 1e-6)
        && a.failed_packages() == 0
        && c.failed_packages() == 0;
    (ok, format!("2a: β = {:.8} (v_β {:.8}), 3c: β = {:.8} (v_β {:.8})", a.beta, a.v_beta, c.beta, c.v_beta))
}

fn c5() -> Check {
    let t = Instant::now();
    let xi = StateVector::new(vec![c64(1.0, 0.0), phase(-5.0 * PI / 9.0) * 2.0, phase(5.0 * PI / 9.0) * 2.0]).unwrap();
    let group = sl23_group();
    let mut sum = Operator::zeros(3);
    for s in group.elements() {
        sum += &xi.transformed(s).unwrap().projector();
    }
    let sum = sum.scale(1.0 / 72.0);
    let v = (1.0 + 4.0 * (PI / 9.0).cos()) / 6.0;
    let expected = &qutrit_fiducial(0.0).projector().scale(v / 3.0) + &Operator::identity(3).scale((1.0 - v) / 9.0);
    let identity = sum.max_abs_diff(&expected);
    let (model, vm) = hesse_simulation_model().unwrap();
    let report = verify_decomposition(&model, &hesse_sic().depolarize(vm).unwrap(), 1e-10).unwrap();
    let el = t.elapsed();
    let ok = group.len() == 24 && identity <= 1e-10 && model.entries().len() == 72 && report.passed() && el < Duration::from_secs(10);
    (
        ok,
        format!(
            "orbit identity {identity:.1e}, {} measurements, model residual {:.1e}, {:.2?} (< 10 s)",
            model.entries().len(),
            report.max_deviation,
            el
        ),
    )
}

fn c6() -> Check {
    let vs: Vec<f64> = [2, 3, 4].iter().map(|&d| fsic2_params(d).v).collect();
    let sdp = solve(&fsic2(3).unwrap(), NoiseModel::Depolarizing).v;
    let ok = within(vs[0], 0.81650, 1e-4) && within(vs[1], 0.79850, 1e-4) && within(vs[2], 0.78560, 1e-4) && within(sdp, vs[1], 1e-4);
    (ok, format!("closed form d=2,3,4: {:.6}, {:.6}, {:.6}; SDP d=3: {sdp:.6}", vs[0], vs[1], vs[2]))
}

fn c7() -> Check {
    let targets = [(4, 0.78233002), (5, 0.77339360), (6, 0.76576302)];
    let mut ok = true;
    let mut vs = Vec::new();
    for (d, v) in targets {
        let p = fsic3_params(d).unwrap();
        ok &= within(p.v, v, 1e-6);
        vs.push(format!("{:.8}", p.v));
    }
    let v4 = fsic3_params(4).unwrap().v;
    let report = verify_decomposition(&fsic3_model(4).unwrap(), &fsic3(4).unwrap().depolarize(v4).unwrap(), 1e-9).unwrap();
    ok &= report.passed();
    (ok, format!("v(4,5,6) = {}, model(4) residual {:.1e}", vs.join(", "), report.max_deviation))
}

fn c8() -> Check {
    let q = solve(&sic2(), NoiseModel::WorstCase).v;
    let n = solve(&norrell_sic(), NoiseModel::WorstCase).v;
    let h = solve(&hesse_sic(), NoiseModel::WorstCase).v;
    let mut ok = within(q, 0.9082, 1e-3) && within(n, 8.0 / 9.0, 1e-5) && within(h, 0.8621, 1e-3);
    let mut violations = 0;
    for d in [2usize, 3] {
        for i in 0..50u64 {
            let outcomes = d + 1 + (i as usize % (d * d - d));
            let p = random_povm(d, outcomes, 8000 + 100 * d as u64 + i).unwrap();
            let a = solve(&p, NoiseModel::Depolarizing).v;
            let b = solve(&p, NoiseModel::WorstCase).v;
            if a > b + 1e-6 {
                violations += 1;
            }
        }
    }
    ok &= violations == 0;
    (ok, format!("qubit SIC {q:.6}, Norrell {n:.8}, Hesse {h:.6}; v_depol > v_worst on {violations}/100"))
}

fn c9() -> Check {
    let mut violations = 0;
    for i in 0..20u64 {
        let p = random_povm(2, 3 + (i as usize % 2), 9000 + i).unwrap();
        let a = solve(&p, NoiseModel::WorstCase).v;
        let b = solve(&p.flag(1).unwrap(), NoiseModel::WorstCase).v;
        if b < a - 1e-6 {
            violations += 1;
        }
    }
    let a = solve(&sic2(), NoiseModel::WorstCase).v;
    let b = solve(&fsic2(3).unwrap(), NoiseModel::WorstCase).v;
    let ok = violations == 0 && b >= a - 1e-6 && within(a, 0.9082, 1e-3) && within(b, 0.9137, 1e-3);
    (ok, format!("flag monotonicity violated on {violations}/20; SIC {a:.6} -> flagged {b:.6} (0.9082 -> 0.9137)"))
}

fn c10() -> Check {
    let t = Instant::now();
    let opts = SearchOptions { restarts: 20, seed: 0, ..Default::default() };
    let qubit = seesaw_all(None, 2, 4, NoiseModel::Depolarizing, &opts).unwrap();
    let hits = qubit.iter().filter(|r| within(r.best.v, (2.0f64 / 3.0).sqrt(), 1e-3)).count();
    let qutrit = seesaw_all(None, 3, 9, NoiseModel::Depolarizing, &opts).unwrap();
    let fates = |v: f64| within(v, 0.7931, 1e-3) || within(v, 0.796, 1e-3);
    let stray: Vec<f64> = qutrit.iter().map(|r| r.best.v).filter(|&v| !fates(v)).collect();
    let errors = qutrit.iter().filter(|r| r.error.is_some()).count() + (20 - qutrit.len());
    let el = t.elapsed();
    let points: Vec<String> = fixed_points(&qutrit, 1e-3).iter().map(|(v, c)| format!("{v:.4}×{c}")).collect();
    let ok = hits >= 18 && qutrit.len() == 20 && stray.is_empty() && el < Duration::from_secs(1800);
    (
        ok,
        format!(
            "d=2: {hits}/20 at 0.8165; d=3: {}/{} outside {{0.7931, 0.796}} ± 1e-3, {errors} solver errors, fixed points [{}]; {:.1?}",
            stray.len(),
            qutrit.len(),
            points.join(", "),
            el
        ),
    )
}

fn c11() -> Check {
    let t = Instant::now();
    let r = visibility_with(&sic4(), NoiseModel::Depolarizing, &VisibilityOptions::extracting()).unwrap();
    record(&r);
    let residual = match &r.extracted_model {
        Some(m) => verify_decomposition(m, &sic4().depolarize(r.v).unwrap(), 1e-8).unwrap().max_deviation,
        None => f64::INFINITY,
    };
    let count = r.extracted_model.as_ref().map_or(0, |m| m.entries().len());
    let ok = within(r.v, 0.8255, 1e-3) && r.exact && residual <= 1e-8;
    (ok, format!("v* = {:.6} (0.8255 ± 1e-3), exact = {}, {count} measurements, residual {residual:.1e}, {:.1?}", r.v, r.exact, t.elapsed()))
}

fn elimination_defect(seed: u64) -> f64 {
    let p = random_povm(3, 3, seed).unwrap();
    let basis = |k: usize| -> Vec<StateVector> {
        // eigenvectors of a random effect form an orthonormal basis
        let (_, vecs) = p.effect(k).eigh().unwrap();
        (0..3).map(|j| StateVector::from_dvector(vecs.column(j).into_owned()).unwrap()).collect()
    };
    let entries: Vec<SimulationEntry> = (0..2)
        .map(|k| SimulationEntry { weight: 0.5, measurement: ProjectiveMeasurement::from_basis(&basis(k), &[0, 1, 2], 3).unwrap() })
        .collect();
    let probs = random_povm(3, 3, seed + 1).unwrap();
    let table = |lam: usize| -> Vec<Vec<f64>> {
        (0..3).map(|k| (0..3).map(|a| probs.effect((a + lam) % 3).get(k, k).re).collect()).collect()
    };
    let model = SimulationModel::with_postprocessing(entries, PostProcessing { tables: vec![table(0), table(1)] }).unwrap();
    let flat = model.eliminate_postprocessing().unwrap();
    flat.apply().max_deviation(&model.apply()).unwrap()
}

fn c12() -> Check {
    let net = Net::cube(41);
    let outer = 1.0 / net.angle.cos();
    let mut disagreements = 0;
    for i in 0..200u64 {
        let p = random_povm(2, 3 + (i as usize % 3), 12_000 + i).unwrap();
        let v = solve(&p, NoiseModel::Depolarizing).v;
        let lo = net.visibility(&p, 1.0);
        let hi = net.visibility(&p, outer);
        if !(lo <= v + 1e-7 && v <= hi + 1e-7) {
            disagreements += 1;
        }
    }
    let elimination = (0..20).map(elimination_defect).fold(0.0, f64::max);
    let mut overlap = 0.0f64;
    for p in [sic2(), hesse_sic(), norrell_sic(), sic4(), qutrit_sic(0.3).unwrap()] {
        let d = p.dim() as f64;
        for a in 0..p.outcomes() {
            for b in a + 1..p.outcomes() {
                overlap = overlap.max((trace_product(p.effect(a), p.effect(b)) * d * d - 1.0 / (d + 1.0)).abs());
            }
        }
    }
    let (gap, solved) = MAX_GAP.with(|g| *g.borrow());
    let ok = disagreements == 0 && elimination <= 1e-12 && overlap <= 1e-10 && gap <= GAP_TOL;
    (
        ok,
        format!(
            "net oracle (δ = {:.4}) disagrees on {disagreements}/200; elimination defect {elimination:.1e}; SIC overlap defect {overlap:.1e}; max gap {gap:.1e} over {solved} programs",
            net.angle
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Check); 12] = [
        ("qubit SIC depolarizing threshold", c1),
        ("Hesse SIC threshold and exactness", c2),
        ("qutrit SIC family sweep endpoints", c3),
        ("witness bounds for rows 2a and 3c", c4),
        ("Hesse orbit identity and 72-measurement model", c5),
        ("flagged qubit SIC closed form", c6),
        ("flagged Hesse roots and model", c7),
        ("worst-case thresholds", c8),
        ("flagging never lowers the worst-case threshold", c9),
        ("see-saw search fates", c10),
        ("ququart SIC threshold with extracted model", c11),
        ("property suites", c12),
    ];
    let only: Option<Vec<usize>> = std::env::var("POVMSIM_CRITERIA").ok().map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let k = i + 1;
        if only.as_ref().is_some_and(|o| !o.contains(&k)) {
            continue;
        }
        let (ok, detail) = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default();
            (false, format!("panicked: {msg}"))
        });
        if !ok {
            failed += 1;
        }
        println!("criterion {k:>2} {} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    }
    println!("acceptance: {failed} failed");
    if failed > 0 {
        std::process::exit(1);
    }
}
