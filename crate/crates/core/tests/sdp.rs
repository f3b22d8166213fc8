use povmsim_core::operator::{c64, Operator};
use povmsim_core::sdp::{solve, ConicProblem, RowKind, Sense, SolverOptions, Status};
use proptest::prelude::*;

fn opts() -> SolverOptions {
    SolverOptions::default()
}

#[test]
fn scalar_bounded_by_identity() {
    // maximize v s.t. v·I + Z = I, Z ⪰ 0
    let mut p = ConicProblem::new(Sense::Maximize);
    let v = p.add_free();
    let z = p.add_psd(2);
    p.set_objective_scalar(v, 1.0);
    p.row(RowKind::Linking).scalar(v, 1.0).coord(z, 0, 1.0).rhs(1.0).add();
    p.row(RowKind::Linking).scalar(v, 1.0).coord(z, 1, 1.0).rhs(1.0).add();
    p.row(RowKind::Linking).coord(z, 2, 1.0).add();
    p.row(RowKind::Linking).coord(z, 3, 1.0).add();
    let sol = solve(&p, &opts());
    assert_eq!(sol.status, Status::Optimal);
    assert!((sol.objective - 1.0).abs() < 1e-7, "{}", sol.objective);
    assert!(sol.objective <= sol.dual_objective + 1e-8);
}

fn random_hermitian(k: usize, raw: &[f64]) -> Operator {
    Operator::from_fn(k, |i, j| {
        let (a, b) = (i.min(j), i.max(j));
        let re = raw[a * k + b];
        let im = if i == j { 0.0 } else { raw[b * k + a] };
        c64(re, if i < j { im } else { -im })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn trace_one_program_gives_top_eigenvalue(k in 1usize..5, raw in proptest::collection::vec(-1.0f64..1.0, 16)) {
        let c = random_hermitian(k, &raw);
        let mut p = ConicProblem::new(Sense::Maximize);
        let x = p.add_psd(k);
        p.set_objective_hermitian(x, &c);
        p.row(RowKind::Linking).hermitian(x, &Operator::identity(k)).rhs(1.0).add();
        let sol = solve(&p, &opts());
        prop_assert_eq!(sol.status, Status::Optimal);
        let top = *c.eigenvalues().unwrap().last().unwrap();
        prop_assert!((sol.objective - top).abs() < 1e-7, "{} vs {}", sol.objective, top);
        // c - ... : slack = u·I - C ⪰ 0
        let slack = sol.slack(x);
        prop_assert!(slack.eigenvalues().unwrap()[0] > -1e-7);
        prop_assert!((sol.duals()[0] - top).abs() < 1e-6);
    }
}

#[test]
fn infeasible_program_detected_without_presolve() {
    let mut p = ConicProblem::new(Sense::Minimize);
    let a = p.add_nonneg();
    let b = p.add_psd(2);
    p.row(RowKind::Linking).scalar(a, 1.0).hermitian(b, &Operator::identity(2)).rhs(-1.0).add();
    let sol = solve(&p, &SolverOptions { presolve: false, ..opts() });
    assert_eq!(sol.status, Status::PrimalInfeasible);
    // Farkas: Aᵀy ⪯ 0 direction with bᵀy > 0 after sign convention.
    assert!(sol.duals()[0] < 0.0);
}

#[test]
fn unbounded_program_detected() {
    let mut p = ConicProblem::new(Sense::Minimize);
    let a = p.add_nonneg();
    let b = p.add_nonneg();
    p.set_objective_scalar(a, -1.0);
    p.row(RowKind::Linking).scalar(a, 1.0).scalar(b, -1.0).add();
    let sol = solve(&p, &SolverOptions { presolve: false, ..opts() });
    assert_eq!(sol.status, Status::DualInfeasible);
    assert!(sol.scalar(a) > 0.0 && (sol.scalar(a) - sol.scalar(b)).abs() < 1e-8);
}

#[test]
fn presolve_short_circuits_inconsistency() {
    let mut p = ConicProblem::new(Sense::Minimize);
    let a = p.add_nonneg();
    p.row(RowKind::Linking).scalar(a, 1.0).rhs(-1.0).add();
    let sol = solve(&p, &opts());
    assert_eq!(sol.status, Status::PrimalInfeasible);
    assert_eq!(sol.iterations, 0);
}

#[test]
fn local_groups_match_dense_elimination() {
    // Two separate local groups tied by a linking budget:
    // maximize tr(C1 X1) + tr(C2 X2) s.t. tr X1 = t1, tr X2 = t2 (local), t1 + t2 = 1.
    let c1 = Operator::diagonal(&[c64(1.0, 0.0), c64(3.0, 0.0)]);
    let c2 = Operator::diagonal(&[c64(2.0, 0.0), c64(0.5, 0.0), c64(-1.0, 0.0)]);
    let mut p = ConicProblem::new(Sense::Maximize);
    let x1 = p.add_psd(2);
    let x2 = p.add_psd(3);
    let t1 = p.add_nonneg();
    let t2 = p.add_nonneg();
    p.set_objective_hermitian(x1, &c1);
    p.set_objective_hermitian(x2, &c2);
    p.row(RowKind::Local).hermitian(x1, &Operator::identity(2)).scalar(t1, -1.0).add();
    p.row(RowKind::Local).hermitian(x2, &Operator::identity(3)).scalar(t2, -1.0).add();
    p.row(RowKind::Linking).scalar(t1, 1.0).scalar(t2, 1.0).rhs(1.0).add();
    let sol = solve(&p, &opts());
    assert_eq!(sol.status, Status::Optimal);
    assert!((sol.objective - 3.0).abs() < 1e-7);
    assert_eq!(sol.diagnostics.groups, 2);
}

#[test]
fn inconsistent_dependent_rows_give_a_farkas_vector() {
    // X11 = 1, X22 = 1, X11 + X22 = 3
    let mut p = ConicProblem::new(Sense::Minimize);
    let x = p.add_psd(2);
    p.set_objective_hermitian(x, &Operator::identity(2));
    p.row(RowKind::Linking).coord(x, 0, 1.0).rhs(1.0).add();
    p.row(RowKind::Linking).coord(x, 1, 1.0).rhs(1.0).add();
    p.row(RowKind::Linking).coord(x, 0, 1.0).coord(x, 1, 1.0).rhs(3.0).add();
    let sol = solve(&p, &opts());
    assert_eq!(sol.status, Status::PrimalInfeasible);
    let y = sol.duals();
    // Aᵀy = 0 and bᵀy ≠ 0
    assert!((y[0] + y[2]).abs() < 1e-9 && (y[1] + y[2]).abs() < 1e-9, "{y:?}");
    assert!((y[0] + y[1] + 3.0 * y[2]).abs() > 0.5);
    // the consistent variant still solves
    let mut q = ConicProblem::new(Sense::Minimize);
    let x = q.add_psd(2);
    q.set_objective_hermitian(x, &Operator::identity(2));
    q.row(RowKind::Linking).coord(x, 0, 1.0).rhs(1.0).add();
    q.row(RowKind::Linking).coord(x, 1, 1.0).rhs(1.0).add();
    q.row(RowKind::Linking).coord(x, 0, 1.0).coord(x, 1, 1.0).rhs(2.0).add();
    let sol = solve(&q, &opts());
    assert_eq!(sol.status, Status::Optimal);
    assert!((sol.objective - 2.0).abs() < 1e-7);
}
