//! Single-POVM subcommands: validate, feasibility, visibility, witness, certify.

use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use povmsim_core::constructions::verify_decomposition;
use povmsim_core::povm::Violation;
use povmsim_core::simulability::{
    feasibility_with, visibility_with, witness_bound_with, Feasibility, SolveStats, VisibilityOptions, VisibilityResult,
};
use povmsim_core::{NoiseModel, Operator, Povm, RankVector, SimulationModel};
use serde_json::{json, Value};

use crate::output::{self, Row};
use crate::Ctx;

/// Residual bound for an extracted model to count as a simulation.
const MODEL_TOL: f64 = 1e-8;

/// `{value, exact, noise, gap, iterations, wall_ms}` followed by `extra`.
pub fn analysis_row(value: Value, exact: bool, noise: Option<NoiseModel>, stats: Option<&SolveStats>, extra: Value) -> Row {
    let mut r = output::row(json!({
        "value": value,
        "exact": exact,
        "noise": noise.map(|n| n.to_string()),
        "gap": stats.map(|s| s.gap),
        "iterations": stats.map(|s| s.iterations),
        "wall_ms": stats.map(|s| s.wall_ms),
    }));
    if let Value::Object(m) = extra {
        r.extend(m);
    }
    r
}

pub fn operator_json(op: &Operator) -> Value {
    let d = op.dim();
    Value::Array(
        (0..d)
            .map(|i| Value::Array((0..d).map(|j| json!({"re": op.get(i, j).re, "im": op.get(i, j).im})).collect()))
            .collect(),
    )
}

pub fn model_json(model: &SimulationModel) -> Value {
    json!({
        "entries": model.entries().iter().map(|e| json!({
            "weight": e.weight,
            "measurement": e.measurement.povm().to_json_value(),
        })).collect::<Vec<_>>(),
    })
}

fn label(p: &Povm) -> String {
    p.label().unwrap_or("povm").to_string()
}

fn describe(v: &Violation) -> String {
    match v {
        Violation::NotHermitian { outcome, deviation } => format!("effect {outcome} is not Hermitian (deviation {deviation:.3e})"),
        Violation::NotPsd { outcome, min_eigenvalue } => format!("effect {outcome} has eigenvalue {min_eigenvalue:.3e}"),
        Violation::Incomplete { deviation, sum_norm } => {
            format!("effects do not sum to the identity (deviation {deviation:.3e}, norm of the sum {sum_norm:.6})")
        }
        Violation::Empty => "no effects".into(),
    }
}

pub fn validate(ctx: &Ctx, p: &Povm) -> Result<bool> {
    let report = p.validate();
    let r = output::row(json!({
        "povm": label(p),
        "dim": p.dim(),
        "outcomes": p.outcomes(),
        "valid": report.is_valid(),
        "violations": report.violations.iter().map(describe).collect::<Vec<_>>(),
    }));
    output::record(ctx.format, &r)?;
    Ok(report.is_valid())
}

/// Parses `"2,1,0;1,1,1"` into rank vectors for a POVM of the given shape.
pub fn parse_ranks(spec: &str, dim: usize, outcomes: usize) -> Result<Vec<RankVector>> {
    let mut out = Vec::new();
    for part in spec.split(';').map(str::trim).filter(|s| !s.is_empty()) {
        let ranks: Vec<usize> = part
            .split(',')
            .map(|x| x.trim().parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .with_context(|| format!("invalid rank vector '{part}'"))?;
        if ranks.len() != outcomes {
            bail!("rank vector '{part}' has {} entries, the POVM has {outcomes} outcomes", ranks.len());
        }
        out.push(RankVector::new(ranks, dim)?);
    }
    if out.is_empty() {
        bail!("no rank vectors in '{spec}'");
    }
    Ok(out)
}

pub fn feasibility(ctx: &Ctx, p: &Povm, ranks: Option<&str>) -> Result<bool> {
    let ranks = ranks.map(|s| parse_ranks(s, p.dim(), p.outcomes())).transpose()?;
    let rep = feasibility_with(p, ranks.as_deref(), &ctx.solver)?;
    let r = analysis_row(
        serde_json::to_value(rep.outcome)?,
        rep.outcome != Feasibility::CriterionSatisfied,
        None,
        Some(&rep.stats),
        json!({"povm": label(p), "status": format!("{:?}", rep.stats.status), "rank_vectors": rep.stats.blocks}),
    );
    output::record(ctx.format, &r)?;
    Ok(true)
}

pub fn visibility_row(p: &Povm, r: &VisibilityResult) -> Result<Row> {
    let mut extra = json!({
        "povm": label(p),
        "status": format!("{:?}", r.stats.status),
        "rank_vectors": r.stats.blocks,
    });
    if let Some(model) = &r.extracted_model {
        let report = verify_decomposition(model, &p.depolarize(r.v)?, MODEL_TOL)?;
        extra["model_measurements"] = json!(model.entries().len());
        extra["model_residual"] = json!(report.max_deviation);
    }
    Ok(analysis_row(json!(r.v), r.exact, Some(r.noise), Some(&r.stats), extra))
}

pub fn visibility(ctx: &Ctx, p: &Povm, noise: NoiseModel, extract: bool, model_out: Option<&Path>, ranks: Option<&str>) -> Result<bool> {
    if extract && noise == NoiseModel::WorstCase {
        bail!("model extraction is only available for depolarizing noise");
    }
    let ranks = ranks.map(|s| parse_ranks(s, p.dim(), p.outcomes())).transpose()?;
    let opts = VisibilityOptions { solver: ctx.solver, ranks, keep_blocks: extract, extract };
    let res = visibility_with(p, noise, &opts)?;
    output::record(ctx.format, &visibility_row(p, &res)?)?;
    if let Some(path) = model_out {
        match &res.extracted_model {
            Some(m) => std::fs::write(path, serde_json::to_string_pretty(&model_json(m))? + "\n")
                .with_context(|| format!("writing {}", path.display()))?,
            None => log::warn!("no projective model could be extracted; {} not written", path.display()),
        }
    }
    Ok(true)
}

pub fn witness(ctx: &Ctx, p: &Povm, package_size: usize) -> Result<bool> {
    if package_size == 0 {
        bail!("--package-size must be positive");
    }
    let t = Instant::now();
    let res = witness_bound_with(p, package_size, &ctx.solver)?;
    let wall_ms = t.elapsed().as_secs_f64() * 1e3;
    let failed = res.failed_packages();
    let mut r = analysis_row(
        json!(res.v_beta),
        false,
        Some(NoiseModel::Depolarizing),
        None,
        json!({"povm": label(p), "beta": res.beta, "packages": res.per_package.len(), "failed_packages": failed}),
    );
    r["wall_ms"] = json!(wall_ms);
    for pkg in res.per_package.iter().filter(|p| p.beta.is_none()) {
        log::error!("package {} failed: {}", pkg.index, pkg.error.as_deref().unwrap_or("unknown error"));
    }
    output::record(ctx.format, &r)?;
    Ok(failed == 0)
}

pub fn certify(ctx: &Ctx, p: &Povm, noise: NoiseModel) -> Result<bool> {
    let res = visibility_with(p, noise, &VisibilityOptions { solver: ctx.solver, ..Default::default() })?;
    let cert = match &res.certificate {
        Some(c) if res.v < 1.0 - 1e-7 => c,
        _ => bail!("visibility {:.9}: the criterion holds, so there is no witness", res.v),
    };
    let r = analysis_row(
        json!(cert.predicted_threshold),
        res.exact,
        Some(noise),
        Some(&res.stats),
        json!({
            "povm": label(p),
            "witness": cert.witness(p)?,
            "certificate_gap": cert.gap,
            "active": cert.active,
            "gammas": cert.gammas.iter().map(operator_json).collect::<Vec<_>>(),
            "aux": cert.aux.as_ref().map(operator_json),
        }),
    );
    output::record(ctx.format, &r)?;
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_strings() {
        let r = parse_ranks("2,1,0; 1,1,1", 3, 3).unwrap();
        assert_eq!(r.len(), 2);
        assert_eq!(r[1].ranks(), &[1, 1, 1]);
        assert!(parse_ranks("2,1", 3, 3).is_err());
        assert!(parse_ranks("2,2,0", 3, 3).is_err());
        assert!(parse_ranks("a,b,c", 3, 3).is_err());
        assert!(parse_ranks(";", 3, 3).is_err());
    }
}
