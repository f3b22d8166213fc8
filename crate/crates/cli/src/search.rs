//! The `search` subcommand.

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use povmsim_core::search::{best_of, fixed_points, seesaw_all, SearchOptions, SearchTrace, Violator};
use serde_json::{json, Value};

use crate::analysis::analysis_row;
use crate::output::{self, Format, Row};
use crate::{load_povm, Ctx, NoiseArg};

/// Final visibilities within this distance count as one fixed point.
const CLUSTER_RADIUS: f64 = 1e-3;

#[derive(Args, Debug)]
pub struct SearchArgs {
    #[arg(long)]
    dim: usize,
    #[arg(long)]
    outcomes: usize,
    #[arg(long, value_enum, default_value_t = NoiseArg::Depol)]
    noise: NoiseArg,
    #[arg(long, default_value_t = 20)]
    restarts: usize,
    #[arg(long, default_value_t = 50)]
    max_iter: usize,
    /// Smallest decrease of the visibility that counts as progress.
    #[arg(long, default_value_t = 1e-5)]
    step_tol: f64,
    #[arg(long, value_enum, default_value_t = ViolatorArg::Relative)]
    violator: ViolatorArg,
    /// Start the first restart from this POVM (name or JSON file).
    #[arg(long)]
    initial: Option<String>,
    /// Write the best POVM found as JSON.
    #[arg(long)]
    povm_out: Option<PathBuf>,
    /// Write every trace as JSON.
    #[arg(long)]
    trace_out: Option<PathBuf>,
    /// Include every evaluated POVM in the trace JSON.
    #[arg(long)]
    snapshots: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ViolatorArg {
    Linear,
    Relative,
}

fn trace_json(t: &SearchTrace, snapshots: bool) -> Value {
    let mut v = json!({
        "seed": t.seed,
        "noise": t.noise.to_string(),
        "converged": t.converged,
        "visibility": t.best.v,
        "exact": t.best.exact,
        "active_outcomes": t.active_outcomes(),
        "error": t.error,
        "iterations": t.iterations,
        "best_povm": t.best_povm.to_json_value(),
    });
    if snapshots {
        v["snapshots"] = Value::Array(t.snapshots.iter().map(|p| p.to_json_value()).collect());
    }
    v
}

fn summary(t: &SearchTrace, restarts: usize) -> Row {
    analysis_row(
        json!(t.best.v),
        t.best.exact,
        Some(t.noise),
        Some(&t.best.stats),
        json!({
            "seed": t.seed,
            "converged": t.converged,
            "rounds": t.iterations.len(),
            "active_outcomes": t.active_outcomes().len(),
            "restarts": restarts,
        }),
    )
}

pub fn run(ctx: &Ctx, args: &SearchArgs) -> Result<bool> {
    let initial = args.initial.as_deref().map(load_povm).transpose()?;
    let opts = SearchOptions {
        max_iter: args.max_iter,
        tol: args.step_tol,
        restarts: args.restarts,
        seed: ctx.seed,
        violator: match args.violator {
            ViolatorArg::Linear => Violator::Linear,
            ViolatorArg::Relative => Violator::Relative,
        },
        solver: ctx.solver,
    };
    let traces = seesaw_all(initial.as_ref(), args.dim, args.outcomes, args.noise.into(), &opts)?;
    let points: Vec<Row> = fixed_points(&traces, CLUSTER_RADIUS)
        .into_iter()
        .map(|(v, count)| output::row(json!({"visibility": v, "count": count})))
        .collect();
    let all: Vec<Value> = traces.iter().map(|t| trace_json(t, args.snapshots)).collect();
    let failed = traces.iter().filter(|t| t.error.is_some()).count();
    let restarts = traces.len();
    let best = best_of(traces.clone());

    if let Some(path) = &args.povm_out {
        std::fs::write(path, best.best_povm.clone().labeled(format!("search-d{}-n{}", args.dim, args.outcomes)).to_json() + "\n")
            .with_context(|| format!("writing {}", path.display()))?;
    }
    if let Some(path) = &args.trace_out {
        std::fs::write(path, serde_json::to_string_pretty(&all)? + "\n").with_context(|| format!("writing {}", path.display()))?;
    }

    match ctx.format {
        Format::Json => {
            let doc = json!({
                "best": summary(&best, restarts),
                "fixed_points": points,
                "best_povm": best.best_povm.to_json_value(),
                "traces": all,
            });
            outln!("{}", serde_json::to_string_pretty(&doc)?);
        }
        Format::Csv => {
            let rows: Vec<Row> = traces
                .iter()
                .map(|t| {
                    output::row(json!({
                        "seed": t.seed,
                        "visibility": t.best.v,
                        "converged": t.converged,
                        "rounds": t.iterations.len(),
                        "active_outcomes": t.active_outcomes().len(),
                        "error": t.error,
                    }))
                })
                .collect();
            output::rows(Format::Csv, &rows)?;
        }
        Format::Text => {
            output::record(Format::Text, &summary(&best, restarts))?;
            outln!();
            outln!("fixed points (within {CLUSTER_RADIUS:e}):");
            output::rows(Format::Text, &points)?;
        }
    }
    if failed > 0 {
        log::warn!("{failed} of {restarts} restarts ended on a solver failure");
    }
    Ok(true)
}
