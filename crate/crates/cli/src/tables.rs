//! The `tables` subcommand: threshold visibilities and witness bounds
//! next to their published values.

use std::f64::consts::PI;
use std::path::Path;

use anyhow::{bail, Context, Result};
use povmsim_core::constructions::{fsic2, fsic3, hesse_sic, norrell_sic, sic2, sic4, sic_from_fiducial_with};
use povmsim_core::operator::c64;
use povmsim_core::sdp::SolverOptions;
use povmsim_core::simulability::{visibility_with, witness_bound_with, VisibilityOptions};
use povmsim_core::{NoiseModel, Povm, StateVector, Tolerances};
use rayon::prelude::*;
use serde::Deserialize;
use serde_json::json;

use crate::output::{self, Row};
use crate::Ctx;

/// Published values quoted to four digits.
const DIGITS4: f64 = 1e-4;
/// Published values given in closed form.
const CLOSED: f64 = 1e-6;
/// Rank vectors per witness package.
const PACKAGE: usize = 50;
const LONG_ESTIMATE: &str = "about 75 s of single-core time with an optimized build";

type Compute = Box<dyn Fn(&SolverOptions) -> Result<Vec<f64>> + Send + Sync>;

struct Quantity {
    name: &'static str,
    published: Option<f64>,
    tol: f64,
}

struct Job {
    table: &'static str,
    row: String,
    quantities: Vec<Quantity>,
    /// `Err` holds the reason a row is not computed.
    compute: std::result::Result<Compute, String>,
}

fn q(name: &'static str, published: Option<f64>, tol: f64) -> Quantity {
    Quantity { name, published, tol }
}

fn threshold(row: &str, p: Povm, noise: NoiseModel, published: Option<f64>, tol: f64) -> Job {
    let name = match noise {
        NoiseModel::Depolarizing => "v_depol",
        NoiseModel::WorstCase => "v_worst",
    };
    Job {
        table: "2",
        row: row.into(),
        quantities: vec![q(name, published, tol)],
        compute: Ok(Box::new(move |solver| {
            let r = visibility_with(&p, noise, &VisibilityOptions { solver: *solver, ..Default::default() })?;
            Ok(vec![r.v])
        })),
    }
}

fn thresholds(row: &str, p: &Povm, published: [Option<f64>; 2], tols: [f64; 2]) -> Vec<Job> {
    vec![
        threshold(row, p.clone(), NoiseModel::Depolarizing, published[0], tols[0]),
        threshold(row, p.clone(), NoiseModel::WorstCase, published[1], tols[1]),
    ]
}

fn witness(row: &str, p: Povm, published: [Option<f64>; 2], tol: f64) -> Job {
    Job {
        table: "I",
        row: row.into(),
        quantities: vec![q("beta", published[0], tol), q("v_beta", published[1], tol)],
        compute: Ok(Box::new(move |solver| {
            let r = witness_bound_with(&p, PACKAGE, solver)?;
            if r.failed_packages() > 0 {
                bail!("{} witness packages failed", r.failed_packages());
            }
            Ok(vec![r.beta, r.v_beta])
        })),
    }
}

fn skipped(table: &'static str, row: &str, quantities: Vec<Quantity>, reason: &str) -> Job {
    Job { table, row: row.into(), quantities, compute: Err(reason.into()) }
}

fn skipped_thresholds(row: &str, published: [Option<f64>; 2], reason: &str) -> Job {
    skipped("2", row, vec![q("v_depol", published[0], DIGITS4), q("v_worst", published[1], DIGITS4)], reason)
}

/// One SIC fiducial from the `--fiducials` file.
#[derive(Debug, Deserialize)]
pub struct Fiducial {
    pub label: String,
    /// `[re, im]` pairs.
    pub amplitudes: Vec<[f64; 2]>,
}

pub fn read_fiducials(path: &Path) -> Result<Vec<Fiducial>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn fiducial_povm(f: &Fiducial) -> Result<Povm> {
    let v = StateVector::new(f.amplitudes.iter().map(|a| c64(a[0], a[1])).collect())?;
    let tol = Tolerances { sic_overlap: 1e-6, ..Default::default() };
    Ok(sic_from_fiducial_with(&v, &tol).with_context(|| format!("fiducial {}", f.label))?.labeled(f.label.clone()))
}

/// Published (v_depol, v_worst) and (β, v_β) of SICs that are not built in.
fn published(label: &str) -> ([Option<f64>; 2], [Option<f64>; 2]) {
    match label {
        "3a" => ([Some(0.8003), Some(0.8687)], [Some(0.8821), Some(0.8232)]),
        "4a" => ([Some(0.8255), Some(0.8739)], [Some(0.8839), Some(0.8452)]),
        "5a" => ([None, None], [Some(0.8669), Some(0.8336)]),
        "6a" => ([None, None], [Some(0.8655), Some(0.8386)]),
        _ => ([None, None], [None, None]),
    }
}

fn jobs(long: bool, fiducials: &[Fiducial]) -> Result<Vec<Job>> {
    let c = (PI / 9.0).cos();
    let mut out = Vec::new();
    for (row, published) in [("most_d=2", [0.8165, 0.9082]), ("most_d=3", [0.7931, 0.8621]), ("most_d=4", [0.7823, 0.8681])] {
        out.push(skipped_thresholds(row, published.map(Some), "not recomputed, see `search`"));
    }
    out.extend(thresholds("2a", &sic2(), [Some(0.8165), Some(0.9082)], [DIGITS4; 2]));
    out.extend(thresholds("3b", &norrell_sic(), [Some(0.8058), Some(8.0 / 9.0)], [DIGITS4, CLOSED]));
    out.extend(thresholds("3c", &hesse_sic(), [Some(0.7931), Some(0.8621)], [DIGITS4; 2]));
    out.extend(thresholds("fSIC2", &fsic2(3)?, [Some(0.7985), Some(0.9137)], [DIGITS4; 2]));
    if long {
        out.extend(thresholds("4a", &sic4(), [Some(0.8255), Some(0.8739)], [DIGITS4; 2]));
        out.extend(thresholds("fSIC3", &fsic3(4)?, [Some(0.7823), Some(0.8704)], [DIGITS4; 2]));
    } else {
        out.push(skipped_thresholds("4a", [Some(0.8255), Some(0.8739)], "needs --long"));
        out.push(skipped_thresholds("fSIC3", [Some(0.7823), Some(0.8704)], "needs --long"));
    }
    out.push(witness("2a", sic2(), [Some(1.0 / 6f64.sqrt() + 0.5), Some((2.0f64 / 3.0).sqrt())], CLOSED));
    out.push(witness("3b", norrell_sic(), [Some(8.0 / 9.0), Some(5.0 / 6.0)], CLOSED));
    out.push(witness("3c", hesse_sic(), [Some(4.0 / 9.0 * (1.0 + c)), Some((1.0 + 4.0 * c) / 6.0)], CLOSED));
    if long {
        out.push(witness("4a", sic4(), [Some(0.8839), Some(0.8452)], DIGITS4));
    } else {
        out.push(skipped("I", "4a", vec![q("beta", Some(0.8839), DIGITS4), q("v_beta", Some(0.8452), DIGITS4)], "needs --long"));
    }
    let listed: Vec<&str> = fiducials.iter().map(|f| f.label.as_str()).collect();
    for row in ["3a", "5a", "6a"] {
        if !listed.contains(&row) {
            let (_, w) = published(row);
            out.push(skipped("I", row, vec![q("beta", w[0], DIGITS4), q("v_beta", w[1], DIGITS4)], "needs a --fiducials entry"));
        }
    }
    for f in fiducials {
        let p = fiducial_povm(f)?;
        let (t2, t1) = published(&f.label);
        match p.dim() {
            3 => out.extend(thresholds(&f.label, &p, t2, [DIGITS4; 2])),
            4 if long => out.extend(thresholds(&f.label, &p, t2, [DIGITS4; 2])),
            4 => out.push(skipped_thresholds(&f.label, t2, "needs --long")),
            _ => {}
        }
        if p.dim() <= 3 || long {
            out.push(witness(&f.label, p, t1, DIGITS4));
        } else {
            out.push(skipped("I", &f.label, vec![q("beta", t1[0], DIGITS4), q("v_beta", t1[1], DIGITS4)], "needs --long"));
        }
    }
    Ok(out)
}

fn rows_of(job: &Job, solver: &SolverOptions) -> Vec<Row> {
    let result = job.compute.as_ref().map(|f| f(solver));
    job.quantities
        .iter()
        .enumerate()
        .map(|(i, qty)| {
            let (computed, status) = match &result {
                Ok(Ok(vals)) => {
                    let v = vals[i];
                    let status = match qty.published {
                        Some(p) if (v - p).abs() <= qty.tol => "pass".to_string(),
                        Some(_) => "FAIL".to_string(),
                        None => "computed".to_string(),
                    };
                    (Some(v), status)
                }
                Ok(Err(e)) => {
                    log::error!("row {} {}: {e:#}", job.row, qty.name);
                    (None, format!("error: {e:#}"))
                }
                Err(reason) => (None, format!("skipped ({reason})")),
            };
            output::row(json!({
                "table": job.table,
                "row": job.row,
                "quantity": qty.name,
                "computed": computed,
                "published": qty.published,
                "deviation": computed.zip(qty.published).map(|(c, p)| c - p),
                "tolerance": qty.tol,
                "status": status,
            }))
        })
        .collect()
}

pub fn run(ctx: &Ctx, fiducials: Option<&Path>) -> Result<bool> {
    let fiducials = fiducials.map(read_fiducials).transpose()?.unwrap_or_default();
    if ctx.long {
        eprintln!("including d = 4 rows: {LONG_ESTIMATE}");
    } else {
        eprintln!("d = 4 rows skipped; --long adds them ({LONG_ESTIMATE})");
    }
    let jobs = jobs(ctx.long, &fiducials)?;
    let rows: Vec<Row> = jobs.par_iter().map(|j| rows_of(j, &ctx.solver)).collect::<Vec<_>>().concat();
    output::rows(ctx.format, &rows)?;
    Ok(rows.iter().all(|r| {
        let s = r["status"].as_str().unwrap_or("");
        s != "FAIL" && !s.starts_with("error")
    }))
}
