//! The `sweep` subcommand: threshold curves as plot data.

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use povmsim_core::constructions::{fsic2_params, fsic3_params, qutrit_sic};
use povmsim_core::simulability::{visibility_with, VisibilityOptions};
use povmsim_core::NoiseModel;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::output::{self, Format, Row};
use crate::{Ctx, NoiseArg};

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[arg(value_enum, default_value_t = Family::Sic3)]
    family: Family,
    /// Lower end: an angle such as 0 or pi/18 for sic3, a dimension otherwise.
    #[arg(long)]
    from: Option<String>,
    /// Upper end, included.
    #[arg(long)]
    to: Option<String>,
    /// Number of equally spaced angles (sic3 only).
    #[arg(long, default_value_t = 25)]
    samples: usize,
    #[arg(long, value_enum, default_value_t = NoiseArg::Depol)]
    noise: NoiseArg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Family {
    /// Qutrit SICs from the fiducial family, over the angle θ.
    Sic3,
    /// Flagged qubit SIC, closed-form threshold over the dimension.
    Fsic2,
    /// Flagged Hesse SIC, threshold from the consistency equation over the dimension.
    Fsic3,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub param: String,
    pub lo: f64,
    pub hi: f64,
    pub samples: usize,
    pub noise: NoiseModel,
}

impl SweepSpec {
    pub fn new(param: &str, lo: f64, hi: f64, samples: usize, noise: NoiseModel) -> Result<Self> {
        if samples < 2 {
            bail!("a sweep needs at least 2 samples");
        }
        if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
            bail!("empty range [{lo}, {hi}]");
        }
        Ok(Self { param: param.into(), lo, hi, samples, noise })
    }

    pub fn points(&self) -> Vec<f64> {
        let n = (self.samples - 1) as f64;
        (0..self.samples)
            .map(|i| if i + 1 == self.samples { self.hi } else { self.lo + (self.hi - self.lo) * i as f64 / n })
            .collect()
    }
}

/// Parses `x`, `pi`, `pi/m`, `k*pi` or `k*pi/m`.
pub fn parse_angle(s: &str) -> Result<f64> {
    let t = s.trim().to_ascii_lowercase().replace(' ', "");
    if let Ok(x) = t.parse::<f64>() {
        return Ok(x);
    }
    let bad = || format!("cannot read '{s}' as an angle");
    let (num, den) = match t.split_once('/') {
        Some((n, d)) => (n.to_string(), d.parse::<f64>().with_context(bad)?),
        None => (t.clone(), 1.0),
    };
    let k = match num.as_str() {
        "pi" => 1.0,
        "-pi" => -1.0,
        other => match other.strip_suffix("*pi") {
            Some(k) => k.parse::<f64>().with_context(bad)?,
            None => bail!(bad()),
        },
    };
    Ok(k * std::f64::consts::PI / den)
}

fn status_row(param: Value, v: Option<f64>, exact: Option<bool>, gap: Option<f64>, status: String) -> Row {
    output::row(json!({"param": param, "v": v, "exact": exact, "gap": gap, "status": status}))
}

fn sic3_rows(ctx: &Ctx, spec: &SweepSpec) -> Vec<Row> {
    let opts = VisibilityOptions { solver: ctx.solver, ..Default::default() };
    spec.points()
        .into_par_iter()
        .map(|theta| {
            match qutrit_sic(theta).map_err(anyhow::Error::from).and_then(|p| Ok(visibility_with(&p, spec.noise, &opts)?)) {
                Ok(r) => status_row(json!(theta), Some(r.v), Some(r.exact), Some(r.stats.gap), "ok".into()),
                Err(e) => {
                    log::error!("θ = {theta}: {e:#}");
                    status_row(json!(theta), None, None, None, format!("failed: {e:#}"))
                }
            }
        })
        .collect()
}

fn dimension_rows(family: Family, lo: usize, hi: usize) -> Vec<Row> {
    (lo..=hi)
        .into_par_iter()
        .map(|d| {
            let v = match family {
                Family::Fsic2 if d >= 2 => Ok(fsic2_params(d).v),
                Family::Fsic2 => Err(anyhow::anyhow!("fsic2 needs d >= 2")),
                _ => fsic3_params(d).map(|p| p.v).map_err(anyhow::Error::from),
            };
            match v {
                Ok(v) => status_row(json!(d), Some(v), Some(true), None, "ok".into()),
                Err(e) => {
                    log::error!("d = {d}: {e:#}");
                    status_row(json!(d), None, None, None, format!("failed: {e:#}"))
                }
            }
        })
        .collect()
}

pub fn run(ctx: &Ctx, args: &SweepArgs) -> Result<bool> {
    let rows = match args.family {
        Family::Sic3 => {
            let lo = parse_angle(args.from.as_deref().unwrap_or("0"))?;
            let hi = parse_angle(args.to.as_deref().unwrap_or("pi/9"))?;
            let spec = SweepSpec::new("theta", lo, hi, args.samples, args.noise.into())?;
            sic3_rows(ctx, &spec)
        }
        family => {
            if !matches!(args.noise, NoiseArg::Depol) {
                bail!("the flagged families are tabulated for depolarizing noise only");
            }
            let (dlo, dhi) = if family == Family::Fsic2 { ("2", "14") } else { ("4", "9") };
            let lo: usize = args.from.as_deref().unwrap_or(dlo).parse().context("--from must be a dimension")?;
            let hi: usize = args.to.as_deref().unwrap_or(dhi).parse().context("--to must be a dimension")?;
            if lo >= hi {
                bail!("empty dimension range {lo}..{hi}");
            }
            dimension_rows(family, lo, hi)
        }
    };
    let format = if ctx.format == Format::Text { Format::Csv } else { ctx.format };
    output::rows(format, &rows)?;
    Ok(rows.iter().all(|r| r["status"] == "ok"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn angles() {
        assert_eq!(parse_angle("0.25").unwrap(), 0.25);
        assert_eq!(parse_angle("pi").unwrap(), PI);
        assert!((parse_angle("pi/9").unwrap() - PI / 9.0).abs() < 1e-16);
        assert!((parse_angle("2*pi/3").unwrap() - 2.0 * PI / 3.0).abs() < 1e-16);
        assert!(parse_angle("tau").is_err());
        assert!(parse_angle("pi/x").is_err());
    }

    #[test]
    fn spec_bounds() {
        assert!(SweepSpec::new("theta", 0.0, 0.0, 5, NoiseModel::Depolarizing).is_err());
        assert!(SweepSpec::new("theta", 0.0, 1.0, 1, NoiseModel::Depolarizing).is_err());
        assert!(SweepSpec::new("theta", 1.0, 0.0, 5, NoiseModel::Depolarizing).is_err());
        let s = SweepSpec::new("theta", 0.0, PI / 9.0, 25, NoiseModel::Depolarizing).unwrap();
        let p = s.points();
        assert_eq!(p.len(), 25);
        assert_eq!(p[0], 0.0);
        assert_eq!(p[24], PI / 9.0);
        assert!(p.windows(2).all(|w| w[0] < w[1]));
    }
}
