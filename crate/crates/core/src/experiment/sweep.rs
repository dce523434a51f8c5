//! One-parameter sweeps: the same spec run once per value, in parallel, each
//! in its own output subdirectory and with its own noise stream.

use std::fs;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentSpec;
use super::run::{execute, exit_code};
use crate::error::{Error, Result};
use crate::sim::NoiseSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    Alpha,
    /// Euler step; `record_every` is rescaled to keep the sample spacing.
    H,
    /// Gain `a` of `phi`.
    A,
    /// Exponent `p` of `phi`.
    P,
    /// Link noise std-dev; drift noise is left as configured.
    LinkSigma,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Alpha => "alpha",
            SweepParam::H => "h",
            SweepParam::A => "a",
            SweepParam::P => "p",
            SweepParam::LinkSigma => "link_sigma",
        }
    }

    /// Copy of `spec` with the parameter set to `value`.
    pub fn apply(self, spec: &ExperimentSpec, value: f64) -> ExperimentSpec {
        let mut s = spec.clone();
        match self {
            SweepParam::Alpha => s.gain.alpha = value,
            SweepParam::A => s.gain.a = value,
            SweepParam::P => s.gain.p = value,
            SweepParam::H => {
                let spacing = s.sim.h * s.sim.record_every as f64;
                s.sim.h = value;
                s.sim.record_every = ((spacing / value).round() as usize).max(1);
            }
            SweepParam::LinkSigma => {
                let drift = s.sim.noise.map_or(0.0, |n| n.drift_sigma);
                s.sim.noise = Some(NoiseSpec { link_sigma: value, drift_sigma: drift });
            }
        }
        s
    }
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "alpha" => Ok(SweepParam::Alpha),
            "h" => Ok(SweepParam::H),
            "a" => Ok(SweepParam::A),
            "p" => Ok(SweepParam::P),
            "link_sigma" => Ok(SweepParam::LinkSigma),
            _ => Err(Error::Spec(format!("unknown sweep parameter `{s}`; expected alpha, h, a, p or link_sigma"))),
        }
    }
}

/// One row of `sweep_summary.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub index: usize,
    pub param: String,
    pub value: f64,
    pub status: String,
    pub exit_code: i32,
    pub alpha: Option<f64>,
    pub alpha_bound: Option<f64>,
    pub settled_at: Option<f64>,
    pub final_e_x: Option<f64>,
    pub final_mean_error: Option<f64>,
    pub chattering: Option<f64>,
    pub message: String,
}

/// Runs `spec` once per value. Run `k` uses noise stream `k` and writes to
/// `out/<param>_<k>`; failures are recorded in the row and do not stop the
/// sweep. The combined table goes to `out/sweep_summary.csv`.
pub fn run_sweep(spec: &ExperimentSpec, param: SweepParam, values: &[f64], out: &Path) -> Result<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(Error::Spec("sweep needs at least one value".into()));
    }
    fs::create_dir_all(out)?;
    let rows: Vec<SweepRow> = values
        .par_iter()
        .enumerate()
        .map(|(k, &value)| {
            let s = param.apply(spec, value);
            let dir = out.join(format!("{}_{k}", param.name()));
            let result = execute(&s, k as u64).and_then(|o| o.write(&dir).map(|_| o.summary));
            match result {
                Ok(sum) => SweepRow {
                    index: k,
                    param: param.name().into(),
                    value,
                    status: "ok".into(),
                    exit_code: 0,
                    alpha: Some(sum.alpha),
                    alpha_bound: sum.alpha_bound,
                    settled_at: sum.settled_at,
                    final_e_x: Some(sum.final_e_x),
                    final_mean_error: Some(sum.final_mean_error),
                    chattering: Some(sum.chattering),
                    message: String::new(),
                },
                Err(e) => SweepRow {
                    index: k,
                    param: param.name().into(),
                    value,
                    status: "failed".into(),
                    exit_code: exit_code(&e),
                    alpha: None,
                    alpha_bound: None,
                    settled_at: None,
                    final_e_x: None,
                    final_mean_error: None,
                    chattering: None,
                    message: e.to_string(),
                },
            }
        })
        .collect();
    let mut w = csv::Writer::from_path(out.join("sweep_summary.csv"))?;
    for r in &rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(rows)
}

/// Parses `"0.1,0.2,0.3"`.
pub fn parse_values(list: &str) -> Result<Vec<f64>> {
    list.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|e| Error::Spec(format!("bad sweep value `{v}`: {e}"))))
        .collect()
}
