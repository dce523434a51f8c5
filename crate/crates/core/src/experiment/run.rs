use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{ExperimentSpec, Scenario, SettlingSeries, SCHEMA_VERSION};
use crate::error::{Error, Result};
use crate::flows::{gain_bound_consensus, gain_bound_dorap, FlowKind, FlowProblem};
use crate::graph::{build_incidence, lambda2_pos};
use crate::metrics::{
    consensus_error, constraint_mismatch, detect_settling, log10_floor, mean_tracking_distance, tail_max,
    zgs_residual, MetricSeries,
};
use crate::oracle::{consensus_reference, consensus_reference_parallel, dorap_reference, ReferenceTrajectory};
use crate::problems::{max_kappa, max_theta_hi, min_theta_lo, NewtonOptions};
use crate::sim::{euler_run_with_options, Trajectory};

/// Window (seconds) at the end of the horizon over which the chattering
/// amplitude is measured.
pub const CHATTER_WINDOW: f64 = 1.0;

/// Machine-readable result of one run, written as `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub schema_version: u32,
    pub name: String,
    pub flow: FlowKind,
    pub agents: usize,
    pub seed: u64,
    pub alpha: f64,
    /// Gain threshold from the calculator matching the flow; absent for the
    /// centralized flow or when a drift bound is unknown.
    pub alpha_bound: Option<f64>,
    pub alpha_exceeds_bound: Option<bool>,
    pub lambda2: Option<f64>,
    pub kappa: Option<f64>,
    pub theta_lo: f64,
    pub theta_hi: f64,
    pub delta: Option<f64>,
    pub settling_threshold: f64,
    pub settled_at: Option<f64>,
    pub final_e_x: f64,
    pub final_mean_error: f64,
    pub final_consensus: Option<f64>,
    pub final_constraint_mismatch: Option<f64>,
    /// Largest `V1` (networked flows) or mean error (centralized) over the
    /// last second.
    pub chattering: f64,
    pub max_oracle_residual: f64,
    pub steps: usize,
    pub wall_seconds: f64,
    pub seconds_per_step: f64,
}

/// Everything a run produced, before anything is written.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub summary: Summary,
    pub trajectory: Trajectory,
    pub reference: ReferenceTrajectory,
    pub metrics: MetricSeries,
}

/// The gain threshold of the scenario and the spectral constant it used.
#[derive(Debug, Clone, Copy)]
pub struct GainReport {
    pub lambda2: Option<f64>,
    pub kappa: Option<f64>,
    pub delta: Option<f64>,
    pub bound: Option<f64>,
}

pub fn gain_report(sc: &Scenario) -> Result<GainReport> {
    let n = sc.models.len();
    let kappa = max_kappa(&sc.models);
    let (lo, hi) = (min_theta_lo(&sc.models), max_theta_hi(&sc.models));
    let delta = sc.profiles.as_ref().map(|p| p.iter().map(|p| p.delta()).fold(0.0, f64::max));
    let Some(net) = &sc.net else {
        return Ok(GainReport { lambda2: None, kappa, delta, bound: None });
    };
    let lambda2 = lambda2_pos(&build_incidence(net)?)?.lambda2;
    let bound = match (sc.kind, kappa) {
        (FlowKind::ConsensusZgs, Some(k)) => Some(gain_bound_consensus(k, n, hi, lo, lambda2)?),
        (FlowKind::DualDorap, Some(k)) => Some(gain_bound_dorap(k, delta.unwrap_or(0.0), lo, hi, n, lambda2)?),
        _ => None,
    };
    Ok(GainReport { lambda2: Some(lambda2), kappa, delta, bound })
}

/// Builds, simulates, solves the oracle on the recording grid and computes
/// the metrics. Nothing is written.
pub fn execute(spec: &ExperimentSpec, stream: u64) -> Result<RunOutcome> {
    let sc = spec.build(stream)?;
    let gains = gain_report(&sc)?;
    let opts = NewtonOptions::default();
    let problem = match sc.kind {
        FlowKind::Centralized => FlowProblem::Centralized { model: &sc.models[0] },
        FlowKind::ConsensusZgs => FlowProblem::Consensus { models: &sc.models, net: sc.net.as_ref().expect("validated") },
        FlowKind::DualDorap => FlowProblem::DualDorap {
            models: &sc.models,
            profiles: sc.profiles.as_deref().expect("validated"),
            net: sc.net.as_ref().expect("validated"),
        },
    };
    let mut traj = euler_run_with_options(&problem, &sc.gain, sc.init.clone(), &sc.sim, &opts)?;
    if let Some(step) = traj.diverged_at {
        return Err(Error::Diverged { step });
    }

    let reference = match (sc.kind, &sc.profiles) {
        (FlowKind::DualDorap, Some(p)) => dorap_reference(&sc.models, p, &traj.times)?,
        _ if sc.parallel_oracle => consensus_reference_parallel(&sc.models, &traj.times)?,
        _ => consensus_reference(&sc.models, &traj.times)?,
    };

    let mean_error = mean_tracking_distance(&traj, &reference)?;
    let consensus = sc.net.as_ref().map(|net| consensus_error(&traj, net)).unwrap_or_default();
    let zgs = (sc.kind == FlowKind::ConsensusZgs).then(|| zgs_residual(&traj, &sc.models));
    let mismatch = match &sc.profiles {
        Some(p) => Some(constraint_mismatch(&traj, p)?),
        None => None,
    };
    let settle_series: Vec<f64> = match sc.settling_series {
        SettlingSeries::MeanError => mean_error.clone(),
        SettlingSeries::AuxNorm => {
            traj.aux.iter().map(|zs| zs.iter().map(|z| z.norm()).fold(0.0, f64::max)).collect()
        }
    };
    let settled_at = detect_settling(&traj.times, &settle_series, sc.settling_threshold, sc.settling_dwell)?;
    traj.settled_at = settled_at;
    let window = CHATTER_WINDOW.min(sc.sim.t_end);
    let chattering = if consensus.is_empty() {
        tail_max(&traj.times, &mean_error, window)
    } else {
        tail_max(&traj.times, &consensus, window)
    };

    let metrics = MetricSeries {
        times: traj.times.clone(),
        tracking_error: mean_error.iter().copied().map(log10_floor).collect(),
        mean_error,
        consensus,
        zgs,
        constraint_mismatch: mismatch,
        settled_at,
    };
    let last = |v: &[f64]| v.last().copied().unwrap_or(f64::NAN);
    let summary = Summary {
        schema_version: SCHEMA_VERSION,
        name: spec.name.clone(),
        flow: sc.kind,
        agents: sc.models.len(),
        seed: spec.seed,
        alpha: sc.gain.alpha,
        alpha_bound: gains.bound,
        alpha_exceeds_bound: gains.bound.map(|b| sc.gain.alpha > b),
        lambda2: gains.lambda2,
        kappa: gains.kappa,
        theta_lo: min_theta_lo(&sc.models),
        theta_hi: max_theta_hi(&sc.models),
        delta: gains.delta,
        settling_threshold: sc.settling_threshold,
        settled_at,
        final_e_x: last(&metrics.tracking_error),
        final_mean_error: last(&metrics.mean_error),
        final_consensus: metrics.consensus.last().copied(),
        final_constraint_mismatch: metrics.constraint_mismatch.as_deref().map(last),
        chattering,
        max_oracle_residual: reference.max_residual(),
        steps: traj.steps_taken,
        wall_seconds: traj.wall_seconds,
        seconds_per_step: traj.wall_seconds / traj.steps_taken.max(1) as f64,
    };
    Ok(RunOutcome { summary, trajectory: traj, reference, metrics })
}

impl RunOutcome {
    /// Writes `trajectory.csv`, `reference.csv`, `metrics.csv` and
    /// `summary.json` into `dir`, creating it if needed.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        self.trajectory.write_csv(fs::File::create(dir.join("trajectory.csv"))?)?;
        self.reference.write_csv(fs::File::create(dir.join("reference.csv"))?)?;
        self.metrics.write_csv(fs::File::create(dir.join("metrics.csv"))?)?;
        let json = serde_json::to_string_pretty(&self.summary).map_err(|e| Error::Spec(e.to_string()))?;
        fs::write(dir.join("summary.json"), json + "\n")?;
        Ok(())
    }
}

/// Runs `spec` and writes its outputs to `out`. Outputs are only written
/// once the whole run has succeeded.
pub fn run_experiment(spec: &ExperimentSpec, out: &Path) -> Result<Summary> {
    let outcome = execute(spec, 0)?;
    outcome.write(out)?;
    Ok(outcome.summary)
}

/// Loads a TOML spec from disk and runs it.
pub fn run_spec_file(path: &Path, out: &Path, seed: Option<u64>) -> Result<Summary> {
    let mut spec = ExperimentSpec::load(path)?;
    if let Some(s) = seed {
        spec.seed = s;
    }
    run_experiment(&spec, out)
}

/// Process exit status for each error class.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io(_) | Error::Csv(_) => 1,
        Error::Spec(_)
        | Error::InvalidParameter { .. }
        | Error::Dimension { .. }
        | Error::InitContract(_)
        | Error::InvalidNetwork(_)
        | Error::EmptyGraph => 2,
        Error::Disconnected { .. } => 3,
        Error::Diverged { .. } => 4,
        Error::NonFinite { .. }
        | Error::SingularHessian { .. }
        | Error::NoConvergence { .. }
        | Error::GridMismatch(_)
        | Error::SpectrallyDegenerate { .. } => 5,
    }
}

fn error_kind(err: &Error) -> &'static str {
    match err {
        Error::Io(_) | Error::Csv(_) => "io",
        Error::Disconnected { .. } => "disconnected",
        Error::Diverged { .. } => "diverged",
        e if exit_code(e) == 2 => "spec",
        _ => "numerical",
    }
}

/// One-line JSON description of an error, for stderr.
pub fn error_json(err: &Error) -> String {
    serde_json::json!({
        "error": error_kind(err),
        "exit_code": exit_code(err),
        "message": err.to_string(),
    })
    .to_string()
}
