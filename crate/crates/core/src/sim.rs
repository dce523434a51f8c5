//! Fixed-step explicit Euler integration of the flows, with optional
//! Gaussian reading noise and trajectory recording.
//!
//! Randomness comes from `ChaCha8Rng` (a counter-based stream cipher)
//! seeded with [`SimConfig::seed`] and stream [`SimConfig::stream`], so runs
//! reproduce bit-for-bit across platforms.

use std::io::Write;
use std::time::Instant;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flows::{FlowKind, FlowProblem, GainSpec, Readings, SolverState};
use crate::problems::{NewtonOptions, TvCost};

/// Any state norm above this aborts the run as diverged.
pub const DIVERGENCE_LIMIT: f64 = 1e9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    /// Std-dev of the noise on every neighbor-state reading, per component.
    #[serde(default)]
    pub link_sigma: f64,
    /// Std-dev of the noise on every drift-term reading, per component.
    #[serde(default)]
    pub drift_sigma: f64,
}

impl NoiseSpec {
    /// Same variance on links and drift readings.
    pub fn with_variance(variance: f64) -> Self {
        let s = variance.sqrt();
        Self { link_sigma: s, drift_sigma: s }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    /// Euler step in seconds.
    pub h: f64,
    /// Horizon in seconds.
    pub t_end: f64,
    #[serde(default = "one")]
    pub record_every: usize,
    #[serde(default)]
    pub seed: u64,
    /// RNG stream; sweeps give every run its own.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub stream: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseSpec>,
}

fn one() -> usize {
    1
}

fn is_zero(v: &u64) -> bool {
    *v == 0
}

impl SimConfig {
    pub fn new(h: f64, t_end: f64, record_every: usize) -> Self {
        Self { h, t_end, record_every, seed: 0, stream: 0, noise: None }
    }

    pub fn with_noise(mut self, noise: NoiseSpec) -> Self {
        self.noise = Some(noise);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h.is_finite() && self.h > 0.0) {
            return Err(Error::param("h", format!("must be positive, got {}", self.h)));
        }
        if !(self.t_end.is_finite() && self.t_end >= self.h) {
            return Err(Error::param("t_end", format!("must be at least h, got {}", self.t_end)));
        }
        if self.record_every == 0 {
            return Err(Error::param("record_every", "must be at least 1"));
        }
        if let Some(n) = self.noise {
            if !(n.link_sigma >= 0.0 && n.drift_sigma >= 0.0) || !n.link_sigma.is_finite() || !n.drift_sigma.is_finite() {
                return Err(Error::param("noise", "sigmas must be finite and non-negative"));
            }
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.h).round() as usize
    }

    /// Times at which samples are recorded.
    pub fn record_times(&self) -> Vec<f64> {
        let n = self.steps();
        (0..=n)
            .filter(|k| k % self.record_every == 0 || *k == n)
            .map(|k| k as f64 * self.h)
            .collect()
    }
}

/// Adds i.i.d. `N(0, sigma^2)` to every component. `sigma = 0` returns the
/// reading untouched and draws nothing.
pub fn inject_noise<R: Rng + ?Sized>(reading: &DVector<f64>, sigma: f64, rng: &mut R) -> DVector<f64> {
    if sigma == 0.0 {
        return reading.clone();
    }
    reading.map(|v| {
        let e: f64 = StandardNormal.sample(rng);
        v + sigma * e
    })
}

/// Independent draws for every directed reading.
struct NoisyReadings {
    rng: ChaCha8Rng,
    noise: NoiseSpec,
}

impl Readings for NoisyReadings {
    fn neighbor(&mut self, _agent: usize, _neighbor: usize, value: &DVector<f64>) -> DVector<f64> {
        inject_noise(value, self.noise.link_sigma, &mut self.rng)
    }

    fn drift(&mut self, _agent: usize, value: DVector<f64>) -> DVector<f64> {
        if self.noise.drift_sigma == 0.0 {
            return value;
        }
        inject_noise(&value, self.noise.drift_sigma, &mut self.rng)
    }
}

/// Recorded run. `primary[k][i]` is agent `i`'s primary state at `times[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub kind: FlowKind,
    pub times: Vec<f64>,
    pub primary: Vec<Vec<DVector<f64>>>,
    pub aux: Vec<Vec<DVector<f64>>>,
    /// Recovered primal states (dual flow only).
    pub primal: Option<Vec<Vec<DVector<f64>>>>,
    /// First step whose state was non-finite or exceeded [`DIVERGENCE_LIMIT`].
    pub diverged_at: Option<usize>,
    /// Filled in by the caller after settling detection.
    pub settled_at: Option<f64>,
    pub steps_taken: usize,
    pub wall_seconds: f64,
}

impl Trajectory {
    pub fn agent_count(&self) -> usize {
        self.primary.first().map_or(0, Vec::len)
    }

    pub fn dim(&self) -> usize {
        self.primary.first().and_then(|s| s.first()).map_or(0, |v| v.len())
    }

    pub fn diverged(&self) -> bool {
        self.diverged_at.is_some()
    }

    /// The decision variables compared against the optimum: recovered
    /// primals for the dual flow, primary states otherwise.
    pub fn decisions(&self) -> &[Vec<DVector<f64>>] {
        self.primal.as_deref().unwrap_or(&self.primary)
    }

    /// CSV: `t`, then every agent's primary components, then `z`, then
    /// (dual flow) recovered primal components.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let n = self.agent_count();
        let d = self.dim();
        let prim = if self.kind == FlowKind::DualDorap { "lam" } else { "x" };
        let mut header = vec!["t".to_string()];
        let mut push = |prefix: &str| {
            for i in 1..=n {
                for c in 1..=d {
                    header.push(format!("{prefix}{i}_{c}"));
                }
            }
        };
        push(prim);
        push("z");
        if self.primal.is_some() {
            push("xrec");
        }
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&header)?;
        for k in 0..self.times.len() {
            let mut row = vec![self.times[k]];
            let mut add = |states: &[DVector<f64>]| {
                for s in states {
                    row.extend(s.iter());
                }
            };
            add(&self.primary[k]);
            add(&self.aux[k]);
            if let Some(p) = &self.primal {
                add(&p[k]);
            }
            out.write_record(row.iter().map(f64::to_string))?;
        }
        out.flush()?;
        Ok(())
    }
}

pub fn euler_run<M: TvCost>(
    problem: &FlowProblem<'_, M>,
    gain: &GainSpec,
    init: SolverState,
    cfg: &SimConfig,
) -> Result<Trajectory> {
    euler_run_with_options(problem, gain, init, cfg, &NewtonOptions::default())
}

/// `state_{k+1} = state_k + h * rhs(state_k, t_k)`, recording every
/// `record_every` steps and at the final step.
pub fn euler_run_with_options<M: TvCost>(
    problem: &FlowProblem<'_, M>,
    gain: &GainSpec,
    init: SolverState,
    cfg: &SimConfig,
    opts: &NewtonOptions,
) -> Result<Trajectory> {
    cfg.validate()?;
    gain.validate()?;
    problem.validate()?;
    let scale = 1.0 + init.aux.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let violation = problem.init_violation(&init, opts)?;
    if !(violation <= 1e-9 * scale) {
        return Err(Error::InitContract(format!(
            "z(0) deviates from its required value by {violation:e}"
        )));
    }

    let mut readings: Box<dyn Readings> = match cfg.noise {
        Some(noise) if noise.link_sigma > 0.0 || noise.drift_sigma > 0.0 => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(cfg.stream);
            Box::new(NoisyReadings { rng, noise })
        }
        _ => Box::new(crate::flows::ExactReadings),
    };

    let steps = cfg.steps();
    let h = cfg.h;
    let dual = problem.kind() == FlowKind::DualDorap;
    let mut traj = Trajectory {
        kind: problem.kind(),
        times: Vec::new(),
        primary: Vec::new(),
        aux: Vec::new(),
        primal: dual.then(Vec::new),
        diverged_at: None,
        settled_at: None,
        steps_taken: 0,
        wall_seconds: 0.0,
    };
    let mut state = init;
    state.t = 0.0;
    let start = Instant::now();
    for k in 0..=steps {
        state.t = k as f64 * h;
        let d = problem.rhs(gain, &state, readings.as_mut(), opts)?;
        if d.primal.is_some() {
            state.primal = d.primal;
        }
        if k % cfg.record_every == 0 || k == steps {
            traj.times.push(state.t);
            traj.primary.push(state.primary.clone());
            traj.aux.push(state.aux.clone());
            if let (Some(rec), Some(p)) = (traj.primal.as_mut(), state.primal.as_ref()) {
                rec.push(p.clone());
            }
        }
        if k == steps {
            break;
        }
        for (x, dx) in state.primary.iter_mut().zip(&d.primary) {
            x.axpy(h, dx, 1.0);
        }
        for (z, dz) in state.aux.iter_mut().zip(&d.aux) {
            z.axpy(h, dz, 1.0);
        }
        traj.steps_taken = k + 1;
        let norm = state.max_norm();
        if !(norm <= DIVERGENCE_LIMIT) {
            traj.diverged_at = Some(k + 1);
            break;
        }
    }
    traj.wall_seconds = start.elapsed().as_secs_f64();
    Ok(traj)
}
