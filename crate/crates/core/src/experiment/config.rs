//! TOML experiment specs and their materialisation into a runnable
//! [`Scenario`]. Agent and node indices in the file are 1-based.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flows::{FlowKind, GainSpec, SolverState};
use crate::graph::Network;
use crate::problems::{AffineDriftQuadratic, CostModel, NewtonOptions, ResourceProfile, TvLogistic};
use crate::signal::Signal;
use crate::sim::{NoiseSpec, SimConfig};

/// Bumped whenever the spec, CSV or summary layout changes.
pub const SCHEMA_VERSION: u32 = 1;

/// Stream reserved for drawing random problem data and initial states, so it
/// never collides with the per-run simulation streams `0, 1, 2, ...`.
const PROBLEM_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: String,
    /// Seeds every random draw: problem data, initial states and noise.
    #[serde(default)]
    pub seed: u64,
    pub flow: FlowKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub network: Option<NetworkSpec>,
    pub problem: ProblemSpec,
    /// Per-agent demand signals, one list of components per agent (dual flow only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub demand: Option<Vec<Vec<Signal>>>,
    pub gain: GainSpec,
    pub sim: SimSpec,
    #[serde(default)]
    pub init: InitSpec,
    #[serde(default)]
    pub oracle: OracleSpec,
    #[serde(default)]
    pub settling: SettlingSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSpec {
    /// Named topology, see [`builtin_network`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builtin: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nodes: Option<usize>,
    /// `[i, j, weight]` triples, 1-based.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges: Option<Vec<(usize, usize, f64)>>,
}

impl NetworkSpec {
    pub fn named(name: &str) -> Self {
        Self { builtin: Some(name.into()), nodes: None, edges: None }
    }

    pub fn explicit(nodes: usize, edges: Vec<(usize, usize, f64)>) -> Self {
        Self { builtin: None, nodes: Some(nodes), edges: Some(edges) }
    }

    pub fn build(&self) -> Result<Network> {
        match (&self.builtin, self.nodes, &self.edges) {
            (Some(name), None, None) => builtin_network(name),
            (None, Some(n), Some(edges)) => Network::from_one_based(n, edges),
            _ => Err(Error::Spec("network needs either `builtin` or both `nodes` and `edges`".into())),
        }
    }
}

/// Named topologies: `ring12_chords3` is the circulant graph `C12(1, 3)`
/// (a 12-ring plus chords to the third neighbour, unit weights);
/// `cycleN` / `pathN` / `completeN` are the usual families on `N` nodes.
pub fn builtin_network(name: &str) -> Result<Network> {
    let sized = |prefix: &str| name.strip_prefix(prefix).and_then(|n| n.parse::<usize>().ok());
    if name == "ring12_chords3" {
        Network::circulant(12, &[1, 3], 1.0)
    } else if let Some(n) = sized("cycle") {
        Network::circulant(n, &[1], 1.0)
    } else if let Some(n) = sized("path") {
        Network::new(n, (1..n).map(|i| (i - 1, i, 1.0)))
    } else if let Some(n) = sized("complete") {
        Network::new(n, (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j, 1.0))))
    } else {
        Err(Error::Spec(format!("unknown builtin network `{name}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSpec {
    /// `f_i = 1/2 x^T diag(a) x + b(t)^T x + c(t)`.
    Quadratic { agents: Vec<QuadraticAgent> },
    /// Scalar `f_i = (a x + b(t))^2 / 2`.
    SquaredAffine { agents: Vec<SquaredAffineAgent> },
    /// Time-varying logistic regression with explicit per-agent data.
    Logistic { freq: f64, agents: Vec<LogisticAgent> },
    /// Logistic regression with seeded data: integer `beta` uniform in
    /// `[beta_min, beta_max]`, `y0` uniform in `[0, 1]^dim`, labels `±1`.
    LogisticRandom {
        agents: usize,
        freq: f64,
        #[serde(default = "default_beta_min")]
        beta_min: u32,
        #[serde(default = "default_beta_max")]
        beta_max: u32,
        #[serde(default = "default_dim")]
        dim: usize,
    },
}

fn default_beta_min() -> u32 {
    1
}

fn default_beta_max() -> u32 {
    8
}

fn default_dim() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadraticAgent {
    /// Diagonal curvature.
    pub a: Vec<f64>,
    /// Drift, one signal per component.
    pub b: Vec<Signal>,
    #[serde(default, skip_serializing_if = "is_zero_signal")]
    pub c: Signal,
}

fn is_zero_signal(s: &Signal) -> bool {
    s.0.is_empty()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SquaredAffineAgent {
    pub a: f64,
    pub b: Signal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogisticAgent {
    pub label: f64,
    pub y0: Vec<f64>,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSpec {
    pub h: f64,
    pub t_end: f64,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseSpec>,
}

fn default_record_every() -> usize {
    1
}

/// Initial primary state (`x_i(0)`, or `lambda_i(0)` for the dual flow).
/// The auxiliary state always follows the initialisation contract.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitSpec {
    #[default]
    Zeros,
    /// One vector per agent.
    Values { values: Vec<Vec<f64>> },
    /// Independent uniform draws in `[lo, hi]` from the spec seed.
    Uniform { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSpec {
    /// Solve samples in parallel from cold starts instead of serially with
    /// warm starts.
    #[serde(default)]
    pub parallel: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SettlingSeries {
    /// `max_i ||z_i||`.
    AuxNorm,
    /// `(1/N) sum_i ||x_i - x_i*||`.
    MeanError,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SettlingSpec {
    /// Defaults to `10 h (a + alpha)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(default = "default_dwell")]
    pub dwell: f64,
    /// Defaults to `aux_norm` for the centralized flow and `mean_error`
    /// otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub series: Option<SettlingSeries>,
}

fn default_dwell() -> f64 {
    crate::metrics::DEFAULT_DWELL
}

impl Default for SettlingSpec {
    fn default() -> Self {
        Self { threshold: None, dwell: default_dwell(), series: None }
    }
}

impl ExperimentSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Spec(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Spec(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    pub fn sim_config(&self, stream: u64) -> SimConfig {
        SimConfig {
            h: self.sim.h,
            t_end: self.sim.t_end,
            record_every: self.sim.record_every,
            seed: self.seed,
            stream,
            noise: self.sim.noise,
        }
    }

    /// Checks every field without running anything.
    pub fn validate(&self) -> Result<()> {
        self.build(0).map(|_| ())
    }

    /// Materialises the models, network, profiles and initial state.
    /// `stream` selects the noise stream of the simulation.
    pub fn build(&self, stream: u64) -> Result<Scenario> {
        self.gain.validate()?;
        let sim = self.sim_config(stream);
        sim.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(PROBLEM_STREAM);
        let models = build_models(&self.problem, &mut rng)?;
        if models.is_empty() {
            return Err(Error::Spec("problem has no agents".into()));
        }
        let n = models.len();
        let dim = crate::problems::TvCost::dim(&models[0]);

        let net = match (self.flow.needs_network(), &self.network) {
            (true, Some(spec)) => Some(spec.build()?),
            (true, None) => return Err(Error::Spec(format!("flow `{:?}` needs a network", self.flow))),
            (false, Some(_)) => return Err(Error::Spec("the centralized flow takes no network".into())),
            (false, None) => None,
        };
        if self.flow == FlowKind::Centralized && n != 1 {
            return Err(Error::Spec(format!("the centralized flow needs exactly one agent, got {n}")));
        }
        if let Some(net) = &net {
            if net.node_count() != n {
                return Err(Error::Spec(format!("network has {} nodes but problem has {n} agents", net.node_count())));
            }
        }
        let profiles = match (self.flow.needs_profiles(), &self.demand) {
            (true, Some(d)) => {
                if d.len() != n {
                    return Err(Error::Spec(format!("demand lists {} agents, problem has {n}", d.len())));
                }
                let p = d.iter().map(|s| ResourceProfile::new(s.clone())).collect::<Result<Vec<_>>>()?;
                if let Some(bad) = p.iter().find(|p| p.dim() != dim) {
                    return Err(Error::Dimension { expected: dim, got: bad.dim() });
                }
                Some(p)
            }
            (true, None) => return Err(Error::Spec("the dual flow needs `demand`".into())),
            (false, Some(_)) => return Err(Error::Spec("`demand` is only used by the dual flow".into())),
            (false, None) => None,
        };

        let x0: Vec<DVector<f64>> = match &self.init {
            InitSpec::Zeros => vec![DVector::zeros(dim); n],
            InitSpec::Values { values } => {
                if values.len() != n {
                    return Err(Error::Spec(format!("init lists {} agents, problem has {n}", values.len())));
                }
                values
                    .iter()
                    .map(|v| {
                        if v.len() == dim {
                            Ok(DVector::from_vec(v.clone()))
                        } else {
                            Err(Error::Dimension { expected: dim, got: v.len() })
                        }
                    })
                    .collect::<Result<_>>()?
            }
            InitSpec::Uniform { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                    return Err(Error::Spec(format!("init range [{lo}, {hi}] is empty")));
                }
                (0..n).map(|_| DVector::from_fn(dim, |_, _| rng.random_range(*lo..*hi))).collect()
            }
        };
        let init = match self.flow {
            FlowKind::Centralized => SolverState::centralized(&models[0], x0[0].clone())?,
            FlowKind::ConsensusZgs => SolverState::consensus(&models, x0)?,
            FlowKind::DualDorap => {
                SolverState::dual(&models, profiles.as_deref().unwrap_or(&[]), x0, &NewtonOptions::default())?
            }
        };
        let threshold = self.settling.threshold.unwrap_or(crate::metrics::default_settling_threshold(
            self.sim.h,
            self.gain.a,
            self.gain.alpha,
        ));
        if !(threshold > 0.0) || !(self.settling.dwell > 0.0) {
            return Err(Error::Spec("settling threshold and dwell must be positive".into()));
        }
        if self.settling.dwell > self.sim.t_end {
            return Err(Error::Spec(format!(
                "settling dwell {} exceeds the horizon {}",
                self.settling.dwell, self.sim.t_end
            )));
        }
        let series = self.settling.series.unwrap_or(match self.flow {
            FlowKind::Centralized => SettlingSeries::AuxNorm,
            _ => SettlingSeries::MeanError,
        });
        Ok(Scenario {
            name: self.name.clone(),
            kind: self.flow,
            models,
            net,
            profiles,
            gain: self.gain,
            sim,
            init,
            parallel_oracle: self.oracle.parallel,
            settling_threshold: threshold,
            settling_dwell: self.settling.dwell,
            settling_series: series,
        })
    }
}

fn build_models(problem: &ProblemSpec, rng: &mut ChaCha8Rng) -> Result<Vec<CostModel>> {
    match problem {
        ProblemSpec::Quadratic { agents } => agents
            .iter()
            .map(|a| {
                if a.a.len() != a.b.len() {
                    return Err(Error::Dimension { expected: a.a.len(), got: a.b.len() });
                }
                Ok(AffineDriftQuadratic::diagonal(&a.a, a.b.clone(), a.c.clone())?.into())
            })
            .collect(),
        ProblemSpec::SquaredAffine { agents } => agents
            .iter()
            .map(|a| Ok(AffineDriftQuadratic::squared_affine(a.a, a.b.clone())?.into()))
            .collect(),
        ProblemSpec::Logistic { freq, agents } => agents
            .iter()
            .map(|a| Ok(TvLogistic::new(a.label, DVector::from_vec(a.y0.clone()), *freq, a.beta)?.into()))
            .collect(),
        ProblemSpec::LogisticRandom { agents, freq, beta_min, beta_max, dim } => {
            if beta_min > beta_max || *beta_min == 0 {
                return Err(Error::Spec(format!("beta range [{beta_min}, {beta_max}] is invalid")));
            }
            if *dim == 0 {
                return Err(Error::Spec("dim must be positive".into()));
            }
            (0..*agents)
                .map(|_| {
                    let beta = rng.random_range(*beta_min..=*beta_max) as f64;
                    let y0 = DVector::from_fn(*dim, |_, _| rng.random_range(0.0..1.0));
                    let label = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                    Ok(TvLogistic::new(label, y0, *freq, beta)?.into())
                })
                .collect()
        }
    }
}

/// Everything a run needs, built from an [`ExperimentSpec`].
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub kind: FlowKind,
    pub models: Vec<CostModel>,
    pub net: Option<Network>,
    pub profiles: Option<Vec<ResourceProfile>>,
    pub gain: GainSpec,
    pub sim: SimConfig,
    pub init: SolverState,
    pub parallel_oracle: bool,
    pub settling_threshold: f64,
    pub settling_dwell: f64,
    pub settling_series: SettlingSeries,
}
