//! Right-hand sides of the three finite-time flows, the driving function
//! `phi` and the gain-bound calculators.

mod bounds;
mod gain;
mod rhs;

pub use bounds::{
    estimate_varpi, gain_bound_average_tracking, gain_bound_consensus, gain_bound_dorap, gain_bound_relaxed,
};
pub use gain::{phi, sgn_pow, sign, GainSpec, PhiVariant};
pub use rhs::{
    consensus_agent_rhs, coupling_term, dual_agent_rhs, rhs_centralized, rhs_consensus, rhs_consensus_with,
    rhs_dual_dorap, rhs_dual_dorap_with,
};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Network;
use crate::problems::{conjugate_argmax, NewtonOptions, ResourceProfile, TvCost};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowKind {
    /// Single-agent Newton tracker `x' = -H^{-1}(phi(z) + ∂_t grad f)`.
    Centralized,
    /// Zero-gradient-sum consensus flow with sign coupling.
    ConsensusZgs,
    /// Consensus flow on the dual of the resource allocation problem.
    DualDorap,
}

impl FlowKind {
    pub fn needs_network(self) -> bool {
        !matches!(self, FlowKind::Centralized)
    }

    pub fn needs_profiles(self) -> bool {
        matches!(self, FlowKind::DualDorap)
    }
}

/// Per-agent state of a flow at time `t`.
///
/// `primary` holds `x_i` (centralized / consensus) or `lambda_i` (dual);
/// `aux` holds `z_i`; `primal` holds the recovered `x_i(lambda_i, t)` for the
/// dual flow.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub t: f64,
    pub primary: Vec<DVector<f64>>,
    pub aux: Vec<DVector<f64>>,
    pub primal: Option<Vec<DVector<f64>>>,
}

impl SolverState {
    /// `z(0) = grad f(x(0), 0)`.
    pub fn centralized<M: TvCost + ?Sized>(model: &M, x0: DVector<f64>) -> Result<Self> {
        check_dim(model.dim(), &x0)?;
        let z0 = model.gradient(&x0, 0.0);
        Ok(Self { t: 0.0, primary: vec![x0], aux: vec![z0], primal: None })
    }

    /// `z_i(0) = grad f_i(x_i(0), 0)`.
    pub fn consensus<M: TvCost>(models: &[M], x0: Vec<DVector<f64>>) -> Result<Self> {
        if x0.len() != models.len() {
            return Err(Error::Dimension { expected: models.len(), got: x0.len() });
        }
        let mut aux = Vec::with_capacity(models.len());
        for (m, x) in models.iter().zip(&x0) {
            check_dim(m.dim(), x)?;
            aux.push(m.gradient(x, 0.0));
        }
        Ok(Self { t: 0.0, primary: x0, aux, primal: None })
    }

    /// `z_i(0) = x_i(lambda_i(0), 0) - d_i(0)`.
    pub fn dual<M: TvCost>(
        models: &[M],
        profiles: &[ResourceProfile],
        lam0: Vec<DVector<f64>>,
        opts: &NewtonOptions,
    ) -> Result<Self> {
        if lam0.len() != models.len() || profiles.len() != models.len() {
            return Err(Error::Dimension { expected: models.len(), got: lam0.len().min(profiles.len()) });
        }
        let mut aux = Vec::with_capacity(models.len());
        let mut primal = Vec::with_capacity(models.len());
        for ((m, p), lam) in models.iter().zip(profiles).zip(&lam0) {
            check_dim(m.dim(), lam)?;
            let x = conjugate_argmax(m, lam, 0.0, opts, None)?;
            aux.push(&x - p.demand(0.0));
            primal.push(x);
        }
        Ok(Self { t: 0.0, primary: lam0, aux, primal: Some(primal) })
    }

    pub fn agent_count(&self) -> usize {
        self.primary.len()
    }

    /// Largest Euclidean norm over every stored vector; `NaN` if any entry is
    /// not finite.
    pub fn max_norm(&self) -> f64 {
        let vecs = self.primary.iter().chain(&self.aux).chain(self.primal.iter().flatten());
        let mut m: f64 = 0.0;
        for v in vecs {
            let n = v.norm();
            if !n.is_finite() {
                return f64::NAN;
            }
            m = m.max(n);
        }
        m
    }
}

fn check_dim(n: usize, v: &DVector<f64>) -> Result<()> {
    if v.len() == n {
        Ok(())
    } else {
        Err(Error::Dimension { expected: n, got: v.len() })
    }
}

/// Time derivative of a [`SolverState`], plus the recovered primal for the
/// dual flow.
#[derive(Debug, Clone, PartialEq)]
pub struct Derivative {
    pub primary: Vec<DVector<f64>>,
    pub aux: Vec<DVector<f64>>,
    pub primal: Option<Vec<DVector<f64>>>,
}

/// What an agent observes: neighbor states for the sign coupling and its own
/// drift term `∂_t grad f_i`. The simulator swaps in a noisy implementation.
pub trait Readings {
    fn neighbor(&mut self, agent: usize, neighbor: usize, value: &DVector<f64>) -> DVector<f64>;
    fn drift(&mut self, agent: usize, value: DVector<f64>) -> DVector<f64>;
}

/// Noise-free readings.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExactReadings;

impl Readings for ExactReadings {
    fn neighbor(&mut self, _agent: usize, _neighbor: usize, value: &DVector<f64>) -> DVector<f64> {
        value.clone()
    }

    fn drift(&mut self, _agent: usize, value: DVector<f64>) -> DVector<f64> {
        value
    }
}

/// A flow together with the data it runs on.
#[derive(Debug, Clone, Copy)]
pub enum FlowProblem<'a, M> {
    Centralized { model: &'a M },
    Consensus { models: &'a [M], net: &'a Network },
    DualDorap { models: &'a [M], profiles: &'a [ResourceProfile], net: &'a Network },
}

impl<'a, M: TvCost> FlowProblem<'a, M> {
    pub fn kind(&self) -> FlowKind {
        match self {
            FlowProblem::Centralized { .. } => FlowKind::Centralized,
            FlowProblem::Consensus { .. } => FlowKind::ConsensusZgs,
            FlowProblem::DualDorap { .. } => FlowKind::DualDorap,
        }
    }

    pub fn agent_count(&self) -> usize {
        match self {
            FlowProblem::Centralized { .. } => 1,
            FlowProblem::Consensus { models, .. } | FlowProblem::DualDorap { models, .. } => models.len(),
        }
    }

    /// Checks the structural preconditions: network size and connectivity,
    /// matching dimensions, profile count.
    pub fn validate(&self) -> Result<()> {
        match self {
            FlowProblem::Centralized { .. } => Ok(()),
            FlowProblem::Consensus { models, net } => validate_network(models, net),
            FlowProblem::DualDorap { models, profiles, net } => {
                validate_network(models, net)?;
                if profiles.len() != models.len() {
                    return Err(Error::Dimension { expected: models.len(), got: profiles.len() });
                }
                for (m, p) in models.iter().zip(profiles.iter()) {
                    if m.dim() != p.dim() {
                        return Err(Error::Dimension { expected: m.dim(), got: p.dim() });
                    }
                }
                Ok(())
            }
        }
    }

    /// Largest deviation of `z` from the initialisation contract at `state`.
    pub fn init_violation(&self, state: &SolverState, opts: &NewtonOptions) -> Result<f64> {
        if state.agent_count() != self.agent_count() || state.aux.len() != self.agent_count() {
            return Err(Error::InitContract(format!(
                "state has {} agents, problem has {}",
                state.agent_count(),
                self.agent_count()
            )));
        }
        let t = state.t;
        let mut worst: f64 = 0.0;
        match self {
            FlowProblem::Centralized { model } => {
                worst = (model.gradient(&state.primary[0], t) - &state.aux[0]).norm();
            }
            FlowProblem::Consensus { models, .. } => {
                for (i, m) in models.iter().enumerate() {
                    worst = worst.max((m.gradient(&state.primary[i], t) - &state.aux[i]).norm());
                }
            }
            FlowProblem::DualDorap { models, profiles, .. } => {
                for (i, (m, p)) in models.iter().zip(profiles.iter()).enumerate() {
                    let x = conjugate_argmax(m, &state.primary[i], t, opts, None)?;
                    worst = worst.max((x - p.demand(t) - &state.aux[i]).norm());
                }
            }
        }
        Ok(worst)
    }

    pub fn rhs<R: Readings + ?Sized>(
        &self,
        gain: &GainSpec,
        state: &SolverState,
        readings: &mut R,
        opts: &NewtonOptions,
    ) -> Result<Derivative> {
        match self {
            FlowProblem::Centralized { model } => {
                let (dx, dz) = rhs_centralized(*model, gain, state)?;
                Ok(Derivative { primary: vec![dx], aux: vec![dz], primal: None })
            }
            FlowProblem::Consensus { models, net } => rhs_consensus_with(models, net, gain, state, readings),
            FlowProblem::DualDorap { models, profiles, net } => {
                rhs_dual_dorap_with(models, profiles, net, gain, state, opts, readings)
            }
        }
    }
}

fn validate_network<M: TvCost>(models: &[M], net: &Network) -> Result<()> {
    if net.node_count() != models.len() {
        return Err(Error::Dimension { expected: net.node_count(), got: models.len() });
    }
    net.ensure_connected()?;
    if let Some(first) = models.first() {
        for m in models {
            if m.dim() != first.dim() {
                return Err(Error::Dimension { expected: first.dim(), got: m.dim() });
            }
        }
    }
    Ok(())
}
