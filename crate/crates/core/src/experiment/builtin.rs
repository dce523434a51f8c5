//! Ready-made scenarios: the two case studies at desk scale and a
//! single-agent smoke test.

use std::f64::consts::PI;

use super::config::{
    ExperimentSpec, InitSpec, NetworkSpec, OracleSpec, ProblemSpec, QuadraticAgent, SettlingSpec, SimSpec,
};
use crate::error::{Error, Result};
use crate::flows::{FlowKind, GainSpec};
use crate::signal::Signal;
use crate::sim::NoiseSpec;

pub const BUILTIN_NAMES: [&str; 4] = ["case1", "case1_noise", "case2", "smoke_centralized"];

/// Agent count of both case studies.
pub const CASE_AGENTS: usize = 12;

pub fn builtin_scenario(name: &str) -> Result<ExperimentSpec> {
    match name {
        "case1" => Ok(case1()),
        "case1_noise" => {
            let mut s = case1();
            s.name = "case1_noise".into();
            s.sim.noise = Some(NoiseSpec::with_variance(1e-4));
            Ok(s)
        }
        "case2" => Ok(case2()),
        "smoke_centralized" => Ok(smoke_centralized()),
        _ => Err(Error::Spec(format!("unknown builtin `{name}`; expected one of {}", BUILTIN_NAMES.join(", ")))),
    }
}

/// Twelve logistic-regression agents with seeded data, consensus flow,
/// `phi = 10 sgn^0.5`, `alpha = 4`.
fn case1() -> ExperimentSpec {
    ExperimentSpec {
        name: "case1".into(),
        seed: 1,
        flow: FlowKind::ConsensusZgs,
        network: Some(NetworkSpec::named("ring12_chords3")),
        problem: ProblemSpec::LogisticRandom { agents: CASE_AGENTS, freq: PI / 10.0, beta_min: 1, beta_max: 8, dim: 2 },
        demand: None,
        gain: GainSpec::power_sign(10.0, 0.5, 4.0),
        sim: SimSpec { h: 0.4e-3, t_end: 5.0, record_every: 25, noise: None },
        init: InitSpec::Uniform { lo: 0.0, hi: 1.0 },
        oracle: OracleSpec::default(),
        settling: SettlingSpec::default(),
    }
}

/// `f_i = (2 + 0.1 i) x^2 / 2 + sin(0.1 i t) x + sin(0.6 i t)` with demand
/// `d_i = i + sin(t + i pi / 12)`, dual flow, `alpha = 5`.
fn case2() -> ExperimentSpec {
    let agents = (1..=CASE_AGENTS)
        .map(|i| {
            let i = i as f64;
            QuadraticAgent {
                a: vec![2.0 + 0.1 * i],
                b: vec![Signal::sin(1.0, 0.1 * i, 0.0)],
                c: Signal::sin(1.0, 0.6 * i, 0.0),
            }
        })
        .collect();
    let demand = (1..=CASE_AGENTS)
        .map(|i| {
            let i = i as f64;
            vec![Signal::constant(i).plus(Signal::sin(1.0, 1.0, i * PI / CASE_AGENTS as f64))]
        })
        .collect();
    ExperimentSpec {
        name: "case2".into(),
        seed: 1,
        flow: FlowKind::DualDorap,
        network: Some(NetworkSpec::named("ring12_chords3")),
        problem: ProblemSpec::Quadratic { agents },
        demand: Some(demand),
        gain: GainSpec::power_sign(10.0, 0.5, 5.0),
        sim: SimSpec { h: 0.2e-3, t_end: 5.0, record_every: 50, noise: None },
        init: InitSpec::Zeros,
        oracle: OracleSpec::default(),
        settling: SettlingSpec::default(),
    }
}

/// `f = ||x - r(t)||^2 / 2` with `r = [sin t, cos t]`, tracked by the
/// centralized flow with `phi = 5 sgn^0.5`.
fn smoke_centralized() -> ExperimentSpec {
    ExperimentSpec {
        name: "smoke_centralized".into(),
        seed: 1,
        flow: FlowKind::Centralized,
        network: None,
        problem: ProblemSpec::Quadratic {
            agents: vec![QuadraticAgent {
                a: vec![1.0, 1.0],
                b: vec![Signal::sin(-1.0, 1.0, 0.0), Signal::cos(-1.0, 1.0, 0.0)],
                c: Signal::zero(),
            }],
        },
        demand: None,
        gain: GainSpec::power_sign(5.0, 0.5, 0.0),
        sim: SimSpec { h: 1e-4, t_end: 5.0, record_every: 10, noise: None },
        init: InitSpec::Values { values: vec![vec![4.0, -3.0]] },
        oracle: OracleSpec::default(),
        settling: SettlingSpec::default(),
    }
}
