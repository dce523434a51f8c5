//! Finite-time convergent continuous-time solvers for time-varying
//! optimization over agent networks.
//!
//! Three dynamics are provided, all driven by an auxiliary finite-time
//! subsystem `z' = -phi(z)`:
//!
//! * a centralized Newton-type tracker for `min_x f(x, t)`,
//! * a zero-gradient-sum consensus flow for `min_x sum_i f_i(x, t)` where each
//!   agent only sees the sign of its disagreement with neighbors,
//! * a dual flow for resource allocation `min sum_i f_i(x_i, t)` subject to
//!   `sum_i x_i = d(t)`.
//!
//! The [`sim`] module integrates any of them with fixed-step explicit Euler,
//! [`oracle`] computes the true optimizer trajectories independently, and
//! [`metrics`] compares the two. [`experiment`] ties everything to a TOML
//! config and CSV output.

pub mod error;
pub mod experiment;
pub mod flows;
pub mod graph;
pub mod metrics;
pub mod oracle;
pub mod problems;
pub mod signal;
pub mod sim;

pub use error::{Error, Result};
pub use flows::{FlowKind, GainSpec, PhiVariant, SolverState};
pub use graph::Network;
pub use problems::{AffineDriftQuadratic, CostModel, ResourceProfile, TvCost, TvLogistic};
pub use signal::Signal;
pub use sim::{euler_run, NoiseSpec, SimConfig, Trajectory};
