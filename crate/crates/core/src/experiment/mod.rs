//! Declarative experiments: a TOML spec describes network, problem, flow,
//! gain and simulation; a run simulates, solves the oracle on the recording
//! grid and writes CSVs plus a JSON summary.

mod builtin;
mod config;
mod run;
mod sweep;

pub use builtin::{builtin_scenario, BUILTIN_NAMES, CASE_AGENTS};
pub use config::{
    builtin_network, ExperimentSpec, InitSpec, LogisticAgent, NetworkSpec, OracleSpec, ProblemSpec,
    QuadraticAgent, Scenario, SettlingSeries, SettlingSpec, SimSpec, SquaredAffineAgent, SCHEMA_VERSION,
};
pub use run::{
    error_json, execute, exit_code, gain_report, run_experiment, run_spec_file, GainReport, RunOutcome, Summary,
    CHATTER_WINDOW,
};
pub use sweep::{parse_values, run_sweep, SweepParam, SweepRow};
