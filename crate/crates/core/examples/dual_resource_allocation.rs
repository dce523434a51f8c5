//! Distributed resource allocation: twelve quadratic costs share a
//! time-varying total demand. Runs the dual flow and writes CSV output.

use std::path::PathBuf;

use tvdopt::experiment::{builtin_scenario, execute};
use tvdopt::metrics::window_max;

fn main() -> tvdopt::Result<()> {
    let run = execute(&builtin_scenario("case2")?, 0)?;
    let m = &run.metrics;
    let mismatch = m.constraint_mismatch.as_ref().expect("dual flow reports mismatch");
    let mean: Vec<f64> = m.mean_error.clone();
    println!("alpha {} vs bound {:.3}", run.summary.alpha, run.summary.alpha_bound.unwrap_or(f64::NAN));
    println!("max |sum x - d| on [1, 5]: {:.2e}", window_max(&m.times, mismatch, 1.0, 5.0));
    println!("max mean tracking error on [1, 5]: {:.2e}", window_max(&m.times, &mean, 1.0, 5.0));

    let dir = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("tvdopt_case2"));
    run.write(&dir)?;
    println!("wrote {}", dir.display());
    Ok(())
}
