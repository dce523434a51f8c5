//! Twelve agents tracking a time-varying logistic regression optimum using
//! only the signs of neighbor disagreements.

use tvdopt::experiment::{builtin_scenario, execute};
use tvdopt::metrics::window_max;

fn main() -> tvdopt::Result<()> {
    let run = execute(&builtin_scenario("case1")?, 0)?;
    let s = &run.summary;
    println!("lambda2 {:.3}, alpha {} vs bound {:.3}", s.lambda2.unwrap_or(f64::NAN), s.alpha, s.alpha_bound.unwrap_or(f64::NAN));
    let m = &run.metrics;
    println!("max e_x on [1, 5]: {:.2}", window_max(&m.times, &m.tracking_error, 1.0, 5.0));
    if let Some(zgs) = &m.zgs {
        println!("conservation drift max {:.1e}", zgs.drift.iter().copied().fold(0.0, f64::max));
    }
    println!("oracle KKT residual max {:.1e}", s.max_oracle_residual);
    Ok(())
}
