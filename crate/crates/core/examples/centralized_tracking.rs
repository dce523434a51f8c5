//! Centralized tracker on `f(x, t) = 0.5 |x - r(t)|^2` with a rotating target.
//! Settling should land near `|z0|^p / (a p)`.

use tvdopt::experiment::{builtin_scenario, execute};
use tvdopt::oracle::analytic_settling_time;

fn main() -> tvdopt::Result<()> {
    let spec = builtin_scenario("smoke_centralized")?;
    let sc = spec.build(0)?;
    let predicted = analytic_settling_time(&sc.init.aux[0], sc.gain.a, sc.gain.p)?;
    let run = execute(&spec, 0)?;
    println!("predicted settling {predicted:.3} s, detected {:?}", run.summary.settled_at);
    println!("final mean error {:.2e}", run.summary.final_mean_error);
    let m = &run.metrics;
    for k in (0..m.times.len()).step_by(m.times.len() / 8) {
        println!("  t = {:5.2}  e_x = {:6.2}", m.times[k], m.tracking_error[k]);
    }
    Ok(())
}
