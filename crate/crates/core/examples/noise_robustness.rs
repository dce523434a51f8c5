//! Sweeps the link noise level on the consensus case and prints how the
//! final tracking error degrades.

use tvdopt::experiment::{builtin_scenario, run_sweep, SweepParam};

fn main() -> tvdopt::Result<()> {
    let mut spec = builtin_scenario("case1")?;
    spec.sim.t_end = 3.0;
    let out = std::env::temp_dir().join("tvdopt_noise_sweep");
    let rows = run_sweep(&spec, SweepParam::LinkSigma, &[0.0, 1e-3, 1e-2, 3e-2], &out)?;
    for r in rows {
        match (r.final_e_x, r.exit_code) {
            (Some(ex), _) => println!("sigma {:>5.0e}: final e_x {ex:.2}, chattering {:.2e}", r.value, r.chattering.unwrap_or(f64::NAN)),
            (None, _) => println!("sigma {:>5.0e}: {} ({})", r.value, r.status, r.message),
        }
    }
    Ok(())
}
