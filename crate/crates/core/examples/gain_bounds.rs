//! Coupling gain thresholds for the two networked case studies, and how the
//! consensus bound moves with the graph.

use tvdopt::experiment::{builtin_network, builtin_scenario, gain_report};
use tvdopt::flows::{gain_bound_average_tracking, gain_bound_consensus};
use tvdopt::graph::{build_incidence, lambda2_pos};

fn main() -> tvdopt::Result<()> {
    for name in ["case1", "case2"] {
        let sc = builtin_scenario(name)?.build(0)?;
        let g = gain_report(&sc)?;
        println!(
            "{name}: lambda2 {:.3}, kappa {:.3}, delta {:?}, bound {:.3}, alpha {}",
            g.lambda2.unwrap_or(f64::NAN),
            g.kappa.unwrap_or(f64::NAN),
            g.delta,
            g.bound.unwrap_or(f64::NAN),
            sc.gain.alpha
        );
    }

    let (kappa, lo, hi) = (1.0, 1.0, 4.0);
    for name in ["path12", "cycle12", "ring12_chords3", "complete12"] {
        let l2 = lambda2_pos(&build_incidence(&builtin_network(name)?)?)?.lambda2;
        println!(
            "{name:>15}: consensus {:8.3}, average tracking {:7.3}",
            gain_bound_consensus(kappa, 12, hi, lo, l2)?,
            gain_bound_average_tracking(kappa, 12, l2)?
        );
    }
    Ok(())
}
