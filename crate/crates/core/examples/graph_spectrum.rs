//! Connectivity and algebraic connectivity of a few communication graphs.

use tvdopt::experiment::builtin_network;
use tvdopt::graph::{build_incidence, lambda2_pos};
use tvdopt::Network;

fn main() -> tvdopt::Result<()> {
    for name in ["path12", "cycle12", "ring12_chords3", "complete12"] {
        let net = builtin_network(name)?;
        let info = lambda2_pos(&build_incidence(&net)?)?;
        println!("{name:>15}: {:2} edges, lambda2 = {:.4}", net.edge_count(), info.lambda2);
    }

    // two triangles with no bridge
    let split = Network::from_one_based(6, &[(1, 2, 1.0), (2, 3, 1.0), (3, 1, 1.0), (4, 5, 1.0), (5, 6, 1.0), (6, 4, 1.0)])?;
    let conn = split.connectivity();
    println!("split graph components: {:?}", conn.components_one_based());
    if let Err(e) = split.ensure_connected() {
        println!("rejected: {e}");
    }
    Ok(())
}
