//! Detection and false-alarm probability of each node along the consensus
//! iterations, with and without the attack.
//!
//! cargo run --example transient

use consensus_detect::harness::{figure_scenario, transient_curves, Overrides};

fn main() -> consensus_detect::Result<()> {
    let s = figure_scenario("fig3", Overrides::default())?;
    let w = s.assigned_weights()?.weights;
    let nodes = [2, 5];
    for (case, sc) in [("attack", s.clone()), ("no attack", s.without_attack())] {
        println!("{case}");
        for p in transient_curves(&sc, &w, 10, &nodes)? {
            println!("  t {:>2} node {}: Pd {:.4}  Pf {:.4}", p.t, p.node + 1, p.pd, p.pf);
        }
    }
    Ok(())
}
