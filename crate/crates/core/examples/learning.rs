//! Learn neighbor statistics over several windows and watch the adapted
//! weights approach the known-parameter optimum.
//!
//! cargo run --example learning

use consensus_detect::harness::{figure_scenario, pf_grid, Overrides};
use consensus_detect::learning::learning_loop;

fn main() -> consensus_detect::Result<()> {
    let s = figure_scenario("fig7", Overrides::default())?;
    let trace = learning_loop(&s.graph, s.profiles()?, &s.learning, s.seed, &pf_grid(199))?;
    println!("known-parameter AUC {:.4}", trace.known_auc);
    println!("initial weights {:.3?}", trace.initial.weights);
    for it in &trace.iterations {
        let flagged: Vec<_> = it
            .records
            .iter()
            .filter(|r| r.verdict.identity == consensus_detect::learning::Verdict::Byzantine)
            .map(|r| (r.observer + 1, r.neighbor + 1))
            .collect();
        println!("iteration {}: AUC {:.4}, flagged (observer, neighbor) {flagged:?}", it.iteration, it.auc);
        println!("  weights {:.3?}", it.weights.weights);
    }
    Ok(())
}
