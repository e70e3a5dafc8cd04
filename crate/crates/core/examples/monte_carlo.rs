//! Monte Carlo detection rates next to their closed forms, and a single trial
//! in detail.
//!
//! cargo run --release --example monte_carlo

use consensus_detect::analysis::steady_state_mixtures;
use consensus_detect::harness::{figure_scenario, Overrides, Scheme, Simulator};

fn main() -> consensus_detect::Result<()> {
    let s = figure_scenario("fig6", Overrides { seed: None, trials: Some(20_000) })?;
    let lambda = s.lambda.unwrap();
    for scheme in [Scheme::Optimal, Scheme::EqualGain] {
        let w = s.scheme_weights(scheme)?;
        let (h0, h1) = steady_state_mixtures(s.profiles()?, &w.weights, s.convention)?;
        let sim = Simulator::new(&s, &w, s.seed, 0, true)?;
        let mc = sim.run(s.trials)?;
        let r = mc.steady(0);
        println!(
            "{:>10}: Pd {:.4} ± {:.4} (closed {:.4}), Pf {:.4} ± {:.4} (closed {:.4}), nonconverged {}",
            scheme.name(),
            r.pd,
            r.pd_se,
            h1.exceedance(lambda),
            r.pf,
            r.pf_se,
            h0.exceedance(lambda),
            mc.nonconverged
        );
        let t = sim.trial(0)?;
        println!("  trial 0 under {:?}: x(0) {:.2?}, shift {:?}", t.hypothesis, t.attacked, t.shift);
        if let Some(st) = t.steady {
            println!("  converged at {:?}, decisions {:?}", st.converged_at, st.decisions);
        }
    }
    Ok(())
}
