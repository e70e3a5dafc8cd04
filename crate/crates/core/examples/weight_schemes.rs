//! Steady-state ROC and AUC for every fusion weight scheme.
//!
//! cargo run --example weight_schemes

use consensus_detect::harness::{figure_scenario, pf_grid, scheme_assignment, scheme_roc, Overrides, Scheme};

fn main() -> consensus_detect::Result<()> {
    let s = figure_scenario("fig6", Overrides::default())?;
    let pfs = pf_grid(99);
    for scheme in Scheme::ALL {
        // learned weights come from running the learning loop on this scenario
        let w = scheme_assignment(&s, scheme)?;
        let (roc, auc) = scheme_roc(&s, scheme, &pfs)?;
        let at = |pf: f64| roc.iter().find(|r| (r.pf - pf).abs() < 1e-9).map(|r| r.pd).unwrap();
        println!(
            "{:>12}: AUC {auc:.4}  Pd@Pf=0.1 {:.4}  weights {:?}",
            scheme.name(),
            at(0.1),
            w.weights.iter().map(|x| (x * 1000.0).round() / 1000.0).collect::<Vec<_>>()
        );
    }
    Ok(())
}
