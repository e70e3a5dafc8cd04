//! Conventional and robust consensus matrices: spectra and convergence to the
//! weighted average.
//!
//! cargo run --example consensus

use consensus_detect::consensus::{
    conventional_perron, robust_epsilon_bound, robust_perron, run_consensus, spectral_check, weighted_average,
    EpsilonPolicy,
};
use consensus_detect::topology::NetworkGraph;

fn main() -> consensus_detect::Result<()> {
    let g = NetworkGraph::new(6, &[(0, 1), (1, 2), (1, 3), (2, 3), (3, 4), (3, 5)])?;
    let l = g.laplacian();
    let w = [0.65, 0.55, 0.48, 0.32, 0.16, 0.10];
    let x0 = [10.0, 12.0, 8.0, 14.0, 9.0, 11.0];

    let bound = robust_epsilon_bound(&l, &w);
    println!("robust step bound 1/max_i sum w_j = {bound:.4}");
    let robust = robust_perron(&l, 0.3, &w, EpsilonPolicy::Strict)?;
    let conventional = conventional_perron(&l, 0.1, &w)?;

    let target = weighted_average(&w, &x0);
    for (name, m) in [("robust", &robust), ("conventional", &conventional)] {
        let spec = spectral_check(m);
        let run = run_consensus(m, &x0, 1e-9, 5000)?;
        println!(
            "{name:>12}: rho {:.4}, nonnegative {}, primitive {}, converged at {:?}, value {:.6}",
            spec.spectral_radius, spec.nonnegative, spec.primitive, run.converged_at, run.fixed_point
        );
    }
    println!("weighted average {target:.6}");
    Ok(())
}
