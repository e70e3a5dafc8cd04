//! Deflection of the global statistic over attack probability and strength,
//! and the attack strength that blinds the network.
//!
//! cargo run --example blinding

use consensus_detect::analysis::{alpha_blind, Blindness, HomogeneousAttack};
use consensus_detect::harness::{blinding_strength, blinding_surface, figure_scenario, Overrides};

fn main() -> consensus_detect::Result<()> {
    let s = figure_scenario("fig2", Overrides::default())?;
    let w = s.effective_weights(&s.assigned_weights()?.weights)?;
    for p in [0.25, 0.5, 0.75, 1.0] {
        match blinding_strength(s.profiles()?, &w, p)? {
            Some(d) => println!("P = {p:.2}: blinded at delta = {d:.3}"),
            None => println!("P = {p:.2}: cannot blind"),
        }
    }
    let table = blinding_surface(&s)?;
    let c = table.column("deflection").unwrap();
    let min = table.rows.iter().filter_map(|r| r[c].parse::<f64>().ok()).fold(f64::INFINITY, f64::min);
    println!("{} grid points, smallest deflection {min:.3e}", table.rows.len());

    let h = HomogeneousAttack { snr: 2.5, noise_variance: 1.0, probability: 0.5, strength: 4.0 };
    if let Blindness::Fraction(a) = alpha_blind(&h) {
        println!("homogeneous network: {:.1}% Byzantines blind it", 100.0 * a);
    }
    Ok(())
}
