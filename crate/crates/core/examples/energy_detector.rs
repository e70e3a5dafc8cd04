//! Energy-detector statistics under both hypotheses, with and without a
//! Byzantine flip.
//!
//! cargo run --example energy_detector

use consensus_detect::signal::{
    apply_attack, gaussian_moments, sample_statistic, AttackParams, Hypothesis, SensingParams, VarianceConvention,
};
use consensus_detect::streams::{Purpose, SeedTree};

fn main() -> consensus_detect::Result<()> {
    let p = SensingParams::new(2.0, 1.0, 12, 20.0)?;
    let attack = AttackParams::new(0.5, 6.0, None)?;
    let seeds = SeedTree::new(7);
    println!("snr {:.3}", p.snr());
    for h in [Hypothesis::H0, Hypothesis::H1] {
        for conv in [VarianceConvention::PaperLiteral, VarianceConvention::ExactNoncentral] {
            let m = gaussian_moments(&p, h, conv);
            println!("{h:?} {conv:?}: mean {:.3}, variance {:.3}", m.mean, m.variance);
        }
        let n = 20_000;
        let (mut sum, mut sum_att) = (0.0, 0.0);
        for k in 0..n {
            let y = sample_statistic(&p, h, &mut seeds.rng(k, 0, Purpose::Noise));
            sum += y;
            sum_att += apply_attack(y, h, &attack, &mut seeds.rng(k, 0, Purpose::Attack));
        }
        println!(
            "{h:?} empirical mean {:.3}, after attack {:.3} (expected shift {:+.3})",
            sum / n as f64,
            sum_att / n as f64,
            attack.probability * attack.shift(h)
        );
    }
    Ok(())
}
