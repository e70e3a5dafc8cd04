//! Fit the honest and the two-component Byzantine models to one neighbor's
//! labeled reports and classify it.
//!
//! cargo run --example classify_neighbor

use consensus_detect::learning::{
    classify_node, em_fit, mle_update, ClassifierPenalty, EmSettings, HonestEstimate, LearningWindow, MixtureEstimate,
};
use consensus_detect::signal::{apply_attack, sample_gaussian, AttackParams, Hypothesis, StatModel};
use consensus_detect::streams::{Purpose, SeedTree};

fn main() -> consensus_detect::Result<()> {
    let model = StatModel::new(3.0, 1.5, 4.0, 2.0)?;
    let attack = AttackParams::new(0.5, 9.0, None)?;
    let seeds = SeedTree::new(11);
    for (label, byzantine) in [("honest neighbor", false), ("byzantine neighbor", true)] {
        let mut window = LearningWindow::default();
        for k in 0..80u64 {
            let h = if k % 2 == 0 { Hypothesis::H0 } else { Hypothesis::H1 };
            let mut y = sample_gaussian(&model, h, &mut seeds.rng(k, byzantine as u32, Purpose::Noise));
            if byzantine {
                y = apply_attack(y, h, &attack, &mut seeds.rng(k, 1, Purpose::Attack));
            }
            window.push(y, h);
        }
        let honest = mle_update(&HonestEstimate::default(), &window);
        let fit = em_fit(&window, &MixtureEstimate::initial(&window)?, &EmSettings::default())?;
        let v = classify_node(&window, &honest, &fit.estimate, ClassifierPenalty::default())?;
        println!(
            "{label}: {:?} (LL honest {:.1}, LL mixture {:.1}, penalty {:.1}), alpha {:.2?}, EM iterations {}",
            v.identity, v.log_likelihood_h, v.log_likelihood_b, v.penalty, fit.estimate.alpha, fit.iterations
        );
    }
    Ok(())
}
