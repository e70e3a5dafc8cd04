//! Fusion weights from learned parameters.

use super::classify::Verdict;
use super::em::MixtureEstimate;
use super::mle::HonestEstimate;
use crate::analysis::{WeightAssignment, WeightProvenance, WeightShift};
use crate::error::{Error, Result};
use crate::signal::Hypothesis;

fn undefined(node: usize, reason: impl Into<String>) -> Error {
    Error::WeightUndefined {
        node: node + 1,
        reason: reason.into(),
    }
}

/// `(μ̂₁₁ − μ̂₁₀) / σ̂²₁₀`.
pub fn honest_weight(node: usize, e: &HonestEstimate) -> Result<f64> {
    let h0 = e.h0.ok_or_else(|| undefined(node, "no H0 samples"))?;
    let h1 = e.h1.ok_or_else(|| undefined(node, "no H1 samples"))?;
    if !(h0.variance > 0.0) {
        return Err(undefined(node, "H0 variance estimate is zero"));
    }
    Ok((h1.mean - h0.mean) / h0.variance)
}

/// `Σ_j α̂_j (μ̂_j1 − μ̂_j0) / [α̂₁α̂₂(μ̂₁₀ − μ̂₂₀)² + α̂₁σ̂²₁₀ + α̂₂σ̂²₂₀]`, with
/// the component variances tied.
pub fn byzantine_weight(node: usize, m: &MixtureEstimate) -> Result<f64> {
    let [a1, a2] = m.alpha;
    let num = a1 * (m.mean1[0] - m.mean0[0]) + a2 * (m.mean1[1] - m.mean0[1]);
    let sep = m.mean0[0] - m.mean0[1];
    let den = a1 * a2 * sep * sep + (a1 + a2) * m.var0;
    if !(den > 0.0) || !den.is_finite() {
        return Err(undefined(node, "mixture weight has zero denominator"));
    }
    Ok(num / den)
}

/// Per-node weights after learning iteration `iteration`. Negative weights get
/// a [`WeightShift`] designed on each node's estimated `H0` mean.
pub fn adaptive_weights(
    verdicts: &[Verdict],
    honest: &[HonestEstimate],
    mixtures: &[MixtureEstimate],
    iteration: usize,
) -> Result<WeightAssignment> {
    if verdicts.len() != honest.len() || verdicts.len() != mixtures.len() {
        return Err(Error::InvalidParameter(format!(
            "{} verdicts, {} honest estimates, {} mixture estimates",
            verdicts.len(),
            honest.len(),
            mixtures.len()
        )));
    }
    let weights = verdicts
        .iter()
        .enumerate()
        .map(|(i, v)| match v {
            Verdict::Honest => honest_weight(i, &honest[i]),
            Verdict::Byzantine => byzantine_weight(i, &mixtures[i]),
        })
        .collect::<Result<Vec<f64>>>()?;
    let scale = honest
        .iter()
        .enumerate()
        .map(|(i, e)| {
            e.under(Hypothesis::H0)
                .map(|h| h.mean)
                .ok_or_else(|| undefined(i, "no H0 samples"))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(WeightAssignment {
        shift: WeightShift::design(&weights, &scale),
        weights,
        provenance: WeightProvenance::OptimalLearned { iteration },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::optimal_weights;
    use crate::learning::HypothesisEstimate;
    use crate::signal::{AttackParams, NodeProfile, Sensing, StatModel, VarianceConvention};
    use proptest::prelude::*;

    fn honest_truth(m: &StatModel) -> HonestEstimate {
        HonestEstimate {
            h0: Some(HypothesisEstimate {
                mean: m.h0.mean,
                variance: m.h0.variance,
                count: 10,
            }),
            h1: Some(HypothesisEstimate {
                mean: m.h1.mean,
                variance: m.h1.variance,
                count: 10,
            }),
        }
    }

    #[test]
    fn fig7_truth() {
        let m = StatModel::new(3.0, 1.5, 4.0, 2.0).unwrap();
        assert!((honest_weight(0, &honest_truth(&m)).unwrap() - 1.0 / 1.5).abs() < 1e-15);
        let a = AttackParams::new(0.5, 9.0, None).unwrap();
        let wb = byzantine_weight(0, &MixtureEstimate::ground_truth(&m, &a)).unwrap();
        // (1 − 9) / (0.25·81 + 1.5)
        assert!((wb - (-8.0 / 21.75)).abs() < 1e-15);
    }

    #[test]
    fn idle_byzantine_reduces_to_honest() {
        let m = StatModel::new(3.0, 1.5, 4.0, 2.0).unwrap();
        let a = AttackParams::new(0.0, 9.0, None).unwrap();
        let wb = byzantine_weight(0, &MixtureEstimate::ground_truth(&m, &a)).unwrap();
        assert!((wb - 1.0 / 1.5).abs() < 1e-15);
    }

    #[test]
    fn undefined_weights() {
        let e = HonestEstimate::default();
        assert!(matches!(honest_weight(2, &e), Err(Error::WeightUndefined { node: 3, .. })));
        let flat = HonestEstimate {
            h0: Some(HypothesisEstimate {
                mean: 1.0,
                variance: 0.0,
                count: 3,
            }),
            h1: Some(HypothesisEstimate {
                mean: 2.0,
                variance: 1.0,
                count: 3,
            }),
        };
        assert!(honest_weight(0, &flat).is_err());
        let degenerate = MixtureEstimate {
            alpha: [0.5, 0.5],
            mean0: [0.0, 0.0],
            mean1: [1.0, 1.0],
            var0: 0.0,
            var1: 1.0,
            log_likelihood: 0.0,
        };
        assert!(byzantine_weight(0, &degenerate).is_err());
    }

    #[test]
    fn adaptive_assignment_with_shift() {
        let m = StatModel::new(3.0, 1.5, 4.0, 2.0).unwrap();
        let a = AttackParams::new(0.5, 9.0, None).unwrap();
        let verdicts = [Verdict::Byzantine, Verdict::Honest];
        let honest = [honest_truth(&m); 2];
        let mixtures = [MixtureEstimate::ground_truth(&m, &a); 2];
        let w = adaptive_weights(&verdicts, &honest, &mixtures, 3).unwrap();
        assert_eq!(w.provenance, WeightProvenance::OptimalLearned { iteration: 3 });
        assert!(w.weights[0] < 0.0);
        let shift = w.shift.unwrap();
        assert_eq!(shift.shifted, vec![true, false]);
        assert!((shift.offset - 3.0 * 8.0 / 21.75 * (1.0 + 1e-6)).abs() < 1e-12);
        assert!(adaptive_weights(&verdicts, &honest[..1], &mixtures, 0).is_err());
    }

    proptest! {
        #[test]
        fn truth_reproduces_known_optimal(
            m0 in -5.0f64..5.0,
            v0 in 0.1f64..5.0,
            gap in 0.0f64..5.0,
            v1 in 0.1f64..5.0,
            p in 0.0f64..=1.0,
            delta in 0.0f64..15.0,
        ) {
            let m = StatModel::new(m0, v0, m0 + gap, v1).unwrap();
            let a = AttackParams::new(p, delta, None).unwrap();
            let profiles = [
                NodeProfile::byzantine(Sensing::Moments(m), a),
                NodeProfile::honest(Sensing::Moments(m)),
            ];
            let known = optimal_weights(&profiles, VarianceConvention::PaperLiteral).weights;
            let wb = byzantine_weight(0, &MixtureEstimate::ground_truth(&m, &a)).unwrap();
            let wh = honest_weight(1, &honest_truth(&m)).unwrap();
            prop_assert!((wb - known[0]).abs() < 1e-12 * known[0].abs().max(1.0));
            prop_assert!((wh - known[1]).abs() < 1e-12 * known[1].abs().max(1.0));
        }
    }
}
