//! Steady-state moments of the weighted global statistic, its deflection,
//! and the blinding condition.

use crate::error::{Error, Result};
use crate::signal::{NodeProfile, VarianceConvention};

/// Moments of `Λ = Σ δ_i Ỹ_i` with `δ_i = w_i / Σ w_j`.
///
/// `weight_sum` is kept so callers can move between the normalized statistic
/// and the raw weighted sum. If the weights sum to zero the moments are those
/// of the raw sum `Σ w_i Ỹ_i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlobalStatisticMoments {
    pub mu0: f64,
    pub mu1: f64,
    pub var0: f64,
    pub weight_sum: f64,
}

/// Weights are the ones each node actually carries; see
/// [`effective_conventional_weights`](super::effective_conventional_weights).
pub fn global_moments(
    profiles: &[NodeProfile],
    weights: &[f64],
    convention: VarianceConvention,
) -> GlobalStatisticMoments {
    let (mut mu0, mut mu1, mut var0) = (0.0, 0.0, 0.0);
    for (p, &w) in profiles.iter().zip(weights) {
        let m = p.sensing.moments(convention);
        let (mut m0, mut m1, mut v0) = (m.h0.mean, m.h1.mean, m.h0.variance);
        if let Some(a) = p.attack() {
            m0 += a.probability * a.strength;
            m1 -= a.probability * a.strength;
            v0 += a.probability * (1.0 - a.probability) * a.strength * a.strength;
        }
        mu0 += w * m0;
        mu1 += w * m1;
        var0 += w * w * v0;
    }
    let weight_sum: f64 = weights.iter().sum();
    if weight_sum != 0.0 && weight_sum.is_finite() {
        mu0 /= weight_sum;
        mu1 /= weight_sum;
        var0 /= weight_sum * weight_sum;
    }
    GlobalStatisticMoments {
        mu0,
        mu1,
        var0,
        weight_sum,
    }
}

/// `(μ₁ − μ₀)² / σ²₍₀₎`.
pub fn deflection_coefficient(m: &GlobalStatisticMoments) -> Result<f64> {
    if !(m.var0 > 0.0) {
        return Err(Error::InvalidMoments(format!(
            "H0 variance must be positive, got {}",
            m.var0
        )));
    }
    let gap = m.mu1 - m.mu0;
    Ok(gap * gap / m.var0)
}

/// `Σ_B w̃_i (2 P_i Δ_i − η_i σ_i²) − Σ_H w_i η_i σ_i²`.
///
/// Zero exactly when the network is blinded. For weights with nonzero sum,
/// `μ₁ − μ₀ = −residual / Σ w`.
pub fn blinding_residual(profiles: &[NodeProfile], weights: &[f64]) -> f64 {
    profiles
        .iter()
        .zip(weights)
        .map(|(p, &w)| {
            let gap = p.sensing.moments(VarianceConvention::default()).mean_gap();
            match p.attack() {
                Some(a) => w * (2.0 * a.probability * a.strength - gap),
                None => -w * gap,
            }
        })
        .sum()
}

/// Identical nodes with identical attack parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomogeneousAttack {
    pub snr: f64,
    pub noise_variance: f64,
    pub probability: f64,
    pub strength: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Blindness {
    /// Smallest Byzantine fraction that blinds the network, capped at 1.
    Fraction(f64),
    /// `P·Δ = 0`: no fraction of Byzantines blinds the network.
    NotBlindable,
}

/// `min(ησ² / (2PΔ), 1)`.
pub fn alpha_blind(h: &HomogeneousAttack) -> Blindness {
    let pd = h.probability * h.strength;
    if pd <= 0.0 {
        return Blindness::NotBlindable;
    }
    Blindness::Fraction((h.snr * h.noise_variance / (2.0 * pd)).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{AttackParams, Sensing, SensingParams, StatModel};
    use proptest::prelude::*;

    fn energy(s2: f64, h: f64, m: u32, es: f64) -> Sensing {
        Sensing::Energy(SensingParams::new(s2, h, m, es).unwrap())
    }

    fn homogeneous(n: usize, byz: usize, p: f64, delta: f64) -> Vec<NodeProfile> {
        // η = E_s h² / σ² = 20 / 2 = 10
        let s = energy(2.0, 1.0, 12, 20.0);
        (0..n)
            .map(|i| {
                if i < byz {
                    NodeProfile::byzantine(s, AttackParams::new(p, delta, None).unwrap())
                } else {
                    NodeProfile::honest(s)
                }
            })
            .collect()
    }

    #[test]
    fn honest_network_moments() {
        let profiles = homogeneous(4, 0, 0.0, 0.0);
        let m = global_moments(&profiles, &[1.0; 4], VarianceConvention::PaperLiteral);
        // μ₁ − μ₀ = Σ δ_i η σ² = 20, σ²₍₀₎ = Σ δ_i² 2Mσ⁴ = 96 / 4
        assert!((m.mu1 - m.mu0 - 20.0).abs() < 1e-12);
        assert!((m.var0 - 24.0).abs() < 1e-12);
        assert!((deflection_coefficient(&m).unwrap() - 400.0 / 24.0).abs() < 1e-12);
        assert_eq!(m.weight_sum, 4.0);
    }

    #[test]
    fn always_attacking_byzantine_adds_no_variance() {
        let profiles = homogeneous(1, 1, 1.0, 5.0);
        let m = global_moments(&profiles, &[1.0], VarianceConvention::PaperLiteral);
        assert!((m.var0 - 96.0).abs() < 1e-12);
        assert!((m.mu0 - 29.0).abs() < 1e-12);
        assert!((m.mu1 - 39.0).abs() < 1e-12);
    }

    #[test]
    fn blinding_at_half_byzantine() {
        // ησ²/(2PD) = 20/40 = 0.5 → 3 of 6 nodes blind the network.
        let profiles = homogeneous(6, 3, 0.5, 40.0);
        let w = [1.0; 6];
        assert_eq!(blinding_residual(&profiles, &w), 0.0);
        let m = global_moments(&profiles, &w, VarianceConvention::PaperLiteral);
        assert!(deflection_coefficient(&m).unwrap() < 1e-12);

        let h = HomogeneousAttack {
            snr: 10.0,
            noise_variance: 2.0,
            probability: 0.5,
            strength: 40.0,
        };
        assert_eq!(alpha_blind(&h), Blindness::Fraction(0.5));
        let weak = HomogeneousAttack { strength: 5.0, ..h };
        assert_eq!(alpha_blind(&weak), Blindness::Fraction(1.0));
        let strong = HomogeneousAttack { strength: 1e12, ..h };
        match alpha_blind(&strong) {
            Blindness::Fraction(a) => assert!(a > 0.0 && a < 1e-9),
            other => panic!("{other:?}"),
        }
        let idle = HomogeneousAttack { probability: 0.0, ..h };
        assert_eq!(alpha_blind(&idle), Blindness::NotBlindable);
    }

    #[test]
    fn no_attack_strength_gives_negative_residual() {
        let profiles = homogeneous(6, 2, 0.5, 0.0);
        let w = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6];
        let expected: f64 = -w.iter().map(|wi| wi * 20.0).sum::<f64>();
        assert!((blinding_residual(&profiles, &w) - expected).abs() < 1e-12);
    }

    #[test]
    fn zero_gap_and_bad_variance() {
        let m = GlobalStatisticMoments {
            mu0: 3.0,
            mu1: 3.0,
            var0: 1.0,
            weight_sum: 1.0,
        };
        assert_eq!(deflection_coefficient(&m).unwrap(), 0.0);
        let bad = GlobalStatisticMoments { var0: 0.0, ..m };
        assert!(matches!(deflection_coefficient(&bad), Err(Error::InvalidMoments(_))));
    }

    proptest! {
        #[test]
        fn deflection_tracks_residual(
            gaps in prop::collection::vec(0.1f64..10.0, 2..8),
            vars in prop::collection::vec(0.5f64..20.0, 8),
            ws in prop::collection::vec(0.1f64..3.0, 8),
            byz in 1usize..4,
            p in 0.05f64..1.0,
            delta in 0.0f64..30.0,
            blind in any::<bool>(),
        ) {
            let n = gaps.len();
            let byz = byz.min(n - 1);
            let w = &ws[..n];
            let mut profiles: Vec<NodeProfile> = (0..n)
                .map(|i| {
                    let s = Sensing::Moments(StatModel::new(1.0, vars[i], 1.0 + gaps[i], vars[i]).unwrap());
                    if i < byz {
                        NodeProfile::byzantine(s, AttackParams::new(p, delta, None).unwrap())
                    } else {
                        NodeProfile::honest(s)
                    }
                })
                .collect();
            if blind {
                // Solve for the common Δ that zeroes the residual.
                let total: f64 = (0..n).map(|i| w[i] * gaps[i]).sum();
                let byz_w: f64 = w[..byz].iter().sum();
                let d = total / (2.0 * p * byz_w);
                for prof in profiles.iter_mut().take(byz) {
                    *prof = NodeProfile::byzantine(prof.sensing, AttackParams::new(p, d, None).unwrap());
                }
            }
            let r = blinding_residual(&profiles, w);
            let m = global_moments(&profiles, w, VarianceConvention::PaperLiteral);
            let d = deflection_coefficient(&m).unwrap();
            prop_assert!(d >= 0.0);
            let sum: f64 = w.iter().sum();
            prop_assert!((m.mu1 - m.mu0 + r / sum).abs() < 1e-9 * (1.0 + r.abs()));
            if blind {
                prop_assert!(d < 1e-18 + 1e-12 * r.abs(), "d = {d}, r = {r}");
                prop_assert!(r.abs() < 1e-9);
            } else if r.abs() > 1e-6 {
                prop_assert!(d > 0.0);
            }
        }
    }
}
