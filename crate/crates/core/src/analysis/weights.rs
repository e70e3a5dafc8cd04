//! Fusion weight assignments: the SNR-proportional baseline, deflection-optimal
//! weights, the equal-gain and exclusion baselines, and the shift that makes
//! negative weights usable by the robust consensus rule.

use crate::error::{Error, Result};
use crate::signal::{NodeProfile, SensingParams, StatModel, VarianceConvention};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightProvenance {
    Conventional,
    OptimalKnown,
    OptimalLearned { iteration: usize },
    EqualGain,
    Exclusion,
    Custom,
}

/// Offset applied to negative weights at run time.
///
/// A node with negative weight `w_i` contributes with `w_i + c / x_i(0)`
/// instead, so `Σ w'_i x_i(0) = Σ w_i x_i(0) + β c` and the threshold on the
/// weighted sum moves by `β c`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightShift {
    pub offset: f64,
    pub shifted: Vec<bool>,
}

impl WeightShift {
    /// Picks `c = max_i(−w_i x̄_i)·(1 + 1e-6)` over negative weights, with
    /// `x̄_i` the design-time scale of node i's statistic. `None` when every
    /// weight is already nonnegative.
    pub fn design(weights: &[f64], design_scale: &[f64]) -> Option<Self> {
        let shifted: Vec<bool> = weights.iter().map(|&w| w < 0.0).collect();
        if !shifted.iter().any(|&s| s) {
            return None;
        }
        let worst = weights
            .iter()
            .zip(design_scale)
            .filter(|(w, _)| **w < 0.0)
            .map(|(w, x)| -w * x)
            .fold(0.0, f64::max);
        Some(Self {
            offset: worst * (1.0 + 1e-6),
            shifted,
        })
    }

    /// β, the number of shifted nodes.
    pub fn count(&self) -> usize {
        self.shifted.iter().filter(|&&s| s).count()
    }

    pub fn runtime_weights(&self, base: &[f64], x0: &[f64]) -> Vec<f64> {
        base.iter()
            .zip(x0)
            .zip(&self.shifted)
            .map(|((&w, &x), &s)| if s { w + self.offset / x } else { w })
            .collect()
    }

    /// Threshold on the weighted sum after the shift: `λ + β c`.
    pub fn adjusted_threshold(&self, sum_threshold: f64) -> f64 {
        sum_threshold + self.count() as f64 * self.offset
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightAssignment {
    pub weights: Vec<f64>,
    pub provenance: WeightProvenance,
    pub shift: Option<WeightShift>,
}

impl WeightAssignment {
    pub fn new(weights: Vec<f64>, provenance: WeightProvenance) -> Self {
        Self {
            weights,
            provenance,
            shift: None,
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `δ_i = w_i / Σ_j w_j`.
    pub fn normalized(&self) -> Result<Vec<f64>> {
        normalize(&self.weights)
    }

    pub fn has_negative(&self) -> bool {
        self.weights.iter().any(|&w| w < 0.0)
    }
}

pub(crate) fn normalize(w: &[f64]) -> Result<Vec<f64>> {
    let total: f64 = w.iter().sum();
    if total == 0.0 || !total.is_finite() {
        return Err(Error::DegenerateWeights(format!("weights sum to {total}")));
    }
    Ok(w.iter().map(|x| x / total).collect())
}

/// `w_i = (η_i/σ_i²) / Σ_j (η_j/σ_j²)`.
pub fn conventional_weights(params: &[SensingParams]) -> Result<WeightAssignment> {
    let raw = params
        .iter()
        .map(|p| {
            p.validate()?;
            Ok(p.snr() / p.noise_variance)
        })
        .collect::<Result<Vec<f64>>>()?;
    if raw.iter().all(|&x| x == 0.0) {
        return Err(Error::DegenerateWeights("every node has zero SNR".into()));
    }
    Ok(WeightAssignment::new(normalize(&raw)?, WeightProvenance::Conventional))
}

/// SNR-proportional weights for a mixed set of profiles. Nodes described by
/// moments use `(μ₁ − μ₀) / var₀`, which is proportional to `η/σ²` when all
/// nodes share the same `M`.
pub fn conventional_weights_for(profiles: &[NodeProfile]) -> Result<WeightAssignment> {
    if let Some(params) = profiles
        .iter()
        .map(|p| p.sensing.energy().copied())
        .collect::<Option<Vec<_>>>()
    {
        return conventional_weights(&params);
    }
    let raw: Vec<f64> = profiles
        .iter()
        .map(|p| {
            let m = p.sensing.moments(VarianceConvention::PaperLiteral);
            m.mean_gap() / m.h0.variance
        })
        .collect();
    if raw.iter().all(|&x| x == 0.0) {
        return Err(Error::DegenerateWeights("every node has zero SNR".into()));
    }
    Ok(WeightAssignment::new(normalize(&raw)?, WeightProvenance::Conventional))
}

/// Weights each node actually carries under the conventional rule: a
/// Byzantine with a tampered weight substitutes `w̃` for its assigned weight.
pub fn effective_conventional_weights(profiles: &[NodeProfile], assigned: &[f64]) -> Vec<f64> {
    profiles
        .iter()
        .zip(assigned)
        .map(|(p, &w)| p.attack().and_then(|a| a.tampered_weight).unwrap_or(w))
        .collect()
}

/// Honest weight `(μ₁ − μ₀)/var₀`, equal to `η / (2Mσ²)` for an energy node.
pub(crate) fn honest_optimal(m: &StatModel) -> f64 {
    m.mean_gap() / m.h0.variance
}

/// Byzantine weight `(μ₁ − μ₀ − 2PΔ) / (P(1−P)Δ² + var₀)`, equal to
/// `(ησ² − 2PΔ) / (Δ²P(1−P) + 2Mσ⁴)` for an energy node.
pub(crate) fn byzantine_optimal(m: &StatModel, p: f64, delta: f64) -> f64 {
    (m.mean_gap() - 2.0 * p * delta) / (delta * delta * p * (1.0 - p) + m.h0.variance)
}

/// Deflection-maximizing weights with known identities and attack parameters.
/// Negative Byzantine weights get a [`WeightShift`] designed on the `H0` mean.
pub fn optimal_weights(profiles: &[NodeProfile], convention: VarianceConvention) -> WeightAssignment {
    let models: Vec<StatModel> = profiles.iter().map(|p| p.sensing.moments(convention)).collect();
    let weights: Vec<f64> = profiles
        .iter()
        .zip(&models)
        .map(|(p, m)| match p.attack() {
            None => honest_optimal(m),
            Some(a) => byzantine_optimal(m, a.probability, a.strength),
        })
        .collect();
    let scale: Vec<f64> = models.iter().map(|m| m.h0.mean).collect();
    WeightAssignment {
        shift: WeightShift::design(&weights, &scale),
        weights,
        provenance: WeightProvenance::OptimalKnown,
    }
}

pub fn equal_gain_weights(n: usize) -> WeightAssignment {
    WeightAssignment::new(vec![1.0 / n as f64; n], WeightProvenance::EqualGain)
}

/// Byzantines get weight 0; honest nodes keep SNR-proportional weights,
/// renormalized over the honest set.
pub fn exclusion_weights(profiles: &[NodeProfile]) -> Result<WeightAssignment> {
    let base = conventional_weights_for(profiles)?;
    let masked: Vec<f64> = profiles
        .iter()
        .zip(&base.weights)
        .map(|(p, &w)| if p.is_byzantine() { 0.0 } else { w })
        .collect();
    Ok(WeightAssignment::new(normalize(&masked)?, WeightProvenance::Exclusion))
}
