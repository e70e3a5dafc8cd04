//! Sensing statistics and the data-falsification model.
//!
//! An energy detector sums `M` squared samples. Under `H0` the statistic over
//! the noise variance is central chi-square with `M` degrees of freedom; under
//! `H1` it is noncentral with noncentrality equal to the local SNR.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Hypothesis {
    H0,
    H1,
}

impl Hypothesis {
    pub fn index(self) -> usize {
        match self {
            Hypothesis::H0 => 0,
            Hypothesis::H1 => 1,
        }
    }
}

/// Which `H1` variance the Gaussian approximation uses.
///
/// `PaperLiteral` is `2(M+η)σ⁴`, the value the transient analysis and its
/// figures are built on. `ExactNoncentral` is `2(M+2η)σ⁴`, the true variance
/// of a scaled noncentral chi-square.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VarianceConvention {
    #[default]
    PaperLiteral,
    ExactNoncentral,
}

/// How a simulator draws a node's clean statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplingModel {
    /// Sum of `M` squared Gaussian samples. Only meaningful for energy nodes;
    /// nodes given by moments fall back to Gaussian draws.
    Exact,
    /// Draw from the Gaussian approximation with the given variance convention.
    Gaussian(VarianceConvention),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensingParams {
    pub noise_variance: f64,
    pub channel_gain: f64,
    /// Time-bandwidth product.
    pub samples: u32,
    pub signal_energy: f64,
}

impl SensingParams {
    pub fn new(noise_variance: f64, channel_gain: f64, samples: u32, signal_energy: f64) -> Result<Self> {
        let p = Self {
            noise_variance,
            channel_gain,
            samples,
            signal_energy,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.noise_variance > 0.0) || !self.noise_variance.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "noise variance must be positive, got {}",
                self.noise_variance
            )));
        }
        if self.samples == 0 {
            return Err(Error::InvalidParameter("M must be at least 1".into()));
        }
        if !(self.signal_energy >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "signal energy must be nonnegative, got {}",
                self.signal_energy
            )));
        }
        Ok(())
    }

    /// `η = E_s h² / σ²`.
    pub fn snr(&self) -> f64 {
        self.signal_energy * self.channel_gain * self.channel_gain / self.noise_variance
    }

    pub fn moments(&self, convention: VarianceConvention) -> StatModel {
        StatModel {
            h0: gaussian_moments(self, Hypothesis::H0, convention),
            h1: gaussian_moments(self, Hypothesis::H1, convention),
        }
    }
}

pub fn local_snr(p: &SensingParams) -> Result<f64> {
    if !(p.noise_variance > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "noise variance must be positive, got {}",
            p.noise_variance
        )));
    }
    Ok(p.snr())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
}

/// Gaussian description of a node's clean statistic under both hypotheses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatModel {
    pub h0: Moments,
    pub h1: Moments,
}

impl StatModel {
    pub fn new(mean0: f64, var0: f64, mean1: f64, var1: f64) -> Result<Self> {
        if !(var0 > 0.0 && var1 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "variances must be positive, got ({var0}, {var1})"
            )));
        }
        Ok(Self {
            h0: Moments { mean: mean0, variance: var0 },
            h1: Moments { mean: mean1, variance: var1 },
        })
    }

    pub fn under(&self, h: Hypothesis) -> Moments {
        match h {
            Hypothesis::H0 => self.h0,
            Hypothesis::H1 => self.h1,
        }
    }

    /// Mean gap `μ₁ - μ₀`, equal to `ησ²` for an energy detector.
    pub fn mean_gap(&self) -> f64 {
        self.h1.mean - self.h0.mean
    }
}

/// `H0 → (Mσ², 2Mσ⁴)`, `H1 → ((M+η)σ², variance per convention)`.
pub fn gaussian_moments(p: &SensingParams, h: Hypothesis, convention: VarianceConvention) -> Moments {
    let m = p.samples as f64;
    let s2 = p.noise_variance;
    let eta = p.snr();
    match h {
        Hypothesis::H0 => Moments {
            mean: m * s2,
            variance: 2.0 * m * s2 * s2,
        },
        Hypothesis::H1 => {
            let variance = match convention {
                VarianceConvention::PaperLiteral => 2.0 * (m + eta) * s2 * s2,
                VarianceConvention::ExactNoncentral => 2.0 * (m + 2.0 * eta) * s2 * s2,
            };
            Moments {
                mean: (m + eta) * s2,
                variance,
            }
        }
    }
}

/// Exact energy-detector draw: `Σ_k (h s_k + n_k)²` with a constant-amplitude
/// signal `s_k = sqrt(E_s / M)` and `n_k ~ N(0, σ²)`.
pub fn sample_statistic<R: Rng + ?Sized>(p: &SensingParams, h: Hypothesis, rng: &mut R) -> f64 {
    let sigma = p.noise_variance.sqrt();
    let amplitude = match h {
        Hypothesis::H0 => 0.0,
        Hypothesis::H1 => p.channel_gain * (p.signal_energy / p.samples as f64).sqrt(),
    };
    (0..p.samples)
        .map(|_| {
            let n: f64 = rng.sample(StandardNormal);
            let x = amplitude + sigma * n;
            x * x
        })
        .sum()
}

pub fn sample_gaussian<R: Rng + ?Sized>(m: &StatModel, h: Hypothesis, rng: &mut R) -> f64 {
    let mo = m.under(h);
    let z: f64 = rng.sample(StandardNormal);
    mo.mean + mo.variance.sqrt() * z
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttackParams {
    pub probability: f64,
    pub strength: f64,
    /// Self-assigned weight under the conventional rule. `None` keeps the
    /// weight the node would have had as an honest node.
    pub tampered_weight: Option<f64>,
}

impl AttackParams {
    pub fn new(probability: f64, strength: f64, tampered_weight: Option<f64>) -> Result<Self> {
        if !(0.0..=1.0).contains(&probability) {
            return Err(Error::InvalidParameter(format!(
                "attack probability must lie in [0, 1], got {probability}"
            )));
        }
        if !(strength >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "attack strength must be nonnegative, got {strength}"
            )));
        }
        if let Some(w) = tampered_weight {
            if !(w > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "tampered weight must be positive, got {w}"
                )));
            }
        }
        Ok(Self {
            probability,
            strength,
            tampered_weight,
        })
    }

    /// Signed shift applied when the attack fires.
    pub fn shift(&self, h: Hypothesis) -> f64 {
        match h {
            Hypothesis::H0 => self.strength,
            Hypothesis::H1 => -self.strength,
        }
    }
}

/// With probability `P`, push `y` up by `Δ` under `H0` and down under `H1`.
/// The coin is drawn on every call so the stream position does not depend on
/// the outcome.
pub fn apply_attack<R: Rng + ?Sized>(y: f64, h: Hypothesis, a: &AttackParams, rng: &mut R) -> f64 {
    let coin: f64 = rng.random();
    if coin < a.probability {
        y + a.shift(h)
    } else {
        y
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Identity {
    Honest,
    Byzantine(AttackParams),
}

impl Identity {
    pub fn attack(&self) -> Option<&AttackParams> {
        match self {
            Identity::Honest => None,
            Identity::Byzantine(a) => Some(a),
        }
    }

    pub fn is_byzantine(&self) -> bool {
        matches!(self, Identity::Byzantine(_))
    }
}

/// A node's sensing model: physical energy-detector parameters or directly
/// specified Gaussian moments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Sensing {
    Energy(SensingParams),
    Moments(StatModel),
}

impl Sensing {
    pub fn moments(&self, convention: VarianceConvention) -> StatModel {
        match self {
            Sensing::Energy(p) => p.moments(convention),
            Sensing::Moments(m) => *m,
        }
    }

    pub fn energy(&self) -> Option<&SensingParams> {
        match self {
            Sensing::Energy(p) => Some(p),
            Sensing::Moments(_) => None,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, model: SamplingModel, h: Hypothesis, rng: &mut R) -> f64 {
        match (self, model) {
            (Sensing::Energy(p), SamplingModel::Exact) => sample_statistic(p, h, rng),
            (Sensing::Energy(p), SamplingModel::Gaussian(c)) => sample_gaussian(&p.moments(c), h, rng),
            (Sensing::Moments(m), _) => sample_gaussian(m, h, rng),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeProfile {
    pub sensing: Sensing,
    pub identity: Identity,
}

impl NodeProfile {
    pub fn honest(sensing: Sensing) -> Self {
        Self {
            sensing,
            identity: Identity::Honest,
        }
    }

    pub fn byzantine(sensing: Sensing, attack: AttackParams) -> Self {
        Self {
            sensing,
            identity: Identity::Byzantine(attack),
        }
    }

    pub fn attack(&self) -> Option<&AttackParams> {
        self.identity.attack()
    }

    pub fn is_byzantine(&self) -> bool {
        self.identity.is_byzantine()
    }
}
