//! Receiver operating characteristics of the steady-state statistic.
//!
//! At consensus every node holds `Λ = Σ δ_i Ỹ_i`. Under attack this is the
//! same Gaussian mixture as the transient case with `δ` in place of a row of
//! `W^t`.

use super::qfunc::normal_cdf;
use super::transient::{mixture_for_coefficients, TransientMixture};
use super::weights::normalize;
use crate::error::Result;
use crate::signal::{Hypothesis, NodeProfile, VarianceConvention};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub pf: f64,
    pub pd: f64,
}

/// `(H0, H1)` mixtures of the normalized steady-state statistic. `weights`
/// are the weights nodes actually carry and must not sum to zero.
pub fn steady_state_mixtures(
    profiles: &[NodeProfile],
    weights: &[f64],
    convention: VarianceConvention,
) -> Result<(TransientMixture, TransientMixture)> {
    let delta = normalize(weights)?;
    Ok((
        mixture_for_coefficients(&delta, Hypothesis::H0, profiles, convention)?,
        mixture_for_coefficients(&delta, Hypothesis::H1, profiles, convention)?,
    ))
}

/// Threshold sweep over the steady-state statistic.
pub fn roc_closed_form(
    profiles: &[NodeProfile],
    weights: &[f64],
    convention: VarianceConvention,
    lambdas: &[f64],
) -> Result<Vec<RocPoint>> {
    let (h0, h1) = steady_state_mixtures(profiles, weights, convention)?;
    Ok(lambdas
        .iter()
        .map(|&l| RocPoint {
            pf: h0.exceedance(l),
            pd: h1.exceedance(l),
        })
        .collect())
}

/// `n` evenly spaced thresholds covering both mixtures out to 8 standard
/// deviations of their widest component.
pub fn default_lambda_grid(h0: &TransientMixture, h1: &TransientMixture, n: usize) -> Vec<f64> {
    let (lo, hi) = support(&[h0, h1], 8.0);
    if n < 2 {
        return vec![0.5 * (lo + hi)];
    }
    (0..n)
        .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
        .collect()
}

fn support(mixes: &[&TransientMixture], width: f64) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for mix in mixes {
        for (&m, &v) in mix.component_means.iter().zip(&mix.component_vars) {
            let sd = v.max(0.0).sqrt();
            lo = lo.min(m - width * sd);
            hi = hi.max(m + width * sd);
        }
    }
    if lo == hi {
        (lo - 1.0, hi + 1.0)
    } else {
        (lo, hi)
    }
}

/// Threshold at which `h0` exceeds with probability `pf`, by bisection.
pub fn threshold_for_pf(h0: &TransientMixture, pf: f64) -> f64 {
    let (mut lo, mut hi) = support(&[h0], 40.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if h0.exceedance(mid) > pf {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * mid.abs().max(1.0) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Detection probability at a prescribed false-alarm rate.
pub fn pd_at_pf(h0: &TransientMixture, h1: &TransientMixture, pf: f64) -> f64 {
    h1.exceedance(threshold_for_pf(h0, pf))
}

/// ROC sampled on a grid of false-alarm rates, so curves of different
/// weightings can be compared pointwise.
pub fn roc_on_pf_grid(h0: &TransientMixture, h1: &TransientMixture, pfs: &[f64]) -> Vec<RocPoint> {
    pfs.iter()
        .map(|&pf| {
            let l = threshold_for_pf(h0, pf);
            RocPoint {
                pf: h0.exceedance(l),
                pd: h1.exceedance(l),
            }
        })
        .collect()
}

/// Area under the ROC: `P(Λ₁ > Λ₀)` for independent draws, summed over
/// pairs of components.
pub fn auc(h0: &TransientMixture, h1: &TransientMixture) -> f64 {
    let mut total = 0.0;
    for ((&p, &m0), &v0) in h0
        .component_weights
        .iter()
        .zip(&h0.component_means)
        .zip(&h0.component_vars)
    {
        for ((&q, &m1), &v1) in h1
            .component_weights
            .iter()
            .zip(&h1.component_means)
            .zip(&h1.component_vars)
        {
            let v = v0 + v1;
            let term = if v > 0.0 {
                normal_cdf((m1 - m0) / v.sqrt())
            } else if m1 > m0 {
                1.0
            } else if m1 < m0 {
                0.0
            } else {
                0.5
            };
            total += p * q * term;
        }
    }
    total
}
