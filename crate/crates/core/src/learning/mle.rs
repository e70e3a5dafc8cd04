//! Recursive maximum-likelihood estimates for honest neighbors.

use super::{mean_var, LearningWindow};
use crate::error::{Error, Result};
use crate::signal::Hypothesis;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HypothesisEstimate {
    pub mean: f64,
    pub variance: f64,
    pub count: usize,
}

/// Estimates of `(μ₁₀, σ²₁₀)` and `(μ₁₁, σ²₁₁)`. A hypothesis with no samples
/// yet stays `None`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct HonestEstimate {
    pub h0: Option<HypothesisEstimate>,
    pub h1: Option<HypothesisEstimate>,
}

impl HonestEstimate {
    pub fn under(&self, h: Hypothesis) -> Option<&HypothesisEstimate> {
        match h {
            Hypothesis::H0 => self.h0.as_ref(),
            Hypothesis::H1 => self.h1.as_ref(),
        }
    }

    /// Cumulative `(ΣD₁, Σ(D − D₁))`.
    pub fn counts(&self) -> (usize, usize) {
        (
            self.h0.map_or(0, |e| e.count),
            self.h1.map_or(0, |e| e.count),
        )
    }

    pub fn is_defined(&self) -> bool {
        self.h0.is_some() && self.h1.is_some()
    }

    pub fn require(&self, h: Hypothesis) -> Result<&HypothesisEstimate> {
        self.under(h).ok_or_else(|| {
            Error::UndefinedEstimate(format!("no samples observed under {h:?}"))
        })
    }

    /// Log-likelihood of the labeled samples under the fitted Gaussians.
    pub fn log_likelihood(&self, window: &LearningWindow) -> Result<f64> {
        let mut ll = 0.0;
        for h in [Hypothesis::H0, Hypothesis::H1] {
            let xs = window.samples(h);
            if xs.is_empty() {
                continue;
            }
            let e = self.require(h)?;
            ll += xs.iter().map(|&y| super::log_normal_pdf(y, e.mean, e.variance)).sum::<f64>();
        }
        Ok(ll)
    }
}

fn update_one(prev: Option<HypothesisEstimate>, new: &[f64]) -> Option<HypothesisEstimate> {
    let Some((m_new, v_new)) = mean_var(new) else {
        return prev;
    };
    let Some(p) = prev else {
        return Some(HypothesisEstimate {
            mean: m_new,
            variance: v_new,
            count: new.len(),
        });
    };
    let n_old = p.count as f64;
    let n = n_old + new.len() as f64;
    let mean = (n_old * p.mean + new.iter().sum::<f64>()) / n;
    let shift = mean - p.mean;
    let fresh: f64 = new.iter().map(|y| (y - mean) * (y - mean)).sum();
    Some(HypothesisEstimate {
        mean,
        variance: (n_old * (p.variance + shift * shift) + fresh) / n,
        count: p.count + new.len(),
    })
}

/// Folds one window into the running estimate. The result equals the batch
/// estimate over every sample seen so far.
pub fn mle_update(prev: &HonestEstimate, window: &LearningWindow) -> HonestEstimate {
    HonestEstimate {
        h0: update_one(prev.h0, window.samples(Hypothesis::H0)),
        h1: update_one(prev.h1, window.samples(Hypothesis::H1)),
    }
}
