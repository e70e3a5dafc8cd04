//! Honest-or-Byzantine verdict for a neighbor.

use super::em::MixtureEstimate;
use super::mle::HonestEstimate;
use super::LearningWindow;
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    Honest,
    Byzantine,
}

/// Complexity charge on the mixture model before the likelihoods are
/// compared.
///
/// The mixture contains the single Gaussian as a special case, so its fitted
/// likelihood is never smaller and a bare comparison labels nearly every
/// honest node Byzantine. `Bic` subtracts `(k/2)·ln n` with `k = 3` extra
/// parameters (one mixing weight, one extra mean per hypothesis).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum ClassifierPenalty {
    None,
    #[default]
    Bic,
}

impl ClassifierPenalty {
    pub fn amount(self, samples: usize) -> f64 {
        match self {
            Self::None => 0.0,
            Self::Bic => 1.5 * (samples as f64).ln(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeVerdict {
    pub identity: Verdict,
    pub log_likelihood_h: f64,
    pub log_likelihood_b: f64,
    pub penalty: f64,
}

/// Compares the window's log-likelihood under the honest Gaussians with the
/// penalized mixture log-likelihood. Ties go to honest.
pub fn classify_node(
    window: &LearningWindow,
    honest: &HonestEstimate,
    mixture: &MixtureEstimate,
    penalty: ClassifierPenalty,
) -> Result<NodeVerdict> {
    let log_likelihood_h = honest.log_likelihood(window)?;
    let log_likelihood_b = mixture.log_likelihood_of(window);
    let penalty = penalty.amount(window.len());
    let identity = if log_likelihood_b - penalty > log_likelihood_h {
        Verdict::Byzantine
    } else {
        Verdict::Honest
    };
    Ok(NodeVerdict {
        identity,
        log_likelihood_h,
        log_likelihood_b,
        penalty,
    })
}
