//! Learning neighbor parameters from labeled data and turning the estimates
//! into fusion weights.
//!
//! Labels come from a feedback mechanism that reveals the true hypothesis of
//! each detection interval after the fact. Honest neighbors are modeled as one
//! Gaussian per hypothesis; Byzantine neighbors as a two-component mixture
//! with a shared mixing vector.

pub mod adaptive;
pub mod classify;
pub mod em;
pub mod mle;
pub mod run;

pub use adaptive::{adaptive_weights, byzantine_weight, honest_weight};
pub use classify::{classify_node, ClassifierPenalty, NodeVerdict, Verdict};
pub use em::{em_fit, EmFit, EmSettings, MixtureEstimate};
pub use mle::{mle_update, HonestEstimate, HypothesisEstimate};
pub use run::{
    learning_loop, D1Policy, IterationTrace, LearningConfig, LearningTrace, NeighborRecord,
};

use crate::signal::Hypothesis;

/// Labeled samples of one neighbor.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LearningWindow {
    h0: Vec<f64>,
    h1: Vec<f64>,
}

impl LearningWindow {
    pub fn new(samples: &[(f64, Hypothesis)]) -> Self {
        let mut w = Self::default();
        for &(y, h) in samples {
            w.push(y, h);
        }
        w
    }

    pub fn from_split(h0: Vec<f64>, h1: Vec<f64>) -> Self {
        Self { h0, h1 }
    }

    pub fn push(&mut self, y: f64, h: Hypothesis) {
        match h {
            Hypothesis::H0 => self.h0.push(y),
            Hypothesis::H1 => self.h1.push(y),
        }
    }

    pub fn extend(&mut self, other: &LearningWindow) {
        self.h0.extend_from_slice(&other.h0);
        self.h1.extend_from_slice(&other.h1);
    }

    pub fn samples(&self, h: Hypothesis) -> &[f64] {
        match h {
            Hypothesis::H0 => &self.h0,
            Hypothesis::H1 => &self.h1,
        }
    }

    /// `D`.
    pub fn len(&self) -> usize {
        self.h0.len() + self.h1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `D₁`, the number of `H0` intervals.
    pub fn h0_count(&self) -> usize {
        self.h0.len()
    }
}

/// Population mean and variance. `None` for an empty slice.
pub(crate) fn mean_var(x: &[f64]) -> Option<(f64, f64)> {
    if x.is_empty() {
        return None;
    }
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let v = x.iter().map(|y| (y - m) * (y - m)).sum::<f64>() / n;
    Some((m, v))
}

pub(crate) fn log_normal_pdf(x: f64, mean: f64, var: f64) -> f64 {
    let d = x - mean;
    -0.5 * ((2.0 * std::f64::consts::PI * var).ln() + d * d / var)
}
