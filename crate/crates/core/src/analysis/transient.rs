//! Distribution of a node's statistic after `t` consensus iterations.
//!
//! The state of node `j` at iteration `t` is `z = Σ_i c_i Ỹ_i` with `c` the
//! `j`-th row of `W^t`. Every Byzantine either attacks or behaves honestly in a
//! given interval, so `z` is a Gaussian mixture with one component per subset
//! of honestly behaving Byzantines.

use nalgebra::{DMatrix, DVector};

use super::qfunc::q_function;
use crate::error::{Error, Result};
use crate::signal::{Hypothesis, NodeProfile, VarianceConvention};

/// Largest Byzantine count for which the `2^N₁` components are enumerated.
pub const ENUMERATION_CAP: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct TransientMixture {
    pub component_weights: Vec<f64>,
    pub component_means: Vec<f64>,
    pub component_vars: Vec<f64>,
}

impl TransientMixture {
    pub fn len(&self) -> usize {
        self.component_weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.component_weights.is_empty()
    }

    /// `P(z > λ)`. Zero-variance components act as a step at their mean.
    pub fn exceedance(&self, lambda: f64) -> f64 {
        self.component_weights
            .iter()
            .zip(&self.component_means)
            .zip(&self.component_vars)
            .map(|((&p, &m), &v)| p * component_tail(lambda, m, v))
            .sum()
    }

    pub fn mean(&self) -> f64 {
        self.component_weights
            .iter()
            .zip(&self.component_means)
            .map(|(p, m)| p * m)
            .sum()
    }

    pub fn variance(&self) -> f64 {
        let mu = self.mean();
        self.component_weights
            .iter()
            .zip(&self.component_means)
            .zip(&self.component_vars)
            .map(|((p, m), v)| p * (v + (m - mu) * (m - mu)))
            .sum()
    }
}

fn component_tail(lambda: f64, mean: f64, var: f64) -> f64 {
    if var > 0.0 {
        q_function((lambda - mean) / var.sqrt())
    } else if mean > lambda {
        1.0
    } else {
        0.0
    }
}

/// Per-node data shared by the enumeration and the matrix form.
struct Decomposition {
    base_mean: f64,
    var: f64,
    /// `(c_k · attack shift, attack probability)` for each Byzantine.
    byzantine: Vec<(f64, f64)>,
}

fn decompose(
    coeffs: &[f64],
    h: Hypothesis,
    profiles: &[NodeProfile],
    convention: VarianceConvention,
) -> Result<Decomposition> {
    if coeffs.len() != profiles.len() {
        return Err(Error::InvalidParameter(format!(
            "{} coefficients for {} nodes",
            coeffs.len(),
            profiles.len()
        )));
    }
    let mut d = Decomposition {
        base_mean: 0.0,
        var: 0.0,
        byzantine: Vec::new(),
    };
    for (p, &c) in profiles.iter().zip(coeffs) {
        let m = p.sensing.moments(convention).under(h);
        d.base_mean += c * m.mean;
        d.var += c * c * m.variance;
        if let Some(a) = p.attack() {
            d.byzantine.push((c * a.shift(h), a.probability));
        }
    }
    if d.byzantine.len() > ENUMERATION_CAP {
        return Err(Error::EnumerationLimit {
            byzantines: d.byzantine.len(),
            cap: ENUMERATION_CAP,
        });
    }
    Ok(d)
}

/// Mixture of `Σ_i c_i Ỹ_i` under hypothesis `h`.
///
/// Bit `k` of the component index is set when Byzantine `k` behaves honestly.
/// Byzantines may carry different attack probabilities; each component's
/// weight is the product of the individual coin outcomes.
pub fn mixture_for_coefficients(
    coeffs: &[f64],
    h: Hypothesis,
    profiles: &[NodeProfile],
    convention: VarianceConvention,
) -> Result<TransientMixture> {
    let d = decompose(coeffs, h, profiles, convention)?;
    let n1 = d.byzantine.len();
    let count = 1usize << n1;
    let mut mix = TransientMixture {
        component_weights: Vec::with_capacity(count),
        component_means: Vec::with_capacity(count),
        component_vars: vec![d.var; count],
    };
    for s in 0..count {
        let mut weight = 1.0;
        let mut mean = d.base_mean;
        for (k, &(shift, p)) in d.byzantine.iter().enumerate() {
            if s >> k & 1 == 1 {
                weight *= 1.0 - p;
            } else {
                weight *= p;
                mean += shift;
            }
        }
        mix.component_weights.push(weight);
        mix.component_means.push(mean);
    }
    Ok(mix)
}

/// Mixture of node `j`'s state given the matrix power `W^t`.
pub fn transient_mixture(
    wt: &DMatrix<f64>,
    node: usize,
    h: Hypothesis,
    profiles: &[NodeProfile],
    convention: VarianceConvention,
) -> Result<TransientMixture> {
    if node >= wt.nrows() {
        return Err(Error::InvalidParameter(format!(
            "node {} out of range for {} nodes",
            node + 1,
            wt.nrows()
        )));
    }
    let row: Vec<f64> = wt.row(node).iter().copied().collect();
    mixture_for_coefficients(&row, h, profiles, convention)
}

/// `(P_d, P_f)` for the test `z > λ`.
pub fn transient_pd_pf(h1: &TransientMixture, h0: &TransientMixture, lambda: f64) -> (f64, f64) {
    (h1.exceedance(lambda), h0.exceedance(lambda))
}

/// `P(z > λ)` through the binary-matrix form.
///
/// `A` (`2^N₁ × N₁`) marks honestly behaving Byzantines per component and
/// `Aᶜ = 1 − A`. With `B = A·diag(1−P) + Aᶜ·diag(P)` the component weights are
/// the row products of `B`, and the component means are
/// `base + Aᶜ·(c ∘ shift)`.
pub fn vectorized_exceedance(
    wt: &DMatrix<f64>,
    node: usize,
    h: Hypothesis,
    lambda: f64,
    profiles: &[NodeProfile],
    convention: VarianceConvention,
) -> Result<f64> {
    if node >= wt.nrows() {
        return Err(Error::InvalidParameter(format!(
            "node {} out of range for {} nodes",
            node + 1,
            wt.nrows()
        )));
    }
    let row: Vec<f64> = wt.row(node).iter().copied().collect();
    let d = decompose(&row, h, profiles, convention)?;
    let n1 = d.byzantine.len();
    let count = 1usize << n1;
    let a = DMatrix::from_fn(count, n1, |s, k| (s >> k & 1) as f64);
    let ac = a.map(|x| 1.0 - x);
    let stay = DVector::from_iterator(n1, d.byzantine.iter().map(|&(_, p)| 1.0 - p));
    let attack = DVector::from_iterator(n1, d.byzantine.iter().map(|&(_, p)| p));
    let shift = DVector::from_iterator(n1, d.byzantine.iter().map(|&(s, _)| s));
    let b = &a * DMatrix::from_diagonal(&stay) + &ac * DMatrix::from_diagonal(&attack);
    let weights = DVector::from_iterator(count, b.row_iter().map(|r| r.iter().product::<f64>()));
    let means = (&ac * shift).add_scalar(d.base_mean);
    let tails = means.map(|m| component_tail(lambda, m, d.var));
    Ok(weights.dot(&tails))
}

/// Detection probability of node `j` via [`vectorized_exceedance`] under `H1`.
pub fn vectorized_pd(
    wt: &DMatrix<f64>,
    node: usize,
    lambda: f64,
    profiles: &[NodeProfile],
    convention: VarianceConvention,
) -> Result<f64> {
    vectorized_exceedance(wt, node, Hypothesis::H1, lambda, profiles, convention)
}
