//! EM fit of the two-component model for a Byzantine neighbor.
//!
//! Component `j` has mean `μ_j0` under `H0` and `μ_j1` under `H1`; the mixing
//! vector `α` is shared by both hypotheses and the variance is tied across
//! components within a hypothesis.

use super::{log_normal_pdf, mean_var, LearningWindow};
use crate::error::{Error, Result};
use crate::signal::{AttackParams, Hypothesis, StatModel};

/// Mixing mass below which a component counts as collapsed.
pub const COLLAPSE_MASS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixtureEstimate {
    pub alpha: [f64; 2],
    pub mean0: [f64; 2],
    pub mean1: [f64; 2],
    pub var0: f64,
    pub var1: f64,
    pub log_likelihood: f64,
}

impl MixtureEstimate {
    /// Labeled mean ± one labeled standard deviation, `α = (½, ½)`, labeled
    /// variances. Component 1 starts high under `H0` and low under `H1`, the
    /// direction an attack pushes.
    pub fn initial(window: &LearningWindow) -> Result<Self> {
        let (m0, v0) = labeled(window, Hypothesis::H0)?;
        let (m1, v1) = labeled(window, Hypothesis::H1)?;
        let (s0, s1) = (v0.sqrt(), v1.sqrt());
        let mut init = Self {
            alpha: [0.5, 0.5],
            mean0: [m0 + s0, m0 - s0],
            mean1: [m1 - s1, m1 + s1],
            var0: v0,
            var1: v1,
            log_likelihood: f64::NEG_INFINITY,
        };
        init.log_likelihood = init.log_likelihood_of(window);
        Ok(init)
    }

    /// True parameters of an attacker: component 1 is "attack fired".
    pub fn ground_truth(model: &StatModel, attack: &AttackParams) -> Self {
        let p = attack.probability;
        let d = attack.strength;
        Self {
            alpha: [p, 1.0 - p],
            mean0: [model.h0.mean + d, model.h0.mean],
            mean1: [model.h1.mean - d, model.h1.mean],
            var0: model.h0.variance,
            var1: model.h1.variance,
            log_likelihood: f64::NAN,
        }
    }

    /// Same model with the component labels exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            alpha: [self.alpha[1], self.alpha[0]],
            mean0: [self.mean0[1], self.mean0[0]],
            mean1: [self.mean1[1], self.mean1[0]],
            ..*self
        }
    }

    fn means(&self, h: Hypothesis) -> [f64; 2] {
        match h {
            Hypothesis::H0 => self.mean0,
            Hypothesis::H1 => self.mean1,
        }
    }

    fn var(&self, h: Hypothesis) -> f64 {
        match h {
            Hypothesis::H0 => self.var0,
            Hypothesis::H1 => self.var1,
        }
    }

    /// Log-joint of sample `y` with each component.
    fn log_joint(&self, y: f64, h: Hypothesis) -> [f64; 2] {
        let m = self.means(h);
        let v = self.var(h);
        [0, 1].map(|j| self.alpha[j].ln() + log_normal_pdf(y, m[j], v))
    }

    pub fn log_likelihood_of(&self, window: &LearningWindow) -> f64 {
        [Hypothesis::H0, Hypothesis::H1]
            .iter()
            .flat_map(|&h| window.samples(h).iter().map(move |&y| (y, h)))
            .map(|(y, h)| log_sum_exp(self.log_joint(y, h)))
            .sum()
    }
}

fn labeled(window: &LearningWindow, h: Hypothesis) -> Result<(f64, f64)> {
    let (m, v) = mean_var(window.samples(h))
        .ok_or_else(|| Error::UndefinedEstimate(format!("window has no {h:?} samples")))?;
    if !(v > 0.0) {
        return Err(Error::UndefinedEstimate(format!("{h:?} samples have zero spread")));
    }
    Ok((m, v))
}

fn log_sum_exp(l: [f64; 2]) -> f64 {
    let top = l[0].max(l[1]);
    if top == f64::NEG_INFINITY {
        return top;
    }
    top + ((l[0] - top).exp() + (l[1] - top).exp()).ln()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmSettings {
    pub tol: f64,
    pub max_iter: usize,
    pub max_restarts: usize,
}

impl Default for EmSettings {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 500,
            max_restarts: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmFit {
    pub estimate: MixtureEstimate,
    pub iterations: usize,
    pub restarts: usize,
    pub converged: bool,
    /// False when the fit ended with a collapsed component or with the two
    /// components on top of each other.
    pub identifiable: bool,
    /// Log-likelihood after each parameter update of the final run, starting
    /// with the initial point.
    pub ll_trace: Vec<f64>,
}

struct Sums {
    mass: [f64; 2],
    mass_h: [[f64; 2]; 2],
    weighted_h: [[f64; 2]; 2],
    ll: f64,
}

fn e_step(theta: &MixtureEstimate, window: &LearningWindow) -> Sums {
    let mut s = Sums {
        mass: [0.0; 2],
        mass_h: [[0.0; 2]; 2],
        weighted_h: [[0.0; 2]; 2],
        ll: 0.0,
    };
    for h in [Hypothesis::H0, Hypothesis::H1] {
        let k = h.index();
        for &y in window.samples(h) {
            let l = theta.log_joint(y, h);
            let lse = log_sum_exp(l);
            s.ll += lse;
            for j in 0..2 {
                let r = (l[j] - lse).exp();
                s.mass[j] += r;
                s.mass_h[k][j] += r;
                s.weighted_h[k][j] += r * y;
            }
        }
    }
    s
}

fn m_step(theta: &MixtureEstimate, window: &LearningWindow, s: &Sums) -> MixtureEstimate {
    let a1 = s.mass[0] / (s.mass[0] + s.mass[1]);
    let mut next = *theta;
    next.alpha = [a1, 1.0 - a1];
    for h in [Hypothesis::H0, Hypothesis::H1] {
        let k = h.index();
        let mut means = theta.means(h);
        for j in 0..2 {
            if s.mass_h[k][j] > 0.0 {
                means[j] = s.weighted_h[k][j] / s.mass_h[k][j];
            }
        }
        // Tied variance: responsibilities recomputed under θ, deviations
        // taken from the updated means.
        let xs = window.samples(h);
        let mut acc = 0.0;
        for &y in xs {
            let l = theta.log_joint(y, h);
            let lse = log_sum_exp(l);
            for j in 0..2 {
                let d = y - means[j];
                acc += (l[j] - lse).exp() * d * d;
            }
        }
        let var = (acc / xs.len() as f64).max(f64::MIN_POSITIVE);
        match h {
            Hypothesis::H0 => {
                next.mean0 = means;
                next.var0 = var;
            }
            Hypothesis::H1 => {
                next.mean1 = means;
                next.var1 = var;
            }
        }
    }
    next
}

fn jittered(window: &LearningWindow, restart: usize) -> Result<MixtureEstimate> {
    let mut init = MixtureEstimate::initial(window)?;
    let (m0, v0) = labeled(window, Hypothesis::H0)?;
    let (m1, v1) = labeled(window, Hypothesis::H1)?;
    let spread = 1.0 + 0.5 * restart as f64;
    init.mean0 = [m0 + spread * v0.sqrt(), m0 - 0.5 * v0.sqrt()];
    init.mean1 = [m1 - spread * v1.sqrt(), m1 + 0.5 * v1.sqrt()];
    init.log_likelihood = init.log_likelihood_of(window);
    Ok(init)
}

fn separated(t: &MixtureEstimate) -> bool {
    let d0 = (t.mean0[0] - t.mean0[1]).abs() / t.var0.sqrt();
    let d1 = (t.mean1[0] - t.mean1[1]).abs() / t.var1.sqrt();
    d0.max(d1) > 1e-3
}

/// Runs EM from `init` until the log-likelihood gain drops below `tol` or
/// `max_iter` updates. A collapsed component triggers a restart from a
/// jittered initial point.
pub fn em_fit(window: &LearningWindow, init: &MixtureEstimate, settings: &EmSettings) -> Result<EmFit> {
    labeled(window, Hypothesis::H0)?;
    labeled(window, Hypothesis::H1)?;
    let mut start = *init;
    let mut restarts = 0;
    loop {
        let mut theta = start;
        let mut s = e_step(&theta, window);
        let mut trace = vec![s.ll];
        let mut converged = false;
        let mut collapsed = false;
        let mut iterations = 0;
        while iterations < settings.max_iter {
            if s.mass.iter().any(|&m| m < COLLAPSE_MASS * window.len() as f64) {
                collapsed = true;
                break;
            }
            theta = m_step(&theta, window, &s);
            iterations += 1;
            let prev = s.ll;
            s = e_step(&theta, window);
            trace.push(s.ll);
            if s.ll - prev < settings.tol {
                converged = true;
                break;
            }
        }
        theta.log_likelihood = s.ll;
        if collapsed && restarts < settings.max_restarts {
            restarts += 1;
            start = jittered(window, restarts)?;
            continue;
        }
        return Ok(EmFit {
            identifiable: !collapsed && separated(&theta),
            estimate: theta,
            iterations,
            restarts,
            converged: converged || collapsed,
            ll_trace: trace,
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn fig7_model() -> StatModel {
        StatModel::new(3.0, 1.5, 4.0, 2.0).unwrap()
    }

    fn byzantine_window(n: usize, p: f64, delta: f64, seed: u64) -> LearningWindow {
        let m = fig7_model();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g0 = Normal::new(m.h0.mean, m.h0.variance.sqrt()).unwrap();
        let g1 = Normal::new(m.h1.mean, m.h1.variance.sqrt()).unwrap();
        let mut w = LearningWindow::default();
        for _ in 0..n {
            let y = g0.sample(&mut rng) + if rng.random::<f64>() < p { delta } else { 0.0 };
            w.push(y, Hypothesis::H0);
            let y = g1.sample(&mut rng) - if rng.random::<f64>() < p { delta } else { 0.0 };
            w.push(y, Hypothesis::H1);
        }
        w
    }

    fn assert_monotone(trace: &[f64]) {
        for pair in trace.windows(2) {
            assert!(pair[1] >= pair[0] - 1e-9, "{} -> {}", pair[0], pair[1]);
        }
    }

    #[test]
    fn recovers_attack_mixture() {
        let w = byzantine_window(2000, 0.5, 9.0, 17);
        let init = MixtureEstimate::initial(&w).unwrap();
        let fit = em_fit(&w, &init, &EmSettings::default()).unwrap();
        assert_monotone(&fit.ll_trace);
        assert!(fit.converged && fit.identifiable);
        let truth = MixtureEstimate::ground_truth(&fig7_model(), &AttackParams::new(0.5, 9.0, None).unwrap());
        let e = &fit.estimate;
        for j in 0..2 {
            assert!((e.alpha[j] - truth.alpha[j]).abs() < 0.05);
            assert!((e.mean0[j] - truth.mean0[j]).abs() < 0.05 * truth.mean0[j].abs());
            assert!((e.mean1[j] - truth.mean1[j]).abs() < 0.05 * truth.mean1[j].abs());
        }
        assert_eq!(e.alpha[0] + e.alpha[1], 1.0);
    }

    #[test]
    fn unequal_attack_probability() {
        let w = byzantine_window(2000, 0.2, 9.0, 3);
        let fit = em_fit(&w, &MixtureEstimate::initial(&w).unwrap(), &EmSettings::default()).unwrap();
        assert_monotone(&fit.ll_trace);
        assert!((fit.estimate.alpha[0] - 0.2).abs() < 0.05, "{:?}", fit.estimate);
    }

    #[test]
    fn step_from_truth_does_not_decrease() {
        let w = byzantine_window(300, 0.5, 9.0, 8);
        let mut truth = MixtureEstimate::ground_truth(&fig7_model(), &AttackParams::new(0.5, 9.0, None).unwrap());
        truth.log_likelihood = truth.log_likelihood_of(&w);
        let one = EmSettings {
            max_iter: 1,
            ..EmSettings::default()
        };
        let fit = em_fit(&w, &truth, &one).unwrap();
        assert_eq!(fit.iterations, 1);
        assert!(fit.estimate.log_likelihood >= truth.log_likelihood - 1e-9);
    }

    #[test]
    fn monotone_across_seeds() {
        for seed in 0..30 {
            let p = [0.0, 0.3, 0.5, 0.9][seed as usize % 4];
            let w = byzantine_window(40, p, 4.0, seed);
            let fit = em_fit(&w, &MixtureEstimate::initial(&w).unwrap(), &EmSettings::default()).unwrap();
            assert_monotone(&fit.ll_trace);
            let a = fit.estimate.alpha;
            assert_eq!(a[0] + a[1], 1.0);
        }
    }

    #[test]
    fn no_attack_is_flagged_or_harmless() {
        // Δ = 0: the two components describe the same distribution.
        let w = byzantine_window(500, 0.5, 0.0, 4);
        let fit = em_fit(&w, &MixtureEstimate::initial(&w).unwrap(), &EmSettings::default()).unwrap();
        let e = fit.estimate;
        let pooled0 = e.alpha[0] * e.mean0[0] + e.alpha[1] * e.mean0[1];
        let pooled1 = e.alpha[0] * e.mean1[0] + e.alpha[1] * e.mean1[1];
        let (m0, _) = mean_var(w.samples(Hypothesis::H0)).unwrap();
        let (m1, _) = mean_var(w.samples(Hypothesis::H1)).unwrap();
        assert!((pooled0 - m0).abs() < 1e-3 && (pooled1 - m1).abs() < 1e-3);
    }

    #[test]
    fn swapped_labels_same_likelihood() {
        let w = byzantine_window(100, 0.5, 9.0, 2);
        let e = MixtureEstimate::initial(&w).unwrap();
        assert!((e.log_likelihood_of(&w) - e.swapped().log_likelihood_of(&w)).abs() < 1e-9);
    }

    #[test]
    fn needs_both_hypotheses() {
        let w = LearningWindow::from_split(vec![1.0, 2.0], vec![]);
        assert!(matches!(MixtureEstimate::initial(&w), Err(Error::UndefinedEstimate(_))));
        let flat = LearningWindow::from_split(vec![1.0, 1.0], vec![2.0, 3.0]);
        assert!(MixtureEstimate::initial(&flat).is_err());
    }
}
