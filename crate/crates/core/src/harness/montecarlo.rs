//! Seeded Monte Carlo over full sense-attack-consensus-decide trials.
//!
//! Trial `k` draws its hypothesis from stream `(k, NETWORK, Hypothesis)` and
//! node `i`'s noise and attack coin from `(k, i, Noise)` and `(k, i, Attack)`.
//! Trials are independent, so the summary is identical for any thread count.

use nalgebra::DVector;
use rand::Rng;
use rayon::prelude::*;

use super::config::Scenario;
use crate::analysis::{WeightAssignment, WeightShift};
use crate::consensus::{
    conventional_perron, robust_epsilon_bound, robust_perron, spread, ConsensusMatrix, EpsilonPolicy, MatrixKind,
};
use crate::error::{Error, Result};
use crate::signal::{apply_attack, Hypothesis, NodeProfile, SamplingModel};
use crate::streams::{Purpose, SeedTree, NETWORK};

/// Margin of a per-trial offset. With 2 the most constrained shifted node
/// keeps a runtime weight of `|w_i|`; a margin near 1 would leave it near
/// zero and stall the consensus.
pub const REDESIGN_MARGIN: f64 = 2.0;

/// How a trial handled negative fusion weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ShiftStatus {
    /// All weights were nonnegative.
    NotNeeded,
    /// The design-time offset kept every runtime weight positive.
    Design,
    /// The design-time offset failed for this draw; a per-trial offset
    /// `max_i(−w_i x_i(0))·REDESIGN_MARGIN` was used instead.
    Redesigned { offset: f64 },
    /// Some shifted node reported a nonpositive statistic, so no offset
    /// works. The trial decides on the exact weighted average.
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteadyOutcome {
    pub converged_at: Option<usize>,
    pub state: Vec<f64>,
    pub decisions: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial: u64,
    pub hypothesis: Hypothesis,
    /// Sensed statistics before tampering.
    pub clean: Vec<f64>,
    /// `x(0)`, after Byzantines have tampered.
    pub attacked: Vec<f64>,
    /// `transient[t - 1][j]`: node j decides `H1` at iteration t.
    pub transient: Vec<Vec<bool>>,
    pub steady: Option<SteadyOutcome>,
    pub shift: ShiftStatus,
    /// Step size was reduced to half the admissible bound for this trial.
    pub epsilon_clamped: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionRates {
    pub pd: f64,
    pub pd_se: f64,
    pub pf: f64,
    pub pf_se: f64,
}

fn rate(hits: u64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let p = hits as f64 / n as f64;
    (p, (p * (1.0 - p) / n as f64).sqrt())
}

fn rates(h1_hits: u64, h1_n: u64, h0_hits: u64, h0_n: u64) -> DetectionRates {
    let (pd, pd_se) = rate(h1_hits, h1_n);
    let (pf, pf_se) = rate(h0_hits, h0_n);
    DetectionRates { pd, pd_se, pf, pf_se }
}

/// Integer tallies over a batch of trials.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonteCarloSummary {
    pub nodes: usize,
    pub t_max: usize,
    pub trials: [u64; 2],
    /// `[(t − 1)·n + j]`, split by true hypothesis.
    pub transient_hits: [Vec<u64>; 2],
    /// Trials that reached consensus, split by true hypothesis.
    pub steady_trials: [u64; 2],
    pub steady_hits: [Vec<u64>; 2],
    pub nonconverged: u64,
    pub shift_redesigned: u64,
    pub shift_infeasible: u64,
    pub epsilon_clamped: u64,
}

impl MonteCarloSummary {
    fn empty(nodes: usize, t_max: usize) -> Self {
        Self {
            nodes,
            t_max,
            trials: [0; 2],
            transient_hits: [vec![0; nodes * t_max], vec![0; nodes * t_max]],
            steady_trials: [0; 2],
            steady_hits: [vec![0; nodes], vec![0; nodes]],
            nonconverged: 0,
            shift_redesigned: 0,
            shift_infeasible: 0,
            epsilon_clamped: 0,
        }
    }

    fn add(&mut self, r: &TrialRecord) {
        let h = r.hypothesis.index();
        self.trials[h] += 1;
        for (t, row) in r.transient.iter().enumerate() {
            for (j, &d) in row.iter().enumerate() {
                self.transient_hits[h][t * self.nodes + j] += d as u64;
            }
        }
        if let Some(s) = &r.steady {
            if s.converged_at.is_some() {
                self.steady_trials[h] += 1;
                for (j, &d) in s.decisions.iter().enumerate() {
                    self.steady_hits[h][j] += d as u64;
                }
            } else {
                self.nonconverged += 1;
            }
        }
        match r.shift {
            ShiftStatus::Redesigned { .. } => self.shift_redesigned += 1,
            ShiftStatus::Infeasible => self.shift_infeasible += 1,
            _ => {}
        }
        self.epsilon_clamped += r.epsilon_clamped as u64;
    }

    fn merge(mut self, other: Self) -> Self {
        for h in 0..2 {
            self.trials[h] += other.trials[h];
            self.steady_trials[h] += other.steady_trials[h];
            for (a, b) in self.transient_hits[h].iter_mut().zip(&other.transient_hits[h]) {
                *a += b;
            }
            for (a, b) in self.steady_hits[h].iter_mut().zip(&other.steady_hits[h]) {
                *a += b;
            }
        }
        self.nonconverged += other.nonconverged;
        self.shift_redesigned += other.shift_redesigned;
        self.shift_infeasible += other.shift_infeasible;
        self.epsilon_clamped += other.epsilon_clamped;
        self
    }

    pub fn total_trials(&self) -> u64 {
        self.trials[0] + self.trials[1]
    }

    /// Rates of node `node` (0-based) at iteration `t` (1-based).
    pub fn transient(&self, t: usize, node: usize) -> DetectionRates {
        let k = (t - 1) * self.nodes + node;
        rates(
            self.transient_hits[1][k],
            self.trials[1],
            self.transient_hits[0][k],
            self.trials[0],
        )
    }

    /// Rates at consensus, over trials that converged.
    pub fn steady(&self, node: usize) -> DetectionRates {
        rates(
            self.steady_hits[1][node],
            self.steady_trials[1],
            self.steady_hits[0][node],
            self.steady_trials[0],
        )
    }

    pub fn nonconverged_fraction(&self) -> f64 {
        match self.total_trials() {
            0 => 0.0,
            n => self.nonconverged as f64 / n as f64,
        }
    }
}

/// Everything a trial needs, fixed across trials.
#[derive(Debug, Clone)]
pub struct Simulator {
    profiles: Vec<NodeProfile>,
    sampling: SamplingModel,
    seeds: SeedTree,
    lambda: f64,
    t_max: usize,
    steady: bool,
    tol: f64,
    max_iter: usize,
    rule: MatrixKind,
    epsilon: f64,
    policy: EpsilonPolicy,
    laplacian: nalgebra::DMatrix<f64>,
    /// Weights nodes carry, after any tampering.
    weights: Vec<f64>,
    shift: Option<WeightShift>,
    fixed: Option<ConsensusMatrix>,
}

impl Simulator {
    /// `weights` are the assigned fusion weights; tampering by Byzantines
    /// under the conventional rule is applied here. A weight shift is only
    /// honored by the robust rule.
    pub fn new(scenario: &Scenario, weights: &WeightAssignment, seed: u64, t_max: usize, steady: bool) -> Result<Self> {
        let profiles = scenario.profiles()?.to_vec();
        let effective = scenario.effective_weights(&weights.weights)?;
        let shift = match scenario.consensus.rule {
            MatrixKind::Robust => weights.shift.clone(),
            MatrixKind::Conventional => None,
        };
        if shift.is_none() && effective.iter().any(|&w| w <= 0.0) {
            return Err(Error::DegenerateWeights(
                "consensus needs positive weights; negative ones need a shift and the robust rule".into(),
            ));
        }
        let fixed = match shift {
            None => Some(scenario.consensus_matrix(&effective)?),
            Some(_) => None,
        };
        if !(scenario.consensus.tol > 0.0) {
            return Err(Error::Config("`tol` must be positive".into()));
        }
        Ok(Self {
            profiles,
            sampling: scenario.sampling,
            seeds: SeedTree::new(seed),
            lambda: scenario.lambda()?,
            t_max,
            steady,
            tol: scenario.consensus.tol,
            max_iter: scenario.consensus.max_iter,
            rule: scenario.consensus.rule,
            epsilon: scenario.epsilon()?,
            policy: scenario.consensus.policy,
            laplacian: scenario.graph.laplacian(),
            weights: effective,
            shift,
            fixed,
        })
    }

    pub fn nodes(&self) -> usize {
        self.profiles.len()
    }

    fn draw(&self, k: u64) -> (Hypothesis, Vec<f64>, Vec<f64>) {
        let mut hr = self.seeds.rng(k, NETWORK, Purpose::Hypothesis);
        let h = if hr.random::<f64>() < 0.5 { Hypothesis::H0 } else { Hypothesis::H1 };
        let mut clean = Vec::with_capacity(self.nodes());
        let mut attacked = Vec::with_capacity(self.nodes());
        for (i, p) in self.profiles.iter().enumerate() {
            let mut noise = self.seeds.rng(k, i as u32, Purpose::Noise);
            let y = p.sensing.sample(self.sampling, h, &mut noise);
            let x = match p.attack() {
                Some(a) => apply_attack(y, h, a, &mut self.seeds.rng(k, i as u32, Purpose::Attack)),
                None => y,
            };
            clean.push(y);
            attacked.push(x);
        }
        (h, clean, attacked)
    }

    /// Matrix for this trial, the statistic transform `(scale, offset)` with
    /// decision value `scale·x_j − offset`, and bookkeeping flags.
    fn trial_matrix(&self, x0: &[f64]) -> Result<(Option<ConsensusMatrix>, f64, f64, ShiftStatus, bool)> {
        let Some(shift) = &self.shift else {
            return Ok((self.fixed.clone(), 1.0, 0.0, ShiftStatus::NotNeeded, false));
        };
        let total: f64 = self.weights.iter().sum();
        let beta = shift.count() as f64;
        let mut status = ShiftStatus::Design;
        let mut offset = shift.offset;
        let mut w = shift.runtime_weights(&self.weights, x0);
        if w.iter().any(|&v| !(v > 0.0)) {
            let feasible = self
                .weights
                .iter()
                .zip(x0)
                .zip(&shift.shifted)
                .all(|((_, &x), &s)| !s || x > 0.0);
            if !feasible {
                return Ok((None, 0.0, 0.0, ShiftStatus::Infeasible, false));
            }
            offset = self
                .weights
                .iter()
                .zip(x0)
                .zip(&shift.shifted)
                .filter(|(_, &s)| s)
                .map(|((&wi, &x), _)| -wi * x)
                .fold(0.0, f64::max)
                * REDESIGN_MARGIN;
            let local = WeightShift {
                offset,
                shifted: shift.shifted.clone(),
            };
            w = local.runtime_weights(&self.weights, x0);
            status = ShiftStatus::Redesigned { offset };
        }
        let mut eps = self.epsilon;
        let mut clamped = false;
        let bound = robust_epsilon_bound(&self.laplacian, &w);
        if self.policy == EpsilonPolicy::Strict && eps >= bound {
            eps = 0.5 * bound;
            clamped = true;
        }
        let m = robust_perron(&self.laplacian, eps, &w, self.policy)?;
        let scale = w.iter().sum::<f64>() / total;
        Ok((Some(m), scale, beta * offset / total, status, clamped))
    }

    pub fn trial(&self, k: u64) -> Result<TrialRecord> {
        let (h, clean, attacked) = self.draw(k);
        let (matrix, scale, offset, shift, epsilon_clamped) = self.trial_matrix(&attacked)?;
        let n = self.nodes();
        let decide = |x: &DVector<f64>| -> Vec<bool> { x.iter().map(|&v| scale * v - offset > self.lambda).collect() };

        let Some(m) = matrix else {
            // No usable consensus matrix: every node holds the exact average.
            let lam = crate::consensus::weighted_average(&self.weights, &attacked);
            let d = vec![lam > self.lambda; n];
            return Ok(TrialRecord {
                trial: k,
                hypothesis: h,
                clean,
                transient: vec![d.clone(); self.t_max],
                steady: self.steady.then(|| SteadyOutcome {
                    converged_at: Some(0),
                    state: vec![lam; n],
                    decisions: d,
                }),
                attacked,
                shift,
                epsilon_clamped,
            });
        };

        let mut x = DVector::from_column_slice(&attacked);
        let mut transient = Vec::with_capacity(self.t_max);
        for _ in 0..self.t_max {
            x = m.step(&x);
            transient.push(decide(&x));
        }
        let steady = self.steady.then(|| {
            let mut k = self.t_max;
            let mut done = spread(&x) <= self.tol;
            while !done && k < self.max_iter && x.iter().all(|v| v.is_finite()) {
                x = m.step(&x);
                k += 1;
                done = spread(&x) <= self.tol;
            }
            SteadyOutcome {
                converged_at: done.then_some(k),
                decisions: decide(&x),
                state: x.iter().copied().collect(),
            }
        });
        Ok(TrialRecord {
            trial: k,
            hypothesis: h,
            clean,
            attacked,
            transient,
            steady,
            shift,
            epsilon_clamped,
        })
    }

    /// Runs trials `0..trials` in parallel.
    pub fn run(&self, trials: u64) -> Result<MonteCarloSummary> {
        let (n, t_max) = (self.nodes(), self.t_max);
        (0..trials)
            .into_par_iter()
            .try_fold(
                || MonteCarloSummary::empty(n, t_max),
                |mut acc, k| {
                    acc.add(&self.trial(k)?);
                    Ok::<_, Error>(acc)
                },
            )
            .try_reduce(|| MonteCarloSummary::empty(n, t_max), |a, b| Ok(a.merge(b)))
    }

    pub fn rule(&self) -> MatrixKind {
        self.rule
    }
}

/// Monte Carlo with the scenario's own weights, seed and trial count.
pub fn run_monte_carlo(scenario: &Scenario) -> Result<MonteCarloSummary> {
    let weights = super::reports::consensus_assignment(scenario)?;
    let sim = Simulator::new(
        scenario,
        &weights,
        scenario.seed,
        scenario.simulate.t_max,
        scenario.simulate.steady,
    )?;
    sim.run(scenario.trials)
}

/// Builds the matrix a conventional-rule scenario would use; exposed for
/// callers that want spectral checks before simulating.
pub fn scenario_matrix(scenario: &Scenario, weights: &[f64]) -> Result<ConsensusMatrix> {
    let eff = scenario.effective_weights(weights)?;
    match scenario.consensus.rule {
        MatrixKind::Conventional => conventional_perron(&scenario.graph.laplacian(), scenario.epsilon()?, &eff),
        MatrixKind::Robust => robust_perron(
            &scenario.graph.laplacian(),
            scenario.epsilon()?,
            &eff,
            scenario.consensus.policy,
        ),
    }
}
