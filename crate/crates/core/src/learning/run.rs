//! The iterative learn-classify-reweight loop over a network.

use rayon::prelude::*;

use super::adaptive::{byzantine_weight, honest_weight};
use super::classify::{classify_node, ClassifierPenalty, NodeVerdict, Verdict};
use super::em::{em_fit, EmSettings, MixtureEstimate};
use super::mle::{mle_update, HonestEstimate};
use super::LearningWindow;
use crate::analysis::{
    auc, conventional_weights_for, optimal_weights, roc_on_pf_grid, steady_state_mixtures, RocPoint,
    WeightAssignment, WeightProvenance, WeightShift,
};
use crate::error::{Error, Result};
use crate::signal::{apply_attack, Hypothesis, NodeProfile, SamplingModel, VarianceConvention};
use crate::streams::{Purpose, SeedTree, NETWORK};
use crate::topology::NetworkGraph;
use rand::Rng;

/// How many of the `D` intervals of a learning iteration fall under `H0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum D1Policy {
    /// The first `D₁` intervals are `H0`, the rest `H1`.
    Fixed(usize),
    /// Each interval is `H0` independently with this probability.
    Bernoulli(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearningConfig {
    /// `D`, intervals per learning iteration.
    pub window: usize,
    pub d1: D1Policy,
    pub iterations: usize,
    pub em: EmSettings,
    pub penalty: ClassifierPenalty,
    pub sampling: SamplingModel,
    /// Moment convention used when scoring the resulting weights.
    pub convention: VarianceConvention,
}

impl Default for LearningConfig {
    fn default() -> Self {
        Self {
            window: 20,
            d1: D1Policy::Fixed(10),
            iterations: 4,
            em: EmSettings::default(),
            penalty: ClassifierPenalty::default(),
            sampling: SamplingModel::Gaussian(VarianceConvention::PaperLiteral),
            convention: VarianceConvention::PaperLiteral,
        }
    }
}

impl LearningConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window == 0 {
            return Err(Error::InvalidParameter("learning window D must be positive".into()));
        }
        match self.d1 {
            D1Policy::Fixed(d1) if d1 > self.window => Err(Error::InvalidParameter(format!(
                "D1 = {d1} exceeds D = {}",
                self.window
            ))),
            D1Policy::Bernoulli(p) if !(0.0..=1.0).contains(&p) => Err(Error::InvalidParameter(
                format!("H0 probability must lie in [0, 1], got {p}"),
            )),
            _ => Ok(()),
        }
    }
}

/// What observer `observer` concluded about `neighbor` after one iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborRecord {
    pub observer: usize,
    pub neighbor: usize,
    pub verdict: NodeVerdict,
    pub honest: HonestEstimate,
    pub mixture: MixtureEstimate,
    pub em_restarts: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationTrace {
    pub iteration: usize,
    pub records: Vec<NeighborRecord>,
    /// Network weight vector after averaging the observers' opinions.
    pub weights: WeightAssignment,
    pub auc: f64,
    pub roc: Vec<RocPoint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearningTrace {
    pub initial: WeightAssignment,
    pub known_auc: f64,
    pub known_roc: Vec<RocPoint>,
    pub iterations: Vec<IterationTrace>,
}

impl LearningTrace {
    pub fn final_weights(&self) -> &WeightAssignment {
        self.iterations.last().map_or(&self.initial, |it| &it.weights)
    }
}

#[derive(Debug, Clone, Default)]
struct PairState {
    history: LearningWindow,
    honest: HonestEstimate,
    mixture: Option<MixtureEstimate>,
}

fn labels(policy: D1Policy, d: usize, seeds: &SeedTree, iteration: u64) -> Vec<Hypothesis> {
    match policy {
        D1Policy::Fixed(d1) => (0..d)
            .map(|k| if k < d1 { Hypothesis::H0 } else { Hypothesis::H1 })
            .collect(),
        D1Policy::Bernoulli(p0) => {
            let mut rng = seeds.rng(iteration, NETWORK, Purpose::Hypothesis);
            (0..d)
                .map(|_| {
                    if rng.random::<f64>() < p0 {
                        Hypothesis::H0
                    } else {
                        Hypothesis::H1
                    }
                })
                .collect()
        }
    }
}

/// Data every node broadcasts during one learning iteration.
fn broadcast(
    profiles: &[NodeProfile],
    labels: &[Hypothesis],
    sampling: SamplingModel,
    seeds: &SeedTree,
    iteration: u64,
) -> Vec<LearningWindow> {
    profiles
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let mut noise = seeds.rng(iteration, i as u32, Purpose::Noise);
            let mut coins = seeds.rng(iteration, i as u32, Purpose::Attack);
            let mut w = LearningWindow::default();
            for &h in labels {
                let y = p.sensing.sample(sampling, h, &mut noise);
                let y = match p.attack() {
                    Some(a) => apply_attack(y, h, a, &mut coins),
                    None => y,
                };
                w.push(y, h);
            }
            w
        })
        .collect()
}

fn observe(
    state: &mut PairState,
    observer: usize,
    neighbor: usize,
    fresh: &LearningWindow,
    config: &LearningConfig,
) -> Result<NeighborRecord> {
    state.history.extend(fresh);
    state.honest = mle_update(&state.honest, fresh);
    let init = match state.mixture {
        Some(m) => m,
        None => MixtureEstimate::initial(&state.history)?,
    };
    let fit = em_fit(&state.history, &init, &config.em)?;
    state.mixture = Some(fit.estimate);
    let verdict = classify_node(&state.history, &state.honest, &fit.estimate, config.penalty)?;
    let weight = match verdict.identity {
        Verdict::Honest => honest_weight(neighbor, &state.honest)?,
        Verdict::Byzantine => byzantine_weight(neighbor, &fit.estimate)?,
    };
    Ok(NeighborRecord {
        observer,
        neighbor,
        verdict,
        honest: state.honest,
        mixture: fit.estimate,
        em_restarts: fit.restarts,
        weight,
    })
}

/// Runs `config.iterations` learning iterations.
///
/// Each observer keeps its own estimator state for every graph neighbor,
/// warm-started from the previous iteration and fed with all data seen so
/// far. Opinions about the same node are averaged into one weight vector,
/// which is scored by the closed-form steady-state ROC on `pf_grid`. Nodes no
/// one observes keep their SNR-proportional weight.
pub fn learning_loop(
    graph: &NetworkGraph,
    profiles: &[NodeProfile],
    config: &LearningConfig,
    seed: u64,
    pf_grid: &[f64],
) -> Result<LearningTrace> {
    config.validate()?;
    let n = graph.node_count();
    if profiles.len() != n {
        return Err(Error::InvalidParameter(format!(
            "{} profiles for {n} nodes",
            profiles.len()
        )));
    }
    let seeds = SeedTree::new(seed);
    let initial = conventional_weights_for(profiles)?;
    let known = optimal_weights(profiles, config.convention);
    let (k0, k1) = steady_state_mixtures(profiles, &known.weights, config.convention)?;

    let mut states: Vec<Vec<PairState>> =
        (0..n).map(|o| vec![PairState::default(); graph.degree(o)]).collect();
    let mut iterations = Vec::with_capacity(config.iterations);
    for t in 1..=config.iterations {
        let labels = labels(config.d1, config.window, &seeds, t as u64);
        let data = broadcast(profiles, &labels, config.sampling, &seeds, t as u64);
        let per_observer: Vec<Vec<NeighborRecord>> = states
            .par_iter_mut()
            .enumerate()
            .map(|(o, row)| {
                graph
                    .neighbors(o)
                    .iter()
                    .zip(row.iter_mut())
                    .map(|(&nb, st)| observe(st, o, nb, &data[nb], config))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let records: Vec<NeighborRecord> = per_observer.into_iter().flatten().collect();

        let mut sum = vec![0.0; n];
        let mut scale = vec![0.0; n];
        let mut count = vec![0usize; n];
        for r in &records {
            sum[r.neighbor] += r.weight;
            scale[r.neighbor] += r.honest.h0.map_or(0.0, |e| e.mean);
            count[r.neighbor] += 1;
        }
        let weights: Vec<f64> = (0..n)
            .map(|i| if count[i] > 0 { sum[i] / count[i] as f64 } else { initial.weights[i] })
            .collect();
        let scale: Vec<f64> = (0..n)
            .map(|i| if count[i] > 0 { scale[i] / count[i] as f64 } else { 0.0 })
            .collect();
        let assignment = WeightAssignment {
            shift: WeightShift::design(&weights, &scale),
            weights,
            provenance: WeightProvenance::OptimalLearned { iteration: t },
        };
        let (h0, h1) = steady_state_mixtures(profiles, &assignment.weights, config.convention)?;
        iterations.push(IterationTrace {
            iteration: t,
            records,
            auc: auc(&h0, &h1),
            roc: roc_on_pf_grid(&h0, &h1, pf_grid),
            weights: assignment,
        });
    }
    Ok(LearningTrace {
        initial,
        known_auc: auc(&k0, &k1),
        known_roc: roc_on_pf_grid(&k0, &k1, pf_grid),
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{AttackParams, Sensing, StatModel};
    use crate::topology::build_graph;

    fn fig1() -> NetworkGraph {
        build_graph(6, &[(1, 2), (2, 3), (2, 4), (3, 4), (4, 5), (4, 6)]).unwrap()
    }

    fn fig7_profiles(byzantines: usize) -> Vec<NodeProfile> {
        let s = Sensing::Moments(StatModel::new(3.0, 1.5, 4.0, 2.0).unwrap());
        let a = AttackParams::new(0.5, 9.0, None).unwrap();
        (0..6)
            .map(|i| if i < byzantines { NodeProfile::byzantine(s, a) } else { NodeProfile::honest(s) })
            .collect()
    }

    #[test]
    fn zero_iterations_is_conventional() {
        let config = LearningConfig {
            iterations: 0,
            ..LearningConfig::default()
        };
        let trace = learning_loop(&fig1(), &fig7_profiles(2), &config, 1, &[0.1]).unwrap();
        assert!(trace.iterations.is_empty());
        assert_eq!(trace.final_weights().provenance, WeightProvenance::Conventional);
        assert!(trace.initial.weights.iter().all(|&w| (w - 1.0 / 6.0).abs() < 1e-15));
    }

    #[test]
    fn honest_network_stays_honest() {
        let config = LearningConfig {
            iterations: 6,
            ..LearningConfig::default()
        };
        let trace = learning_loop(&fig1(), &fig7_profiles(0), &config, 9, &[0.1]).unwrap();
        for it in &trace.iterations {
            assert_eq!(it.records.len(), 12);
        }
        let last = trace.iterations.last().unwrap();
        assert!(last.records.iter().all(|r| r.verdict.identity == Verdict::Honest));
        // 120 samples per hypothesis: weights near (4 − 3)/1.5.
        for w in &last.weights.weights {
            assert!((w - 1.0 / 1.5).abs() < 0.35, "{w}");
        }
    }

    #[test]
    fn byzantines_found_and_auc_improves() {
        let trace = learning_loop(&fig1(), &fig7_profiles(2), &LearningConfig::default(), 3, &[0.1]).unwrap();
        let last = trace.iterations.last().unwrap();
        for r in &last.records {
            let expected = if r.neighbor < 2 { Verdict::Byzantine } else { Verdict::Honest };
            assert_eq!(r.verdict.identity, expected, "{} about {}", r.observer, r.neighbor);
        }
        assert!(trace.known_auc - last.auc < 0.02);
    }

    #[test]
    fn deterministic_per_seed() {
        let config = LearningConfig {
            d1: D1Policy::Bernoulli(0.5),
            ..LearningConfig::default()
        };
        let a = learning_loop(&fig1(), &fig7_profiles(2), &config, 77, &[0.1, 0.5]).unwrap();
        let b = learning_loop(&fig1(), &fig7_profiles(2), &config, 77, &[0.1, 0.5]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_config() {
        let config = LearningConfig {
            d1: D1Policy::Fixed(30),
            ..LearningConfig::default()
        };
        assert!(learning_loop(&fig1(), &fig7_profiles(2), &config, 1, &[]).is_err());
        assert!(learning_loop(&fig1(), &fig7_profiles(2)[..5], &LearningConfig::default(), 1, &[]).is_err());
    }
}
