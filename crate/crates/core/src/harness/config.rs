//! Scenario files.
//!
//! A scenario is a TOML document. Node indices are 1-based. Per-node values
//! accept either a scalar (shared by every node) or an array with one entry
//! per node. Unknown keys are rejected.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::Deserialize;

use crate::analysis::{
    conventional_weights_for, effective_conventional_weights, equal_gain_weights, exclusion_weights,
    optimal_weights, WeightAssignment, WeightProvenance,
};
use crate::consensus::{conventional_perron, robust_perron, ConsensusMatrix, EpsilonPolicy, MatrixKind};
use crate::error::{Error, Result};
use crate::learning::{ClassifierPenalty, D1Policy, EmSettings, LearningConfig};
use crate::signal::{
    AttackParams, NodeProfile, SamplingModel, Sensing, SensingParams, StatModel, VarianceConvention,
};
use crate::topology::{build_graph, NetworkGraph};

fn config_err(msg: impl fmt::Display) -> Error {
    Error::Config(msg.to_string())
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum PerNode<T> {
    One(T),
    Each(Vec<T>),
}

impl<T: Copy> PerNode<T> {
    fn expand(&self, n: usize, key: &str) -> Result<Vec<T>> {
        match self {
            PerNode::One(x) => Ok(vec![*x; n]),
            PerNode::Each(v) if v.len() == n => Ok(v.clone()),
            PerNode::Each(v) => Err(config_err(format!(
                "`{key}` has {} entries, expected {n}",
                v.len()
            ))),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum GridFile {
    Range { from: f64, to: f64, steps: usize },
    List(Vec<f64>),
}

impl GridFile {
    fn values(&self, key: &str) -> Result<Vec<f64>> {
        match *self {
            GridFile::List(ref v) => Ok(v.clone()),
            GridFile::Range { from, to, steps } => match steps {
                0 => Err(config_err(format!("`{key}` needs at least one step"))),
                1 => Ok(vec![from]),
                _ => Ok((0..steps)
                    .map(|k| from + (to - from) * k as f64 / (steps - 1) as f64)
                    .collect()),
            },
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum WeightsFile {
    Scheme(String),
    Values(Vec<f64>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    seed: Option<u64>,
    trials: Option<u64>,
    lambda: Option<f64>,
    graph: GraphFile,
    nodes: Option<NodesFile>,
    attack: Option<AttackFile>,
    sensing: Option<SensingFile>,
    consensus: Option<ConsensusFile>,
    learning: Option<LearningFile>,
    analysis: Option<AnalysisFile>,
    simulate: Option<SimulateFile>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphFile {
    nodes: usize,
    edges: Vec<[usize; 2]>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodesFile {
    sigma2: Option<PerNode<f64>>,
    h: Option<PerNode<f64>>,
    #[serde(rename = "M")]
    samples: Option<PerNode<u32>>,
    #[serde(rename = "Es")]
    signal_energy: Option<PerNode<f64>>,
    mu0: Option<PerNode<f64>>,
    var0: Option<PerNode<f64>>,
    mu1: Option<PerNode<f64>>,
    var1: Option<PerNode<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AttackFile {
    byzantines: Vec<usize>,
    #[serde(rename = "P")]
    probability: PerNode<f64>,
    delta: PerNode<f64>,
    w_tilde: Option<PerNode<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SensingFile {
    model: Option<String>,
    convention: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConsensusFile {
    rule: Option<String>,
    epsilon: Option<f64>,
    epsilon_policy: Option<String>,
    weights: Option<WeightsFile>,
    tol: Option<f64>,
    max_iter: Option<usize>,
    x0: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LearningFile {
    #[serde(rename = "D")]
    window: Option<usize>,
    #[serde(rename = "D1")]
    d1: Option<usize>,
    #[serde(rename = "D1_policy")]
    d1_policy: Option<String>,
    iterations: Option<usize>,
    em_tol: Option<f64>,
    em_max_iter: Option<usize>,
    penalty: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AnalysisFile {
    node: Option<usize>,
    t_max: Option<usize>,
    #[serde(rename = "P_grid")]
    p_grid: Option<GridFile>,
    delta_grid: Option<GridFile>,
    schemes: Option<Vec<String>>,
    pf_points: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimulateFile {
    t_max: Option<usize>,
    steady: Option<bool>,
    max_nonconverged: Option<f64>,
}

/// Fusion weight schemes selectable by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Conventional,
    Optimal,
    Learned,
    Exclusion,
    EqualGain,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [
        Scheme::Conventional,
        Scheme::Optimal,
        Scheme::Learned,
        Scheme::Exclusion,
        Scheme::EqualGain,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Conventional => "conventional",
            Scheme::Optimal => "optimal",
            Scheme::Learned => "learned",
            Scheme::Exclusion => "exclusion",
            Scheme::EqualGain => "equal-gain",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                config_err(format!(
                    "unknown weight scheme `{s}` (choices: conventional, optimal, learned, exclusion, equal-gain)"
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum WeightSpec {
    Scheme(Scheme),
    Values(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsensusSpec {
    pub rule: MatrixKind,
    pub epsilon: Option<f64>,
    pub policy: EpsilonPolicy,
    pub weights: WeightSpec,
    pub tol: f64,
    pub max_iter: usize,
    pub x0: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisSpec {
    /// 0-based node for transient curves; `None` means every node.
    pub node: Option<usize>,
    pub t_max: Option<usize>,
    pub p_grid: Option<Vec<f64>>,
    pub delta_grid: Option<Vec<f64>>,
    pub schemes: Vec<Scheme>,
    pub pf_points: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulateSpec {
    pub t_max: usize,
    pub steady: bool,
    /// Largest tolerated fraction of trials that fail to reach consensus.
    pub max_nonconverged: f64,
}

/// A fully resolved scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub seed: u64,
    pub trials: u64,
    pub lambda: Option<f64>,
    pub graph: NetworkGraph,
    pub profiles: Option<Vec<NodeProfile>>,
    pub sampling: SamplingModel,
    pub convention: VarianceConvention,
    pub consensus: ConsensusSpec,
    pub learning: LearningConfig,
    pub analysis: AnalysisSpec,
    pub simulate: SimulateSpec,
}

fn parse_d1_policy(s: &str, d1: Option<usize>, window: usize) -> Result<D1Policy> {
    if s == "fixed" {
        return Ok(D1Policy::Fixed(d1.unwrap_or(window / 2)));
    }
    if let Some(inner) = s.strip_prefix("bernoulli(").and_then(|r| r.strip_suffix(')')) {
        let p: f64 = inner
            .trim()
            .parse()
            .map_err(|_| config_err(format!("bad probability in `D1_policy = \"{s}\"`")))?;
        return Ok(D1Policy::Bernoulli(p));
    }
    Err(config_err(format!(
        "unknown `D1_policy = \"{s}\"` (choices: fixed, bernoulli(p0))"
    )))
}

fn resolve_profiles(n: usize, nodes: &NodesFile, attack: Option<&AttackFile>) -> Result<Vec<NodeProfile>> {
    let energy = [&nodes.sigma2, &nodes.h, &nodes.signal_energy]
        .iter()
        .any(|x| x.is_some())
        || nodes.samples.is_some();
    let moments = [&nodes.mu0, &nodes.var0, &nodes.mu1, &nodes.var1]
        .iter()
        .any(|x| x.is_some());
    let sensing: Vec<Sensing> = match (energy, moments) {
        (true, true) => {
            return Err(config_err(
                "[nodes] mixes energy keys (sigma2, h, M, Es) with moment keys (mu0, var0, mu1, var1)",
            ))
        }
        (false, false) => return Err(config_err("[nodes] is empty")),
        (true, false) => {
            let get = |v: &Option<PerNode<f64>>, key: &str| {
                v.as_ref()
                    .ok_or_else(|| config_err(format!("[nodes] is missing `{key}`")))?
                    .expand(n, key)
            };
            let s2 = get(&nodes.sigma2, "sigma2")?;
            let h = get(&nodes.h, "h")?;
            let es = get(&nodes.signal_energy, "Es")?;
            let m = nodes
                .samples
                .as_ref()
                .ok_or_else(|| config_err("[nodes] is missing `M`"))?
                .expand(n, "M")?;
            (0..n)
                .map(|i| {
                    SensingParams::new(s2[i], h[i], m[i], es[i])
                        .map(Sensing::Energy)
                        .map_err(|e| config_err(format!("node {}: {e}", i + 1)))
                })
                .collect::<Result<_>>()?
        }
        (false, true) => {
            let get = |v: &Option<PerNode<f64>>, key: &str| {
                v.as_ref()
                    .ok_or_else(|| config_err(format!("[nodes] is missing `{key}`")))?
                    .expand(n, key)
            };
            let (m0, v0, m1, v1) = (
                get(&nodes.mu0, "mu0")?,
                get(&nodes.var0, "var0")?,
                get(&nodes.mu1, "mu1")?,
                get(&nodes.var1, "var1")?,
            );
            (0..n)
                .map(|i| {
                    StatModel::new(m0[i], v0[i], m1[i], v1[i])
                        .map(Sensing::Moments)
                        .map_err(|e| config_err(format!("node {}: {e}", i + 1)))
                })
                .collect::<Result<_>>()?
        }
    };
    let mut profiles: Vec<NodeProfile> = sensing.into_iter().map(NodeProfile::honest).collect();
    if let Some(a) = attack {
        let k = a.byzantines.len();
        let p = a.probability.expand(k, "P")?;
        let d = a.delta.expand(k, "delta")?;
        let wt = match &a.w_tilde {
            Some(w) => w.expand(k, "w_tilde")?.into_iter().map(Some).collect(),
            None => vec![None; k],
        };
        for (slot, &b) in a.byzantines.iter().enumerate() {
            if b == 0 || b > n {
                return Err(config_err(format!("Byzantine index {b} outside 1..={n}")));
            }
            if profiles[b - 1].is_byzantine() {
                return Err(config_err(format!("node {b} listed twice as Byzantine")));
            }
            let params = AttackParams::new(p[slot], d[slot], wt[slot])
                .map_err(|e| config_err(format!("Byzantine node {b}: {e}")))?;
            profiles[b - 1] = NodeProfile::byzantine(profiles[b - 1].sensing, params);
        }
    }
    Ok(profiles)
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self> {
        let file: ScenarioFile = toml::from_str(text).map_err(config_err)?;
        let n = file.graph.nodes;
        let edges: Vec<(usize, usize)> = file.graph.edges.iter().map(|e| (e[0], e[1])).collect();
        let graph = build_graph(n, &edges).map_err(config_err)?;

        let profiles = match &file.nodes {
            Some(nodes) => Some(resolve_profiles(n, nodes, file.attack.as_ref())?),
            None if file.attack.is_some() => {
                return Err(config_err("[attack] needs a [nodes] section"));
            }
            None => None,
        };

        let sensing = file.sensing.as_ref();
        let convention = match sensing.and_then(|s| s.convention.as_deref()) {
            None | Some("literal") => VarianceConvention::PaperLiteral,
            Some("exact") => VarianceConvention::ExactNoncentral,
            Some(other) => return Err(config_err(format!("unknown convention `{other}` (choices: literal, exact)"))),
        };
        let sampling = match sensing.and_then(|s| s.model.as_deref()) {
            None | Some("gaussian") => SamplingModel::Gaussian(convention),
            Some("exact") => SamplingModel::Exact,
            Some(other) => return Err(config_err(format!("unknown sensing model `{other}` (choices: gaussian, exact)"))),
        };

        let c = file.consensus.as_ref();
        let rule = match c.and_then(|c| c.rule.as_deref()) {
            None | Some("robust") => MatrixKind::Robust,
            Some("conventional") => MatrixKind::Conventional,
            Some(other) => return Err(config_err(format!("unknown rule `{other}` (choices: conventional, robust)"))),
        };
        let policy = match c.and_then(|c| c.epsilon_policy.as_deref()) {
            None | Some("strict") => EpsilonPolicy::Strict,
            Some("allow") => EpsilonPolicy::AllowOutOfBounds,
            Some(other) => return Err(config_err(format!("unknown epsilon_policy `{other}` (choices: strict, allow)"))),
        };
        let weights = match c.and_then(|c| c.weights.clone()) {
            None => WeightSpec::Scheme(Scheme::Conventional),
            Some(WeightsFile::Scheme(s)) => WeightSpec::Scheme(s.parse()?),
            Some(WeightsFile::Values(v)) if v.len() == n => WeightSpec::Values(v),
            Some(WeightsFile::Values(v)) => {
                return Err(config_err(format!("`weights` has {} entries, expected {n}", v.len())))
            }
        };
        let x0 = c.and_then(|c| c.x0.clone());
        if let Some(x) = &x0 {
            if x.len() != n {
                return Err(config_err(format!("`x0` has {} entries, expected {n}", x.len())));
            }
        }
        let consensus = ConsensusSpec {
            rule,
            epsilon: c.and_then(|c| c.epsilon),
            policy,
            weights,
            tol: c.and_then(|c| c.tol).unwrap_or(1e-6),
            max_iter: c.and_then(|c| c.max_iter).unwrap_or(1000),
            x0,
        };

        let defaults = LearningConfig::default();
        let learning = match &file.learning {
            None => LearningConfig {
                sampling,
                convention,
                ..defaults
            },
            Some(l) => {
                let window = l.window.unwrap_or(defaults.window);
                let d1 = match l.d1_policy.as_deref() {
                    None => D1Policy::Fixed(l.d1.unwrap_or(window / 2)),
                    Some(s) => parse_d1_policy(s, l.d1, window)?,
                };
                let penalty = match l.penalty.as_deref() {
                    None | Some("bic") => ClassifierPenalty::Bic,
                    Some("none") => ClassifierPenalty::None,
                    Some(other) => return Err(config_err(format!("unknown penalty `{other}` (choices: bic, none)"))),
                };
                LearningConfig {
                    window,
                    d1,
                    iterations: l.iterations.unwrap_or(defaults.iterations),
                    em: EmSettings {
                        tol: l.em_tol.unwrap_or(defaults.em.tol),
                        max_iter: l.em_max_iter.unwrap_or(defaults.em.max_iter),
                        ..defaults.em
                    },
                    penalty,
                    sampling,
                    convention,
                }
            }
        };
        learning.validate().map_err(config_err)?;

        let a = file.analysis.as_ref();
        let node = match a.and_then(|a| a.node) {
            Some(j) if j == 0 || j > n => return Err(config_err(format!("analysis node {j} outside 1..={n}"))),
            j => j.map(|j| j - 1),
        };
        let analysis = AnalysisSpec {
            node,
            t_max: a.and_then(|a| a.t_max),
            p_grid: a.and_then(|a| a.p_grid.as_ref()).map(|g| g.values("P_grid")).transpose()?,
            delta_grid: a
                .and_then(|a| a.delta_grid.as_ref())
                .map(|g| g.values("delta_grid"))
                .transpose()?,
            schemes: a
                .and_then(|a| a.schemes.as_ref())
                .map(|v| v.iter().map(|s| s.parse()).collect::<Result<Vec<_>>>())
                .transpose()?
                .unwrap_or_default(),
            pf_points: a.and_then(|a| a.pf_points).unwrap_or(199),
        };

        let s = file.simulate.as_ref();
        let simulate = SimulateSpec {
            t_max: s.and_then(|s| s.t_max).unwrap_or(0),
            steady: s.and_then(|s| s.steady).unwrap_or(true),
            max_nonconverged: s.and_then(|s| s.max_nonconverged).unwrap_or(0.0),
        };

        Ok(Self {
            seed: file.seed.unwrap_or(0),
            trials: file.trials.unwrap_or(10_000),
            lambda: file.lambda,
            graph,
            profiles,
            sampling,
            convention,
            consensus,
            learning,
            analysis,
            simulate,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn node_count(&self) -> usize {
        self.graph.node_count()
    }

    pub fn profiles(&self) -> Result<&[NodeProfile]> {
        self.profiles
            .as_deref()
            .ok_or_else(|| config_err("scenario has no [nodes] section"))
    }

    pub fn lambda(&self) -> Result<f64> {
        self.lambda.ok_or_else(|| config_err("scenario has no `lambda`"))
    }

    pub fn epsilon(&self) -> Result<f64> {
        self.consensus
            .epsilon
            .ok_or_else(|| config_err("[consensus] has no `epsilon`"))
    }

    /// Weights assigned by a named scheme. `Learned` needs the learning loop
    /// and is not handled here.
    pub fn scheme_weights(&self, scheme: Scheme) -> Result<WeightAssignment> {
        let profiles = self.profiles()?;
        match scheme {
            Scheme::Conventional => conventional_weights_for(profiles),
            Scheme::Optimal => Ok(optimal_weights(profiles, self.convention)),
            Scheme::Exclusion => exclusion_weights(profiles),
            Scheme::EqualGain => Ok(equal_gain_weights(self.node_count())),
            Scheme::Learned => Err(config_err("learned weights come from the learning loop")),
        }
    }

    /// Weights named by `[consensus] weights`.
    pub fn assigned_weights(&self) -> Result<WeightAssignment> {
        match &self.consensus.weights {
            WeightSpec::Scheme(s) => self.scheme_weights(*s),
            WeightSpec::Values(v) => Ok(WeightAssignment::new(v.clone(), WeightProvenance::Custom)),
        }
    }

    /// Weights nodes actually apply: under the conventional rule a Byzantine
    /// may substitute its tampered weight.
    pub fn effective_weights(&self, assigned: &[f64]) -> Result<Vec<f64>> {
        match (self.consensus.rule, &self.profiles) {
            (MatrixKind::Conventional, Some(p)) => Ok(effective_conventional_weights(p, assigned)),
            _ => Ok(assigned.to_vec()),
        }
    }

    pub fn consensus_matrix(&self, weights: &[f64]) -> Result<ConsensusMatrix> {
        let l = self.graph.laplacian();
        let eps = self.epsilon()?;
        match self.consensus.rule {
            MatrixKind::Conventional => conventional_perron(&l, eps, weights),
            MatrixKind::Robust => robust_perron(&l, eps, weights, self.consensus.policy),
        }
    }

    /// Same scenario with every attack disabled (`Δ = 0`, no tampered
    /// weight). Byzantines keep their attack probability so random streams
    /// stay aligned with the attacked run.
    pub fn without_attack(&self) -> Self {
        let mut clean = self.clone();
        if let Some(profiles) = &mut clean.profiles {
            for p in profiles.iter_mut() {
                if let Some(a) = p.attack() {
                    let idle = AttackParams {
                        strength: 0.0,
                        tampered_weight: None,
                        ..*a
                    };
                    *p = NodeProfile::byzantine(p.sensing, idle);
                }
            }
        }
        clean
    }
}
