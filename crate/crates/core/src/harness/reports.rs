//! Tables built from a scenario: blinding surfaces, transient curves, ROC
//! curves, learning traces and Monte Carlo summaries.

use super::config::{Scenario, Scheme, WeightSpec};
use super::montecarlo::MonteCarloSummary;
use super::output::{fmt_f64, Table};
use crate::analysis::{
    auc, blinding_residual, deflection_coefficient, global_moments, roc_on_pf_grid, steady_state_mixtures,
    transient_mixture, transient_pd_pf, RocPoint, WeightAssignment,
};
use crate::consensus::matrix_power;
use crate::error::{Error, Result};
use crate::learning::{learning_loop, LearningTrace, Verdict};
use crate::signal::{AttackParams, Hypothesis, NodeProfile};

/// `points` false-alarm rates evenly spaced strictly inside (0, 1).
pub fn pf_grid(points: usize) -> Vec<f64> {
    (1..=points).map(|k| k as f64 / (points + 1) as f64).collect()
}

fn with_attack(profiles: &[NodeProfile], probability: f64, strength: f64) -> Result<Vec<NodeProfile>> {
    profiles
        .iter()
        .map(|p| match p.attack() {
            Some(a) => Ok(NodeProfile::byzantine(
                p.sensing,
                AttackParams::new(probability, strength, a.tampered_weight)?,
            )),
            None => Ok(*p),
        })
        .collect()
}

/// Attack strength `Δ` that zeroes the blinding residual when every Byzantine
/// attacks with probability `probability`. `None` if no such `Δ ≥ 0` exists.
pub fn blinding_strength(profiles: &[NodeProfile], weights: &[f64], probability: f64) -> Result<Option<f64>> {
    let r0 = blinding_residual(&with_attack(profiles, probability, 0.0)?, weights);
    let r1 = blinding_residual(&with_attack(profiles, probability, 1.0)?, weights);
    let slope = r1 - r0;
    if slope == 0.0 {
        return Ok(None);
    }
    let root = -r0 / slope;
    Ok((root >= 0.0).then_some(root))
}

/// Deflection over the `(P, Δ)` grid of `[analysis]`, applied to every
/// Byzantine. Weights follow `[consensus] weights` and are recomputed per
/// grid point.
pub fn blinding_surface(s: &Scenario) -> Result<Table> {
    let (Some(ps), Some(ds)) = (&s.analysis.p_grid, &s.analysis.delta_grid) else {
        return Err(Error::Config("blinding surface needs `P_grid` and `delta_grid`".into()));
    };
    let base = s.profiles()?;
    let mut t = Table::new(&["P", "delta", "deflection", "residual", "mean_gap", "var0"]);
    t.meta("kind", "blinding-surface");
    t.meta("byzantines", byzantine_list(base));
    for &p in ps {
        for &d in ds {
            let profiles = with_attack(base, p, d)?;
            let mut grid = s.clone();
            grid.profiles = Some(profiles.clone());
            let w = grid.effective_weights(&grid.assigned_weights()?.weights)?;
            let m = global_moments(&profiles, &w, s.convention);
            t.push(vec![
                fmt_f64(p),
                fmt_f64(d),
                fmt_f64(deflection_coefficient(&m)?),
                fmt_f64(blinding_residual(&profiles, &w)),
                fmt_f64(m.mu1 - m.mu0),
                fmt_f64(m.var0),
            ]);
        }
    }
    Ok(t)
}

fn byzantine_list(profiles: &[NodeProfile]) -> String {
    let ids: Vec<String> = profiles
        .iter()
        .enumerate()
        .filter(|(_, p)| p.is_byzantine())
        .map(|(i, _)| (i + 1).to_string())
        .collect();
    format!("[{}]", ids.join(" "))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransientPoint {
    pub t: usize,
    /// 0-based.
    pub node: usize,
    pub pd: f64,
    pub pf: f64,
}

/// Closed-form `(P_d, P_f)` of every node in `nodes` for `t = 1..=t_max`,
/// using the scenario's consensus matrix on `assigned` weights.
pub fn transient_curves(s: &Scenario, assigned: &[f64], t_max: usize, nodes: &[usize]) -> Result<Vec<TransientPoint>> {
    let profiles = s.profiles()?;
    let lambda = s.lambda()?;
    let m = s.consensus_matrix(&s.effective_weights(assigned)?)?;
    let mut out = Vec::with_capacity(t_max * nodes.len());
    for t in 1..=t_max {
        let wt = matrix_power(&m.matrix, t as u32);
        for &j in nodes {
            let h1 = transient_mixture(&wt, j, Hypothesis::H1, profiles, s.convention)?;
            let h0 = transient_mixture(&wt, j, Hypothesis::H0, profiles, s.convention)?;
            let (pd, pf) = transient_pd_pf(&h1, &h0, lambda);
            out.push(TransientPoint { t, node: j, pd, pf });
        }
    }
    Ok(out)
}

/// Nodes selected by `[analysis] node`, or all of them.
pub fn analysis_nodes(s: &Scenario) -> Vec<usize> {
    match s.analysis.node {
        Some(j) => vec![j],
        None => (0..s.node_count()).collect(),
    }
}

/// Transient curves with and without the attack.
pub fn transient_table(s: &Scenario, t_max: usize) -> Result<Table> {
    let nodes = analysis_nodes(s);
    let assigned = s.assigned_weights()?;
    let mut t = Table::new(&["case", "t", "node", "pd", "pf"]);
    t.meta("kind", "transient");
    t.meta("lambda", s.lambda()?);
    t.meta("epsilon", s.epsilon()?);
    for (case, sc) in [("attack", s.clone()), ("no-attack", s.without_attack())] {
        for p in transient_curves(&sc, &assigned.weights, t_max, &nodes)? {
            t.push(vec![
                case.into(),
                p.t.to_string(),
                (p.node + 1).to_string(),
                fmt_f64(p.pd),
                fmt_f64(p.pf),
            ]);
        }
    }
    Ok(t)
}

/// Weights of `scheme`. Learned weights run the learning loop with the
/// scenario's seed.
pub fn scheme_assignment(s: &Scenario, scheme: Scheme) -> Result<WeightAssignment> {
    match scheme {
        Scheme::Learned => {
            let trace = learning_loop(&s.graph, s.profiles()?, &s.learning, s.seed, &[])?;
            Ok(trace.final_weights().clone())
        }
        other => s.scheme_weights(other),
    }
}

/// Weights named by `[consensus] weights`, running the learning loop when
/// the scheme is `learned`.
pub fn consensus_assignment(s: &Scenario) -> Result<WeightAssignment> {
    match &s.consensus.weights {
        WeightSpec::Scheme(k) => scheme_assignment(s, *k),
        WeightSpec::Values(_) => s.assigned_weights(),
    }
}

/// Closed-form steady-state ROC on `pfs` and its AUC.
pub fn scheme_roc(s: &Scenario, scheme: Scheme, pfs: &[f64]) -> Result<(Vec<RocPoint>, f64)> {
    let w = scheme_assignment(s, scheme)?;
    let eff = s.effective_weights(&w.weights)?;
    let (h0, h1) = steady_state_mixtures(s.profiles()?, &eff, s.convention)?;
    Ok((roc_on_pf_grid(&h0, &h1, pfs), auc(&h0, &h1)))
}

pub fn roc_table(s: &Scenario, schemes: &[Scheme]) -> Result<Table> {
    let pfs = pf_grid(s.analysis.pf_points);
    let mut t = Table::new(&["Pf", "Pd", "scheme"]);
    t.meta("kind", "roc");
    for &k in schemes {
        let (roc, area) = scheme_roc(s, k, &pfs)?;
        t.meta(format!("auc {k}"), fmt_f64(area));
        for p in roc {
            t.push(vec![fmt_f64(p.pf), fmt_f64(p.pd), k.name().into()]);
        }
    }
    Ok(t)
}

/// Per-(observer, neighbor) estimates after every learning iteration.
pub fn learning_trace_table(trace: &LearningTrace) -> Table {
    let mut t = Table::new(&[
        "t", "observer", "neighbor", "verdict", "alpha1", "mu10", "mu20", "mu11", "mu21", "var0", "var1", "weight",
    ]);
    t.meta("kind", "learning-trace");
    t.meta("known_auc", fmt_f64(trace.known_auc));
    for it in &trace.iterations {
        t.meta(format!("auc t={}", it.iteration), fmt_f64(it.auc));
        for r in &it.records {
            let m = &r.mixture;
            t.push(vec![
                it.iteration.to_string(),
                (r.observer + 1).to_string(),
                (r.neighbor + 1).to_string(),
                match r.verdict.identity {
                    Verdict::Honest => "H".into(),
                    Verdict::Byzantine => "B".into(),
                },
                fmt_f64(m.alpha[0]),
                fmt_f64(m.mean0[0]),
                fmt_f64(m.mean0[1]),
                fmt_f64(m.mean1[0]),
                fmt_f64(m.mean1[1]),
                fmt_f64(m.var0),
                fmt_f64(m.var1),
                fmt_f64(r.weight),
            ]);
        }
    }
    t
}

/// ROC per learning iteration plus the known-optimal curve.
pub fn learning_roc_table(trace: &LearningTrace) -> Table {
    let mut t = Table::new(&["curve", "iteration", "Pf", "Pd", "auc"]);
    t.meta("kind", "learning-roc");
    for it in &trace.iterations {
        for p in &it.roc {
            t.push(vec![
                format!("iteration-{}", it.iteration),
                it.iteration.to_string(),
                fmt_f64(p.pf),
                fmt_f64(p.pd),
                fmt_f64(it.auc),
            ]);
        }
    }
    for p in &trace.known_roc {
        t.push(vec![
            "known-optimal".into(),
            String::new(),
            fmt_f64(p.pf),
            fmt_f64(p.pd),
            fmt_f64(trace.known_auc),
        ]);
    }
    t
}

/// Empirical rates next to their closed-form predictions where these exist.
///
/// Transient predictions need positive weights; steady-state predictions
/// are for the normalized statistic at consensus.
pub fn monte_carlo_table(s: &Scenario, weights: &WeightAssignment, mc: &MonteCarloSummary) -> Result<Table> {
    let lambda = s.lambda()?;
    let profiles = s.profiles()?;
    let nodes: Vec<usize> = (0..mc.nodes).collect();
    let closed = if mc.t_max > 0 && !weights.has_negative() {
        Some(transient_curves(s, &weights.weights, mc.t_max, &nodes)?)
    } else {
        None
    };
    let eff = s.effective_weights(&weights.weights)?;
    let steady_closed = steady_state_mixtures(profiles, &eff, s.convention)
        .ok()
        .map(|(h0, h1)| (h1.exceedance(lambda), h0.exceedance(lambda)));

    let mut t = Table::new(&[
        "stage", "t", "node", "pd", "pd_se", "pf", "pf_se", "pd_closed", "pf_closed",
    ]);
    t.meta("kind", "monte-carlo");
    t.meta("trials", mc.total_trials());
    t.meta("trials_h0", mc.trials[0]);
    t.meta("trials_h1", mc.trials[1]);
    t.meta("lambda", fmt_f64(lambda));
    t.meta("nonconverged", mc.nonconverged);
    t.meta("shift_redesigned", mc.shift_redesigned);
    t.meta("shift_infeasible", mc.shift_infeasible);
    t.meta("epsilon_clamped", mc.epsilon_clamped);
    for step in 1..=mc.t_max {
        for &j in &nodes {
            let r = mc.transient(step, j);
            let (pdc, pfc) = closed
                .as_ref()
                .map_or((f64::NAN, f64::NAN), |c| {
                    let p = c[(step - 1) * nodes.len() + j];
                    (p.pd, p.pf)
                });
            t.push(vec![
                "transient".into(),
                step.to_string(),
                (j + 1).to_string(),
                fmt_f64(r.pd),
                fmt_f64(r.pd_se),
                fmt_f64(r.pf),
                fmt_f64(r.pf_se),
                fmt_f64(pdc),
                fmt_f64(pfc),
            ]);
        }
    }
    if mc.steady_trials[0] + mc.steady_trials[1] > 0 {
        let (pdc, pfc) = steady_closed.unwrap_or((f64::NAN, f64::NAN));
        for &j in &nodes {
            let r = mc.steady(j);
            t.push(vec![
                "steady".into(),
                String::new(),
                (j + 1).to_string(),
                fmt_f64(r.pd),
                fmt_f64(r.pd_se),
                fmt_f64(r.pf),
                fmt_f64(r.pf_se),
                fmt_f64(pdc),
                fmt_f64(pfc),
            ]);
        }
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIG2ISH: &str = r#"
        [graph]
        nodes = 6
        edges = [[1, 2], [2, 3], [2, 4], [3, 4], [4, 5], [4, 6]]
        [nodes]
        sigma2 = 1.0
        h = [0.8, 0.7, 0.72, 0.61, 0.69, 0.9]
        M = 12
        Es = 5.0
        [attack]
        byzantines = [1, 2]
        P = 0.5
        delta = 1.0
        [consensus]
        rule = "conventional"
        [analysis]
        P_grid = [0.25, 0.5, 1.0]
        delta_grid = { from = 0.0, to = 10.0, steps = 11 }
    "#;

    #[test]
    fn blinding_root_zeroes_deflection() {
        let s = Scenario::from_toml(FIG2ISH).unwrap();
        let w = s.assigned_weights().unwrap().weights;
        for p in [0.25, 0.5, 1.0] {
            let d = blinding_strength(s.profiles().unwrap(), &w, p).unwrap().unwrap();
            let profiles = with_attack(s.profiles().unwrap(), p, d).unwrap();
            let m = global_moments(&profiles, &w, s.convention);
            assert!(deflection_coefficient(&m).unwrap() <= 1e-12);
            // η_i = 5 h_i², w ∝ η: root at P·Δ = Σ η_i² / (2 Σ_B η_i)
            let eta: Vec<f64> = [0.8f64, 0.7, 0.72, 0.61, 0.69, 0.9].iter().map(|h| 5.0 * h * h).collect();
            let want = eta.iter().map(|e| e * e).sum::<f64>() / (2.0 * (eta[0] + eta[1])) / p;
            assert!((d - want).abs() < 1e-9 * want, "{d} vs {want}");
        }
    }

    #[test]
    fn surface_has_one_row_per_grid_point() {
        let s = Scenario::from_toml(FIG2ISH).unwrap();
        let t = blinding_surface(&s).unwrap();
        assert_eq!(t.rows.len(), 33);
        let d = t.column("deflection").unwrap();
        assert!(t.rows.iter().all(|r| r[d].parse::<f64>().unwrap() >= 0.0));
    }

    #[test]
    fn pf_grid_is_interior() {
        let g = pf_grid(3);
        assert_eq!(g, vec![0.25, 0.5, 0.75]);
    }
}
