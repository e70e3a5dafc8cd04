//! Built-in figure scenarios and their CSV pipelines.

use super::config::{Scenario, Scheme};
use super::montecarlo::Simulator;
use super::output::{fmt_f64, Table};
use super::reports::{blinding_surface, learning_roc_table, pf_grid, roc_table, transient_curves};
use crate::consensus::{run_consensus, weighted_average};
use crate::error::{Error, Result};
use crate::learning::learning_loop;

/// Names accepted by [`reproduce_figure`].
pub const FIGURES: [&str; 6] = ["fig2", "fig3", "fig4", "fig5", "fig6", "fig7"];

/// Built-in scenario text for a figure. `fig4` shares the `fig3` setup.
pub fn builtin_scenario(name: &str) -> Result<&'static str> {
    Ok(match name {
        "fig2" => include_str!("../../scenarios/fig2.toml"),
        "fig3" | "fig4" => include_str!("../../scenarios/fig3.toml"),
        "fig5" => include_str!("../../scenarios/fig5.toml"),
        "fig6" => include_str!("../../scenarios/fig6.toml"),
        "fig7" => include_str!("../../scenarios/fig7.toml"),
        _ => {
            return Err(Error::UnknownFigure {
                name: name.into(),
                choices: FIGURES.join(", "),
            })
        }
    })
}

/// Replacements for the built-in seed and trial count.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub trials: Option<u64>,
}

pub fn figure_scenario(name: &str, overrides: Overrides) -> Result<Scenario> {
    let mut s = Scenario::from_toml(builtin_scenario(name)?)?;
    if let Some(seed) = overrides.seed {
        s.seed = seed;
    }
    if let Some(trials) = overrides.trials {
        s.trials = trials;
    }
    Ok(s)
}

/// Runs the pipeline for `name` and returns its table.
pub fn reproduce_figure(name: &str, overrides: Overrides) -> Result<Table> {
    let s = figure_scenario(name, overrides)?;
    let mut t = match name {
        "fig2" => blinding_surface(&s)?,
        "fig3" => transient_figure(&s, Metric::Detection)?,
        "fig4" => transient_figure(&s, Metric::FalseAlarm)?,
        "fig5" => trajectory_figure(&s)?,
        "fig6" => roc_table(&s, &s.analysis.schemes)?,
        "fig7" => learning_figure(&s)?,
        _ => unreachable!("builtin_scenario accepted {name}"),
    };
    t.meta("figure", name);
    t.meta("seed", s.seed);
    if matches!(name, "fig3" | "fig4") {
        t.meta("trials", s.trials);
    }
    t.meta("params", describe(&s));
    Ok(t)
}

fn describe(s: &Scenario) -> String {
    let mut parts = vec![format!("nodes={}", s.node_count())];
    if let Some(l) = s.lambda {
        parts.push(format!("lambda={l}"));
    }
    if let Some(e) = s.consensus.epsilon {
        parts.push(format!("epsilon={e}"));
    }
    parts.push(format!("rule={:?}", s.consensus.rule).to_lowercase());
    if let Some(p) = &s.profiles {
        for (i, prof) in p.iter().enumerate() {
            if let Some(a) = prof.attack() {
                parts.push(format!("byzantine{}=(P={},delta={})", i + 1, a.probability, a.strength));
            }
        }
    }
    parts.join(" ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Metric {
    Detection,
    FalseAlarm,
}

/// Closed-form and empirical transient curves, with and without attack.
fn transient_figure(s: &Scenario, metric: Metric) -> Result<Table> {
    let t_max = s.analysis.t_max.unwrap_or(20);
    let nodes: Vec<usize> = (0..s.node_count()).collect();
    let assigned = s.assigned_weights()?;
    let (closed_col, mc_col, se_col) = match metric {
        Metric::Detection => ("pd_closed", "pd_mc", "pd_se"),
        Metric::FalseAlarm => ("pf_closed", "pf_mc", "pf_se"),
    };
    let mut t = Table::new(&["case", "t", "node", closed_col, mc_col, se_col]);
    for (case, sc) in [("attack", s.clone()), ("no-attack", s.without_attack())] {
        let closed = transient_curves(&sc, &assigned.weights, t_max, &nodes)?;
        let mc = Simulator::new(&sc, &assigned, s.seed, t_max, false)?.run(s.trials)?;
        for p in closed {
            let r = mc.transient(p.t, p.node);
            let (c, e, se) = match metric {
                Metric::Detection => (p.pd, r.pd, r.pd_se),
                Metric::FalseAlarm => (p.pf, r.pf, r.pf_se),
            };
            t.push(vec![
                case.into(),
                p.t.to_string(),
                (p.node + 1).to_string(),
                fmt_f64(c),
                fmt_f64(e),
                fmt_f64(se),
            ]);
        }
    }
    Ok(t)
}

/// Node states from `x0` for every iteration up to `max_iter`.
fn trajectory_figure(s: &Scenario) -> Result<Table> {
    let x0 = s
        .consensus
        .x0
        .as_ref()
        .ok_or_else(|| Error::Config("[consensus] needs `x0` for a trajectory".into()))?;
    let w = s.assigned_weights()?.weights;
    let m = s.consensus_matrix(&w)?;
    let target = weighted_average(&w, x0);
    // Run the full horizon so the table always has max_iter + 1 rows.
    let run = run_consensus(&m, x0, f64::MIN_POSITIVE, s.consensus.max_iter)?;
    let n = s.node_count();
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|i| format!("x{i}")));
    header.extend(["spread", "max_dev", "target"].map(String::from));
    let mut t = Table::new(&header);
    let mut reached = None;
    for (k, x) in run.trajectory.iter().enumerate() {
        let dev = x.iter().map(|v| (v - target).abs()).fold(0.0, f64::max);
        if reached.is_none() && dev <= s.consensus.tol {
            reached = Some(k);
        }
        let mut row = vec![k.to_string()];
        row.extend(x.iter().map(|&v| fmt_f64(v)));
        row.push(fmt_f64(x.max() - x.min()));
        row.push(fmt_f64(dev));
        row.push(fmt_f64(target));
        t.push(row);
    }
    t.meta("kind", "trajectory");
    t.meta("target", fmt_f64(target));
    t.meta("tol", fmt_f64(s.consensus.tol));
    t.meta(
        "within_tol_at",
        reached.map_or_else(|| "never".to_string(), |k| k.to_string()),
    );
    Ok(t)
}

fn learning_figure(s: &Scenario) -> Result<Table> {
    let pfs = pf_grid(s.analysis.pf_points);
    let trace = learning_loop(&s.graph, s.profiles()?, &s.learning, s.seed, &pfs)?;
    let mut t = learning_roc_table(&trace);
    let (conv, conv_auc) = super::reports::scheme_roc(s, Scheme::Conventional, &pfs)?;
    for p in conv {
        t.push(vec![
            "conventional".into(),
            "0".into(),
            fmt_f64(p.pf),
            fmt_f64(p.pd),
            fmt_f64(conv_auc),
        ]);
    }
    t.meta("known_auc", fmt_f64(trace.known_auc));
    Ok(t)
}
