//! Monte Carlo against closed forms, stream pairing, and scenario handling.

use consensus_detect::analysis::{steady_state_mixtures, WeightAssignment};
use consensus_detect::harness::{
    figure_scenario, run_monte_carlo, transient_curves, Overrides, Scenario, Scheme, Simulator, FIGURES,
};
use consensus_detect::Error;

/// |empirical − p| in units of the binomial standard error at `p`.
fn z(p: f64, hits_rate: f64, n: u64) -> f64 {
    let se = (p * (1.0 - p) / n as f64).sqrt();
    if se == 0.0 {
        if hits_rate == p { 0.0 } else { f64::INFINITY }
    } else {
        (hits_rate - p).abs() / se
    }
}

#[test]
fn transient_monte_carlo_within_three_standard_errors() {
    let s = figure_scenario("fig3", Overrides::default()).unwrap();
    let w = s.assigned_weights().unwrap();
    let nodes: Vec<usize> = (0..6).collect();
    let mut worst = 0.0f64;
    for sc in [s.clone(), s.without_attack()] {
        let closed = transient_curves(&sc, &w.weights, 20, &nodes).unwrap();
        let mc = Simulator::new(&sc, &w, s.seed, 20, false).unwrap().run(s.trials).unwrap();
        for p in closed {
            let r = mc.transient(p.t, p.node);
            worst = worst.max(z(p.pd, r.pd, mc.trials[1])).max(z(p.pf, r.pf, mc.trials[0]));
        }
    }
    assert!(worst <= 3.0, "largest z = {worst}");
}

#[test]
fn steady_state_monte_carlo_within_three_standard_errors() {
    let base = figure_scenario("fig6", Overrides::default()).unwrap();
    for scheme in [Scheme::Optimal, Scheme::Conventional, Scheme::EqualGain] {
        let w: WeightAssignment = base.scheme_weights(scheme).unwrap();
        let (h0, h1) = steady_state_mixtures(base.profiles().unwrap(), &w.weights, base.convention).unwrap();
        let lambda = base.lambda.unwrap();
        let (pd, pf) = (h1.exceedance(lambda), h0.exceedance(lambda));
        let mc = Simulator::new(&base, &w, base.seed, 0, true).unwrap().run(base.trials).unwrap();
        assert!(mc.nonconverged_fraction() <= base.simulate.max_nonconverged, "{scheme}");
        for j in 0..6 {
            let r = mc.steady(j);
            let zd = z(pd, r.pd, mc.steady_trials[1]);
            let zf = z(pf, r.pf, mc.steady_trials[0]);
            assert!(zd <= 3.0 && zf <= 3.0, "{scheme} node {j}: z = ({zd}, {zf})");
        }
    }
}

const BLINDED: &str = r#"
    seed = 99
    trials = 100000
    lambda = 0.5
    [graph]
    nodes = 6
    edges = [[1, 2], [2, 3], [2, 4], [3, 4], [4, 5], [4, 6]]
    [nodes]
    mu0 = 0.0
    var0 = 1.0
    mu1 = 1.0
    var1 = 1.0
    [attack]
    byzantines = [1, 2, 3]
    P = 1.0
    delta = 1.0
    [consensus]
    rule = "robust"
    epsilon = 1.0
    weights = "equal-gain"
    tol = 1e-9
    [simulate]
    t_max = 0
"#;

#[test]
fn blinded_network_detects_at_chance() {
    for lambda in [-0.5, 0.2, 0.5, 0.9, 1.5] {
        let mut s = Scenario::from_toml(BLINDED).unwrap();
        s.lambda = Some(lambda);
        let mc = run_monte_carlo(&s).unwrap();
        assert_eq!(mc.nonconverged, 0);
        let r = mc.steady(0);
        let sigma = (r.pd_se * r.pd_se + r.pf_se * r.pf_se).sqrt();
        assert!((r.pd - r.pf).abs() <= 3.0 * sigma, "lambda {lambda}: {r:?}");
    }
}

#[test]
fn idle_attack_equals_clean_network() {
    let clean = Scenario::from_toml(&BLINDED.replace(
        "[attack]\n    byzantines = [1, 2, 3]\n    P = 1.0\n    delta = 1.0\n",
        "",
    ))
    .unwrap();
    assert!(clean.profiles().unwrap().iter().all(|p| !p.is_byzantine()));
    let idle = Scenario::from_toml(&BLINDED.replace("P = 1.0", "P = 0.0").replace("delta = 1.0", "delta = 0.0")).unwrap();
    let a = run_monte_carlo(&clean).unwrap();
    let b = run_monte_carlo(&idle).unwrap();
    assert_eq!(a, b);
}

#[test]
fn summaries_do_not_depend_on_thread_count() {
    let s = figure_scenario("fig6", Overrides { seed: None, trials: Some(5000) }).unwrap();
    let many = run_monte_carlo(&s).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let few = pool.install(|| run_monte_carlo(&s)).unwrap();
    assert_eq!(many, few);
    assert!(many.shift_redesigned + many.shift_infeasible > 0);
}

#[test]
fn builtin_scenarios_load_from_disk() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios");
    for f in FIGURES.iter().filter(|f| **f != "fig4") {
        Scenario::load(&dir.join(format!("{f}.toml"))).unwrap();
    }
    assert!(matches!(Scenario::load(&dir.join("missing.toml")), Err(Error::Config(_))));
}
