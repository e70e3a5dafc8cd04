//! Scenario files, Monte Carlo simulation, figure pipelines and CSV output.

pub mod config;
pub mod figures;
pub mod montecarlo;
pub mod output;
pub mod reports;

pub use config::{AnalysisSpec, ConsensusSpec, Scenario, Scheme, SimulateSpec, WeightSpec};
pub use figures::{builtin_scenario, figure_scenario, reproduce_figure, Overrides, FIGURES};
pub use montecarlo::{
    run_monte_carlo, DetectionRates, MonteCarloSummary, ShiftStatus, Simulator, SteadyOutcome, TrialRecord,
};
pub use output::{fmt_f64, split_preamble, Table};
pub use reports::{
    analysis_nodes, blinding_strength, blinding_surface, consensus_assignment, learning_roc_table,
    learning_trace_table, monte_carlo_table, pf_grid, roc_table, scheme_assignment, scheme_roc, transient_curves,
    transient_table, TransientPoint,
};
