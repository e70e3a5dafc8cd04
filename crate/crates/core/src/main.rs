use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use consensus_detect::analysis::{blinding_residual, deflection_coefficient, global_moments};
use consensus_detect::harness::{
    blinding_surface, consensus_assignment, learning_roc_table, learning_trace_table, monte_carlo_table,
    reproduce_figure, roc_table, Overrides, Scenario, Scheme, Simulator, Table, transient_table, pf_grid,
};
use consensus_detect::learning::learning_loop;
use consensus_detect::{Error, Result};

const EXIT_NONCONVERGED: u8 = 3;

#[derive(Parser)]
#[command(version, about = "Distributed detection by weighted average consensus under Byzantine attack")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form blinding surface, transient curves and ROC from a scenario.
    Analyze {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Monte Carlo estimate of detection and false-alarm rates.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        trials: u64,
        #[arg(long)]
        seed: u64,
        /// Write simulate.csv here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Learn neighbor parameters and adapt fusion weights.
    Learn {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        iterations: usize,
        #[arg(long)]
        seed: u64,
        /// Write learn_trace.csv and learn_roc.csv here instead of printing
        /// the trace.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Steady-state ROC for one weight scheme.
    Roc {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_parser = parse_scheme)]
        scheme: Scheme,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Regenerate a figure's data as CSV.
    Reproduce {
        /// fig2, fig3, fig4, fig5, fig6 or fig7.
        #[arg(long)]
        figure: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<u64>,
    },
}

fn parse_scheme(s: &str) -> std::result::Result<Scheme, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn emit(table: &Table, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => {
            table.write(path)?;
            eprintln!("wrote {}", path.display());
        }
        None => {
            use std::io::Write;
            std::io::stdout().write_all(&table.to_bytes()?)?;
        }
    }
    Ok(())
}

fn analyze(config: &Path, out: &Path) -> Result<()> {
    let s = Scenario::load(config)?;
    if let Ok(profiles) = s.profiles() {
        let w = s.effective_weights(&consensus_assignment(&s)?.weights)?;
        let m = global_moments(profiles, &w, s.convention);
        println!("mean gap       {}", m.mu1 - m.mu0);
        println!("H0 variance    {}", m.var0);
        if let Ok(d) = deflection_coefficient(&m) {
            println!("deflection     {d}");
        }
        println!("blinding resid {}", blinding_residual(profiles, &w));
    }
    if s.analysis.p_grid.is_some() && s.analysis.delta_grid.is_some() {
        emit(&blinding_surface(&s)?, Some(&out.join("blinding.csv")))?;
    }
    if let (Some(t_max), Some(_), Some(_)) = (s.analysis.t_max, s.lambda, s.consensus.epsilon) {
        emit(&transient_table(&s, t_max)?, Some(&out.join("transient.csv")))?;
    }
    if !s.analysis.schemes.is_empty() {
        emit(&roc_table(&s, &s.analysis.schemes)?, Some(&out.join("roc.csv")))?;
    }
    Ok(())
}

fn simulate(config: &Path, trials: u64, seed: u64, out: Option<&Path>) -> Result<bool> {
    let mut s = Scenario::load(config)?;
    s.seed = seed;
    s.trials = trials;
    let w = consensus_assignment(&s)?;
    let mc = Simulator::new(&s, &w, seed, s.simulate.t_max, s.simulate.steady)?.run(trials)?;
    let mut t = monte_carlo_table(&s, &w, &mc)?;
    t.meta("seed", seed);
    emit(&t, out.map(|d| d.join("simulate.csv")).as_deref())?;
    let frac = mc.nonconverged_fraction();
    if frac > s.simulate.max_nonconverged {
        eprintln!(
            "{} of {} trials did not reach consensus ({frac} > max_nonconverged = {})",
            mc.nonconverged,
            mc.total_trials(),
            s.simulate.max_nonconverged
        );
        return Ok(false);
    }
    Ok(true)
}

fn learn(config: &Path, iterations: usize, seed: u64, out: Option<&Path>) -> Result<()> {
    let mut s = Scenario::load(config)?;
    s.learning.iterations = iterations;
    let pfs = pf_grid(s.analysis.pf_points);
    let trace = learning_loop(&s.graph, s.profiles()?, &s.learning, seed, &pfs)?;
    let mut tr = learning_trace_table(&trace);
    tr.meta("seed", seed);
    match out {
        Some(d) => {
            emit(&tr, Some(&d.join("learn_trace.csv")))?;
            let mut roc = learning_roc_table(&trace);
            roc.meta("seed", seed);
            emit(&roc, Some(&d.join("learn_roc.csv")))?;
        }
        None => emit(&tr, None)?,
    }
    for it in &trace.iterations {
        eprintln!("iteration {}: auc {} (known {})", it.iteration, it.auc, trace.known_auc);
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Analyze { config, out } => analyze(&config, &out).map(|_| true),
        Command::Simulate {
            config,
            trials,
            seed,
            out,
        } => simulate(&config, trials, seed, out.as_deref()),
        Command::Learn {
            config,
            iterations,
            seed,
            out,
        } => learn(&config, iterations, seed, out.as_deref()).map(|_| true),
        Command::Roc { config, scheme, out } => {
            let s = Scenario::load(&config)?;
            emit(&roc_table(&s, &[scheme])?, out.as_deref()).map(|_| true)
        }
        Command::Reproduce {
            figure,
            out,
            seed,
            trials,
        } => {
            let t = reproduce_figure(&figure, Overrides { seed, trials })?;
            emit(&t, Some(&out.join(format!("{figure}.csv")))).map(|_| true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_NONCONVERGED),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
