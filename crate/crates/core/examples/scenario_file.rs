//! Describe a network in TOML, then analyze it.
//!
//! cargo run --example scenario_file

use consensus_detect::analysis::{deflection_coefficient, global_moments};
use consensus_detect::harness::{roc_table, Scenario, Scheme};

const SCENARIO: &str = r#"
lambda = 20.0

[graph]
nodes = 4
edges = [[1, 2], [2, 3], [3, 4], [4, 1]]

[nodes]
sigma2 = 1.0
h = [1.0, 0.8, 0.6, 0.4]
M = 10
Es = 2.0

[attack]
byzantines = [2]
P = 0.6
delta = 4.0

[consensus]
epsilon = 0.2
weights = "optimal"
"#;

fn main() -> consensus_detect::Result<()> {
    let s = Scenario::from_toml(SCENARIO)?;
    let w = s.effective_weights(&s.assigned_weights()?.weights)?;
    let m = global_moments(s.profiles()?, &w, s.convention);
    println!("weights {w:.3?}");
    println!("deflection {:.3}", deflection_coefficient(&m)?);
    let t = roc_table(&s, &[Scheme::Optimal, Scheme::Exclusion])?;
    println!("{}", String::from_utf8_lossy(&t.to_bytes()?).lines().take(8).collect::<Vec<_>>().join("\n"));
    Ok(())
}
