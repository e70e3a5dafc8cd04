//! Regenerate every figure's data set into a directory.
//!
//! cargo run --release --example reproduce -- [OUT_DIR]

use consensus_detect::harness::{reproduce_figure, Overrides, FIGURES};

fn main() -> consensus_detect::Result<()> {
    let out = std::path::PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "figures".into()));
    for name in FIGURES {
        let t = reproduce_figure(name, Overrides { seed: None, trials: Some(10_000) })?;
        let path = out.join(format!("{name}.csv"));
        t.write(&path)?;
        println!("{name}: {} rows -> {}", t.rows.len(), path.display());
    }
    Ok(())
}
