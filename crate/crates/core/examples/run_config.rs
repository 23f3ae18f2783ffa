//! Runs a bundled configuration end to end and prints the summary.
//!
//! `cargo run --example run_config -- configs/scale_down.cfg`

use std::path::PathBuf;

use modstab::experiment::{run_experiment, summary};
use modstab::ExperimentConfig;

fn main() -> modstab::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| {
            PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs/corollary24.cfg")
        });
    let cfg = ExperimentConfig::load(&path)?;
    let outcome = run_experiment(&cfg)?;
    print!("{}", summary(&outcome.report));
    std::process::exit(outcome.exit_code);
}
