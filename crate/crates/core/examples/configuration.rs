//! Loads the shipped configuration, applies command-line style overrides and
//! shows what a run would be keyed on.
//!
//!     cargo run --example configuration -- [config.toml]

use jcas_unfold::harness::{ExperimentConfig, Overrides, SolverKind};

fn main() -> jcas_unfold::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/configs/default.toml").into());
    let mut cfg = ExperimentConfig::load(&path)?;
    println!("{path}: sha256 {}", cfg.sha256());

    Overrides {
        seed: Some(1),
        rho: Some(0.8),
        snr_db: Some(6.0),
        solver: Some(SolverKind::Pgd),
        ..Overrides::default()
    }
    .apply(&mut cfg);
    cfg.validate()?;
    println!(
        "after overrides: seed {}, rho {:?}, snr {:?} dB, solvers {:?}",
        cfg.seed, cfg.rho_grid, cfg.snr_grid_db, cfg.solvers
    );
    println!("P_T = {} W, sha256 {}", cfg.power(), cfg.sha256());

    let bad = ExperimentConfig::parse("[dims]\nantennas = 8\n");
    println!(
        "unknown keys are rejected: {}",
        bad.unwrap_err().lines().next().unwrap_or_default()
    );
    Ok(())
}
