//! Communication/sensing tradeoff: rate and beam MSE per weight, with the
//! rank correlation of each against rho.
//!
//!     cargo run --release --example tradeoff -- [snr_db]

use jcas_unfold::harness::sweep::{run_tradeoff, Experiment, ModelStore};
use jcas_unfold::harness::ExperimentConfig;

fn main() -> jcas_unfold::Result<()> {
    let snr: f64 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(10.0);
    let mut cfg = ExperimentConfig {
        batch_count: 20,
        snr_grid_db: vec![snr],
        ..ExperimentConfig::default()
    };
    cfg.train.steps = 1000;
    cfg.output.dir = std::env::temp_dir().join("jcas_tradeoff");
    let store = ModelStore::from_config(&cfg);
    let t = run_tradeoff(&Experiment::new(cfg)?, &store)?;

    println!("{:>10} {:>5} {:>10} {:>12}", "solver", "rho", "rate", "beam MSE");
    for r in &t.rows {
        println!(
            "{:>10} {:>5} {:>10.3} {:>12.3e}",
            r.solver.name(),
            r.rho,
            r.avg_sum_rate,
            r.avg_beam_mse
        );
    }
    for f in &t.frontiers {
        println!(
            "{} at {} dB: Spearman(rho, rate) = {:.2}, Spearman(rho, MSE) = {:.2}",
            f.solver, f.snr_db, f.rate_correlation, f.mse_correlation
        );
    }
    Ok(())
}
