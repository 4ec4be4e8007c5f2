//! Average sum rate against SNR for each weight, network versus PGD, on a
//! reduced batch. Models are trained into a temporary directory.
//!
//!     cargo run --release --example rate_sweep -- [channels]

use jcas_unfold::harness::sweep::{run_rate_sweep, Experiment, ModelStore};
use jcas_unfold::harness::{ExperimentConfig, SolverKind};

fn main() -> jcas_unfold::Result<()> {
    let mut cfg = ExperimentConfig {
        batch_count: std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(20),
        ..ExperimentConfig::default()
    };
    cfg.train.steps = 1000;
    cfg.output.dir = std::env::temp_dir().join("jcas_rate_sweep");
    let store = ModelStore::from_config(&cfg);
    let exp = Experiment::new(cfg.clone())?;
    let sweep = run_rate_sweep(&exp, &store)?;

    for solver in [SolverKind::Unfolded, SolverKind::Pgd] {
        println!(
            "{solver}: average sum rate (bit/s/Hz) over {} channels",
            cfg.batch_count
        );
        print!("{:>6}", "rho");
        cfg.snr_grid_db
            .iter()
            .for_each(|s| print!("{:>8}", format!("{s}dB")));
        println!();
        for &rho in &cfg.rho_grid {
            print!("{rho:>6}");
            for &snr in &cfg.snr_grid_db {
                print!(
                    "{:>8.3}",
                    sweep.get(rho, snr, solver).expect("cell present").avg_sum_rate
                );
            }
            println!();
        }
    }
    Ok(())
}
