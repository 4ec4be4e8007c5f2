//! Multi-start PGD against the exhaustive phase-grid optimum on two-antenna problems.
//!
//!     cargo run --release --example oracle_check -- [instances]

use jcas_unfold::problem::RealColumnProblem;
use jcas_unfold::signal::{sample_channel, sample_qpsk_frame};
use jcas_unfold::solvers::{grid_gap_bound, pgd_multistart, phase_grid_solve, PgdConfig, PhaseGridConfig};
use jcas_unfold::C64;
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> jcas_unfold::Result<()> {
    let count: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(20);
    let grid = PhaseGridConfig::default();
    for rho in [0.0, 0.5, 1.0] {
        let (mut hits, mut worst_gap) = (0, 0.0f64);
        for i in 0..count {
            let mut rng = ChaCha8Rng::seed_from_u64(i);
            let h = sample_channel(1, 2, &mut rng)?;
            let s = sample_qpsk_frame(1, 1, &mut rng)?.matrix().column(0).into_owned();
            let amp = 0.5f64.sqrt();
            let x0 = DVector::from_fn(2, |_, _| {
                C64::from_polar(amp, rng.random::<f64>() * std::f64::consts::TAU)
            });
            let p = RealColumnProblem::from_complex(&h, &s, &x0, rho, 1.0)?;

            let oracle = phase_grid_solve(&p, &grid)?;
            let pgd = pgd_multistart(
                &p,
                &PgdConfig {
                    starts: 8,
                    ..PgdConfig::default()
                },
                &mut rng,
            )?;
            let gap = pgd.objective - oracle.objective;
            if gap <= (1e-2 * oracle.objective).max(grid_gap_bound(&p, grid.grid_points)) {
                hits += 1;
            }
            worst_gap = worst_gap.max(gap);
        }
        println!("rho = {rho}: {hits}/{count} within tolerance, worst PGD - oracle = {worst_gap:.2e}");
    }
    Ok(())
}
