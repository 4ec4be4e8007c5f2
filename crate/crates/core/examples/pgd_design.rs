//! Projected gradient descent on a full frame across the tradeoff weight.
//!
//!     cargo run --release --example pgd_design -- [starts]

use jcas_unfold::metrics::{angle_grid, EvalSettings};
use jcas_unfold::problem::decompose_columns;
use jcas_unfold::signal::{chirp_benchmark, sample_channel, sample_qpsk_frame, ChirpVariant};
use jcas_unfold::solvers::{pgd_solve, solve_frame, ColumnSolver, PgdConfig};
use jcas_unfold::{noise_power, JcasProblem};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> jcas_unfold::Result<()> {
    let starts = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let (n, k, m, p_t) = (8, 4, 20, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let h = sample_channel(k, n, &mut rng)?;
    let s = sample_qpsk_frame(k, m, &mut rng)?;
    let x0 = chirp_benchmark(n, m, p_t, ChirpVariant::Orthogonal, 0.5)?;
    let grid = angle_grid(-90f64.to_radians(), 90f64.to_radians(), 181);
    let settings = EvalSettings::new(noise_power(p_t, 10.0), grid, 0.5);
    let cfg = PgdConfig {
        starts,
        seed: 3,
        ..PgdConfig::default()
    };

    println!(
        "{:>5} {:>10} {:>10} {:>10} {:>12}",
        "rho", "MUI W", "rate", "beam MSE", "FLOPs"
    );
    for rho in [0.0, 0.2, 0.5, 0.8, 1.0] {
        let p = JcasProblem::new(h.clone(), s.clone(), x0.clone(), rho, p_t)?;
        let (x, r) = solve_frame(&p, &ColumnSolver::Pgd(cfg.clone()), &settings)?;
        assert!(x.worst_modulus_deviation().unwrap() < 1e-9);
        println!(
            "{rho:>5} {:>10.3} {:>10.3} {:>10.2e} {:>12}",
            r.mui_power, r.sum_rate, r.beam_mse, r.flops
        );
    }

    // Convergence of one column at rho = 0.5.
    let p = JcasProblem::new(h, s, x0, 0.5, p_t)?;
    let col = &decompose_columns(&p)[0];
    let out = pgd_solve(col, &PgdConfig::default(), col.x0bar().as_slice())?;
    let trace = out.best_trace();
    for it in [0, 1, 5, 20, trace.len() - 1] {
        println!("iter {it:>4}: objective {:.6}", trace[it]);
    }
    Ok(())
}
