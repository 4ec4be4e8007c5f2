//! Designs frames with a network and compares it to PGD on the same channel.
//!
//!     cargo run --release --example unfolded_design -- [model.bin]
//!
//! Without a model file a short training run is done first.

use jcas_unfold::metrics::{angle_grid, EvalSettings};
use jcas_unfold::signal::{chirp_benchmark, sample_channel, sample_qpsk_frame, ChirpVariant};
use jcas_unfold::solvers::{solve_frame, ColumnSolver, PgdConfig};
use jcas_unfold::unfold::{infer_waveform, load_model, train, TrainConfig, TrainDims};
use jcas_unfold::{noise_power, JcasProblem};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> jcas_unfold::Result<()> {
    let model = match std::env::args().nth(1) {
        Some(path) => load_model(path)?,
        None => {
            let dims = TrainDims {
                n: 8,
                k: 4,
                m: 20,
                layers: 10,
                p_t: 1.0,
                chirp: ChirpVariant::Orthogonal,
                delta: 0.5,
            };
            train(
                &TrainConfig {
                    steps: 500,
                    ..TrainConfig::default()
                },
                0.8,
                dims,
            )?
        }
    };
    let (n, m, p_t) = (model.n, 20, model.p_t);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let h = sample_channel(4, n, &mut rng)?;
    let s = sample_qpsk_frame(4, m, &mut rng)?;
    let x0 = chirp_benchmark(n, m, p_t, ChirpVariant::Orthogonal, 0.5)?;
    let p = JcasProblem::new(h, s, x0, model.rho, p_t)?;
    let settings = EvalSettings::new(noise_power(p_t, 10.0), angle_grid(-1.5, 1.5, 121), 0.5);

    let (x, net) = infer_waveform(&model, &p, &settings)?;
    let (_, pgd) = solve_frame(&p, &ColumnSolver::Pgd(PgdConfig::default()), &settings)?;
    let raw = net.raw.as_ref().expect("network reports raw metrics");
    println!("rho = {}, N = {n}, L = {}", model.rho, model.num_layers());
    println!(
        "network : rate {:.3}, beam MSE {:.2e}, {} FLOPs + {} for projection, {:.1} us",
        net.sum_rate,
        net.beam_mse,
        net.flops,
        net.projection_flops,
        net.wall_time * 1e6
    );
    println!(
        "  before projection: rate {:.3}, beam MSE {:.2e}",
        raw.sum_rate, raw.beam_mse
    );
    println!(
        "PGD     : rate {:.3}, beam MSE {:.2e}, {} FLOPs, {:.1} us",
        pgd.sum_rate,
        pgd.beam_mse,
        pgd.flops,
        pgd.wall_time * 1e6
    );
    println!(
        "worst modulus deviation: {:.1e}",
        x.worst_modulus_deviation().unwrap()
    );
    Ok(())
}
