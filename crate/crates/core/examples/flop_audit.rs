//! Counts the operations of a forward pass and itemizes them per layer.
//!
//!     cargo run --example flop_audit

use jcas_unfold::problem::decompose_columns;
use jcas_unfold::signal::{chirp_benchmark, sample_channel, sample_qpsk_frame, ChirpVariant};
use jcas_unfold::unfold::{flop_breakdown, flops_per_layer, forward_counted};
use jcas_unfold::{JcasProblem, UnfoldModel};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> jcas_unfold::Result<()> {
    println!(
        "{:>4} {:>8} {:>8} {:>6} {:>6} {:>6} {:>6} {:>8}",
        "N", "counted", "formula", "matvec", "mul", "bias", "sum", "act"
    );
    for n in [2, 4, 8, 16, 32] {
        let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
        let p = JcasProblem::new(
            sample_channel(4, n, &mut rng)?,
            sample_qpsk_frame(4, 1, &mut rng)?,
            chirp_benchmark(n, 1, 1.0, ChirpVariant::Focused { steer_angle: 0.0 }, 0.5)?,
            0.5,
            1.0,
        )?;
        let layers = 10;
        let model = UnfoldModel::pgd_init(n, layers, 0.5, 1.0, None)?;
        let (_, counted) = forward_counted(&model, &decompose_columns(&p)[0], &vec![0.0; 2 * n])?;
        let b = flop_breakdown(n);
        println!(
            "{n:>4} {:>8} {:>8} {:>6} {:>6} {:>6} {:>6} {:>8}",
            counted / layers as u64,
            flops_per_layer(n),
            b.matvec,
            b.multiplications,
            b.bias_additions,
            b.branch_additions,
            b.activation
        );
    }
    Ok(())
}
