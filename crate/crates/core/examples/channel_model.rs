//! Draws one channel and symbol frame, builds the chirp benchmarks and checks
//! the real-valued expansion used by the solvers.
//!
//!     cargo run --example channel_model -- [seed]

use jcas_unfold::signal::{
    chirp_benchmark, expand_matrix, expand_vector, sample_channel, sample_qpsk_frame, ChirpVariant,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> jcas_unfold::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(7);
    let (n, k, m, p_t) = (8, 4, 20, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let h = sample_channel(k, n, &mut rng)?;
    let s = sample_qpsk_frame(k, m, &mut rng)?;
    let fro2: f64 = h.matrix().iter().map(|z| z.norm_sqr()).sum();
    println!(
        "H: {k}x{n}, mean |h|^2 = {:.3} (unit-variance Rayleigh)",
        fro2 / (n * k) as f64
    );
    println!("S: {k}x{m} QPSK, first symbol {:.3}", s.matrix()[(0, 0)]);

    for variant in [
        ChirpVariant::Orthogonal,
        ChirpVariant::Directional { steer_angle: 0.5 },
        ChirpVariant::Focused { steer_angle: 0.5 },
    ] {
        let x0 = chirp_benchmark(n, m, p_t, variant, 0.5)?;
        let amp = x0.matrix().iter().map(|z| z.norm()).fold(0.0, f64::max);
        let gram = x0.matrix() * x0.matrix().adjoint();
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter(|(i, j)| i != j)
            .map(|ij| gram[ij].norm())
            .fold(0.0, f64::max);
        println!(
            "{variant:?}: |x| = {amp:.4} (sqrt(P_T/N) = {:.4}), largest row cross-correlation {off:.2e}",
            (p_t / n as f64).sqrt()
        );
    }

    // The stacked real form reproduces the complex product exactly.
    let x = sample_qpsk_frame(n, 1, &mut rng)?.matrix().column(0).into_owned();
    let lhs = expand_matrix(h.matrix()) * expand_vector(&x);
    let rhs = expand_vector(&(h.matrix() * &x));
    println!("real expansion error: {:.1e}", (lhs - rhs).amax());
    Ok(())
}
