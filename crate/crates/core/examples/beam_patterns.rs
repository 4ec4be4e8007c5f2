//! Beam patterns of the benchmark waveforms and the metrics that score a frame.
//!
//!     cargo run --example beam_patterns

use jcas_unfold::metrics::{angle_grid, beam_mse, beam_pattern, evaluate, EvalSettings, Waveform};
use jcas_unfold::signal::{chirp_benchmark, sample_channel, sample_qpsk_frame, ChirpVariant};
use jcas_unfold::{dbm_to_watts, noise_power};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> jcas_unfold::Result<()> {
    let (n, k, m) = (8, 4, 20);
    let p_t = dbm_to_watts(30.0);
    let grid = angle_grid(-90f64.to_radians(), 90f64.to_radians(), 13);

    let frames: Vec<(&str, Waveform)> = [
        ("orthogonal", ChirpVariant::Orthogonal),
        (
            "focused +20deg",
            ChirpVariant::Focused {
                steer_angle: 20f64.to_radians(),
            },
        ),
    ]
    .into_iter()
    .map(|(name, v)| {
        Ok((
            name,
            Waveform::hard(chirp_benchmark(n, m, p_t, v, 0.5)?.matrix().clone(), p_t)?,
        ))
    })
    .collect::<jcas_unfold::Result<_>>()?;

    println!("{:>8} {:>12} {:>15}", "deg", frames[0].0, frames[1].0);
    let patterns: Vec<_> = frames
        .iter()
        .map(|(_, x)| beam_pattern(x, &grid, 0.5))
        .collect::<Result<_, _>>()?;
    for (i, theta) in grid.iter().enumerate() {
        println!(
            "{:>8.0} {:>12.4} {:>15.4}",
            theta.to_degrees(),
            patterns[0].power[i],
            patterns[1].power[i]
        );
    }
    println!(
        "beam MSE focused vs orthogonal: {:.4} W^2",
        beam_mse(&patterns[1], &patterns[0])?
    );

    // Communication metrics of the (interference-blind) benchmark at a few SNRs.
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let h = sample_channel(k, n, &mut rng)?;
    let s = sample_qpsk_frame(k, m, &mut rng)?;
    for snr in [0.0, 10.0, 20.0] {
        let settings = EvalSettings::new(noise_power(p_t, snr), grid.clone(), 0.5);
        let r = evaluate(&h, &s, &frames[0].1, &patterns[0], &settings)?;
        println!(
            "SNR {snr:>4} dB: MUI {:.2} W, sum rate {:.3} bit/s/Hz",
            r.mui_power, r.sum_rate
        );
    }
    Ok(())
}
