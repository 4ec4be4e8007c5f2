//! Trains the unfolded network for one weight and saves it.
//!
//!     cargo run --release --example train_network -- [rho] [steps] [out.bin]

use jcas_unfold::unfold::{
    held_out_batch, save_model, train_observed, training_loss, TrainConfig, TrainDims,
};
use jcas_unfold::{ChirpVariant, UnfoldModel};

fn main() -> jcas_unfold::Result<()> {
    let mut args = std::env::args().skip(1);
    let rho: f64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(0.5);
    let steps: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(1000);
    let out = args.next().unwrap_or_else(|| "unfold.bin".into());

    let dims = TrainDims {
        n: 8,
        k: 4,
        m: 20,
        layers: 10,
        p_t: 1.0,
        chirp: ChirpVariant::Orthogonal,
        delta: 0.5,
    };
    let cfg = TrainConfig {
        steps,
        ..TrainConfig::default()
    };
    let held = held_out_batch(dims, rho, 500, 99)?;
    let untrained = UnfoldModel::pgd_init(dims.n, dims.layers, rho, dims.p_t, None)?;
    println!(
        "held-out loss, one gradient step per layer: {:.4}",
        training_loss(&untrained, &held)?
    );

    let every = (steps / 10).max(1);
    let model = train_observed(&cfg, rho, dims, &mut |step, loss, _| {
        if (step + 1) % every == 0 {
            println!(
                "step {:>5}  lr {:.2e}  batch loss {loss:.4}",
                step + 1,
                cfg.learning_rate_at(step)
            );
        }
    })?;
    println!("held-out loss, trained: {:.4}", training_loss(&model, &held)?);
    save_model(&model, &out)?;
    println!("saved {out} ({} parameters)", model.num_parameters());
    Ok(())
}
