//! Writes, inspects and reloads a model file.
//!
//!     cargo run --example model_files -- [existing.bin]

use jcas_unfold::unfold::{encode_model, load_model, save_model};
use jcas_unfold::UnfoldModel;

fn main() -> jcas_unfold::Result<()> {
    let model = match std::env::args().nth(1) {
        Some(path) => load_model(path)?,
        None => {
            let m = UnfoldModel::slope_matched_init(8, 10, 0.5, 1.0, None)?;
            let path = std::env::temp_dir().join("jcas_example_model.bin");
            save_model(&m, &path)?;
            println!("wrote {}", path.display());
            load_model(&path)?
        }
    };
    let bytes = encode_model(&model);
    println!(
        "{} bytes: {} header + {} layers x 8 vectors x {} values",
        bytes.len(),
        bytes.len() - model.num_parameters() * 8,
        model.num_layers(),
        model.dim()
    );
    println!("N = {}, rho = {}, P_T = {} W", model.n, model.rho, model.p_t);
    println!("{:?}", model.meta);
    let l0 = &model.layers[0];
    println!(
        "layer 0 weights: w1 {:.4}, w2 {:.4}, w3 {:.4}, w4 {:.4}",
        l0.w1[0], l0.w2[0], l0.w3[0], l0.w4[0]
    );
    Ok(())
}
