//! Frame design with a trained network.

use std::time::Instant;

use nalgebra::DVector;

use crate::error::{ensure_dims, Result};
use crate::flops::FlopTally;
use crate::metrics::{beam_mse, beam_pattern, evaluate, EvalReport, EvalSettings, RawMetrics, Waveform};
use crate::problem::{assemble_soft, assemble_waveform, decompose_columns, project_cm_in_place, JcasProblem};

use super::forward::forward_output;
use super::UnfoldModel;

/// A designed frame with its pre-projection counterpart and cost.
#[derive(Debug, Clone)]
pub struct Design {
    /// Projected, constant-modulus frame.
    pub waveform: Waveform,
    /// Network output before projection, scaled by `sqrt(P_T / N)`.
    pub raw: Waveform,
    /// Network operations over all columns.
    pub flops: u64,
    pub projection_flops: u64,
    pub wall_time: f64,
}

/// Runs the network on every column from a zero start and projects the result.
pub fn design_waveform(model: &UnfoldModel, p: &JcasProblem) -> Result<Design> {
    ensure_dims(model.n == p.antennas(), || {
        format!(
            "model built for N = {}, problem has N = {}",
            model.n,
            p.antennas()
        )
    })?;
    let start = Instant::now();
    let mut flops = FlopTally::default();
    let mut proj = FlopTally::default();
    let columns = decompose_columns(p);
    let mut raw: Vec<DVector<f64>> = Vec::with_capacity(columns.len());
    let mut projected = Vec::with_capacity(columns.len());
    for col in &columns {
        let out = forward_output(model, col, &mut flops);
        let mut x = out.clone();
        project_cm_in_place(x.as_mut_slice(), &mut proj);
        raw.push(out);
        projected.push(x);
    }
    let waveform = assemble_waveform(&projected, p.p_t, p.antennas())?;
    let wall_time = start.elapsed().as_secs_f64();
    Ok(Design {
        waveform,
        raw: assemble_soft(&raw, p.p_t, p.antennas())?,
        flops: flops.0,
        projection_flops: proj.0,
        wall_time,
    })
}

/// [`design_waveform`] plus the full evaluation, including metrics of the
/// unprojected output.
pub fn infer_waveform(
    model: &UnfoldModel,
    p: &JcasProblem,
    settings: &EvalSettings,
) -> Result<(Waveform, EvalReport)> {
    let design = design_waveform(model, p)?;
    let reference = beam_pattern(
        &Waveform::hard(p.x0.matrix().clone(), p.p_t)?,
        &settings.grid,
        settings.delta,
    )?;
    let mut report = evaluate(&p.h, &p.s, &design.waveform, &reference, settings)?;
    let raw_eval = evaluate(&p.h, &p.s, &design.raw, &reference, settings)?;
    let raw_pattern = beam_pattern(&design.raw, &settings.grid, settings.delta)?;
    report.raw = Some(RawMetrics {
        mui_power: raw_eval.mui_power,
        sum_rate: raw_eval.sum_rate,
        beam_mse: beam_mse(&raw_pattern, &reference)?,
    });
    report.wall_time = design.wall_time;
    report.flops = design.flops;
    report.projection_flops = design.projection_flops;
    Ok((design.waveform, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::default_angle_grid;
    use crate::signal::{chirp_benchmark, sample_channel, sample_qpsk_frame, ChirpVariant};
    use crate::unfold::flops_per_layer;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn problem(n: usize, rho: f64) -> JcasProblem {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = sample_channel(4, n, &mut rng).unwrap();
        let s = sample_qpsk_frame(4, 20, &mut rng).unwrap();
        let x0 = chirp_benchmark(n, 20, 1.0, ChirpVariant::Orthogonal, 0.5).unwrap();
        JcasProblem::new(h, s, x0, rho, 1.0).unwrap()
    }

    #[test]
    fn output_is_feasible_and_counted() {
        let model = UnfoldModel::pgd_init(8, 10, 0.5, 1.0, None).unwrap();
        let settings = EvalSettings::new(0.1, default_angle_grid(), 0.5);
        let (x, report) = infer_waveform(&model, &problem(8, 0.5), &settings).unwrap();
        assert!(x.is_hard());
        assert!(x.worst_modulus_deviation().unwrap() < 1e-9);
        assert_eq!(report.flops, 20 * 10 * flops_per_layer(8));
        assert_eq!(report.projection_flops, 20 * 8 * 6);
        assert!(report.raw.is_some());
    }

    #[test]
    fn antenna_mismatch_rejected() {
        let model = UnfoldModel::pgd_init(4, 2, 0.5, 1.0, None).unwrap();
        assert!(design_waveform(&model, &problem(8, 0.5)).is_err());
    }
}
