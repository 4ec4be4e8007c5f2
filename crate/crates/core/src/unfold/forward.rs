use nalgebra::DVector;

use crate::error::{ensure_dims, Result};
use crate::flops::{FlopCounter, FlopTally, NoFlops};
use crate::problem::RealColumnProblem;

use super::{activation, UnfoldLayer, UnfoldModel};

/// Everything a backward pass needs from one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    pub x_init: Vec<f64>,
    /// `Hbar^T Hbar x_{p-1}` fed to layer `p`.
    pub gram_inputs: Vec<Vec<f64>>,
    /// Pre-activations `s_p`.
    pub pre: Vec<Vec<f64>>,
    /// Outputs `x_p`.
    pub outputs: Vec<Vec<f64>>,
}

impl ForwardTrace {
    pub fn output(&self) -> &[f64] {
        self.outputs.last().map(Vec::as_slice).unwrap_or(&self.x_init)
    }

    /// Input of layer `p` (zero-based), i.e. `x_{p}` in one-based notation.
    pub fn layer_input(&self, p: usize) -> &[f64] {
        if p == 0 {
            &self.x_init
        } else {
            &self.outputs[p - 1]
        }
    }
}

#[inline]
fn layer_forward<F: FlopCounter>(
    layer: &UnfoldLayer,
    p: &RealColumnProblem,
    prev: &[f64],
    gx: &mut [f64],
    pre: &mut [f64],
    out: &mut [f64],
    flops: &mut F,
) {
    p.terms().gram_mul(prev, gx, flops);
    let x0 = p.x0bar().as_slice();
    let u = p.hbar_t_sbar().as_slice();
    for i in 0..prev.len() {
        let m1 = layer.w1[i] * x0[i] + layer.b1[i];
        let m2 = layer.w2[i] * u[i] + layer.b2[i];
        let m3 = layer.w3[i] * gx[i] + layer.b3[i];
        let m4 = layer.w4[i] * prev[i] + layer.b4[i];
        flops.add(8);
        let s = m1 + m2 + m3 + m4;
        flops.add(3);
        pre[i] = s;
        out[i] = activation(s);
        flops.add(1);
    }
}

fn run<F: FlopCounter>(
    model: &UnfoldModel,
    p: &RealColumnProblem,
    x_init: &[f64],
    flops: &mut F,
) -> Result<ForwardTrace> {
    ensure_dims(model.n == p.antennas(), || {
        format!("model is for N = {}, problem has N = {}", model.n, p.antennas())
    })?;
    ensure_dims(x_init.len() == model.dim(), || {
        format!(
            "initial point has length {}, expected {}",
            x_init.len(),
            model.dim()
        )
    })?;
    let dim = model.dim();
    let layers = model.layers.len();
    let mut trace = ForwardTrace {
        x_init: x_init.to_vec(),
        gram_inputs: vec![vec![0.0; dim]; layers],
        pre: vec![vec![0.0; dim]; layers],
        outputs: vec![vec![0.0; dim]; layers],
    };
    for (l, layer) in model.layers.iter().enumerate() {
        let (done, rest) = trace.outputs.split_at_mut(l);
        let prev = if l == 0 { x_init } else { done[l - 1].as_slice() };
        layer_forward(
            layer,
            p,
            prev,
            &mut trace.gram_inputs[l],
            &mut trace.pre[l],
            &mut rest[0],
            flops,
        );
    }
    Ok(trace)
}

/// Runs every layer from `x_init`.
pub fn forward(model: &UnfoldModel, p: &RealColumnProblem, x_init: &[f64]) -> Result<ForwardTrace> {
    run(model, p, x_init, &mut NoFlops)
}

/// [`forward`] with every arithmetic operation counted.
pub fn forward_counted(
    model: &UnfoldModel,
    p: &RealColumnProblem,
    x_init: &[f64],
) -> Result<(ForwardTrace, u64)> {
    let mut tally = FlopTally::default();
    let trace = run(model, p, x_init, &mut tally)?;
    Ok((trace, tally.0))
}

/// Final-layer output only, counting operations into `flops`.
pub(crate) fn forward_output<F: FlopCounter>(
    model: &UnfoldModel,
    p: &RealColumnProblem,
    flops: &mut F,
) -> DVector<f64> {
    let dim = model.dim();
    let mut prev = vec![0.0; dim];
    let mut next = vec![0.0; dim];
    let mut gx = vec![0.0; dim];
    let mut pre = vec![0.0; dim];
    for layer in &model.layers {
        layer_forward(layer, p, &prev, &mut gx, &mut pre, &mut next, flops);
        std::mem::swap(&mut prev, &mut next);
    }
    DVector::from_vec(prev)
}

/// Sum over layers of the column objective at each layer output.
pub(crate) fn trace_loss(trace: &ForwardTrace, p: &RealColumnProblem) -> f64 {
    trace.outputs.iter().map(|x| p.objective_unchecked(x)).sum()
}

/// Batch mean of the all-layer loss, every forward pass starting from zero.
pub fn training_loss(model: &UnfoldModel, batch: &[RealColumnProblem]) -> Result<f64> {
    ensure_dims(!batch.is_empty(), || {
        "training loss needs a nonempty batch".into()
    })?;
    let zeros = vec![0.0; model.dim()];
    let mut total = 0.0;
    for p in batch {
        total += trace_loss(&forward(model, p, &zeros)?, p);
    }
    Ok(total / batch.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::decompose_columns;
    use crate::problem::JcasProblem;
    use crate::signal::{chirp_benchmark, sample_channel, sample_qpsk_frame, ChirpVariant};
    use crate::unfold::{activation, flops_per_layer, UnfoldLayer};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn columns(seed: u64, rho: f64, m: usize) -> Vec<RealColumnProblem> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = sample_channel(4, 8, &mut rng).unwrap();
        let s = sample_qpsk_frame(4, m, &mut rng).unwrap();
        let x0 = chirp_benchmark(8, m, 1.0, ChirpVariant::Focused { steer_angle: 0.3 }, 0.5).unwrap();
        decompose_columns(&JcasProblem::new(h, s, x0, rho, 1.0).unwrap())
    }

    #[test]
    fn zero_model_outputs_zero() {
        let p = &columns(1, 0.5, 1)[0];
        let model =
            UnfoldModel::new(vec![UnfoldLayer::zeros(16); 4], 8, 0.5, 1.0, Default::default()).unwrap();
        let t = forward(&model, p, &[0.0; 16]).unwrap();
        assert!(t.outputs.iter().all(|x| x.iter().all(|v| *v == 0.0)));
    }

    #[test]
    fn passthrough_layer_doubles_small_inputs() {
        let p = &columns(2, 0.5, 1)[0];
        let model = UnfoldModel::new(
            vec![UnfoldLayer::uniform(16, [0.0, 0.0, 0.0, 1.0])],
            8,
            0.5,
            1.0,
            Default::default(),
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x: Vec<f64> = (0..16).map(|_| rng.random::<f64>() - 0.5).collect();
        let t = forward(&model, p, &x).unwrap();
        for (o, i) in t.outputs[0].iter().zip(&x) {
            assert_eq!(*o, 2.0 * i);
        }
    }

    #[test]
    fn layer_is_activated_gradient_step() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for rho in [0.0, 0.3, 0.8, 1.0] {
            let p = &columns(5, rho, 1)[0];
            let step = 0.013;
            let model = UnfoldModel::pgd_init(8, 1, rho, 1.0, Some(step)).unwrap();
            let x: Vec<f64> = (0..16).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
            let grad = p.gradient(&x).unwrap();
            let t = forward(&model, p, &x).unwrap();
            for i in 0..16 {
                let pre_projection = x[i] - step * grad[i];
                assert!((t.pre[0][i] - pre_projection).abs() < 1e-12);
                assert!((t.outputs[0][i] - activation(pre_projection)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn vanishing_step_iterates_activation() {
        let p = &columns(6, 0.5, 1)[0];
        let model = UnfoldModel::pgd_init(8, 5, 0.5, 1.0, Some(1e-12)).unwrap();
        let x: Vec<f64> = (0..16).map(|i| (i as f64 * 0.7).sin() * 0.1).collect();
        let t = forward(&model, p, &x).unwrap();
        for l in 0..5 {
            for i in 0..16 {
                let want = activation(t.layer_input(l)[i]);
                assert!((t.outputs[l][i] - want).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn outputs_bounded() {
        let p = &columns(7, 0.9, 1)[0];
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let model = UnfoldModel::random_init(8, 6, 0.9, 1.0, 3.0, &mut rng).unwrap();
        let t = forward(&model, p, &[0.0; 16]).unwrap();
        assert!(t.outputs.iter().flatten().all(|v| v.abs() <= 1.0));
    }

    #[test]
    fn counted_forward_matches_formula() {
        let p = &columns(9, 0.5, 1)[0];
        let model = UnfoldModel::pgd_init(8, 10, 0.5, 1.0, None).unwrap();
        let (t, flops) = forward_counted(&model, p, &[0.0; 16]).unwrap();
        assert_eq!(flops, flops_per_layer(8) * 10);
        assert_eq!(t, forward(&model, p, &[0.0; 16]).unwrap());
    }

    #[test]
    fn loss_matches_layerwise_objectives() {
        let batch = columns(10, 0.6, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let model = UnfoldModel::random_init(8, 3, 0.6, 1.0, 0.3, &mut rng).unwrap();
        let loss = training_loss(&model, &batch).unwrap();
        let mut oracle = 0.0;
        for p in &batch {
            let t = forward(&model, p, &[0.0; 16]).unwrap();
            for x in &t.outputs {
                oracle += p.objective(x).unwrap();
            }
        }
        oracle /= batch.len() as f64;
        assert!(((loss - oracle) / oracle).abs() < 1e-12);
    }

    #[test]
    fn single_layer_loss_is_objective() {
        let batch = columns(12, 0.0, 1);
        let p = &batch[0];
        // w1 = 0.5 reproduces x0bar exactly, so the loss vanishes at rho = 0.
        let model = UnfoldModel::new(
            vec![UnfoldLayer::uniform(16, [0.5, 0.0, 0.0, 0.0])],
            8,
            0.0,
            1.0,
            Default::default(),
        )
        .unwrap();
        assert!(training_loss(&model, &batch).unwrap() < 1e-30);
        let t = forward(&model, p, &[0.0; 16]).unwrap();
        assert_eq!(
            training_loss(&model, &batch).unwrap(),
            p.objective(&t.outputs[0]).unwrap()
        );
    }

    #[test]
    fn mismatched_dimensions() {
        let p = &columns(13, 0.5, 1)[0];
        let model = UnfoldModel::pgd_init(16, 2, 0.5, 1.0, None).unwrap();
        assert!(forward(&model, p, &[0.0; 32]).is_err());
        let model = UnfoldModel::pgd_init(8, 2, 0.5, 1.0, None).unwrap();
        assert!(forward(&model, p, &[0.0; 15]).is_err());
        assert!(training_loss(&model, &[]).is_err());
    }
}
