//! Reverse-mode gradients of the all-layer loss.
//!
//! With `e_p = dLoss/ds_p`, every layer output receives the objective gradient
//! directly and, except for the last, the signal coming back through the next
//! layer's `w3` and `w4` branches:
//!
//! ```text
//! dLoss/dx_p = grad f(x_p) + G (w3_{p+1} * e_{p+1}) + w4_{p+1} * e_{p+1}
//! e_p        = dLoss/dx_p * psi'(s_p)
//! ```
//!
//! (`G` is symmetric, so no transpose is needed.)

use rayon::prelude::*;

use crate::error::{ensure_dims, Error, Result};
use crate::flops::NoFlops;
use crate::problem::RealColumnProblem;

use super::forward::{forward, trace_loss};
use super::{activation_slope, ForwardTrace, UnfoldLayer, UnfoldModel};

/// Gradient with the same shape as the model's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelGradient {
    pub layers: Vec<UnfoldLayer>,
}

impl ModelGradient {
    pub fn zeros_like(model: &UnfoldModel) -> Self {
        ModelGradient {
            layers: vec![UnfoldLayer::zeros(model.dim()); model.layers.len()],
        }
    }

    pub fn add_scaled(&mut self, other: &ModelGradient, scale: f64) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            for (va, vb) in a.vectors_mut().into_iter().zip(b.vectors()) {
                for (x, y) in va.iter_mut().zip(vb) {
                    *x += scale * y;
                }
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for layer in &mut self.layers {
            for v in layer.vectors_mut() {
                v.iter_mut().for_each(|x| *x *= factor);
            }
        }
    }

    pub fn norm(&self) -> f64 {
        self.layers
            .iter()
            .flat_map(|l| l.vectors())
            .flat_map(|v| v.iter())
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
    }

    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.layers
            .iter()
            .flat_map(|l| l.vectors())
            .flat_map(|v| v.iter())
    }
}

/// Gradient of one sample's all-layer loss with respect to every weight and bias.
pub fn backward(trace: &ForwardTrace, model: &UnfoldModel, p: &RealColumnProblem) -> Result<ModelGradient> {
    let layers = model.layers.len();
    let dim = model.dim();
    if trace.outputs.len() != layers || trace.pre.len() != layers || trace.gram_inputs.len() != layers {
        return Err(Error::Consistency(format!(
            "trace has {} layers, model has {layers}",
            trace.outputs.len()
        )));
    }
    if trace.x_init.len() != dim || trace.outputs.iter().any(|x| x.len() != dim) {
        return Err(Error::Consistency(format!(
            "trace vectors are not of length {dim}"
        )));
    }
    ensure_dims(p.dim() == dim, || {
        format!("problem has dimension {}, model {dim}", p.dim())
    })?;

    let x0 = p.x0bar().as_slice();
    let u = p.hbar_t_sbar().as_slice();
    let mut grads = ModelGradient::zeros_like(model);
    let mut carry = vec![0.0; dim];
    let mut gx = vec![0.0; dim];
    let mut upstream = vec![0.0; dim];
    let mut e = vec![0.0; dim];
    let mut w3e = vec![0.0; dim];

    for l in (0..layers).rev() {
        let out = &trace.outputs[l];
        p.gradient_into(out, &mut gx, &mut upstream, &mut NoFlops);
        for i in 0..dim {
            e[i] = (upstream[i] + carry[i]) * activation_slope(trace.pre[l][i]);
        }

        let prev = trace.layer_input(l);
        let g = &mut grads.layers[l];
        for i in 0..dim {
            g.w1[i] = e[i] * x0[i];
            g.b1[i] = e[i];
            g.w2[i] = e[i] * u[i];
            g.b2[i] = e[i];
            g.w3[i] = e[i] * trace.gram_inputs[l][i];
            g.b3[i] = e[i];
            g.w4[i] = e[i] * prev[i];
            g.b4[i] = e[i];
        }

        if l > 0 {
            let layer = &model.layers[l];
            for i in 0..dim {
                w3e[i] = layer.w3[i] * e[i];
            }
            p.terms().gram_mul(&w3e, &mut carry, &mut NoFlops);
            for i in 0..dim {
                carry[i] += layer.w4[i] * e[i];
            }
        }
    }
    Ok(grads)
}

/// Batch-mean loss and gradient, every forward pass starting from zero.
///
/// Samples are processed in parallel and reduced in batch order, so the result
/// does not depend on the thread count.
pub fn loss_and_gradient(model: &UnfoldModel, batch: &[RealColumnProblem]) -> Result<(f64, ModelGradient)> {
    ensure_dims(!batch.is_empty(), || "gradient needs a nonempty batch".into())?;
    let zeros = vec![0.0; model.dim()];
    let per_sample: Vec<Result<(f64, ModelGradient)>> = batch
        .par_iter()
        .map(|p| {
            let trace = forward(model, p, &zeros)?;
            let loss = trace_loss(&trace, p);
            Ok((loss, backward(&trace, model, p)?))
        })
        .collect();
    let mut total = 0.0;
    let mut grad = ModelGradient::zeros_like(model);
    for item in per_sample {
        let (loss, g) = item?;
        total += loss;
        grad.add_scaled(&g, 1.0);
    }
    let inv = 1.0 / batch.len() as f64;
    grad.scale(inv);
    Ok((total * inv, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{decompose_columns, JcasProblem};
    use crate::signal::{chirp_benchmark, sample_channel, sample_qpsk_frame, ChirpVariant};
    use crate::unfold::training_loss;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn batch(seed: u64, rho: f64, m: usize) -> Vec<RealColumnProblem> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = sample_channel(4, 8, &mut rng).unwrap();
        let s = sample_qpsk_frame(4, m, &mut rng).unwrap();
        let x0 = chirp_benchmark(8, m, 1.0, ChirpVariant::Focused { steer_angle: 0.1 }, 0.5).unwrap();
        decompose_columns(&JcasProblem::new(h, s, x0, rho, 1.0).unwrap())
    }

    #[test]
    fn saturated_network_has_zero_gradient() {
        let b = batch(1, 0.5, 8);
        let mut model = UnfoldModel::pgd_init(8, 3, 0.5, 1.0, None).unwrap();
        for layer in &mut model.layers {
            layer.b1.iter_mut().for_each(|v| *v = 50.0);
        }
        let (_, g) = loss_and_gradient(&model, &b).unwrap();
        assert!(g.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn matches_finite_differences_on_one_sample() {
        let b = batch(2, 0.7, 20);
        let p = &b[3];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut model = UnfoldModel::pgd_init(8, 2, 0.7, 1.0, None).unwrap();
        for layer in &mut model.layers {
            for v in layer.vectors_mut() {
                v.iter_mut()
                    .for_each(|x| *x += 0.02 * (rng.random::<f64>() - 0.5));
            }
        }
        let one = std::slice::from_ref(p);
        let (_, g) = loss_and_gradient(&model, one).unwrap();
        let h = 1e-6;
        for l in 0..2 {
            for k in 0..8 {
                for i in [0, 5, 11] {
                    let mut up = model.clone();
                    up.layers[l].vectors_mut()[k][i] += h;
                    let mut dn = model.clone();
                    dn.layers[l].vectors_mut()[k][i] -= h;
                    let fd =
                        (training_loss(&up, one).unwrap() - training_loss(&dn, one).unwrap()) / (2.0 * h);
                    let an = g.layers[l].vectors()[k][i];
                    assert!(
                        (fd - an).abs() <= 1e-6 * fd.abs().max(1.0),
                        "layer {l} vec {k} idx {i}: {fd} vs {an}"
                    );
                }
            }
        }
    }

    #[test]
    fn inconsistent_trace_rejected() {
        let b = batch(4, 0.5, 1);
        let model = UnfoldModel::pgd_init(8, 3, 0.5, 1.0, None).unwrap();
        let shallow = UnfoldModel::pgd_init(8, 2, 0.5, 1.0, None).unwrap();
        let trace = forward(&shallow, &b[0], &[0.0; 16]).unwrap();
        assert!(matches!(
            backward(&trace, &model, &b[0]),
            Err(Error::Consistency(_))
        ));
    }

    #[test]
    fn parallel_reduction_is_deterministic() {
        let b = batch(5, 0.4, 20);
        let model = UnfoldModel::pgd_init(8, 4, 0.4, 1.0, None).unwrap();
        let a = loss_and_gradient(&model, &b).unwrap();
        let c = loss_and_gradient(&model, &b).unwrap();
        assert_eq!(a.0.to_bits(), c.0.to_bits());
        assert_eq!(a.1, c.1);
    }
}
