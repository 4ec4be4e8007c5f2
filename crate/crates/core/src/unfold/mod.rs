//! Deep-unfolded projected gradient descent.
//!
//! Layer `p` maps the previous estimate `x_{p-1}` (length `2N`) to
//!
//! ```text
//! s_p = w1 * x0bar + b1 + w2 * (Hbar^T sbar) + b2 + w3 * (Hbar^T Hbar x_{p-1}) + b3 + w4 * x_{p-1} + b4
//! x_p = psi(s_p)
//! ```
//!
//! where `*` is element-wise, i.e. every weight matrix is diagonal. `psi` is the
//! clipped line `clamp(2t, -1, 1)`. With `w1 = 2 d (1 - rho) c^2`, `w2 = 2 d rho c`,
//! `w3 = -2 d rho c^2`, `w4 = 1 - 2 d (1 - rho) c^2` and zero biases, `s_p` is
//! exactly one gradient step of size `d` on the column objective, which is how
//! the network is initialized.

mod backward;
mod forward;
mod infer;
mod io;
mod train;

pub use backward::{backward, loss_and_gradient, ModelGradient};
pub use forward::{forward, forward_counted, training_loss, ForwardTrace};
pub use infer::{design_waveform, infer_waveform, Design};
pub use io::{decode_model, encode_model, load_model, save_model, FORMAT_VERSION, MAGIC};
pub use train::{held_out_batch, train, train_observed, Adam, SampleSource, TrainConfig, TrainDims};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `psi(t) = -1 + 2 (relu(t + 0.5) - relu(t - 0.5))`, i.e. `clamp(2t, -1, 1)`.
#[inline]
pub fn activation(t: f64) -> f64 {
    (2.0 * t).clamp(-1.0, 1.0)
}

/// Subgradient of [`activation`]; zero at the kinks `|t| = 0.5`.
#[inline]
pub fn activation_slope(t: f64) -> f64 {
    if t.abs() < 0.5 {
        2.0
    } else {
        0.0
    }
}

/// Arithmetic operations of one layer, itemized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlopBreakdown {
    /// `Hbar^T Hbar x`: `2N (4N - 1)`.
    pub matvec: u64,
    /// Four diagonal weight products: `8N`.
    pub multiplications: u64,
    /// Four bias additions: `8N`.
    pub bias_additions: u64,
    /// Summing the four branches: `6N`.
    pub branch_additions: u64,
    /// One clamp-and-scale per entry: `2N`.
    pub activation: u64,
}

impl FlopBreakdown {
    pub fn total(&self) -> u64 {
        self.matvec + self.multiplications + self.bias_additions + self.branch_additions + self.activation
    }
}

pub fn flop_breakdown(n: usize) -> FlopBreakdown {
    let n = n as u64;
    FlopBreakdown {
        matvec: 2 * n * (4 * n - 1),
        multiplications: 8 * n,
        bias_additions: 8 * n,
        branch_additions: 6 * n,
        activation: 2 * n,
    }
}

/// `2N (4N + 11)`.
pub fn flops_per_layer(n: usize) -> u64 {
    let n = n as u64;
    2 * n * (4 * n + 11)
}

/// Diagonal weights and biases of one layer, each of length `2N`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnfoldLayer {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
    pub w3: Vec<f64>,
    pub b3: Vec<f64>,
    pub w4: Vec<f64>,
    pub b4: Vec<f64>,
}

impl UnfoldLayer {
    pub fn zeros(dim: usize) -> Self {
        UnfoldLayer::uniform(dim, [0.0; 4])
    }

    /// Every entry of `w_i` equal to `weights[i]`, zero biases.
    pub fn uniform(dim: usize, weights: [f64; 4]) -> Self {
        UnfoldLayer {
            w1: vec![weights[0]; dim],
            b1: vec![0.0; dim],
            w2: vec![weights[1]; dim],
            b2: vec![0.0; dim],
            w3: vec![weights[2]; dim],
            b3: vec![0.0; dim],
            w4: vec![weights[3]; dim],
            b4: vec![0.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.w1.len()
    }

    /// Parameter vectors in storage order `w1, b1, w2, b2, w3, b3, w4, b4`.
    pub fn vectors(&self) -> [&Vec<f64>; 8] {
        [
            &self.w1, &self.b1, &self.w2, &self.b2, &self.w3, &self.b3, &self.w4, &self.b4,
        ]
    }

    pub fn vectors_mut(&mut self) -> [&mut Vec<f64>; 8] {
        [
            &mut self.w1,
            &mut self.b1,
            &mut self.w2,
            &mut self.b2,
            &mut self.w3,
            &mut self.b3,
            &mut self.w4,
            &mut self.b4,
        ]
    }

    fn is_consistent(&self) -> bool {
        let dim = self.dim();
        self.vectors()
            .iter()
            .all(|v| v.len() == dim && v.iter().all(|x| x.is_finite()))
    }
}

/// How a fresh network is initialized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitScheme {
    /// Each layer starts as one gradient step; `step` defaults to `0.05 N / P_T`.
    Pgd { step: Option<f64> },
    /// The gradient-step weights halved to cancel the activation's slope of 2, so
    /// an unsaturated untrained layer is exactly `x - step * grad f(x)`.
    SlopeMatched { step: Option<f64> },
    /// Gaussian weights with standard deviation `scale`, zero biases.
    Random { scale: f64 },
}

impl Default for InitScheme {
    fn default() -> Self {
        InitScheme::Pgd { step: None }
    }
}

/// Training provenance stored alongside the weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelMeta {
    pub users: usize,
    pub seed: u64,
    pub learning_rate: f64,
    pub decay: f64,
    pub decay_every: u64,
    pub batch_size: u64,
    pub steps: u64,
    /// Loss of the last training batch; NaN when untrained.
    pub final_loss: f64,
    pub init: InitScheme,
}

impl Default for ModelMeta {
    fn default() -> Self {
        ModelMeta {
            users: 0,
            seed: 0,
            learning_rate: 0.0,
            decay: 1.0,
            decay_every: 0,
            batch_size: 0,
            steps: 0,
            final_loss: f64::NAN,
            init: InitScheme::default(),
        }
    }
}

/// An `L`-layer unfolded network for `N` antennas, trained for one weight `rho`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnfoldModel {
    pub layers: Vec<UnfoldLayer>,
    pub n: usize,
    pub rho: f64,
    pub p_t: f64,
    pub meta: ModelMeta,
}

impl UnfoldModel {
    pub fn new(layers: Vec<UnfoldLayer>, n: usize, rho: f64, p_t: f64, meta: ModelMeta) -> Result<Self> {
        let model = UnfoldModel {
            layers,
            n,
            rho,
            p_t,
            meta,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() || self.n == 0 {
            return Err(Error::Dimension(
                "a model needs at least one layer and one antenna".into(),
            ));
        }
        if let Some(p) = self
            .layers
            .iter()
            .position(|l| l.dim() != 2 * self.n || !l.is_consistent())
        {
            return Err(Error::Dimension(format!(
                "layer {p} is not a finite set of eight length-{} vectors",
                2 * self.n
            )));
        }
        if !(0.0..=1.0).contains(&self.rho) || !(self.p_t > 0.0) {
            return Err(Error::Parameter(format!(
                "invalid model rho = {} or P_T = {}",
                self.rho, self.p_t
            )));
        }
        Ok(())
    }

    /// Layers initialized as gradient steps of size `step` (default `0.05 N / P_T`).
    pub fn pgd_init(n: usize, layers: usize, rho: f64, p_t: f64, step: Option<f64>) -> Result<Self> {
        let step = step.unwrap_or(0.05 * n as f64 / p_t);
        let c2 = p_t / n as f64;
        let weights = [
            2.0 * step * (1.0 - rho) * c2,
            2.0 * step * rho * c2.sqrt(),
            -2.0 * step * rho * c2,
            1.0 - 2.0 * step * (1.0 - rho) * c2,
        ];
        let meta = ModelMeta {
            init: InitScheme::Pgd { step: Some(step) },
            ..ModelMeta::default()
        };
        UnfoldModel::new(
            vec![UnfoldLayer::uniform(2 * n, weights); layers],
            n,
            rho,
            p_t,
            meta,
        )
    }

    /// [`UnfoldModel::pgd_init`] with every weight halved.
    pub fn slope_matched_init(
        n: usize,
        layers: usize,
        rho: f64,
        p_t: f64,
        step: Option<f64>,
    ) -> Result<Self> {
        let mut model = UnfoldModel::pgd_init(n, layers, rho, p_t, step)?;
        for layer in &mut model.layers {
            for w in [&mut layer.w1, &mut layer.w2, &mut layer.w3, &mut layer.w4] {
                w.iter_mut().for_each(|v| *v *= 0.5);
            }
        }
        model.meta.init = InitScheme::SlopeMatched {
            step: Some(step.unwrap_or(0.05 * n as f64 / p_t)),
        };
        Ok(model)
    }

    pub fn random_init<R: Rng + ?Sized>(
        n: usize,
        layers: usize,
        rho: f64,
        p_t: f64,
        scale: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let dim = 2 * n;
        let mut out = Vec::with_capacity(layers);
        for _ in 0..layers {
            let mut layer = UnfoldLayer::zeros(dim);
            for w in [&mut layer.w1, &mut layer.w2, &mut layer.w3, &mut layer.w4] {
                for v in w.iter_mut() {
                    *v = scale * rng.sample::<f64, _>(StandardNormal);
                }
            }
            out.push(layer);
        }
        let meta = ModelMeta {
            init: InitScheme::Random { scale },
            ..ModelMeta::default()
        };
        UnfoldModel::new(out, n, rho, p_t, meta)
    }

    pub fn init(n: usize, layers: usize, rho: f64, p_t: f64, scheme: InitScheme, seed: u64) -> Result<Self> {
        match scheme {
            InitScheme::Pgd { step } => UnfoldModel::pgd_init(n, layers, rho, p_t, step),
            InitScheme::SlopeMatched { step } => UnfoldModel::slope_matched_init(n, layers, rho, p_t, step),
            InitScheme::Random { scale } => {
                use rand::SeedableRng;
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
                UnfoldModel::random_init(n, layers, rho, p_t, scale, &mut rng)
            }
        }
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn dim(&self) -> usize {
        2 * self.n
    }

    /// Network operations for one column, excluding the final projection.
    pub fn flops_per_column(&self) -> u64 {
        flops_per_layer(self.n) * self.layers.len() as u64
    }

    pub fn num_parameters(&self) -> usize {
        self.layers.len() * 8 * self.dim()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn relu(t: f64) -> f64 {
        t.max(0.0)
    }

    #[test]
    fn activation_cases() {
        assert_eq!(activation(0.0), 0.0);
        assert_eq!(activation(0.25), 0.5);
        assert_eq!(activation(-0.25), -0.5);
        assert_eq!(activation(7.0), 1.0);
        assert_eq!(activation(-7.0), -1.0);
        assert_eq!(activation_slope(0.5), 0.0);
        assert_eq!(activation_slope(0.49), 2.0);
    }

    proptest! {
        #[test]
        fn activation_matches_relu_form(t in -3.0f64..3.0) {
            let relu_form = -1.0 + 2.0 * (relu(t + 0.5) - relu(t - 0.5));
            prop_assert!((activation(t) - relu_form).abs() < 1e-15);
            prop_assert!(activation(t).abs() <= 1.0);
        }
    }

    #[test]
    fn flop_counts() {
        assert_eq!(flops_per_layer(8), 688);
        assert_eq!(flops_per_layer(1), 30);
        assert_eq!(flops_per_layer(8) * 10, 6880);
        for n in 1..20 {
            assert_eq!(flop_breakdown(n).total(), flops_per_layer(n));
        }
    }

    #[test]
    fn pgd_init_weights() {
        let m = UnfoldModel::pgd_init(8, 3, 0.0, 1.0, None).unwrap();
        assert!((m.layers[0].w1[0] - 0.1).abs() < 1e-15);
        assert!((m.layers[2].w4[5] - 0.9).abs() < 1e-15);
        assert_eq!(m.layers[1].w3[0], 0.0);
        assert_eq!(m.num_parameters(), 3 * 8 * 16);
    }

    #[test]
    fn validation() {
        let mut m = UnfoldModel::pgd_init(2, 2, 0.5, 1.0, None).unwrap();
        m.layers[1].b3.push(0.0);
        assert!(m.validate().is_err());
        assert!(UnfoldModel::pgd_init(2, 0, 0.5, 1.0, None).is_err());
        assert!(UnfoldModel::pgd_init(2, 1, 1.5, 1.0, None).is_err());
    }
}
