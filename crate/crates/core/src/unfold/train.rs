//! Unsupervised training with Adam.
//!
//! One sample is one column problem: a fresh channel, one QPSK column and one
//! column of the benchmark chirp. No labels are involved; the loss is the design
//! objective summed over every layer output.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::RealColumnProblem;
use crate::signal::{chirp_benchmark, qpsk_symbol, sample_channel, BenchmarkWaveform, ChirpVariant};
use crate::C64;

use super::backward::{loss_and_gradient, ModelGradient};
use super::{InitScheme, UnfoldModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    /// Multiplies the learning rate every `decay_every` steps.
    pub decay: f64,
    pub decay_every: u64,
    pub batch_size: usize,
    pub steps: usize,
    pub seed: u64,
    /// Global gradient-norm clip; zero disables clipping.
    pub clip_norm: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub init: InitScheme,
}

/// A faster schedule than [`TrainConfig::conservative`] with the slope-matched init;
/// it converges in a few thousand steps, including the sensing-only case.
impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-2,
            decay: 0.9,
            decay_every: 100,
            batch_size: 100,
            steps: 3000,
            seed: 0,
            clip_norm: 10.0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            init: InitScheme::SlopeMatched { step: None },
        }
    }
}

impl TrainConfig {
    /// Learning rate 1e-4 decayed by 0.97, starting from the plain gradient-step init.
    pub fn conservative() -> Self {
        TrainConfig {
            learning_rate: 1e-4,
            decay: 0.97,
            init: InitScheme::Pgd { step: None },
            ..TrainConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Parameter(format!("invalid training config: {what}")));
        if !(self.learning_rate > 0.0) {
            return bad("learning_rate must be positive");
        }
        if !(self.decay > 0.0 && self.decay <= 1.0) {
            return bad("decay must lie in (0, 1]");
        }
        if self.batch_size < 1 {
            return bad("batch_size must be at least 1");
        }
        if self.decay_every < 1 {
            return bad("decay_every must be at least 1");
        }
        if !(self.clip_norm >= 0.0) {
            return bad("clip_norm must be nonnegative");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) || !(self.epsilon > 0.0) {
            return bad("Adam moments need beta in [0, 1) and epsilon > 0");
        }
        Ok(())
    }

    /// Learning rate in effect at `step` (zero-based).
    pub fn learning_rate_at(&self, step: usize) -> f64 {
        self.learning_rate * self.decay.powi((step as u64 / self.decay_every) as i32)
    }
}

/// Problem sizes the network is trained for.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainDims {
    pub n: usize,
    pub k: usize,
    /// Frame length of the benchmark whose columns are sampled.
    pub m: usize,
    pub layers: usize,
    pub p_t: f64,
    pub chirp: ChirpVariant,
    pub delta: f64,
}

/// Draws i.i.d. column problems.
#[derive(Debug, Clone)]
pub struct SampleSource {
    dims: TrainDims,
    x0: BenchmarkWaveform,
}

impl SampleSource {
    pub fn new(dims: TrainDims) -> Result<Self> {
        let x0 = chirp_benchmark(dims.n, dims.m, dims.p_t, dims.chirp, dims.delta)?;
        Ok(SampleSource { dims, x0 })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rho: f64, rng: &mut R) -> Result<RealColumnProblem> {
        let h = sample_channel(self.dims.k, self.dims.n, rng)?;
        let s = nalgebra::DVector::<C64>::from_fn(self.dims.k, |_, _| qpsk_symbol(rng));
        let col = rng.random_range(0..self.dims.m);
        let x0 = self.x0.matrix().column(col).into_owned();
        RealColumnProblem::from_complex(&h, &s, &x0, rho, self.dims.p_t)
    }

    pub fn batch<R: Rng + ?Sized>(
        &self,
        rho: f64,
        size: usize,
        rng: &mut R,
    ) -> Result<Vec<RealColumnProblem>> {
        (0..size).map(|_| self.sample(rho, rng)).collect()
    }
}

/// A fixed evaluation batch, independent of any training stream.
pub fn held_out_batch(dims: TrainDims, rho: f64, count: usize, seed: u64) -> Result<Vec<RealColumnProblem>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0x4845_4c44);
    SampleSource::new(dims)?.batch(rho, count, &mut rng)
}

/// Adam with bias-corrected moments over the flattened parameter vector.
#[derive(Debug, Clone)]
pub struct Adam {
    beta1: f64,
    beta2: f64,
    epsilon: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(num_params: usize, beta1: f64, beta2: f64, epsilon: f64) -> Self {
        Adam {
            beta1,
            beta2,
            epsilon,
            m: vec![0.0; num_params],
            v: vec![0.0; num_params],
            t: 0,
        }
    }

    pub fn step(&mut self, model: &mut UnfoldModel, grad: &ModelGradient, lr: f64) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        let params = model
            .layers
            .iter_mut()
            .flat_map(|l| l.vectors_mut())
            .flat_map(|v| v.iter_mut());
        for (((w, g), m), v) in params.zip(grad.iter()).zip(&mut self.m).zip(&mut self.v) {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *w -= lr * m_hat / (v_hat.sqrt() + self.epsilon);
        }
    }
}

/// Trains a network for weight `rho`.
pub fn train(cfg: &TrainConfig, rho: f64, dims: TrainDims) -> Result<UnfoldModel> {
    train_observed(cfg, rho, dims, &mut |_, _, _| {})
}

/// [`train`], calling `observer(step, batch_loss, model)` after every update.
pub fn train_observed(
    cfg: &TrainConfig,
    rho: f64,
    dims: TrainDims,
    observer: &mut dyn FnMut(usize, f64, &UnfoldModel),
) -> Result<UnfoldModel> {
    cfg.validate()?;
    let source = SampleSource::new(dims)?;
    let mut model = UnfoldModel::init(dims.n, dims.layers, rho, dims.p_t, cfg.init, cfg.seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut adam = Adam::new(model.num_parameters(), cfg.beta1, cfg.beta2, cfg.epsilon);
    let mut last_loss = f64::NAN;

    for step in 0..cfg.steps {
        let batch = source.batch(rho, cfg.batch_size, &mut rng)?;
        let (loss, mut grad) = loss_and_gradient(&model, &batch)?;
        let norm = grad.norm();
        if !loss.is_finite() || !norm.is_finite() {
            return Err(Error::Training { step, loss });
        }
        if cfg.clip_norm > 0.0 && norm > cfg.clip_norm {
            grad.scale(cfg.clip_norm / norm);
        }
        adam.step(&mut model, &grad, cfg.learning_rate_at(step));
        if model
            .layers
            .iter()
            .flat_map(|l| l.vectors())
            .flatten()
            .any(|w| !w.is_finite())
        {
            return Err(Error::Training { step, loss: f64::NAN });
        }
        last_loss = loss;
        observer(step, loss, &model);
    }

    model.meta.users = dims.k;
    model.meta.seed = cfg.seed;
    model.meta.learning_rate = cfg.learning_rate;
    model.meta.decay = cfg.decay;
    model.meta.decay_every = cfg.decay_every;
    model.meta.batch_size = cfg.batch_size as u64;
    model.meta.steps = cfg.steps as u64;
    model.meta.final_loss = last_loss;
    Ok(model)
}
