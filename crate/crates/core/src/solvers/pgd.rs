use nalgebra::DVector;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_dims, Error, Result};
use crate::flops::{FlopCounter, FlopTally, PROJECTION_FLOPS_PER_ENTRY};
use crate::problem::{project_cm_in_place, RealColumnProblem};

/// Window over which the best objective must improve by at least `tol`.
const PATIENCE: usize = 20;

/// Projected gradient descent settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PgdConfig {
    /// Fixed step size. `None` uses `step_scale / Lip`, where `Lip` is the
    /// Lipschitz constant of the gradient on the instance being solved.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step_size: Option<f64>,
    pub step_scale: f64,
    pub max_iters: usize,
    /// Stop once the best objective improves by less than this over 20 iterations;
    /// zero disables early stopping.
    pub tol: f64,
    /// Number of starts: the benchmark column first, then random phases.
    pub starts: usize,
    /// Seed for the random restarts; experiment drivers set it per channel.
    #[serde(skip)]
    pub seed: u64,
}

impl Default for PgdConfig {
    fn default() -> Self {
        PgdConfig {
            step_size: None,
            step_scale: 1.0,
            max_iters: 500,
            tol: 1e-8,
            starts: 1,
            seed: 0,
        }
    }
}

impl PgdConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(step) = self.step_size {
            if !(step > 0.0) {
                return Err(Error::Parameter(format!(
                    "step size must be positive, got {step}"
                )));
            }
        }
        if !(self.step_scale > 0.0) {
            return Err(Error::Parameter(format!(
                "step scale must be positive, got {}",
                self.step_scale
            )));
        }
        if self.max_iters < 1 || self.starts < 1 {
            return Err(Error::Parameter("max_iters and starts must be at least 1".into()));
        }
        if !(self.tol >= 0.0) {
            return Err(Error::Parameter(format!(
                "tol must be nonnegative, got {}",
                self.tol
            )));
        }
        Ok(())
    }

    /// Step used on `p`.
    pub fn step_for(&self, p: &RealColumnProblem) -> f64 {
        self.step_size.unwrap_or_else(|| {
            let c2 = p.power() / p.antennas() as f64;
            let lipschitz = 2.0 * p.rho() * c2 * p.terms().lambda_max() + 2.0 * (1.0 - p.rho()) * c2;
            if lipschitz > 0.0 {
                self.step_scale / lipschitz
            } else {
                self.step_scale
            }
        })
    }
}

/// Result of one or more PGD runs on a column.
#[derive(Debug, Clone)]
pub struct PgdOutcome {
    /// Best feasible iterate found.
    pub xbar: DVector<f64>,
    pub objective: f64,
    /// Objective of each projected iterate of the winning run.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub flops: u64,
}

impl PgdOutcome {
    /// Running minimum of [`Self::trace`].
    pub fn best_trace(&self) -> Vec<f64> {
        self.trace
            .iter()
            .scan(f64::INFINITY, |best, v| {
                *best = best.min(*v);
                Some(*best)
            })
            .collect()
    }
}

/// Runs `x <- proj(x - step * grad f(x))` from `x_init` (projected first).
pub fn pgd_solve(p: &RealColumnProblem, cfg: &PgdConfig, x_init: &[f64]) -> Result<PgdOutcome> {
    cfg.validate()?;
    ensure_dims(x_init.len() == p.dim(), || {
        format!("initial point has length {}, expected {}", x_init.len(), p.dim())
    })?;
    let mut flops = FlopTally::default();
    let step = cfg.step_for(p);
    let dim = p.dim();

    let mut x = x_init.to_vec();
    project_cm_in_place(&mut x, &mut flops);
    let mut gx = vec![0.0; dim];
    let mut grad = vec![0.0; dim];
    let mut best_x = x.clone();
    let mut best = f64::INFINITY;
    let mut best_history = Vec::with_capacity(cfg.max_iters + 1);
    let mut trace = Vec::with_capacity(cfg.max_iters + 1);

    for it in 0..=cfg.max_iters {
        p.terms().gram_mul(&x, &mut gx, &mut flops);
        let f = p.objective_from_gram(&x, &gx);
        flops.add(8 * dim as u64);
        trace.push(f);
        if f < best {
            best = f;
            best_x.copy_from_slice(&x);
        }
        best_history.push(best);
        if it == cfg.max_iters {
            break;
        }
        if it >= PATIENCE && best_history[it - PATIENCE] - best < cfg.tol {
            break;
        }
        p.gradient_from_gram(&x, &gx, &mut grad, &mut flops);
        for (xi, gi) in x.iter_mut().zip(&grad) {
            *xi -= step * gi;
        }
        flops.add(2 * dim as u64);
        project_cm_in_place(&mut x, &mut flops);
    }

    let objective = p.objective_unchecked(&best_x);
    Ok(PgdOutcome {
        xbar: DVector::from_vec(best_x),
        objective,
        iterations: trace.len() - 1,
        trace,
        flops: flops.0,
    })
}

/// Uniformly random unit-modulus point in stacked real form.
pub fn random_unit_start<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DVector<f64> {
    let phases: Vec<f64> = (0..n)
        .map(|_| rng.random::<f64>() * std::f64::consts::TAU)
        .collect();
    DVector::from_fn(2 * n, |i, _| {
        if i < n {
            phases[i].cos()
        } else {
            phases[i - n].sin()
        }
    })
}

/// Best of `cfg.starts` runs: the benchmark column first, then random phases from `rng`.
pub fn pgd_multistart<R: Rng + ?Sized>(
    p: &RealColumnProblem,
    cfg: &PgdConfig,
    rng: &mut R,
) -> Result<PgdOutcome> {
    cfg.validate()?;
    let mut best = pgd_solve(p, cfg, p.x0bar().as_slice())?;
    let mut total_flops = best.flops;
    for _ in 1..cfg.starts {
        let start = random_unit_start(p.antennas(), rng);
        total_flops += PROJECTION_FLOPS_PER_ENTRY * p.antennas() as u64;
        let run = pgd_solve(p, cfg, start.as_slice())?;
        total_flops += run.flops;
        if run.objective < best.objective {
            best = run;
        }
    }
    best.flops = total_flops;
    Ok(best)
}
