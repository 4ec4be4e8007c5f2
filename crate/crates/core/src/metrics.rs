//! Multiuser interference, per-user SINR, sum rate and the transmit beam pattern.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{ensure_dims, Error, Result};
use crate::signal::{steering_vector, Channel, SymbolFrame};
use crate::C64;

/// Relative modulus tolerance for a feasible waveform.
pub const MODULUS_TOLERANCE: f64 = 1e-9;

/// Transmit frame `X`, `N x M`.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    entries: DMatrix<C64>,
    p_t: f64,
    hard: bool,
}

impl Waveform {
    /// A feasible frame: every entry must have modulus `sqrt(P_T / N)`.
    pub fn hard(entries: DMatrix<C64>, p_t: f64) -> Result<Self> {
        let w = Waveform {
            entries,
            p_t,
            hard: true,
        };
        if let Some(dev) = w.worst_modulus_deviation().filter(|d| *d > MODULUS_TOLERANCE) {
            return Err(Error::Constraint(format!(
                "entry modulus deviates from sqrt(P_T/N) by {dev:.3e} (relative)"
            )));
        }
        Ok(w)
    }

    /// An intermediate frame with no modulus requirement.
    pub fn soft(entries: DMatrix<C64>, p_t: f64) -> Self {
        Waveform {
            entries,
            p_t,
            hard: false,
        }
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn power(&self) -> f64 {
        self.p_t
    }

    pub fn is_hard(&self) -> bool {
        self.hard
    }

    pub fn antennas(&self) -> usize {
        self.entries.nrows()
    }

    pub fn len(&self) -> usize {
        self.entries.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.ncols() == 0
    }

    /// Largest `| |x| / sqrt(P_T/N) - 1 |` over all entries, `None` for an empty frame.
    pub fn worst_modulus_deviation(&self) -> Option<f64> {
        let amp = (self.p_t / self.antennas() as f64).sqrt();
        self.entries
            .iter()
            .map(|z| (z.norm() / amp - 1.0).abs())
            .reduce(f64::max)
    }
}

/// Transmit power versus angle (linear scale).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BeamPattern {
    pub angles: Vec<f64>,
    pub power: Vec<f64>,
}

/// Metrics of one designed frame.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct EvalReport {
    pub mui_power: f64,
    pub sinr: Vec<f64>,
    pub sum_rate: f64,
    pub beam_mse: f64,
    pub wall_time: f64,
    /// Arithmetic operations spent by the designer, excluding the final projection.
    pub flops: u64,
    pub projection_flops: u64,
    /// Same metrics on the unprojected network output, when there is one.
    pub raw: Option<RawMetrics>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RawMetrics {
    pub mui_power: f64,
    pub sum_rate: f64,
    pub beam_mse: f64,
}

/// Uniform grid of `points` angles from `start` to `stop` radians inclusive.
pub fn angle_grid(start: f64, stop: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let step = (stop - start) / (points - 1) as f64;
            (0..points).map(|i| start + step * i as f64).collect()
        }
    }
}

/// The default evaluation grid: -90 to 90 degrees in half-degree steps (361 points).
pub fn default_angle_grid() -> Vec<f64> {
    angle_grid(-90f64.to_radians(), 90f64.to_radians(), 361)
}

fn check_frame(h: &Channel, x: &Waveform, s: &SymbolFrame) -> Result<()> {
    ensure_dims(h.antennas() == x.antennas(), || {
        format!(
            "channel has {} antennas, waveform has {}",
            h.antennas(),
            x.antennas()
        )
    })?;
    ensure_dims(h.users() == s.users(), || {
        format!("channel has {} users, frame has {}", h.users(), s.users())
    })?;
    ensure_dims(x.len() == s.len(), || {
        format!("waveform has {} columns, frame has {}", x.len(), s.len())
    })
}

/// Per-user interference energy `sum_j |h_i^T x_j - s_ij|^2`.
fn mui_per_user(h: &Channel, x: &Waveform, s: &SymbolFrame) -> Vec<f64> {
    let residual = h.matrix() * x.matrix() - s.matrix();
    residual
        .row_iter()
        .map(|row| row.iter().map(|z| z.norm_sqr()).sum())
        .collect()
}

/// `||H X - S||_F^2`.
pub fn mui_power(h: &Channel, x: &Waveform, s: &SymbolFrame) -> Result<f64> {
    check_frame(h, x, s)?;
    Ok(mui_per_user(h, x, s).into_iter().sum())
}

/// Per-user SINR with the expectations taken as means over the frame's columns.
pub fn per_user_sinr(h: &Channel, x: &Waveform, s: &SymbolFrame, n0: f64) -> Result<Vec<f64>> {
    check_frame(h, x, s)?;
    if !(n0 > 0.0) {
        return Err(Error::Parameter(format!(
            "noise power must be positive, got {n0}"
        )));
    }
    let m = s.len() as f64;
    let mui = mui_per_user(h, x, s);
    Ok(s.matrix()
        .row_iter()
        .zip(mui)
        .map(|(row, interference)| {
            let signal = row.iter().map(|z| z.norm_sqr()).sum::<f64>() / m;
            signal / (interference / m + n0)
        })
        .collect())
}

/// `sum_i log2(1 + sinr_i)` in bits/s/Hz.
pub fn sum_rate(sinr: &[f64]) -> Result<f64> {
    if let Some(g) = sinr.iter().find(|g| !(**g >= 0.0)) {
        return Err(Error::Parameter(format!("SINR must be nonnegative, got {g}")));
    }
    Ok(sinr.iter().map(|g| g.ln_1p() / std::f64::consts::LN_2).sum())
}

/// `P(theta) = a^H(theta) X X^H a(theta) / M` on every grid angle.
pub fn beam_pattern(x: &Waveform, grid: &[f64], delta: f64) -> Result<BeamPattern> {
    if grid.is_empty() {
        return Err(Error::Parameter(
            "beam pattern needs a nonempty angle grid".into(),
        ));
    }
    let n = x.antennas();
    let covariance = x.matrix() * x.matrix().adjoint() / C64::new(x.len() as f64, 0.0);
    let mut power = Vec::with_capacity(grid.len());
    for &theta in grid {
        let a = steering_vector(theta, n, delta).entries;
        let p = (a.adjoint() * &covariance * &a)[(0, 0)];
        let scale = p.re.abs().max(1.0);
        if p.im.abs() > 1e-9 * scale {
            return Err(Error::Numeric(format!(
                "beam power at {theta} rad has imaginary part {:.3e}",
                p.im
            )));
        }
        if p.re < -1e-9 * scale {
            return Err(Error::Numeric(format!(
                "beam power at {theta} rad is negative ({:.3e})",
                p.re
            )));
        }
        power.push(p.re.max(0.0));
    }
    Ok(BeamPattern {
        angles: grid.to_vec(),
        power,
    })
}

/// Mean squared difference between two patterns on the same grid, linear power.
pub fn beam_mse(p: &BeamPattern, p_ref: &BeamPattern) -> Result<f64> {
    ensure_dims(
        p.angles == p_ref.angles && p.power.len() == p_ref.power.len(),
        || {
            format!(
                "beam patterns are on different grids ({} vs {} points)",
                p.angles.len(),
                p_ref.angles.len()
            )
        },
    )?;
    let total: f64 = p
        .power
        .iter()
        .zip(&p_ref.power)
        .map(|(a, b)| (a - b).powi(2))
        .sum();
    Ok(total / p.power.len() as f64)
}

/// Element-wise mean of several patterns sharing one grid.
pub fn mean_pattern(patterns: &[BeamPattern]) -> Result<BeamPattern> {
    let first = patterns
        .first()
        .ok_or_else(|| Error::Parameter("cannot average zero beam patterns".into()))?;
    let mut power = vec![0.0; first.power.len()];
    for p in patterns {
        ensure_dims(p.angles == first.angles, || {
            "beam patterns are on different grids".into()
        })?;
        for (acc, v) in power.iter_mut().zip(&p.power) {
            *acc += v;
        }
    }
    let count = patterns.len() as f64;
    power.iter_mut().for_each(|v| *v /= count);
    Ok(BeamPattern {
        angles: first.angles.clone(),
        power,
    })
}

/// What a designed frame is judged against.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalSettings {
    /// Noise power `N0` in watts.
    pub n0: f64,
    pub grid: Vec<f64>,
    pub delta: f64,
}

impl EvalSettings {
    pub fn new(n0: f64, grid: Vec<f64>, delta: f64) -> Self {
        EvalSettings { n0, grid, delta }
    }
}

/// Interference, SINR, sum rate and beam MSE of `x` against a reference pattern.
/// Timing and FLOP fields are left for the caller.
pub fn evaluate(
    h: &Channel,
    s: &SymbolFrame,
    x: &Waveform,
    reference: &BeamPattern,
    settings: &EvalSettings,
) -> Result<EvalReport> {
    let mui = mui_power(h, x, s)?;
    let sinr = per_user_sinr(h, x, s, settings.n0)?;
    let rate = sum_rate(&sinr)?;
    let pattern = beam_pattern(x, &settings.grid, settings.delta)?;
    Ok(EvalReport {
        mui_power: mui,
        sinr,
        sum_rate: rate,
        beam_mse: beam_mse(&pattern, reference)?,
        ..EvalReport::default()
    })
}
