//! Channels, symbol frames, the radar benchmark waveform, steering vectors and
//! the complex-to-real expansion used by the solvers.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_dims, Error, Result};
use crate::C64;

/// Flat-fading downlink channel, `K` users by `N` antennas.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel(DMatrix<C64>);

impl Channel {
    pub fn new(entries: DMatrix<C64>) -> Result<Self> {
        ensure_dims(entries.nrows() >= 1 && entries.ncols() >= 1, || {
            format!(
                "channel must be at least 1x1, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )
        })?;
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Parameter("channel has non-finite entries".into()));
        }
        Ok(Channel(entries))
    }

    pub fn users(&self) -> usize {
        self.0.nrows()
    }

    pub fn antennas(&self) -> usize {
        self.0.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.0
    }
}

/// Desired unit-power symbols, `K x M`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolFrame(DMatrix<C64>);

impl SymbolFrame {
    /// Wraps a symbol matrix; every entry must have unit modulus.
    pub fn new(entries: DMatrix<C64>) -> Result<Self> {
        ensure_dims(entries.nrows() >= 1 && entries.ncols() >= 1, || {
            "symbol frame must be nonempty".to_string()
        })?;
        if let Some(z) = entries.iter().find(|z| (z.norm() - 1.0).abs() > 1e-12) {
            return Err(Error::Parameter(format!("symbol {z} is not unit modulus")));
        }
        Ok(SymbolFrame(entries))
    }

    pub fn users(&self) -> usize {
        self.0.nrows()
    }

    pub fn len(&self) -> usize {
        self.0.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.0.ncols() == 0
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.0
    }
}

/// How the radar benchmark frame is built.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChirpVariant {
    /// Row `a`, column `c`: `exp(j 2 pi a c / M) exp(j pi c^2 / M)`. Rows are
    /// mutually orthogonal, so the beam pattern is flat.
    Orthogonal,
    /// The orthogonal chirp with row `a` rotated by `exp(j 2 pi a delta sin(steer))`.
    /// Row orthogonality (and hence the flat pattern) is preserved.
    Directional { steer_angle: f64 },
    /// Every antenna sends the same chirp, phased toward `steer_angle`. Rank one,
    /// with a main lobe of height `N P_T` in the steered direction.
    Focused { steer_angle: f64 },
}

impl ChirpVariant {
    pub fn steer_angle(&self) -> f64 {
        match *self {
            ChirpVariant::Orthogonal => 0.0,
            ChirpVariant::Directional { steer_angle } | ChirpVariant::Focused { steer_angle } => steer_angle,
        }
    }
}

/// Constant-modulus radar reference frame `X0`, `N x M`.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkWaveform {
    entries: DMatrix<C64>,
    variant: ChirpVariant,
    p_t: f64,
}

impl BenchmarkWaveform {
    /// Wraps an arbitrary reference frame after checking the modulus of every entry.
    pub fn from_entries(entries: DMatrix<C64>, p_t: f64, variant: ChirpVariant) -> Result<Self> {
        if !(p_t > 0.0) {
            return Err(Error::Parameter(format!(
                "total power must be positive, got {p_t}"
            )));
        }
        let amp = (p_t / entries.nrows() as f64).sqrt();
        if let Some(z) = entries.iter().find(|z| ((z.norm() - amp) / amp).abs() > 1e-12) {
            return Err(Error::Constraint(format!(
                "benchmark entry {z} does not have modulus {amp}"
            )));
        }
        Ok(BenchmarkWaveform {
            entries,
            variant,
            p_t,
        })
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn variant(&self) -> ChirpVariant {
        self.variant
    }

    pub fn steer_angle(&self) -> f64 {
        self.variant.steer_angle()
    }

    pub fn power(&self) -> f64 {
        self.p_t
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
}

/// ULA steering vector `a(theta)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringVector {
    pub angle: f64,
    pub delta: f64,
    pub entries: DVector<C64>,
}

/// Real/imaginary stacking of one column problem.
#[derive(Debug, Clone, PartialEq)]
pub struct RealExpansion {
    /// `[[Re H, -Im H], [Im H, Re H]]`, `2K x 2N`.
    pub hbar: DMatrix<f64>,
    pub sbar: DVector<f64>,
    pub x0bar: DVector<f64>,
}

/// Draws a channel with i.i.d. unit-variance circularly symmetric Gaussian entries.
pub fn sample_channel<R: Rng + ?Sized>(k: usize, n: usize, rng: &mut R) -> Result<Channel> {
    ensure_dims(k >= 1 && n >= 1, || {
        format!("channel needs k, n >= 1, got k={k}, n={n}")
    })?;
    // Filled row by row so a given seed produces the same matrix regardless of storage order.
    let mut h = DMatrix::zeros(k, n);
    for i in 0..k {
        for j in 0..n {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            h[(i, j)] = C64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2);
        }
    }
    Channel::new(h)
}

/// Draws `K x M` symbols uniformly from the unit-power QPSK alphabet.
pub fn sample_qpsk_frame<R: Rng + ?Sized>(k: usize, m: usize, rng: &mut R) -> Result<SymbolFrame> {
    ensure_dims(k >= 1 && m >= 1, || {
        format!("frame needs k, m >= 1, got k={k}, m={m}")
    })?;
    let mut s = DMatrix::zeros(k, m);
    for i in 0..k {
        for j in 0..m {
            s[(i, j)] = qpsk_symbol(rng);
        }
    }
    Ok(SymbolFrame(s))
}

pub(crate) fn qpsk_symbol<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re = if rng.random::<bool>() {
        FRAC_1_SQRT_2
    } else {
        -FRAC_1_SQRT_2
    };
    let im = if rng.random::<bool>() {
        FRAC_1_SQRT_2
    } else {
        -FRAC_1_SQRT_2
    };
    C64::new(re, im)
}

/// Builds the LFM chirp benchmark frame.
pub fn chirp_benchmark(
    n: usize,
    m: usize,
    p_t: f64,
    variant: ChirpVariant,
    delta: f64,
) -> Result<BenchmarkWaveform> {
    ensure_dims(n >= 1 && m >= 1, || {
        format!("benchmark needs n, m >= 1, got n={n}, m={m}")
    })?;
    if !(p_t > 0.0) {
        return Err(Error::Parameter(format!(
            "total power must be positive, got {p_t}"
        )));
    }
    let mf = m as f64;
    let amp = (p_t / n as f64).sqrt();
    let entries = match variant {
        ChirpVariant::Orthogonal | ChirpVariant::Directional { .. } => {
            if m < n {
                return Err(Error::Configuration(format!(
                    "orthogonal chirp needs frame length m >= n antennas (m={m}, n={n})"
                )));
            }
            let steer = variant.steer_angle().sin();
            DMatrix::from_fn(n, m, |a, c| {
                // Integer products are reduced before scaling so long frames keep full precision.
                let linear = ((a * c) % m) as f64 / mf;
                let quad = ((c * c) % (2 * m)) as f64 / mf;
                let phase = 2.0 * PI * linear + PI * quad + 2.0 * PI * a as f64 * delta * steer;
                C64::from_polar(amp, phase)
            })
        }
        ChirpVariant::Focused { steer_angle } => {
            let steer = steer_angle.sin();
            DMatrix::from_fn(n, m, |a, c| {
                let quad = ((c * c) % (2 * m)) as f64 / mf;
                C64::from_polar(amp, PI * quad + 2.0 * PI * a as f64 * delta * steer)
            })
        }
    };
    Ok(BenchmarkWaveform {
        entries,
        variant,
        p_t,
    })
}

/// `a(theta)[n] = exp(j 2 pi n delta sin(theta))`.
pub fn steering_vector(angle: f64, n: usize, delta: f64) -> SteeringVector {
    let step = 2.0 * PI * delta * angle.sin();
    let entries = DVector::from_fn(n, |i, _| {
        if i == 0 {
            C64::new(1.0, 0.0)
        } else {
            C64::from_polar(1.0, step * i as f64)
        }
    });
    SteeringVector {
        angle,
        delta,
        entries,
    }
}

/// Stacks a complex vector as `[Re; Im]`.
pub fn expand_vector(v: &DVector<C64>) -> DVector<f64> {
    let n = v.len();
    DVector::from_fn(2 * n, |i, _| if i < n { v[i].re } else { v[i - n].im })
}

/// Real block form `[[Re A, -Im A], [Im A, Re A]]` of a complex matrix.
pub fn expand_matrix(a: &DMatrix<C64>) -> DMatrix<f64> {
    let (r, c) = a.shape();
    DMatrix::from_fn(2 * r, 2 * c, |i, j| {
        let z = a[(i % r, j % c)];
        match (i < r, j < c) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    })
}

/// Expands one column problem `(H, s, x0)` to real form.
pub fn expand_real(h: &Channel, s_col: &DVector<C64>, x0_col: &DVector<C64>) -> Result<RealExpansion> {
    ensure_dims(s_col.len() == h.users(), || {
        format!(
            "symbol column has length {}, channel has {} users",
            s_col.len(),
            h.users()
        )
    })?;
    ensure_dims(x0_col.len() == h.antennas(), || {
        format!(
            "benchmark column has length {}, channel has {} antennas",
            x0_col.len(),
            h.antennas()
        )
    })?;
    Ok(RealExpansion {
        hbar: expand_matrix(h.matrix()),
        sbar: expand_vector(s_col),
        x0bar: expand_vector(x0_col),
    })
}

/// Inverse of [`expand_vector`]: entry `n` is `xbar[n] + j xbar[n + N]`.
pub fn collapse_complex(xbar: &[f64]) -> Result<DVector<C64>> {
    ensure_dims(xbar.len().is_multiple_of(2), || {
        format!("real vector length {} is odd", xbar.len())
    })?;
    let n = xbar.len() / 2;
    Ok(DVector::from_fn(n, |i, _| C64::new(xbar[i], xbar[i + n])))
}

/// Inverse of [`expand_matrix`]; fails unless the block structure holds exactly.
pub fn collapse_matrix(hbar: &DMatrix<f64>) -> Result<DMatrix<C64>> {
    let (r2, c2) = hbar.shape();
    ensure_dims(r2 % 2 == 0 && c2 % 2 == 0, || {
        format!("{r2}x{c2} is not a 2x2 block matrix")
    })?;
    let (r, c) = (r2 / 2, c2 / 2);
    for i in 0..r {
        for j in 0..c {
            if hbar[(i, j)] != hbar[(i + r, j + c)] || hbar[(i, j + c)] != -hbar[(i + r, j)] {
                return Err(Error::Consistency(format!(
                    "block ({i},{j}) does not have the complex-expansion structure"
                )));
            }
        }
    }
    Ok(DMatrix::from_fn(r, c, |i, j| {
        C64::new(hbar[(i, j)], hbar[(i + r, j)])
    }))
}
