//! The weighted design problem, its per-column real-valued form, the objective,
//! its gradient and the constant-modulus projection.
//!
//! For one column the normalized variable `x` (unit-modulus complex entries) is
//! stacked as `xbar = [Re x; Im x]` and the objective reads
//!
//! ```text
//! f(xbar) = rho * || c Hbar xbar - sbar ||^2 + (1 - rho) * c^2 || xbar - x0bar ||^2,   c = sqrt(P_T / N)
//! ```

use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, DVector};

use crate::error::{ensure_dims, Error, Result};
use crate::flops::{FlopCounter, NoFlops, PROJECTION_FLOPS_PER_ENTRY};
use crate::metrics::Waveform;
use crate::signal::{
    collapse_complex, expand_matrix, expand_vector, BenchmarkWaveform, Channel, SymbolFrame,
};
use crate::C64;

/// Entries with modulus below this project to `1 + 0j`.
pub const PROJECTION_ZERO_THRESHOLD: f64 = 1e-12;

/// One frame-design instance.
#[derive(Debug, Clone)]
pub struct JcasProblem {
    pub h: Channel,
    pub s: SymbolFrame,
    pub x0: BenchmarkWaveform,
    pub rho: f64,
    pub p_t: f64,
}

impl JcasProblem {
    pub fn new(h: Channel, s: SymbolFrame, x0: BenchmarkWaveform, rho: f64, p_t: f64) -> Result<Self> {
        check_weight(rho)?;
        if !(p_t > 0.0) {
            return Err(Error::Parameter(format!(
                "total power must be positive, got {p_t}"
            )));
        }
        ensure_dims(h.users() == s.users(), || {
            format!("channel has {} users, symbol frame has {}", h.users(), s.users())
        })?;
        ensure_dims(h.antennas() == x0.antennas(), || {
            format!(
                "channel has {} antennas, benchmark has {}",
                h.antennas(),
                x0.antennas()
            )
        })?;
        ensure_dims(s.len() == x0.len(), || {
            format!("symbol frame has {} columns, benchmark has {}", s.len(), x0.len())
        })?;
        if (x0.power() - p_t).abs() > 1e-12 * p_t {
            return Err(Error::Parameter(format!(
                "benchmark was built for P_T = {}, problem uses {p_t}",
                x0.power()
            )));
        }
        Ok(JcasProblem { h, s, x0, rho, p_t })
    }

    pub fn antennas(&self) -> usize {
        self.h.antennas()
    }

    pub fn users(&self) -> usize {
        self.h.users()
    }

    pub fn frame_len(&self) -> usize {
        self.s.len()
    }

    /// `rho ||H X - S||_F^2 + (1 - rho) ||X - X0||_F^2` for an unnormalized frame.
    pub fn frame_objective(&self, x: &DMatrix<C64>) -> Result<f64> {
        ensure_dims(x.shape() == self.x0.matrix().shape(), || {
            format!(
                "frame is {:?}, expected {:?}",
                x.shape(),
                self.x0.matrix().shape()
            )
        })?;
        let mui = (self.h.matrix() * x - self.s.matrix()).norm_squared();
        let dist = (x - self.x0.matrix()).norm_squared();
        Ok(self.rho * mui + (1.0 - self.rho) * dist)
    }
}

fn check_weight(rho: f64) -> Result<()> {
    if (0.0..=1.0).contains(&rho) {
        Ok(())
    } else {
        Err(Error::Parameter(format!(
            "weight rho must lie in [0, 1], got {rho}"
        )))
    }
}

/// Per-channel quantities shared by every column and every layer.
#[derive(Debug)]
pub struct ChannelTerms {
    hbar: DMatrix<f64>,
    gram: DMatrix<f64>,
    lambda_max: OnceLock<f64>,
}

impl ChannelTerms {
    pub fn new(hbar: DMatrix<f64>) -> Result<Self> {
        ensure_dims(
            hbar.nrows().is_multiple_of(2) && hbar.ncols().is_multiple_of(2) && hbar.ncols() > 0,
            || format!("expanded channel must be 2K x 2N, got {:?}", hbar.shape()),
        )?;
        let gram = hbar.tr_mul(&hbar);
        Ok(ChannelTerms {
            hbar,
            gram,
            lambda_max: OnceLock::new(),
        })
    }

    pub fn from_channel(h: &Channel) -> Self {
        ChannelTerms::new(expand_matrix(h.matrix())).expect("expanded channel has even shape")
    }

    pub fn hbar(&self) -> &DMatrix<f64> {
        &self.hbar
    }

    /// `Hbar^T Hbar`, symmetric positive semidefinite.
    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    /// Largest eigenvalue of `Hbar^T Hbar`.
    pub fn lambda_max(&self) -> f64 {
        *self.lambda_max.get_or_init(|| {
            self.gram
                .clone()
                .symmetric_eigenvalues()
                .iter()
                .copied()
                .fold(0.0, f64::max)
        })
    }

    /// `out = Hbar^T Hbar x`, counted as `2N (4N - 1)` operations.
    #[inline]
    pub fn gram_mul<F: FlopCounter>(&self, x: &[f64], out: &mut [f64], flops: &mut F) {
        let dim = x.len();
        // Symmetric, so column i doubles as row i and stays contiguous.
        for (i, o) in out.iter_mut().enumerate() {
            let col = self.gram.column(i);
            let col = col.as_slice();
            let mut acc = col[0] * x[0];
            for j in 1..dim {
                acc += col[j] * x[j];
            }
            *o = acc;
            flops.add((2 * dim - 1) as u64);
        }
    }
}

/// The normalized, real-valued problem for one column of the frame.
#[derive(Debug, Clone)]
pub struct RealColumnProblem {
    terms: Arc<ChannelTerms>,
    sbar: DVector<f64>,
    x0bar: DVector<f64>,
    hts: DVector<f64>,
    sbar_norm_sq: f64,
    rho: f64,
    p_t: f64,
    n: usize,
}

impl RealColumnProblem {
    /// `x0bar` is the stacked benchmark column divided by `sqrt(P_T / N)`.
    pub fn new(
        terms: Arc<ChannelTerms>,
        sbar: DVector<f64>,
        x0bar: DVector<f64>,
        rho: f64,
        p_t: f64,
    ) -> Result<Self> {
        check_weight(rho)?;
        if !(p_t > 0.0) {
            return Err(Error::Parameter(format!(
                "total power must be positive, got {p_t}"
            )));
        }
        let (rows, cols) = terms.hbar.shape();
        ensure_dims(sbar.len() == rows, || {
            format!("sbar has length {}, expected {rows}", sbar.len())
        })?;
        ensure_dims(x0bar.len() == cols, || {
            format!("x0bar has length {}, expected {cols}", x0bar.len())
        })?;
        let x0 = collapse_complex(x0bar.as_slice())?;
        if let Some(z) = x0.iter().find(|z| (z.norm() - 1.0).abs() > 1e-9) {
            return Err(Error::Constraint(format!(
                "normalized benchmark entry {z} is not unit modulus"
            )));
        }
        let hts = terms.hbar.tr_mul(&sbar);
        let sbar_norm_sq = sbar.norm_squared();
        Ok(RealColumnProblem {
            terms,
            sbar,
            x0bar,
            hts,
            sbar_norm_sq,
            rho,
            p_t,
            n: cols / 2,
        })
    }

    /// Builds the column problem straight from complex data.
    pub fn from_complex(
        h: &Channel,
        s_col: &DVector<C64>,
        x0_col: &DVector<C64>,
        rho: f64,
        p_t: f64,
    ) -> Result<Self> {
        let e = crate::signal::expand_real(h, s_col, x0_col)?;
        let scale = (p_t / h.antennas() as f64).sqrt();
        RealColumnProblem::new(
            Arc::new(ChannelTerms::new(e.hbar)?),
            e.sbar,
            e.x0bar / scale,
            rho,
            p_t,
        )
    }

    pub fn terms(&self) -> &Arc<ChannelTerms> {
        &self.terms
    }

    pub fn hbar(&self) -> &DMatrix<f64> {
        &self.terms.hbar
    }

    pub fn sbar(&self) -> &DVector<f64> {
        &self.sbar
    }

    pub fn x0bar(&self) -> &DVector<f64> {
        &self.x0bar
    }

    /// `Hbar^T sbar`.
    pub fn hbar_t_sbar(&self) -> &DVector<f64> {
        &self.hts
    }

    /// `Hbar^T Hbar`.
    pub fn hbar_t_hbar(&self) -> &DMatrix<f64> {
        &self.terms.gram
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn power(&self) -> f64 {
        self.p_t
    }

    pub fn antennas(&self) -> usize {
        self.n
    }

    /// Length of the real variable, `2N`.
    pub fn dim(&self) -> usize {
        2 * self.n
    }

    /// `sqrt(P_T / N)`.
    pub fn amplitude(&self) -> f64 {
        (self.p_t / self.n as f64).sqrt()
    }

    /// Same channel and data with a different weight.
    pub fn with_rho(&self, rho: f64) -> Result<Self> {
        check_weight(rho)?;
        Ok(RealColumnProblem { rho, ..self.clone() })
    }

    fn check_len(&self, len: usize) -> Result<()> {
        ensure_dims(len == self.dim(), || {
            format!("variable has length {len}, expected {}", self.dim())
        })
    }

    pub fn objective(&self, xbar: &[f64]) -> Result<f64> {
        self.check_len(xbar.len())?;
        Ok(self.objective_unchecked(xbar))
    }

    pub(crate) fn objective_unchecked(&self, xbar: &[f64]) -> f64 {
        let c = self.amplitude();
        let hbar = &self.terms.hbar;
        let mut residual = 0.0;
        for r in 0..hbar.nrows() {
            let mut acc = 0.0;
            for (j, x) in xbar.iter().enumerate() {
                acc += hbar[(r, j)] * x;
            }
            residual += (c * acc - self.sbar[r]).powi(2);
        }
        let dist: f64 = xbar
            .iter()
            .zip(self.x0bar.iter())
            .map(|(x, x0)| (x - x0).powi(2))
            .sum();
        self.rho * residual + (1.0 - self.rho) * c * c * dist
    }

    /// Objective through the Gram form, reusing a precomputed `Hbar^T Hbar x`.
    pub(crate) fn objective_from_gram(&self, xbar: &[f64], gx: &[f64]) -> f64 {
        let c = self.amplitude();
        let mut quad = 0.0;
        let mut lin = 0.0;
        let mut dist = 0.0;
        for i in 0..xbar.len() {
            quad += xbar[i] * gx[i];
            lin += xbar[i] * self.hts[i];
            dist += (xbar[i] - self.x0bar[i]).powi(2);
        }
        let residual = (c * c * quad - 2.0 * c * lin + self.sbar_norm_sq).max(0.0);
        self.rho * residual + (1.0 - self.rho) * c * c * dist
    }

    /// Gradient of [`Self::objective`]:
    /// `2 rho c^2 G x - 2 rho c Hbar^T sbar + 2 (1 - rho) c^2 (x - x0bar)`.
    pub fn gradient(&self, xbar: &[f64]) -> Result<DVector<f64>> {
        self.check_len(xbar.len())?;
        let mut gx = vec![0.0; self.dim()];
        let mut out = DVector::zeros(self.dim());
        self.gradient_into(xbar, &mut gx, out.as_mut_slice(), &mut NoFlops);
        Ok(out)
    }

    /// Writes the gradient into `out`, leaving `G x` in `gx`.
    pub(crate) fn gradient_into<F: FlopCounter>(
        &self,
        xbar: &[f64],
        gx: &mut [f64],
        out: &mut [f64],
        flops: &mut F,
    ) {
        self.terms.gram_mul(xbar, gx, flops);
        self.gradient_from_gram(xbar, gx, out, flops);
    }

    /// Gradient given `gx = Hbar^T Hbar xbar`.
    pub(crate) fn gradient_from_gram<F: FlopCounter>(
        &self,
        xbar: &[f64],
        gx: &[f64],
        out: &mut [f64],
        flops: &mut F,
    ) {
        let c2 = self.p_t / self.n as f64;
        let a = 2.0 * self.rho * c2;
        let b = 2.0 * self.rho * c2.sqrt();
        let d = 2.0 * (1.0 - self.rho) * c2;
        for i in 0..out.len() {
            out[i] = a * gx[i] - b * self.hts[i] + d * (xbar[i] - self.x0bar[i]);
        }
        flops.add(7 * out.len() as u64);
    }
}

/// Splits a frame problem into its `M` independent column problems.
pub fn decompose_columns(p: &JcasProblem) -> Vec<RealColumnProblem> {
    let terms = Arc::new(ChannelTerms::from_channel(&p.h));
    let scale = (p.p_t / p.antennas() as f64).sqrt();
    (0..p.frame_len())
        .map(|m| {
            let sbar = expand_vector(&p.s.matrix().column(m).into_owned());
            let x0bar = expand_vector(&p.x0.matrix().column(m).into_owned()) / scale;
            RealColumnProblem::new(terms.clone(), sbar, x0bar, p.rho, p.p_t)
                .expect("a validated frame problem yields valid columns")
        })
        .collect()
}

/// Projects every complex entry of the stacked vector onto the unit circle.
pub fn project_cm(xbar: &[f64]) -> Result<DVector<f64>> {
    ensure_dims(xbar.len().is_multiple_of(2), || {
        format!("real vector length {} is odd", xbar.len())
    })?;
    let mut out = DVector::from_column_slice(xbar);
    project_cm_in_place(out.as_mut_slice(), &mut NoFlops);
    Ok(out)
}

pub(crate) fn project_cm_in_place<F: FlopCounter>(xbar: &mut [f64], flops: &mut F) {
    let n = xbar.len() / 2;
    let (re, im) = xbar.split_at_mut(n);
    for (r, i) in re.iter_mut().zip(im.iter_mut()) {
        let modulus = r.hypot(*i);
        if modulus < PROJECTION_ZERO_THRESHOLD {
            *r = 1.0;
            *i = 0.0;
        } else {
            *r /= modulus;
            *i /= modulus;
        }
    }
    flops.add(PROJECTION_FLOPS_PER_ENTRY * n as u64);
}

/// Scales unit-modulus column solutions by `sqrt(P_T / N)` into a feasible frame.
pub fn assemble_waveform(columns: &[DVector<f64>], p_t: f64, n: usize) -> Result<Waveform> {
    Waveform::hard(assemble_entries(columns, p_t, n)?, p_t)
}

/// Like [`assemble_waveform`] without the modulus requirement.
pub fn assemble_soft(columns: &[DVector<f64>], p_t: f64, n: usize) -> Result<Waveform> {
    Ok(Waveform::soft(assemble_entries(columns, p_t, n)?, p_t))
}

fn assemble_entries(columns: &[DVector<f64>], p_t: f64, n: usize) -> Result<DMatrix<C64>> {
    ensure_dims(!columns.is_empty(), || "no columns to assemble".into())?;
    let scale = (p_t / n as f64).sqrt();
    let mut x = DMatrix::zeros(n, columns.len());
    for (m, col) in columns.iter().enumerate() {
        ensure_dims(col.len() == 2 * n, || {
            format!("column {m} has length {}, expected {}", col.len(), 2 * n)
        })?;
        let z = collapse_complex(col.as_slice())?;
        x.column_mut(m).copy_from(&(z * C64::new(scale, 0.0)));
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{chirp_benchmark, sample_channel, sample_qpsk_frame, ChirpVariant};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn frame_problem(seed: u64, k: usize, n: usize, m: usize, rho: f64) -> JcasProblem {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = sample_channel(k, n, &mut rng).unwrap();
        let s = sample_qpsk_frame(k, m, &mut rng).unwrap();
        let x0 = chirp_benchmark(n, m, 1.0, ChirpVariant::Focused { steer_angle: 0.1 }, 0.5).unwrap();
        JcasProblem::new(h, s, x0, rho, 1.0).unwrap()
    }

    fn random_unit(rng: &mut impl Rng, n: usize) -> DVector<f64> {
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

    /// The column objective evaluated in complex arithmetic on the collapsed variable.
    fn complex_objective(p: &JcasProblem, col: usize, xbar: &[f64]) -> f64 {
        let c = (p.p_t / p.antennas() as f64).sqrt();
        let x = collapse_complex(xbar).unwrap();
        let x0 = p.x0.matrix().column(col) / C64::new(c, 0.0);
        let mui = (p.h.matrix() * &x * C64::new(c, 0.0) - p.s.matrix().column(col)).norm_squared();
        p.rho * mui + (1.0 - p.rho) * c * c * (x - x0).norm_squared()
    }

    #[test]
    fn objective_matches_complex_form() {
        let p = frame_problem(3, 4, 8, 5, 0.37);
        let cols = decompose_columns(&p);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for (m, col) in cols.iter().enumerate() {
            let x = DVector::from_fn(16, |_, _| rng.random::<f64>() - 0.5);
            let got = col.objective(x.as_slice()).unwrap();
            let want = complex_objective(&p, m, x.as_slice());
            assert!(((got - want) / want).abs() < 1e-12);
            let mut gx = vec![0.0; 16];
            col.terms().gram_mul(x.as_slice(), &mut gx, &mut NoFlops);
            let via_gram = col.objective_from_gram(x.as_slice(), &gx);
            assert!(((via_gram - want) / want).abs() < 1e-10);
        }
    }

    #[test]
    fn column_objectives_sum_to_frame_objective() {
        let p = frame_problem(4, 4, 8, 20, 0.6);
        let cols = decompose_columns(&p);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let xs: Vec<DVector<f64>> = cols.iter().map(|_| random_unit(&mut rng, 8)).collect();
        let total: f64 = cols
            .iter()
            .zip(&xs)
            .map(|(c, x)| c.objective(x.as_slice()).unwrap())
            .sum();
        let frame = assemble_waveform(&xs, p.p_t, 8).unwrap();
        let want = p.frame_objective(frame.matrix()).unwrap();
        assert!(((total - want) / want).abs() < 1e-10);
    }

    #[test]
    fn single_column_frame() {
        let p = frame_problem(6, 2, 3, 3, 0.5);
        let p = JcasProblem::new(
            p.h.clone(),
            SymbolFrame::new(p.s.matrix().columns(0, 1).into_owned()).unwrap(),
            chirp_benchmark(3, 1, 1.0, ChirpVariant::Focused { steer_angle: 0.0 }, 0.5).unwrap(),
            0.5,
            1.0,
        )
        .unwrap();
        let cols = decompose_columns(&p);
        assert_eq!(cols.len(), 1);
        let x = random_unit(&mut ChaCha8Rng::seed_from_u64(1), 3);
        let frame = assemble_waveform(std::slice::from_ref(&x), 1.0, 3).unwrap();
        let want = p.frame_objective(frame.matrix()).unwrap();
        assert!((cols[0].objective(x.as_slice()).unwrap() - want).abs() < 1e-12 * want.max(1.0));
    }

    #[test]
    fn full_weight_ignores_benchmark() {
        let p = frame_problem(7, 4, 8, 2, 1.0);
        let col = &decompose_columns(&p)[0];
        let moved = RealColumnProblem::new(
            col.terms().clone(),
            col.sbar().clone(),
            random_unit(&mut ChaCha8Rng::seed_from_u64(2), 8),
            1.0,
            1.0,
        )
        .unwrap();
        let x = random_unit(&mut ChaCha8Rng::seed_from_u64(3), 8);
        assert_eq!(
            col.objective(x.as_slice()).unwrap(),
            moved.objective(x.as_slice()).unwrap()
        );
    }

    #[test]
    fn zero_witnesses() {
        let p = frame_problem(8, 4, 8, 2, 0.0);
        let col = &decompose_columns(&p)[0];
        assert_eq!(col.objective(col.x0bar().as_slice()).unwrap(), 0.0);
        assert!(col.gradient(col.x0bar().as_slice()).unwrap().amax() < 1e-15);

        // rho = 1 with Hbar xbar = sbar / c.
        let h = Channel::new(DMatrix::identity(2, 2)).unwrap();
        let s = DVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(0.0, 1.0)]);
        let x0 = s.clone() * C64::new((0.5f64).sqrt(), 0.0);
        let col = RealColumnProblem::from_complex(&h, &s, &x0, 1.0, 1.0).unwrap();
        let x = expand_vector(&s);
        let c = col.amplitude();
        let scaled: Vec<f64> = x.iter().map(|v| v / c).collect();
        assert!(col.objective(&scaled).unwrap() < 1e-24);
    }

    #[test]
    fn zero_channel_has_zero_gradient_at_full_weight() {
        let terms = Arc::new(ChannelTerms::new(DMatrix::zeros(8, 16)).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let col = RealColumnProblem::new(
            terms,
            DVector::from_fn(8, |_, _| rng.random()),
            random_unit(&mut rng, 8),
            1.0,
            2.0,
        )
        .unwrap();
        let x = DVector::from_fn(16, |_, _| rng.random::<f64>() * 3.0);
        assert_eq!(col.gradient(x.as_slice()).unwrap().amax(), 0.0);
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (t, rho) in [0.0, 0.2, 0.5, 0.8, 1.0].into_iter().enumerate() {
            let p = frame_problem(20 + t as u64, 4, 8, 1, rho);
            let col = &decompose_columns(&p)[0];
            let x = DVector::from_fn(16, |_, _| rng.random::<f64>() * 2.0 - 1.0);
            let g = col.gradient(x.as_slice()).unwrap();
            let h = 1e-6;
            for i in 0..16 {
                let mut up = x.clone();
                let mut dn = x.clone();
                up[i] += h;
                dn[i] -= h;
                let fd = (col.objective(up.as_slice()).unwrap() - col.objective(dn.as_slice()).unwrap())
                    / (2.0 * h);
                assert!((fd - g[i]).abs() < 1e-5, "rho={rho} i={i}: {fd} vs {}", g[i]);
            }
        }
    }

    #[test]
    fn wrong_length_is_dimension_error() {
        let p = frame_problem(1, 2, 4, 1, 0.5);
        let col = &decompose_columns(&p)[0];
        assert!(matches!(col.objective(&[0.0; 7]), Err(Error::Dimension(_))));
        assert!(matches!(col.gradient(&[0.0; 9]), Err(Error::Dimension(_))));
    }

    #[test]
    fn gram_is_symmetric() {
        let p = frame_problem(2, 4, 8, 1, 0.5);
        let g = decompose_columns(&p)[0].hbar_t_hbar().clone();
        assert!((&g - g.transpose()).amax() < 1e-12);
        assert!(decompose_columns(&p)[0].terms().lambda_max() > 0.0);
    }

    #[test]
    fn projection_cases() {
        let v = project_cm(&[3.0, 4.0]).unwrap();
        assert!((v[0] - 0.6).abs() < 1e-15 && (v[1] - 0.8).abs() < 1e-15);
        assert_eq!(project_cm(&[0.0, 0.0]).unwrap().as_slice(), &[1.0, 0.0]);
        let u = random_unit(&mut ChaCha8Rng::seed_from_u64(6), 8);
        assert!((project_cm(u.as_slice()).unwrap() - &u).amax() < 1e-15);
        assert!(project_cm(&[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn projection_is_nearest_unit_modulus_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..20 {
            let x = DVector::from_fn(16, |_, _| rng.random::<f64>() * 4.0 - 2.0);
            let best = (&x - project_cm(x.as_slice()).unwrap()).norm();
            for _ in 0..64 {
                let other = random_unit(&mut rng, 8);
                assert!(best <= (&x - other).norm() + 1e-12);
            }
        }
    }

    #[test]
    fn assembling_constant_columns() {
        let ones = expand_vector(&DVector::from_element(4, C64::new(1.0, 0.0)));
        let w = assemble_waveform(&[ones.clone(), ones], 2.0, 4).unwrap();
        let amp = (0.5f64).sqrt();
        assert!(w.matrix().iter().all(|z| (z - C64::new(amp, 0.0)).norm() < 1e-15));
        let bad = DVector::from_element(8, 0.5);
        assert!(matches!(
            assemble_waveform(&[bad], 1.0, 4),
            Err(Error::Constraint(_))
        ));
    }

    #[test]
    fn benchmark_columns_reassemble_to_benchmark() {
        let p = frame_problem(13, 4, 8, 20, 0.0);
        let cols: Vec<DVector<f64>> = decompose_columns(&p).iter().map(|c| c.x0bar().clone()).collect();
        let w = assemble_waveform(&cols, 1.0, 8).unwrap();
        assert!((w.matrix() - p.x0.matrix()).camax() < 1e-9);
    }

    #[test]
    fn invalid_problems_rejected() {
        let p = frame_problem(1, 2, 4, 4, 0.5);
        assert!(JcasProblem::new(p.h.clone(), p.s.clone(), p.x0.clone(), 1.5, 1.0).is_err());
        assert!(JcasProblem::new(p.h.clone(), p.s.clone(), p.x0.clone(), 0.5, 2.0).is_err());
    }
}
