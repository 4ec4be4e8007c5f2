//! Constant-modulus waveform design for a multiuser downlink that doubles as a
//! radar transmitter.
//!
//! A base station with `N` antennas sends an `N x M` frame `X` whose entries all
//! have amplitude `sqrt(P_T / N)`. The design trades the multiuser interference
//! `||H X - S||_F^2` against the distance to a radar benchmark waveform `X0`,
//! weighted by `rho`. Two solvers are provided:
//!
//! * [`solvers::pgd_solve`]: projected gradient descent on the per-column
//!   real-valued problem, plus an exhaustive phase-grid oracle for tiny sizes.
//! * [`unfold`]: an `L`-layer network obtained by unrolling that descent with
//!   diagonal (element-wise) weights, trained without labels on the sum of the
//!   design objective over every layer output.
//!
//! The [`harness`] module drives the sum-rate, beam-pattern, tradeoff and
//! timing experiments and writes CSV; the `jcas` binary is a thin front end.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod flops;
pub mod harness;
pub mod metrics;
pub mod problem;
pub mod signal;
pub mod solvers;
pub mod unfold;

pub use error::{Error, LoadError, Result};
pub use metrics::{BeamPattern, EvalReport, Waveform};
pub use problem::{JcasProblem, RealColumnProblem};
pub use signal::{BenchmarkWaveform, Channel, ChirpVariant, SteeringVector, SymbolFrame};
pub use unfold::{TrainConfig, UnfoldModel};

/// Complex sample type used throughout.
pub type C64 = num_complex::Complex64;

/// Converts a power in dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Noise power for a transmit SNR (`P_T / N0`) given in dB.
pub fn noise_power(p_t: f64, snr_db: f64) -> f64 {
    p_t / 10f64.powf(snr_db / 10.0)
}
