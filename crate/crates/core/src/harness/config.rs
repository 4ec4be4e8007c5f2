//! Experiment configuration (TOML, schema version 1).

use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::signal::ChirpVariant;
use crate::solvers::{PgdConfig, PhaseGridConfig};
use crate::unfold::{TrainConfig, TrainDims};

pub const SCHEMA_VERSION: u32 = 1;

/// Waveform designers the harness can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    /// The trained unfolded network.
    Unfolded,
    /// Projected gradient descent.
    Pgd,
    /// Exhaustive phase grid; tiny arrays only.
    PhaseGrid,
    /// Transmit the radar benchmark unchanged.
    Benchmark,
}

impl SolverKind {
    pub const ALL: [SolverKind; 4] = [
        SolverKind::Unfolded,
        SolverKind::Pgd,
        SolverKind::PhaseGrid,
        SolverKind::Benchmark,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Unfolded => "unfolded",
            SolverKind::Pgd => "pgd",
            SolverKind::PhaseGrid => "phase_grid",
            SolverKind::Benchmark => "benchmark",
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        SolverKind::ALL
            .into_iter()
            .find(|k| k.name() == s.replace('-', "_"))
            .ok_or_else(|| format!("unknown solver `{s}` (expected unfolded, pgd, phase_grid or benchmark)"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Dims {
    /// Antennas.
    pub n: usize,
    /// Users.
    pub k: usize,
    /// Frame length.
    pub m: usize,
    /// Network layers.
    pub layers: usize,
}

impl Default for Dims {
    fn default() -> Self {
        Dims {
            n: 8,
            k: 4,
            m: 20,
            layers: 10,
        }
    }
}

/// Beam-pattern evaluation angles in degrees, endpoints included.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AngleGrid {
    pub start_deg: f64,
    pub stop_deg: f64,
    pub points: usize,
}

impl Default for AngleGrid {
    fn default() -> Self {
        AngleGrid {
            start_deg: -90.0,
            stop_deg: 90.0,
            points: 361,
        }
    }
}

impl AngleGrid {
    pub fn degrees(&self) -> Vec<f64> {
        crate::metrics::angle_grid(self.start_deg, self.stop_deg, self.points)
    }

    pub fn radians(&self) -> Vec<f64> {
        self.degrees().into_iter().map(f64::to_radians).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputPaths {
    /// Where CSV files go.
    pub dir: PathBuf,
    /// Where trained models are looked up and saved. Relative paths are
    /// taken under `dir`.
    pub model_dir: PathBuf,
}

impl OutputPaths {
    pub fn models(&self) -> PathBuf {
        self.dir.join(&self.model_dir)
    }
}

impl Default for OutputPaths {
    fn default() -> Self {
        OutputPaths {
            dir: PathBuf::from("out"),
            model_dir: PathBuf::from("models"),
        }
    }
}

/// Run-time comparison settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimingConfig {
    pub antennas: Vec<usize>,
    /// Timed runs per solver; the median is reported.
    pub repetitions: usize,
    /// Untimed runs before measuring.
    pub warmup: usize,
    pub pgd_starts: usize,
    pub pgd_iters: usize,
    pub rho: f64,
}

impl Default for TimingConfig {
    fn default() -> Self {
        TimingConfig {
            antennas: vec![8, 16],
            repetitions: 10,
            warmup: 2,
            pgd_starts: 8,
            pgd_iters: 500,
            rho: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    /// Seeds channel and symbol draws; `--seed` also replaces `train.seed`.
    pub seed: u64,
    /// Total transmit power in dBm.
    pub p_t_dbm: f64,
    /// Antenna spacing in wavelengths.
    pub delta: f64,
    /// Channels averaged per sweep cell.
    pub batch_count: usize,
    /// SNR `P_T / N0` values in dB.
    pub snr_grid_db: Vec<f64>,
    pub rho_grid: Vec<f64>,
    pub solvers: Vec<SolverKind>,
    /// Train and save a model when none is found for a weight.
    pub train_if_missing: bool,
    /// Add wall-time columns to sweep CSVs. Off by default so that reruns are
    /// byte-identical.
    pub record_wall_time: bool,
    pub dims: Dims,
    pub angles: AngleGrid,
    pub chirp: ChirpVariant,
    pub output: OutputPaths,
    pub pgd: PgdConfig,
    pub phase_grid: PhaseGridConfig,
    pub train: TrainConfig,
    pub timing: TimingConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            schema_version: SCHEMA_VERSION,
            seed: 2024,
            p_t_dbm: 30.0,
            delta: 0.5,
            batch_count: 100,
            snr_grid_db: (0..8).map(|i| -2.0 + 2.0 * i as f64).collect(),
            rho_grid: vec![0.0, 0.2, 0.5, 0.8, 1.0],
            solvers: vec![SolverKind::Unfolded, SolverKind::Pgd],
            train_if_missing: true,
            record_wall_time: false,
            dims: Dims::default(),
            angles: AngleGrid::default(),
            chirp: ChirpVariant::Orthogonal,
            output: OutputPaths::default(),
            pgd: PgdConfig::default(),
            phase_grid: PhaseGridConfig::default(),
            train: TrainConfig::default(),
            timing: TimingConfig::default(),
        }
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::Configuration(msg.into())
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> std::result::Result<Self, String> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| e.to_string().trim().replace('\n', " "))?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let config_error = |reason: String| Error::Config {
            path: path.to_path_buf(),
            reason,
        };
        let text = std::fs::read_to_string(path).map_err(|e| config_error(e.to_string()))?;
        let cfg = ExperimentConfig::parse(&text).map_err(config_error)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    /// SHA-256 of the canonical TOML rendering, lowercase hex. Output paths are
    /// left out so the same experiment hashes alike wherever it is written.
    pub fn sha256(&self) -> String {
        let mut canonical = self.clone();
        canonical.output = OutputPaths::default();
        Sha256::digest(canonical.to_toml().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(invalid(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        let d = &self.dims;
        if d.n == 0 || d.k == 0 || d.m == 0 || d.layers == 0 {
            return Err(invalid(
                "dims.n, dims.k, dims.m and dims.layers must be at least 1",
            ));
        }
        if !self.p_t_dbm.is_finite() || !(self.delta > 0.0) {
            return Err(invalid("p_t_dbm must be finite and delta positive"));
        }
        if self.batch_count == 0 {
            return Err(invalid("batch_count must be at least 1"));
        }
        if self.snr_grid_db.is_empty() || self.snr_grid_db.iter().any(|s| !s.is_finite()) {
            return Err(invalid("snr_grid_db must be a nonempty list of finite values"));
        }
        if self.rho_grid.is_empty() || self.rho_grid.iter().any(|r| !(0.0..=1.0).contains(r)) {
            return Err(invalid("rho_grid must be a nonempty list of values in [0, 1]"));
        }
        if self.solvers.is_empty() {
            return Err(invalid("solvers must not be empty"));
        }
        if self.solvers.iter().collect::<HashSet<_>>().len() != self.solvers.len() {
            return Err(invalid("solvers must not repeat"));
        }
        if self.solvers.contains(&SolverKind::PhaseGrid) && d.n > self.phase_grid.max_antennas {
            return Err(invalid(format!(
                "phase_grid solver allows at most {} antennas, dims.n = {}",
                self.phase_grid.max_antennas, d.n
            )));
        }
        let a = &self.angles;
        if a.points == 0 || !(a.start_deg <= a.stop_deg) || a.start_deg < -90.0 || a.stop_deg > 90.0 {
            return Err(invalid(
                "angles must satisfy -90 <= start_deg <= stop_deg <= 90 with points >= 1",
            ));
        }
        let t = &self.timing;
        if t.antennas.is_empty() || t.antennas.contains(&0) || t.repetitions == 0 {
            return Err(invalid(
                "timing needs nonempty antennas (>= 1) and repetitions >= 1",
            ));
        }
        if t.pgd_starts == 0 || t.pgd_iters == 0 || !(0.0..=1.0).contains(&t.rho) {
            return Err(invalid(
                "timing needs pgd_starts, pgd_iters >= 1 and rho in [0, 1]",
            ));
        }
        // Timing array sizes are checked when the timing run builds each experiment.
        if !matches!(self.chirp, ChirpVariant::Focused { .. }) && d.n > d.m {
            return Err(invalid(format!(
                "the {:?} chirp needs dims.m >= dims.n, but n = {} exceeds m = {}",
                self.chirp, d.n, d.m
            )));
        }
        self.pgd.validate().map_err(|e| invalid(format!("[pgd] {e}")))?;
        self.train
            .validate()
            .map_err(|e| invalid(format!("[train] {e}")))?;
        if self.phase_grid.grid_points < 2 {
            return Err(invalid("phase_grid.grid_points must be at least 2"));
        }
        Ok(())
    }

    /// Total power in watts.
    pub fn power(&self) -> f64 {
        crate::dbm_to_watts(self.p_t_dbm)
    }

    pub fn train_dims(&self) -> TrainDims {
        TrainDims {
            n: self.dims.n,
            k: self.dims.k,
            m: self.dims.m,
            layers: self.dims.layers,
            p_t: self.power(),
            chirp: self.chirp,
            delta: self.delta,
        }
    }

    /// Training configuration for weight `rho`: each weight gets its own stream.
    pub fn train_config_for(&self, rho: f64) -> TrainConfig {
        TrainConfig {
            seed: self.train.seed.wrapping_add((rho * 1e6).round() as u64),
            ..self.train.clone()
        }
    }
}

/// Flag overrides applied on top of a loaded configuration.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub rho: Option<f64>,
    pub snr_db: Option<f64>,
    pub solver: Option<SolverKind>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(seed) = self.seed {
            cfg.seed = seed;
            cfg.train.seed = seed;
        }
        if let Some(dir) = &self.out_dir {
            cfg.output.dir = dir.clone();
        }
        if let Some(rho) = self.rho {
            cfg.rho_grid = vec![rho];
        }
        if let Some(snr) = self.snr_db {
            cfg.snr_grid_db = vec![snr];
        }
        if let Some(solver) = self.solver {
            cfg.solvers = vec![solver];
        }
    }
}

#[cfg(test)]
#[allow(clippy::field_reassign_with_default)]
mod tests {
    use super::*;

    #[test]
    fn hash_ignores_output_location() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        b.output.dir = "elsewhere".into();
        assert_eq!(a.sha256(), b.sha256());
        b.seed += 1;
        assert_ne!(a.sha256(), b.sha256());
    }

    #[test]
    fn shipped_default_file_matches_defaults() {
        let text = include_str!("../../configs/default.toml");
        assert_eq!(
            ExperimentConfig::parse(text).unwrap(),
            ExperimentConfig::default()
        );
    }

    #[test]
    fn defaults_match_the_reference_experiment() {
        let cfg = ExperimentConfig::default();
        assert_eq!(
            (cfg.dims.n, cfg.dims.k, cfg.dims.m, cfg.dims.layers),
            (8, 4, 20, 10)
        );
        assert_eq!(cfg.power(), 1.0);
        assert_eq!(cfg.snr_grid_db, vec![-2.0, 0.0, 2.0, 4.0, 6.0, 8.0, 10.0, 12.0]);
        assert_eq!(cfg.rho_grid, vec![0.0, 0.2, 0.5, 0.8, 1.0]);
        assert_eq!(cfg.angles.degrees().len(), 361);
        cfg.validate().unwrap();
    }

    #[test]
    fn toml_roundtrip() {
        let cfg = ExperimentConfig::default();
        let text = cfg.to_toml();
        assert_eq!(ExperimentConfig::parse(&text).unwrap(), cfg);
        let partial = ExperimentConfig::parse("seed = 5\n[dims]\nn = 4\n").unwrap();
        assert_eq!(partial.seed, 5);
        assert_eq!(partial.dims.n, 4);
        assert_eq!(partial.dims.m, 20);
    }

    #[test]
    fn unknown_keys_and_bad_values_rejected() {
        assert!(ExperimentConfig::parse("sed = 5\n").is_err());
        assert!(ExperimentConfig::parse("[dims]\nantennas = 4\n").is_err());
        let mut cfg = ExperimentConfig::default();
        cfg.rho_grid = vec![];
        assert!(matches!(cfg.validate(), Err(Error::Configuration(_))));
        let mut cfg = ExperimentConfig::default();
        cfg.schema_version = 2;
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::default();
        cfg.solvers.push(SolverKind::PhaseGrid);
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::default();
        cfg.dims.n = cfg.dims.m + 1;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        assert_eq!(a.sha256(), b.sha256());
        assert_eq!(a.sha256().len(), 64);
        b.seed += 1;
        assert_ne!(a.sha256(), b.sha256());
    }

    #[test]
    fn overrides() {
        let mut cfg = ExperimentConfig::default();
        Overrides {
            seed: Some(9),
            rho: Some(0.3),
            snr_db: Some(4.0),
            solver: Some(SolverKind::Pgd),
            out_dir: Some("x".into()),
        }
        .apply(&mut cfg);
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.train.seed, 9);
        assert_eq!(cfg.rho_grid, vec![0.3]);
        assert_eq!(cfg.snr_grid_db, vec![4.0]);
        assert_eq!(cfg.solvers, vec![SolverKind::Pgd]);
        assert_eq!(cfg.output.dir, PathBuf::from("x"));
    }

    #[test]
    fn solver_names() {
        for k in SolverKind::ALL {
            assert_eq!(k.name().parse::<SolverKind>().unwrap(), k);
        }
        assert_eq!("phase-grid".parse::<SolverKind>().unwrap(), SolverKind::PhaseGrid);
        assert!("bnb".parse::<SolverKind>().is_err());
    }
}
