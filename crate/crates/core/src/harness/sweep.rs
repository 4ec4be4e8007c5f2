//! Sum-rate sweeps, beam patterns, the rate/MSE tradeoff and timing.
//!
//! Channel `c` of a sweep is drawn from stream `c` of the experiment seed, so
//! every weight and solver sees the same channels and symbols. Designs do not
//! depend on the noise level; each frame is designed once and scored at every SNR.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::metrics::{
    beam_mse, beam_pattern, mui_power, per_user_sinr, sum_rate, BeamPattern, EvalSettings, Waveform,
};
use crate::noise_power;
use crate::problem::JcasProblem;
use crate::signal::{
    chirp_benchmark, sample_channel, sample_qpsk_frame, BenchmarkWaveform, Channel, SymbolFrame,
};
use crate::solvers::{solve_frame, ColumnSolver, PgdConfig};
use crate::unfold::{design_waveform, load_model, save_model, train, UnfoldModel};

use super::config::{ExperimentConfig, SolverKind};

/// Config plus everything derived from it once.
#[derive(Debug, Clone)]
pub struct Experiment {
    cfg: ExperimentConfig,
    p_t: f64,
    x0: BenchmarkWaveform,
    grid: Vec<f64>,
    reference: BeamPattern,
}

impl Experiment {
    pub fn new(cfg: ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let p_t = cfg.power();
        let x0 = chirp_benchmark(cfg.dims.n, cfg.dims.m, p_t, cfg.chirp, cfg.delta)?;
        let grid = cfg.angles.radians();
        let reference = beam_pattern(&Waveform::hard(x0.matrix().clone(), p_t)?, &grid, cfg.delta)?;
        Ok(Experiment {
            cfg,
            p_t,
            x0,
            grid,
            reference,
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.cfg
    }

    pub fn power(&self) -> f64 {
        self.p_t
    }

    pub fn benchmark(&self) -> &BenchmarkWaveform {
        &self.x0
    }

    pub fn reference_pattern(&self) -> &BeamPattern {
        &self.reference
    }

    /// Channel and symbols of sweep channel `c`.
    pub fn instance(&self, c: usize) -> Result<(Channel, SymbolFrame)> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        rng.set_stream(c as u64);
        let h = sample_channel(self.cfg.dims.k, self.cfg.dims.n, &mut rng)?;
        let s = sample_qpsk_frame(self.cfg.dims.k, self.cfg.dims.m, &mut rng)?;
        Ok((h, s))
    }

    pub fn problem(&self, c: usize, rho: f64) -> Result<JcasProblem> {
        let (h, s) = self.instance(c)?;
        JcasProblem::new(h, s, self.x0.clone(), rho, self.p_t)
    }

    fn pgd_config(&self, c: usize) -> PgdConfig {
        PgdConfig {
            seed: self.cfg.seed ^ (c as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15),
            ..self.cfg.pgd.clone()
        }
    }

    /// Designs the frame for channel `c` with one solver.
    pub fn design(&self, solver: Designer<'_>, p: &JcasProblem, c: usize) -> Result<DesignedFrame> {
        // Only the design is timed and counted; the settings below are unused by it.
        let settings = EvalSettings::new(1.0, vec![0.0], self.cfg.delta);
        match solver {
            Designer::Unfolded(model) => {
                let d = design_waveform(model, p)?;
                Ok(DesignedFrame {
                    waveform: d.waveform,
                    raw: Some(d.raw),
                    flops: d.flops,
                    projection_flops: d.projection_flops,
                    wall_time: d.wall_time,
                })
            }
            Designer::Classical(kind) => {
                let column_solver = match kind {
                    SolverKind::Pgd => ColumnSolver::Pgd(self.pgd_config(c)),
                    SolverKind::PhaseGrid => ColumnSolver::PhaseGrid(self.cfg.phase_grid.clone()),
                    SolverKind::Benchmark => {
                        return Ok(DesignedFrame {
                            waveform: Waveform::hard(p.x0.matrix().clone(), p.p_t)?,
                            raw: None,
                            flops: 0,
                            projection_flops: 0,
                            wall_time: 0.0,
                        })
                    }
                    SolverKind::Unfolded => unreachable!("the network is passed as Designer::Unfolded"),
                };
                let (waveform, report) = solve_frame(p, &column_solver, &settings)?;
                Ok(DesignedFrame {
                    waveform,
                    raw: None,
                    flops: report.flops,
                    projection_flops: 0,
                    wall_time: report.wall_time,
                })
            }
        }
    }

    /// Scores a designed frame at every SNR of the grid.
    pub fn score(&self, p: &JcasProblem, frame: &DesignedFrame) -> Result<ChannelOutcome> {
        let scored = |x: &Waveform| -> Result<Scores> {
            let pattern = beam_pattern(x, &self.grid, self.cfg.delta)?;
            let rates = self
                .cfg
                .snr_grid_db
                .iter()
                .map(|&snr| sum_rate(&per_user_sinr(&p.h, x, &p.s, noise_power(self.p_t, snr))?))
                .collect::<Result<Vec<f64>>>()?;
            Ok(Scores {
                mui_power: mui_power(&p.h, x, &p.s)?,
                beam_mse: beam_mse(&pattern, &self.reference)?,
                sum_rates: rates,
                pattern: pattern.power,
            })
        };
        Ok(ChannelOutcome {
            projected: scored(&frame.waveform)?,
            raw: frame.raw.as_ref().map(scored).transpose()?,
            wall_time: frame.wall_time,
            flops: frame.flops,
            projection_flops: frame.projection_flops,
            modulus_deviation: frame.waveform.worst_modulus_deviation().unwrap_or(f64::INFINITY),
        })
    }

    /// Designs and scores all `batch_count` channels for weight `rho`, in parallel
    /// but returned in channel order.
    pub fn design_batch(&self, solver: Designer<'_>, rho: f64) -> Result<Vec<ChannelOutcome>> {
        (0..self.cfg.batch_count)
            .into_par_iter()
            .map(|c| {
                let p = self.problem(c, rho)?;
                let frame = self.design(solver, &p, c)?;
                self.score(&p, &frame)
            })
            .collect()
    }
}

/// A solver ready to run; the network variant carries its weights.
#[derive(Debug, Clone, Copy)]
pub enum Designer<'a> {
    Unfolded(&'a UnfoldModel),
    Classical(SolverKind),
}

#[derive(Debug, Clone)]
pub struct DesignedFrame {
    pub waveform: Waveform,
    /// Unprojected network output, scaled to the frame amplitude.
    pub raw: Option<Waveform>,
    pub flops: u64,
    /// Operations of the final projection when counted apart from `flops`.
    pub projection_flops: u64,
    pub wall_time: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scores {
    pub mui_power: f64,
    pub beam_mse: f64,
    /// One per SNR of the grid.
    pub sum_rates: Vec<f64>,
    pub pattern: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelOutcome {
    pub projected: Scores,
    pub raw: Option<Scores>,
    pub wall_time: f64,
    pub flops: u64,
    pub projection_flops: u64,
    /// Worst relative deviation of any entry's modulus from `sqrt(P_T / N)`.
    pub modulus_deviation: f64,
}

/// Trained networks by weight: loaded from disk, or trained and saved on demand.
#[derive(Debug)]
pub struct ModelStore {
    dir: PathBuf,
    train_if_missing: bool,
    pinned: Option<PathBuf>,
    cache: Mutex<HashMap<u64, Arc<UnfoldModel>>>,
}

impl ModelStore {
    pub fn new(dir: impl Into<PathBuf>, train_if_missing: bool) -> Self {
        ModelStore {
            dir: dir.into(),
            train_if_missing,
            pinned: None,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn from_config(cfg: &ExperimentConfig) -> Self {
        ModelStore::new(cfg.output.models(), cfg.train_if_missing)
    }

    /// Uses one model file for every request; its weight must match.
    pub fn pinned(path: impl Into<PathBuf>) -> Self {
        let path = path.into();
        ModelStore {
            dir: path.parent().map(Path::to_path_buf).unwrap_or_default(),
            train_if_missing: false,
            pinned: Some(path),
            cache: Mutex::new(HashMap::new()),
        }
    }

    /// Where the model for `rho` lives.
    pub fn path_for(&self, cfg: &ExperimentConfig, rho: f64) -> PathBuf {
        if let Some(p) = &self.pinned {
            return p.clone();
        }
        let d = &cfg.dims;
        self.dir.join(format!(
            "unfold_n{}_k{}_l{}_rho{:.3}.bin",
            d.n, d.k, d.layers, rho
        ))
    }

    pub fn exists(&self, cfg: &ExperimentConfig, rho: f64) -> bool {
        self.path_for(cfg, rho).is_file()
    }

    /// True when [`Self::get`] would have to train.
    pub fn will_train(&self, cfg: &ExperimentConfig, rho: f64) -> bool {
        self.train_if_missing && !self.exists(cfg, rho)
    }

    /// Loads (or trains) the network for `rho` and checks it fits the experiment.
    pub fn get(&self, exp: &Experiment, rho: f64) -> Result<Arc<UnfoldModel>> {
        if let Some(m) = self.cache.lock().expect("model cache lock").get(&rho.to_bits()) {
            return Ok(m.clone());
        }
        let cfg = exp.config();
        let path = self.path_for(cfg, rho);
        let model = if path.is_file() {
            load_model(&path)?
        } else if self.train_if_missing {
            self.train_and_save(exp, rho)?.0
        } else {
            return Err(Error::MissingModel { rho, path });
        };
        check_compatible(&model, exp, rho, &path)?;
        let model = Arc::new(model);
        self.cache
            .lock()
            .expect("model cache lock")
            .insert(rho.to_bits(), model.clone());
        Ok(model)
    }

    /// Trains the network for `rho` with the experiment's training settings and saves it.
    pub fn train_and_save(&self, exp: &Experiment, rho: f64) -> Result<(UnfoldModel, PathBuf)> {
        let cfg = exp.config();
        let model = train(&cfg.train_config_for(rho), rho, cfg.train_dims())?;
        let path = self.path_for(cfg, rho);
        save_model(&model, &path)?;
        self.cache
            .lock()
            .expect("model cache lock")
            .insert(rho.to_bits(), Arc::new(model.clone()));
        Ok((model, path))
    }
}

fn check_compatible(model: &UnfoldModel, exp: &Experiment, rho: f64, path: &Path) -> Result<()> {
    let d = &exp.config().dims;
    let mismatch = if model.n != d.n {
        Some(format!("N = {} (config N = {})", model.n, d.n))
    } else if model.num_layers() != d.layers {
        Some(format!("L = {} (config L = {})", model.num_layers(), d.layers))
    } else if (model.rho - rho).abs() > 1e-9 {
        Some(format!("rho = {} (requested rho = {rho})", model.rho))
    } else if (model.p_t - exp.power()).abs() > 1e-9 * exp.power() {
        Some(format!("P_T = {} W (config P_T = {} W)", model.p_t, exp.power()))
    } else {
        None
    };
    match mismatch {
        Some(what) => Err(Error::Configuration(format!(
            "model {} was trained for {what}",
            path.display()
        ))),
        None => Ok(()),
    }
}

/// One (rho, SNR, solver) cell of the rate sweep, averaged over the batch.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub rho: f64,
    pub snr_db: f64,
    pub solver: SolverKind,
    /// bit/s/Hz.
    pub avg_sum_rate: f64,
    /// W.
    pub avg_mui: f64,
    /// W^2, linear.
    pub avg_beam_mse: f64,
    /// Seconds per channel.
    pub avg_wall_time: f64,
    /// Operations per channel.
    pub avg_flops: f64,
    pub avg_projection_flops: f64,
    /// Sum rate and beam MSE of the unprojected network output.
    pub raw_sum_rate: Option<f64>,
    pub raw_beam_mse: Option<f64>,
    pub max_modulus_deviation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    /// Sorted by rho, then SNR, then the configured solver order.
    pub rows: Vec<SweepRow>,
    pub batch_count: usize,
}

impl SweepResult {
    pub fn get(&self, rho: f64, snr_db: f64, solver: SolverKind) -> Option<&SweepRow> {
        self.rows
            .iter()
            .find(|r| r.rho == rho && r.snr_db == snr_db && r.solver == solver)
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, count) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    sum / count as f64
}

/// Resolves a solver kind into a runnable designer, fetching the network if needed.
fn with_designer<T>(
    exp: &Experiment,
    store: &ModelStore,
    kind: SolverKind,
    rho: f64,
    f: impl FnOnce(Designer<'_>) -> Result<T>,
) -> Result<T> {
    match kind {
        SolverKind::Unfolded => {
            let model = store.get(exp, rho)?;
            f(Designer::Unfolded(&model))
        }
        other => f(Designer::Classical(other)),
    }
}

/// Designs every (rho, solver) batch once.
fn all_outcomes(exp: &Experiment, store: &ModelStore) -> Result<Vec<(f64, SolverKind, Vec<ChannelOutcome>)>> {
    let cfg = exp.config();
    let mut out = Vec::new();
    for &rho in &cfg.rho_grid {
        for &kind in &cfg.solvers {
            let batch = with_designer(exp, store, kind, rho, |d| exp.design_batch(d, rho))?;
            out.push((rho, kind, batch));
        }
    }
    Ok(out)
}

pub fn run_rate_sweep(exp: &Experiment, store: &ModelStore) -> Result<SweepResult> {
    let cfg = exp.config();
    let outcomes = all_outcomes(exp, store)?;
    let mut rows = Vec::new();
    for &rho in &cfg.rho_grid {
        for (si, &snr_db) in cfg.snr_grid_db.iter().enumerate() {
            for (_, kind, batch) in outcomes.iter().filter(|(r, _, _)| *r == rho) {
                let raw = batch.iter().all(|o| o.raw.is_some()).then(|| {
                    let raw = || batch.iter().map(|o| o.raw.as_ref().expect("checked above"));
                    (
                        mean(raw().map(|r| r.sum_rates[si])),
                        mean(raw().map(|r| r.beam_mse)),
                    )
                });
                rows.push(SweepRow {
                    rho,
                    snr_db,
                    solver: *kind,
                    avg_sum_rate: mean(batch.iter().map(|o| o.projected.sum_rates[si])),
                    avg_mui: mean(batch.iter().map(|o| o.projected.mui_power)),
                    avg_beam_mse: mean(batch.iter().map(|o| o.projected.beam_mse)),
                    avg_wall_time: mean(batch.iter().map(|o| o.wall_time)),
                    avg_flops: mean(batch.iter().map(|o| o.flops as f64)),
                    avg_projection_flops: mean(batch.iter().map(|o| o.projection_flops as f64)),
                    raw_sum_rate: raw.map(|r| r.0),
                    raw_beam_mse: raw.map(|r| r.1),
                    max_modulus_deviation: batch.iter().map(|o| o.modulus_deviation).fold(0.0, f64::max),
                });
            }
        }
    }
    Ok(SweepResult {
        rows,
        batch_count: cfg.batch_count,
    })
}

/// Batch-mean beam patterns of each configured solver for one weight.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamTable {
    pub rho: f64,
    pub angles_deg: Vec<f64>,
    /// The benchmark pattern, then one series per solver in configured order.
    pub series: Vec<(String, Vec<f64>)>,
    /// Beam MSE of each solver's mean pattern against the reference.
    pub mse: Vec<(String, f64)>,
}

pub fn run_beam_pattern(exp: &Experiment, store: &ModelStore, rho: f64) -> Result<BeamTable> {
    let cfg = exp.config();
    let reference = exp.reference_pattern();
    let mut series = vec![("reference".to_string(), reference.power.clone())];
    let mut mse = Vec::new();
    for &kind in &cfg.solvers {
        let batch = with_designer(exp, store, kind, rho, |d| exp.design_batch(d, rho))?;
        let power: Vec<f64> = (0..reference.power.len())
            .map(|i| mean(batch.iter().map(|o| o.projected.pattern[i])))
            .collect();
        let pattern = BeamPattern {
            angles: reference.angles.clone(),
            power,
        };
        mse.push((kind.name().to_string(), beam_mse(&pattern, reference)?));
        series.push((kind.name().to_string(), pattern.power));
    }
    Ok(BeamTable {
        rho,
        angles_deg: cfg.angles.degrees(),
        series,
        mse,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TradeoffRow {
    pub solver: SolverKind,
    pub snr_db: f64,
    pub rho: f64,
    pub avg_sum_rate: f64,
    pub avg_beam_mse: f64,
}

/// Spearman correlations of rho with rate and with beam MSE for one (solver, SNR).
#[derive(Debug, Clone, PartialEq)]
pub struct FrontierShape {
    pub solver: SolverKind,
    pub snr_db: f64,
    pub rate_correlation: f64,
    pub mse_correlation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TradeoffResult {
    /// Grouped by solver and SNR, sorted by rho within each group.
    pub rows: Vec<TradeoffRow>,
    pub frontiers: Vec<FrontierShape>,
}

pub fn tradeoff_from_sweep(sweep: &SweepResult) -> TradeoffResult {
    let mut solvers: Vec<SolverKind> = Vec::new();
    let mut snrs: Vec<f64> = Vec::new();
    for r in &sweep.rows {
        if !solvers.contains(&r.solver) {
            solvers.push(r.solver);
        }
        if !snrs.contains(&r.snr_db) {
            snrs.push(r.snr_db);
        }
    }
    let mut rows = Vec::new();
    let mut frontiers = Vec::new();
    for &solver in &solvers {
        for &snr_db in &snrs {
            let mut group: Vec<&SweepRow> = sweep
                .rows
                .iter()
                .filter(|r| r.solver == solver && r.snr_db == snr_db)
                .collect();
            group.sort_by(|a, b| a.rho.total_cmp(&b.rho));
            let rhos: Vec<f64> = group.iter().map(|r| r.rho).collect();
            let rates: Vec<f64> = group.iter().map(|r| r.avg_sum_rate).collect();
            let mses: Vec<f64> = group.iter().map(|r| r.avg_beam_mse).collect();
            frontiers.push(FrontierShape {
                solver,
                snr_db,
                rate_correlation: spearman(&rhos, &rates),
                mse_correlation: spearman(&rhos, &mses),
            });
            rows.extend(group.iter().map(|r| TradeoffRow {
                solver,
                snr_db,
                rho: r.rho,
                avg_sum_rate: r.avg_sum_rate,
                avg_beam_mse: r.avg_beam_mse,
            }));
        }
    }
    TradeoffResult { rows, frontiers }
}

pub fn run_tradeoff(exp: &Experiment, store: &ModelStore) -> Result<TradeoffResult> {
    Ok(tradeoff_from_sweep(&run_rate_sweep(exp, store)?))
}

/// Ranks starting at 1, ties sharing their average rank.
fn ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            out[k] = avg;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation; NaN when either side is constant or shorter than 2.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len(), "spearman needs paired samples");
    if x.len() < 2 {
        return f64::NAN;
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// Median run time of one solver at one array size.
#[derive(Debug, Clone, PartialEq)]
pub struct TimingRow {
    pub solver: SolverKind,
    pub n: usize,
    pub per_channel_seconds: f64,
    pub min_seconds: f64,
    pub flops: u64,
    pub projection_flops: u64,
    pub repetitions: usize,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Times the network against multi-start PGD, one channel per run.
///
/// Cost does not depend on the weights, so an untrained network of the
/// configured depth stands in for a trained one. PGD runs its full iteration
/// budget (early stopping off).
pub fn run_timing(base: &ExperimentConfig) -> Result<Vec<TimingRow>> {
    let t = &base.timing;
    let mut rows = Vec::new();
    for &n in &t.antennas {
        let mut cfg = base.clone();
        cfg.dims.n = n;
        cfg.rho_grid = vec![t.rho];
        cfg.solvers = vec![SolverKind::Unfolded, SolverKind::Pgd];
        cfg.pgd = PgdConfig {
            starts: t.pgd_starts,
            max_iters: t.pgd_iters,
            tol: 0.0,
            ..cfg.pgd.clone()
        };
        let exp = Experiment::new(cfg)?;
        let model = UnfoldModel::slope_matched_init(n, exp.config().dims.layers, t.rho, exp.power(), None)?;
        let mut samples: HashMap<SolverKind, (Vec<f64>, u64, u64)> = HashMap::new();
        for rep in 0..t.warmup + t.repetitions {
            // Streams far above any sweep channel index.
            let c = (1usize << 40) + rep;
            let p = exp.problem(c, t.rho)?;
            for (kind, designer) in [
                (SolverKind::Unfolded, Designer::Unfolded(&model)),
                (SolverKind::Pgd, Designer::Classical(SolverKind::Pgd)),
            ] {
                let frame = exp.design(designer, &p, c)?;
                if rep >= t.warmup {
                    let e = samples.entry(kind).or_default();
                    e.0.push(frame.wall_time);
                    e.1 = frame.flops;
                    e.2 = frame.projection_flops;
                }
            }
        }
        for kind in [SolverKind::Unfolded, SolverKind::Pgd] {
            let (times, flops, projection_flops) = samples.remove(&kind).expect("timed at least once");
            rows.push(TimingRow {
                solver: kind,
                n,
                min_seconds: times.iter().copied().fold(f64::INFINITY, f64::min),
                per_channel_seconds: median(times),
                flops,
                projection_flops,
                repetitions: t.repetitions,
            });
        }
    }
    Ok(rows)
}
