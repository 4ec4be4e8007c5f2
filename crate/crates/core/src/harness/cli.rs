//! The `jcas` command line.
//!
//! Exit codes: 0 success, 2 usage, 3 configuration, 4 missing model,
//! 5 unreadable model file, 6 other I/O, 1 anything else.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::unfold::{held_out_batch, training_loss, UnfoldModel};

use super::config::{ExperimentConfig, Overrides, SolverKind};
use super::csv::{Cell, CsvTable, Provenance};
use super::sweep::{
    run_beam_pattern, run_rate_sweep, run_timing, tradeoff_from_sweep, Designer, Experiment, ModelStore,
};

pub const EXIT_OTHER: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;
pub const EXIT_MISSING_MODEL: i32 = 4;
pub const EXIT_MODEL_LOAD: i32 = 5;
pub const EXIT_IO: i32 = 6;

#[derive(Debug, Parser)]
#[command(
    name = "jcas",
    version,
    about = "Constant-modulus JCAS waveform design experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train one network per weight (all of rho_grid, or --rho) and save it.
    Train(Common),
    /// Score one solver channel by channel at each (rho, SNR).
    Eval(Common),
    /// Average sum rate against SNR for every weight and solver (rates.csv).
    SweepRate(Common),
    /// Batch-mean beam patterns per weight (beam.csv).
    Beam(Common),
    /// Sum rate against beam MSE across weights (tradeoff.csv).
    Tradeoff(Common),
    /// Per-channel run time of the network and of multi-start PGD (timing.csv).
    Timing(Common),
    /// Print the default configuration, or write it to <out-dir>/config.toml.
    GenConfig {
        #[arg(long = "out-dir", visible_alias = "out")]
        out_dir: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct Common {
    /// TOML configuration; defaults are used for anything missing.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Replaces both `seed` and `train.seed`.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long = "out-dir", visible_alias = "out")]
    out_dir: Option<PathBuf>,
    /// Model file: read by eval/sweeps, written by train. Needs a single weight.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Restricts the weight grid to one value.
    #[arg(long)]
    rho: Option<f64>,
    /// Restricts the SNR grid to one value (dB).
    #[arg(long = "snr-db", allow_hyphen_values = true)]
    snr_db: Option<f64>,
    /// Restricts the solvers to one: unfolded, pgd, phase_grid or benchmark.
    #[arg(long)]
    solver: Option<SolverKind>,
}

impl Common {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        Overrides {
            seed: self.seed,
            out_dir: self.out_dir.clone(),
            rho: self.rho,
            snr_db: self.snr_db,
            solver: self.solver,
        }
        .apply(&mut cfg);
        cfg.validate()?;
        if self.model.is_some() && cfg.rho_grid.len() != 1 {
            return Err(Error::Configuration(
                "--model names a single network; pass --rho as well".into(),
            ));
        }
        Ok(cfg)
    }

    fn store(&self, cfg: &ExperimentConfig) -> ModelStore {
        match &self.model {
            Some(path) => ModelStore::pinned(path),
            None => ModelStore::from_config(cfg),
        }
    }
}

/// Maps an error onto the documented exit codes.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config { .. } | Error::Configuration(_) => EXIT_CONFIG,
        Error::MissingModel { .. } => EXIT_MISSING_MODEL,
        Error::ModelLoad { .. } => EXIT_MODEL_LOAD,
        Error::Io { .. } => EXIT_IO,
        _ => EXIT_OTHER,
    }
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match dispatch(cli.command, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "jcas: error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    match command {
        Command::GenConfig { out_dir } => gen_config(out_dir.as_deref(), out),
        Command::Train(c) => cmd_train(&c, out, err),
        Command::Eval(c) => cmd_eval(&c, out, err),
        Command::SweepRate(c) => cmd_sweep(&c, out, err),
        Command::Beam(c) => cmd_beam(&c, out, err),
        Command::Tradeoff(c) => cmd_tradeoff(&c, out, err),
        Command::Timing(c) => cmd_timing(&c, out),
    }
}

fn say(w: &mut dyn Write, line: impl AsRef<str>) {
    let _ = writeln!(w, "{}", line.as_ref());
}

const CONFIG_HEADER: &str = "\
# jcas experiment configuration (schema_version 1).
# Powers are in dBm (p_t_dbm) or linear watts, SNR in dB, angles in degrees,
# chirp steering angles in radians. Missing keys take the values below.
";

fn gen_config(out_dir: Option<&Path>, out: &mut dyn Write) -> Result<()> {
    let text = format!("{CONFIG_HEADER}\n{}", ExperimentConfig::default().to_toml());
    match out_dir {
        Some(dir) => {
            let path = dir.join("config.toml");
            super::write_atomic(&path, text.as_bytes())?;
            say(out, format!("wrote {}", path.display()));
        }
        None => {
            let _ = out.write_all(text.as_bytes());
        }
    }
    Ok(())
}

/// Triggers (and reports) any training the command will need, up front.
fn prepare_models(exp: &Experiment, store: &ModelStore, err: &mut dyn Write) -> Result<()> {
    let cfg = exp.config();
    if !cfg.solvers.contains(&SolverKind::Unfolded) {
        return Ok(());
    }
    for &rho in &cfg.rho_grid {
        if store.will_train(cfg, rho) {
            say(
                err,
                format!("training network for rho = {rho} ({} steps)", cfg.train.steps),
            );
        }
        store.get(exp, rho)?;
    }
    Ok(())
}

fn provenance(command: &str, cfg: &ExperimentConfig) -> Provenance {
    Provenance::new(command, &cfg.sha256(), cfg.seed)
        .with("p_t_w", super::csv::format_float(cfg.power()))
        .with(
            "units",
            "sum rate bit/s/Hz; mui W; beam_mse W^2 (linear); power W; time s",
        )
}

fn cmd_train(c: &Common, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let cfg = c.resolve()?;
    let exp = Experiment::new(cfg.clone())?;
    let store = match &c.model {
        Some(path) => ModelStore::pinned(path),
        None => ModelStore::new(cfg.output.models(), true),
    };
    let dims = cfg.train_dims();
    for &rho in &cfg.rho_grid {
        say(
            err,
            format!("training network for rho = {rho} ({} steps)", cfg.train.steps),
        );
        let (model, path) = store.train_and_save(&exp, rho)?;
        let held = held_out_batch(dims, rho, 500, cfg.seed)?;
        let untrained = UnfoldModel::pgd_init(dims.n, dims.layers, rho, dims.p_t, None)?;
        say(
            out,
            format!(
                "rho={rho} final_batch_loss={:.6e} held_out_loss={:.6e} untrained_held_out_loss={:.6e} -> {}",
                model.meta.final_loss,
                training_loss(&model, &held)?,
                training_loss(&untrained, &held)?,
                path.display()
            ),
        );
    }
    Ok(())
}

fn cmd_eval(c: &Common, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let cfg = c.resolve()?;
    let exp = Experiment::new(cfg.clone())?;
    let store = c.store(&cfg);
    prepare_models(&exp, &store, err)?;
    let mut columns = vec![
        "rho",
        "snr_db",
        "solver",
        "channel",
        "sum_rate_bps_hz",
        "mui_w",
        "beam_mse_w2",
    ];
    if cfg.record_wall_time {
        columns.push("wall_time_s");
    }
    columns.extend(["flops", "projection_flops", "max_modulus_deviation"]);
    let mut table = CsvTable::new(columns);
    for &rho in &cfg.rho_grid {
        for &kind in &cfg.solvers {
            let batch = match kind {
                SolverKind::Unfolded => exp.design_batch(Designer::Unfolded(&*store.get(&exp, rho)?), rho)?,
                other => exp.design_batch(Designer::Classical(other), rho)?,
            };
            for (si, &snr) in cfg.snr_grid_db.iter().enumerate() {
                for (ch, o) in batch.iter().enumerate() {
                    let mut row: Vec<Cell> = vec![
                        rho.into(),
                        snr.into(),
                        kind.name().into(),
                        ch.into(),
                        o.projected.sum_rates[si].into(),
                        o.projected.mui_power.into(),
                        o.projected.beam_mse.into(),
                    ];
                    if cfg.record_wall_time {
                        row.push(o.wall_time.into());
                    }
                    row.extend([
                        o.flops.into(),
                        o.projection_flops.into(),
                        o.modulus_deviation.into(),
                    ]);
                    table.push(row);
                }
            }
        }
    }
    let path = cfg.output.dir.join("eval.csv");
    table.write(&path, &provenance("eval", &cfg))?;
    say(
        out,
        format!("wrote {} ({} rows)", path.display(), table.rows.len()),
    );
    Ok(())
}

fn cmd_sweep(c: &Common, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let cfg = c.resolve()?;
    let exp = Experiment::new(cfg.clone())?;
    let store = c.store(&cfg);
    prepare_models(&exp, &store, err)?;
    let sweep = run_rate_sweep(&exp, &store)?;
    let mut columns = vec![
        "rho",
        "snr_db",
        "solver",
        "avg_sum_rate_bps_hz",
        "avg_mui_w",
        "avg_beam_mse_w2",
    ];
    if cfg.record_wall_time {
        columns.push("avg_wall_time_s");
    }
    columns.extend([
        "avg_flops",
        "avg_projection_flops",
        "raw_avg_sum_rate_bps_hz",
        "raw_avg_beam_mse_w2",
        "max_modulus_deviation",
    ]);
    let mut table = CsvTable::new(columns);
    for r in &sweep.rows {
        let mut row: Vec<Cell> = vec![
            r.rho.into(),
            r.snr_db.into(),
            r.solver.name().into(),
            r.avg_sum_rate.into(),
            r.avg_mui.into(),
            r.avg_beam_mse.into(),
        ];
        if cfg.record_wall_time {
            row.push(r.avg_wall_time.into());
        }
        row.extend([
            r.avg_flops.into(),
            r.avg_projection_flops.into(),
            r.raw_sum_rate.into(),
            r.raw_beam_mse.into(),
            r.max_modulus_deviation.into(),
        ]);
        table.push(row);
    }
    let path = cfg.output.dir.join("rates.csv");
    let prov = provenance("sweep-rate", &cfg).with("batch_count", cfg.batch_count.to_string());
    table.write(&path, &prov)?;
    say(
        out,
        format!("wrote {} ({} rows)", path.display(), table.rows.len()),
    );
    Ok(())
}

fn cmd_beam(c: &Common, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let cfg = c.resolve()?;
    let exp = Experiment::new(cfg.clone())?;
    let store = c.store(&cfg);
    prepare_models(&exp, &store, err)?;
    let mut table = CsvTable::new(["rho", "series", "angle_deg", "power_w"]);
    for &rho in &cfg.rho_grid {
        let beam = run_beam_pattern(&exp, &store, rho)?;
        for (name, power) in &beam.series {
            for (angle, p) in beam.angles_deg.iter().zip(power) {
                table.push(vec![
                    rho.into(),
                    name.as_str().into(),
                    (*angle).into(),
                    (*p).into(),
                ]);
            }
        }
        for (name, mse) in &beam.mse {
            say(
                out,
                format!("rho={rho} {name}: mean-pattern beam_mse={mse:.6e} W^2"),
            );
        }
    }
    let path = cfg.output.dir.join("beam.csv");
    table.write(&path, &provenance("beam", &cfg))?;
    say(
        out,
        format!("wrote {} ({} rows)", path.display(), table.rows.len()),
    );
    Ok(())
}

fn cmd_tradeoff(c: &Common, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let cfg = c.resolve()?;
    let exp = Experiment::new(cfg.clone())?;
    let store = c.store(&cfg);
    prepare_models(&exp, &store, err)?;
    let result = tradeoff_from_sweep(&run_rate_sweep(&exp, &store)?);
    let mut table = CsvTable::new([
        "solver",
        "snr_db",
        "rho",
        "avg_sum_rate_bps_hz",
        "avg_beam_mse_w2",
    ]);
    for r in &result.rows {
        table.push(vec![
            r.solver.name().into(),
            r.snr_db.into(),
            r.rho.into(),
            r.avg_sum_rate.into(),
            r.avg_beam_mse.into(),
        ]);
    }
    for f in &result.frontiers {
        say(
            out,
            format!(
                "{} snr={} dB: spearman(rho, rate)={:.3} spearman(rho, beam_mse)={:.3}",
                f.solver, f.snr_db, f.rate_correlation, f.mse_correlation
            ),
        );
    }
    let path = cfg.output.dir.join("tradeoff.csv");
    table.write(&path, &provenance("tradeoff", &cfg))?;
    say(
        out,
        format!("wrote {} ({} rows)", path.display(), table.rows.len()),
    );
    Ok(())
}

fn cmd_timing(c: &Common, out: &mut dyn Write) -> Result<()> {
    let cfg = c.resolve()?;
    let rows = run_timing(&cfg)?;
    let mut table = CsvTable::new([
        "solver",
        "n",
        "per_channel_seconds",
        "min_seconds",
        "flops",
        "projection_flops",
        "repetitions",
    ]);
    for r in &rows {
        table.push(vec![
            r.solver.name().into(),
            r.n.into(),
            r.per_channel_seconds.into(),
            r.min_seconds.into(),
            r.flops.into(),
            r.projection_flops.into(),
            r.repetitions.into(),
        ]);
    }
    for pair in rows.chunks(2) {
        if let [net, pgd] = pair {
            say(
                out,
                format!(
                    "N={}: unfolded {:.3e} s, pgd {:.3e} s per channel ({:.1}x)",
                    net.n,
                    net.per_channel_seconds,
                    pgd.per_channel_seconds,
                    pgd.per_channel_seconds / net.per_channel_seconds
                ),
            );
        }
    }
    let path = cfg.output.dir.join("timing.csv");
    let prov = provenance("timing", &cfg).with("note", "wall-clock medians; machine dependent");
    table.write(&path, &prov)?;
    say(out, format!("wrote {}", path.display()));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(
            std::iter::once("jcas").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn usage_errors() {
        let (code, _, err) = run_capture(&["frobnicate"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("Usage"));
        assert_eq!(run_capture(&["sweep-rate", "--bogus"]).0, EXIT_USAGE);
        assert_eq!(run_capture(&["sweep-rate", "--solver", "bnb"]).0, EXIT_USAGE);
        assert_eq!(run_capture(&["--help"]).0, 0);
    }

    #[test]
    fn gen_config_prints_defaults() {
        let (code, out, _) = run_capture(&["gen-config"]);
        assert_eq!(code, 0);
        let body: String = out
            .lines()
            .filter(|l| !l.starts_with('#'))
            .collect::<Vec<_>>()
            .join("\n");
        assert_eq!(
            ExperimentConfig::parse(&body).unwrap(),
            ExperimentConfig::default()
        );
    }

    #[test]
    fn config_errors() {
        let (code, _, err) = run_capture(&["sweep-rate", "--config", "/nonexistent/cfg.toml"]);
        assert_eq!(code, EXIT_CONFIG);
        assert_eq!(err.lines().count(), 1);
        assert_eq!(run_capture(&["beam", "--rho", "1.5"]).0, EXIT_CONFIG);
        assert_eq!(run_capture(&["eval", "--model", "m.bin"]).0, EXIT_CONFIG);
    }
}
