//! Experiment driver: configuration, the sweeps behind each figure, CSV
//! output and the command line.

pub mod cli;
pub mod config;
pub mod csv;
pub mod sweep;

pub use config::{ExperimentConfig, Overrides, SolverKind, SCHEMA_VERSION};
pub use sweep::{
    run_beam_pattern, run_rate_sweep, run_timing, run_tradeoff, spearman, tradeoff_from_sweep, BeamTable,
    ChannelOutcome, DesignedFrame, Designer, Experiment, ModelStore, SweepResult, SweepRow, TimingRow,
    TradeoffResult, TradeoffRow,
};

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// Writes `bytes` to a sibling temporary file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.tmp{}", std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(Error::io(path, e));
    }
    Ok(())
}
