//! Classical per-column solvers and the frame-level driver.

mod pgd;
mod phase_grid;

use std::time::Instant;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use pgd::{pgd_multistart, pgd_solve, random_unit_start, PgdConfig, PgdOutcome};
pub use phase_grid::{grid_gap_bound, phase_grid_solve, PhaseGridConfig, PhaseGridOutcome};

use crate::error::Result;
use crate::flops::FlopTally;
use crate::metrics::{beam_pattern, evaluate, EvalReport, EvalSettings, Waveform};
use crate::problem::{assemble_waveform, decompose_columns, JcasProblem};

/// Which classical solver [`solve_frame`] runs on every column.
#[derive(Debug, Clone, PartialEq)]
pub enum ColumnSolver {
    Pgd(PgdConfig),
    PhaseGrid(PhaseGridConfig),
}

/// Solves each column independently, assembles the frame and scores it.
///
/// Random PGD restarts for column `m` draw from stream `m` of `cfg.seed`, so the
/// result does not depend on how columns are scheduled.
pub fn solve_frame(
    p: &JcasProblem,
    solver: &ColumnSolver,
    settings: &EvalSettings,
) -> Result<(Waveform, EvalReport)> {
    let start = Instant::now();
    let mut flops = FlopTally::default();
    let columns = decompose_columns(p);
    let mut solutions: Vec<DVector<f64>> = Vec::with_capacity(columns.len());
    for (m, col) in columns.iter().enumerate() {
        let xbar = match solver {
            ColumnSolver::Pgd(cfg) => {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                rng.set_stream(m as u64);
                let out = pgd_multistart(col, cfg, &mut rng)?;
                flops.0 += out.flops;
                out.xbar
            }
            ColumnSolver::PhaseGrid(cfg) => phase_grid_solve(col, cfg)?.xbar,
        };
        solutions.push(xbar);
    }
    let waveform = assemble_waveform(&solutions, p.p_t, p.antennas())?;
    let wall_time = start.elapsed().as_secs_f64();

    let reference = beam_pattern(
        &Waveform::hard(p.x0.matrix().clone(), p.p_t)?,
        &settings.grid,
        settings.delta,
    )?;
    let mut report = evaluate(&p.h, &p.s, &waveform, &reference, settings)?;
    report.wall_time = wall_time;
    report.flops = flops.0;
    Ok((waveform, report))
}
