//! Exhaustive search over quantized per-antenna phases.
//!
//! The feasible set is a product of circles, so enumerating a uniform phase grid
//! on every antenna gives the global optimum up to the grid resolution. Cost is
//! `grid_points^N` objective evaluations; only tiny arrays are allowed.

use std::f64::consts::{PI, TAU};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::RealColumnProblem;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhaseGridConfig {
    /// Phases per entry, uniform on `[0, 2 pi)`.
    pub grid_points: usize,
    pub max_antennas: usize,
}

impl Default for PhaseGridConfig {
    fn default() -> Self {
        PhaseGridConfig {
            grid_points: 720,
            max_antennas: 3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PhaseGridOutcome {
    pub xbar: DVector<f64>,
    pub objective: f64,
    /// Winning grid index per antenna.
    pub indices: Vec<usize>,
}

/// Global minimizer over the phase grid. Ties go to the lexicographically
/// smallest index tuple.
pub fn phase_grid_solve(p: &RealColumnProblem, cfg: &PhaseGridConfig) -> Result<PhaseGridOutcome> {
    if cfg.grid_points < 2 {
        return Err(Error::Parameter(format!(
            "phase grid needs at least 2 points, got {}",
            cfg.grid_points
        )));
    }
    let n = p.antennas();
    if n > cfg.max_antennas {
        return Err(Error::Size(format!(
            "phase-grid search over {n} antennas exceeds the cap of {} ({}^{n} evaluations)",
            cfg.max_antennas, cfg.grid_points
        )));
    }
    let g = cfg.grid_points;
    let table: Vec<(f64, f64)> = (0..g)
        .map(|i| {
            let phase = TAU * i as f64 / g as f64;
            (phase.cos(), phase.sin())
        })
        .collect();

    let mut idx = vec![0usize; n];
    let mut x = vec![0.0; 2 * n];
    let mut best = f64::INFINITY;
    let mut best_idx = idx.clone();
    loop {
        for (a, &i) in idx.iter().enumerate() {
            x[a] = table[i].0;
            x[a + n] = table[i].1;
        }
        let f = p.objective_unchecked(&x);
        if f < best {
            best = f;
            best_idx.copy_from_slice(&idx);
        }
        // Odometer increment, last antenna fastest: lexicographic order.
        let mut pos = n;
        loop {
            if pos == 0 {
                let xbar = DVector::from_fn(2 * n, |i, _| {
                    if i < n {
                        table[best_idx[i]].0
                    } else {
                        table[best_idx[i - n]].1
                    }
                });
                return Ok(PhaseGridOutcome {
                    xbar,
                    objective: best,
                    indices: best_idx,
                });
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < g {
                break;
            }
            idx[pos] = 0;
        }
    }
}

/// Upper bound on how far the grid optimum can sit above the continuous optimum.
///
/// Every feasible point lies within `r = sqrt(N) * 2 sin(pi / (2 G))` of a grid
/// point. The objective is `x^T Q x - 2 b^T x + const`, so on the feasible set
/// its gradient is at most `2 lambda_max(Q) sqrt(N) + 2 ||b||` and a step of
/// length `r` raises it by at most that times `r` plus `lambda_max(Q) r^2`.
pub fn grid_gap_bound(p: &RealColumnProblem, grid_points: usize) -> f64 {
    let n = p.antennas() as f64;
    let c2 = p.power() / n;
    let c = c2.sqrt();
    let rho = p.rho();
    let radius = n.sqrt() * 2.0 * (PI / (2.0 * grid_points as f64)).sin();
    let lambda_q = rho * c2 * p.terms().lambda_max() + (1.0 - rho) * c2;
    let b = p.hbar_t_sbar() * (rho * c) + p.x0bar() * ((1.0 - rho) * c2);
    (2.0 * lambda_q * n.sqrt() + 2.0 * b.norm()) * radius + lambda_q * radius * radius
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{expand_vector, Channel};
    use crate::C64;
    use nalgebra::DMatrix;

    fn scalar_problem(h: C64, s: C64, x0_phase: f64, rho: f64) -> RealColumnProblem {
        let ch = Channel::new(DMatrix::from_element(1, 1, h)).unwrap();
        let s = DVector::from_element(1, s);
        let x0 = DVector::from_element(1, C64::from_polar(1.0, x0_phase));
        RealColumnProblem::from_complex(&ch, &s, &x0, rho, 1.0).unwrap()
    }

    #[test]
    fn sensing_only_recovers_on_grid_benchmark() {
        let phase = TAU * 37.0 / 720.0;
        let p = scalar_problem(C64::new(0.3, 0.2), C64::new(1.0, 0.0), phase, 0.0);
        let out = phase_grid_solve(&p, &PhaseGridConfig::default()).unwrap();
        assert_eq!(out.indices, vec![37]);
        assert!(out.objective < 1e-24);
    }

    #[test]
    fn scalar_phase_alignment() {
        let s = C64::from_polar(1.0, TAU * 100.0 / 720.0);
        let p = scalar_problem(C64::new(1.0, 0.0), s, 0.0, 1.0);
        let out = phase_grid_solve(&p, &PhaseGridConfig::default()).unwrap();
        assert_eq!(out.indices, vec![100]);
        // |1 * e^{j phi} - s|^2 with |s| = 1 and phi = arg(s).
        assert!(out.objective < 1e-24);
        let x = expand_vector(&DVector::from_element(1, s));
        assert!((&out.xbar - x).amax() < 1e-12);
    }

    #[test]
    fn refinement_never_hurts() {
        let h = Channel::new(DMatrix::from_row_slice(
            1,
            2,
            &[C64::new(0.9, -0.4), C64::new(0.1, 1.3)],
        ))
        .unwrap();
        let s = DVector::from_element(1, C64::new(0.6, 0.8));
        let x0 = DVector::from_element(2, C64::from_polar(1.0, 0.77));
        for rho in [0.0, 0.5, 1.0] {
            let p = RealColumnProblem::from_complex(&h, &s, &x0, rho, 2.0).unwrap();
            let coarse = phase_grid_solve(
                &p,
                &PhaseGridConfig {
                    grid_points: 180,
                    max_antennas: 3,
                },
            )
            .unwrap();
            let fine = phase_grid_solve(&p, &PhaseGridConfig::default()).unwrap();
            assert!(fine.objective <= coarse.objective);
            assert!(coarse.objective - fine.objective <= grid_gap_bound(&p, 180));
        }
    }

    #[test]
    fn tie_break_is_lexicographic() {
        // A zero channel at rho = 1 makes every point optimal.
        let p = scalar_problem(C64::new(0.0, 0.0), C64::new(1.0, 0.0), 0.0, 1.0);
        let out = phase_grid_solve(
            &p,
            &PhaseGridConfig {
                grid_points: 8,
                max_antennas: 3,
            },
        )
        .unwrap();
        assert_eq!(out.indices, vec![0]);
    }

    #[test]
    fn size_cap_enforced() {
        let h = Channel::new(DMatrix::from_element(1, 4, C64::new(1.0, 0.0))).unwrap();
        let s = DVector::from_element(1, C64::new(1.0, 0.0));
        let x0 = DVector::from_element(4, C64::new(1.0, 0.0));
        let p = RealColumnProblem::from_complex(&h, &s, &x0, 0.5, 4.0).unwrap();
        assert!(matches!(
            phase_grid_solve(&p, &PhaseGridConfig::default()),
            Err(Error::Size(_))
        ));
        let bad = PhaseGridConfig {
            grid_points: 1,
            max_antennas: 8,
        };
        assert!(matches!(phase_grid_solve(&p, &bad), Err(Error::Parameter(_))));
    }
}
