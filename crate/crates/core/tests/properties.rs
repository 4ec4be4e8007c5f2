//! Cross-module invariants on randomly drawn instances.

use jcas_unfold::metrics::{beam_pattern, per_user_sinr, sum_rate, Waveform};
use jcas_unfold::problem::{decompose_columns, project_cm, JcasProblem, RealColumnProblem};
use jcas_unfold::signal::{
    chirp_benchmark, expand_matrix, expand_vector, sample_channel, sample_qpsk_frame, ChirpVariant,
};
use jcas_unfold::solvers::{pgd_multistart, pgd_solve, PgdConfig};
use jcas_unfold::unfold::{decode_model, design_waveform, encode_model};
use jcas_unfold::{UnfoldModel, C64};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn problem(seed: u64, k: usize, n: usize, m: usize, rho: f64, p_t: f64) -> JcasProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = sample_channel(k, n, &mut rng).unwrap();
    let s = sample_qpsk_frame(k, m, &mut rng).unwrap();
    let x0 = chirp_benchmark(n, m, p_t, ChirpVariant::Focused { steer_angle: 0.3 }, 0.5).unwrap();
    JcasProblem::new(h, s, x0, rho, p_t).unwrap()
}

fn column(seed: u64, n: usize, rho: f64) -> RealColumnProblem {
    decompose_columns(&problem(seed, 3, n, 2, rho, 2.0)).swap_remove(1)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn real_expansion_commutes_with_products(seed in any::<u64>(), k in 1usize..5, n in 1usize..7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = sample_channel(k, n, &mut rng).unwrap();
        let x = sample_qpsk_frame(n, 1, &mut rng).unwrap().matrix().column(0).into_owned();
        let lhs = expand_matrix(h.matrix()) * expand_vector(&x);
        let rhs = expand_vector(&(h.matrix() * &x));
        prop_assert!((lhs - rhs).amax() < 1e-12);
    }

    #[test]
    fn projection_is_unit_modulus_and_idempotent(v in prop::collection::vec(-5.0f64..5.0, 2..17usize)) {
        let v = if v.len() % 2 == 1 { v[1..].to_vec() } else { v };
        let once = project_cm(&v).unwrap();
        let n = v.len() / 2;
        for i in 0..n {
            prop_assert!((once[i].hypot(once[i + n]) - 1.0).abs() < 1e-12);
        }
        let twice = project_cm(once.as_slice()).unwrap();
        prop_assert!((twice - &once).amax() < 1e-15);
    }

    #[test]
    fn small_gradient_steps_descend(seed in any::<u64>(), rho in 0.0f64..=1.0, n in 1usize..7) {
        let p = column(seed, n, rho);
        let x: Vec<f64> = (0..2 * n).map(|i| ((seed >> (i % 60)) & 7) as f64 / 7.0 - 0.5).collect();
        let g = p.gradient(&x).unwrap();
        prop_assume!(g.norm() > 1e-9);
        let step: Vec<f64> = x.iter().zip(g.iter()).map(|(a, b)| a - 1e-4 * b).collect();
        prop_assert!(p.objective(&step).unwrap() <= p.objective(&x).unwrap());
    }

    #[test]
    fn pgd_is_feasible_and_restarts_never_hurt(seed in any::<u64>(), rho in 0.0f64..=1.0, n in 1usize..6) {
        let p = column(seed, n, rho);
        let cfg = PgdConfig { max_iters: 60, ..PgdConfig::default() };
        let single = pgd_solve(&p, &cfg, p.x0bar().as_slice()).unwrap();
        let multi = pgd_multistart(&p, &PgdConfig { starts: 4, ..cfg }, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        prop_assert!(multi.objective <= single.objective);
        for out in [&single, &multi] {
            for i in 0..n {
                prop_assert!((out.xbar[i].hypot(out.xbar[i + n]) - 1.0).abs() < 1e-9);
            }
            prop_assert!((p.objective(out.xbar.as_slice()).unwrap() - out.objective).abs() <= 1e-9 * out.objective.abs().max(1.0));
        }
    }

    #[test]
    fn any_network_yields_a_feasible_frame(seed in any::<u64>(), scale in 0.0f64..3.0, rho in 0.0f64..=1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = UnfoldModel::random_init(4, 3, rho, 2.0, scale, &mut rng).unwrap();
        let d = design_waveform(&model, &problem(seed, 2, 4, 5, rho, 2.0)).unwrap();
        prop_assert!(d.waveform.is_hard());
        prop_assert!(d.waveform.worst_modulus_deviation().unwrap() < 1e-9);
    }

    #[test]
    fn model_bytes_round_trip(seed in any::<u64>(), n in 1usize..6, layers in 1usize..5, scale in 0.0f64..10.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = UnfoldModel::random_init(n, layers, 0.25, 3.0, scale, &mut rng).unwrap();
        let bytes = encode_model(&model);
        let back = decode_model(&bytes).unwrap();
        prop_assert_eq!(encode_model(&back), bytes);
        prop_assert_eq!(back.layers, model.layers);
    }

    #[test]
    fn rate_falls_as_noise_rises(seed in any::<u64>(), n0 in 1e-3f64..10.0) {
        let p = problem(seed, 3, 4, 6, 1.0, 1.0);
        let x = Waveform::hard(p.x0.matrix().clone(), 1.0).unwrap();
        let quiet = sum_rate(&per_user_sinr(&p.h, &x, &p.s, n0).unwrap()).unwrap();
        let loud = sum_rate(&per_user_sinr(&p.h, &x, &p.s, 2.0 * n0).unwrap()).unwrap();
        prop_assert!(loud <= quiet);
    }

    #[test]
    fn beam_power_is_bounded_by_coherent_gain(seed in any::<u64>(), n in 1usize..9, m in 1usize..9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let frame = sample_qpsk_frame(n, m, &mut rng).unwrap().matrix().clone();
        let p_t = n as f64;
        let x = Waveform::hard(frame, p_t).unwrap();
        let grid: Vec<f64> = (0..37).map(|i| (i as f64 / 36.0 - 0.5) * std::f64::consts::PI).collect();
        let pattern = beam_pattern(&x, &grid, 0.5).unwrap();
        // |a^H x|^2 <= ||a||^2 ||x||^2 = N P_T per column.
        prop_assert!(pattern.power.iter().all(|&v| (0.0..=n as f64 * p_t + 1e-9).contains(&v)));
    }
}

#[test]
fn frame_problem_splits_into_its_columns() {
    let p = problem(9, 3, 4, 5, 0.4, 2.0);
    let cols = decompose_columns(&p);
    assert_eq!(cols.len(), 5);
    let x = DMatrix::<C64>::from_fn(4, 5, |i, j| C64::from_polar(0.5f64.sqrt(), (i * 5 + j) as f64));
    let total: f64 = cols
        .iter()
        .enumerate()
        .map(|(j, c)| {
            c.objective(expand_vector(&(x.column(j).into_owned() / C64::new(0.5f64.sqrt(), 0.0))).as_slice())
                .unwrap()
        })
        .sum();
    let direct = p.frame_objective(&x).unwrap();
    assert!(
        (total - direct).abs() <= 1e-9 * direct.max(1.0),
        "{total} vs {direct}"
    );
}
