use ndarray::{Array1, Array2, Array3};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sparse_gev::baselines::lasso_granger;
use sparse_gev::evd::GumbelParams;
use sparse_gev::inference::{proposal_params, run_filter, systematic_resample};
use sparse_gev::io::{panel_csv, read_panel};
use sparse_gev::lasso::{kkt_residual, solve_gram_lasso, LassoOptions};
use sparse_gev::model::simulate;
use sparse_gev::{Model, Panel, EULER_GAMMA};

mod common;

proptest! {
    #[test]
    fn proposal_mode_lies_between_factor_modes(
        x in -10.0f64..10.0,
        mt in -10.0f64..10.0,
        s in 0.02f64..5.0,
        t in 0.02f64..5.0,
    ) {
        let p = proposal_params(x, mt, s, t).unwrap();
        let (lo, hi) = (x.min(mt), x.max(mt));
        let slack = 1e-9 * (1.0 + x.abs() + mt.abs());
        prop_assert!(p.mean >= lo - slack && p.mean <= hi + slack);
        prop_assert!(p.variance > 0.0 && p.variance <= t * t);
    }

    #[test]
    fn gumbel_quantile_inverts_cdf(mu in -50.0f64..50.0, s in 0.01f64..20.0, q in 1e-6f64..(1.0 - 1e-6)) {
        let g = GumbelParams::new(mu, s).unwrap();
        let z = g.quantile(q).unwrap();
        prop_assert!((g.cdf(z).unwrap() - q).abs() <= 1e-12);
    }

    #[test]
    fn lasso_meets_kkt(seed in 0u64..1000, d in 1usize..8, frac in 0.0f64..1.2) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = d + 5;
        let a = Array2::from_shape_fn((n, d), |_| rng.random_range(-1.0..1.0));
        let y = Array1::from_shape_fn(n, |_| rng.random_range(-1.0..1.0));
        let g = a.t().dot(&a) / n as f64;
        let r = a.t().dot(&y) / n as f64;
        let lambda = frac * r.iter().fold(0f64, |m, v| m.max(2.0 * v.abs()));
        let sol = solve_gram_lasso(g.view(), r.view(), lambda, None, &LassoOptions::default()).unwrap();
        prop_assert!(kkt_residual(g.view(), r.view(), lambda, sol.coef.view()) <= 1e-8);
        if frac >= 1.0 {
            prop_assert!(sol.coef.iter().all(|&b| b == 0.0));
        }
    }

    #[test]
    fn csv_round_trip_is_bit_exact(vals in prop::collection::vec(prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO, 6)) {
        let v = Array2::from_shape_vec((3, 2), vals).unwrap();
        let names = vec!["a".to_string(), "b".to_string()];
        let back: Panel = read_panel(panel_csv(&names, v.view(), None).as_bytes()).unwrap();
        for (x, y) in back.values().iter().zip(v.iter()) {
            prop_assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn prediction_shifts_with_offset(delta in -5.0f64..5.0) {
        let p = 3;
        let m = Model::independent(vec![0.1, -0.2, 0.3], vec![0.5, 1.0, 2.0], 0.3, 2).unwrap();
        let shifted = Model::independent(m.c().iter().map(|c| c + delta).collect(), m.sigma().to_vec(), 0.3, 2).unwrap();
        let hist = Array2::from_shape_fn((2, p), |(t, i)| (t * p + i) as f64 * 0.1);
        let a = m.predict_next(hist.view()).unwrap();
        let b = shifted.predict_next(hist.view()).unwrap();
        for i in 0..p {
            prop_assert!((b[i] - a[i] - delta).abs() < 1e-12);
            prop_assert!((a[i] - (m.c()[i] + EULER_GAMMA * m.sigma()[i])).abs() < 1e-12);
        }
    }
}

#[test]
fn systematic_resampling_is_unbiased() {
    use rand::Rng;
    let w = Array1::from(vec![0.05, 0.3, 0.15, 0.4, 0.1]);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let reps = 20_000;
    let mut counts = [0usize; 5];
    for _ in 0..reps {
        let idx = systematic_resample(w.view(), rng.random::<f64>());
        assert_eq!(idx.len(), 5);
        for (k, c) in counts.iter_mut().enumerate() {
            let n = idx.iter().filter(|&&j| j == k).count();
            // systematic resampling keeps every count within one of N w
            assert!((n as f64 - 5.0 * w[k]).abs() < 1.0 + 1e-12);
            *c += n;
        }
    }
    for k in 0..5 {
        let avg = counts[k] as f64 / reps as f64;
        assert!((avg - 5.0 * w[k]).abs() < 0.02, "particle {k}: {avg}");
    }
}

fn one_series_problem() -> (Model, Panel) {
    let mut beta = Array3::zeros((1, 1, 1));
    beta[[0, 0, 0]] = 0.6;
    let model = Model::new(vec![0.1], beta, vec![0.5], 0.5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (panel, _) = simulate(&model, 5, None, 20, &mut rng).unwrap();
    (model, panel)
}

#[test]
fn filter_error_shrinks_with_particles() {
    let (model, panel) = one_series_problem();
    let exact = common::grid_filter(&model, &panel.series(0).to_vec());
    let median_err = |n: usize| {
        let mut errs: Vec<f64> = (0..15)
            .flat_map(|r| {
                let mut rng = ChaCha8Rng::seed_from_u64(900 + r);
                let s = run_filter(&panel, &model, n, &mut rng).unwrap();
                (1..5).map(|t| (s.mean_mu[[t, 0]] - exact[t]).abs()).collect::<Vec<_>>()
            })
            .collect();
        errs.sort_by(f64::total_cmp);
        errs[errs.len() / 2]
    };
    let e: Vec<f64> = [100, 1000, 10_000].iter().map(|&n| median_err(n)).collect();
    assert!(e[0] > e[1] && e[1] > e[2], "{e:?}");
}

#[test]
fn filter_is_seed_deterministic() {
    let (model, panel) = one_series_problem();
    let run = |seed| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        run_filter(&panel, &model, 500, &mut rng).unwrap().mean_mu
    };
    assert_eq!(run(3), run(3));
    assert_ne!(run(3), run(4));
}

#[test]
fn granger_graph_follows_series_permutation() {
    let mut beta = Array3::zeros((4, 4, 2));
    beta[[1, 0, 0]] = 0.7;
    beta[[3, 2, 1]] = -0.6;
    beta[[2, 2, 0]] = 0.5;
    let model = Model::new(vec![0.0; 4], beta, vec![0.3; 4], 0.3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (panel, _) = simulate(&model, 200, None, 50, &mut rng).unwrap();
    let order = [2, 0, 3, 1];
    let g = lasso_granger(&panel, 5.0, 2).unwrap().graph.score_matrix();
    let gp = lasso_granger(&panel.permute_series(&order).unwrap(), 5.0, 2)
        .unwrap()
        .graph
        .score_matrix();
    for a in 0..4 {
        for b in 0..4 {
            assert!((gp[[a, b]] - g[[order[a], order[b]]]).abs() < 1e-9);
        }
    }
}
