use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use varcpd_core::estimation::*;
use varcpd_core::scenario::base_model;
use varcpd_core::*;

fn random_model(rng: &mut ChaCha8Rng, p: usize, h: usize) -> VarModel {
    let a = (0..h)
        .map(|_| DMatrix::from_fn(p, p, |_, _| rng.random_range(-1.0..1.0) * 0.5 / (p * h) as f64))
        .collect();
    VarModel::new(a, NoiseScale::Scalar(1.0), NoiseKind::Gaussian).unwrap()
}

fn view(seed: u64, p: usize, h: usize, n: usize) -> RegressionView {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = random_model(&mut rng, p, h);
    let data = simulate(&ChangeSpec::stationary(m, n + h).unwrap(), seed).unwrap();
    build_regression(&data, h).unwrap()
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn decoupled_fit_equals_stacked_problem(seed in 0u64..1000, p in 1usize..4, h in 1usize..3, frac in 0.0f64..0.5) {
        let reg = view(seed, p, h, 120);
        let lambda = frac * lambda_max(&reg);
        let opts = LassoOptions { tol: 1e-13, max_sweeps: 1_000_000 };
        let decoupled = fit_lasso_with(&reg, lambda, &opts, None).unwrap();

        // Z = I_p (x) X against vec(Y), with the 1/n of the original objective.
        let (n, hp) = (reg.samples(), reg.predictors());
        let z = DMatrix::from_fn(n * p, hp * p, |r, c| {
            if r / n == c / hp { reg.x[(r % n, c % hp)] } else { 0.0 }
        });
        let y = DVector::from_fn(n * p, |r, _| reg.y[(r % n, r / n)]);
        let gram = z.tr_mul(&z) / n as f64;
        let corr = (z.tr_mul(&y) / n as f64).as_slice().to_vec();
        let mut cd = CoordinateDescent::new(&gram, &corr, lambda, None);
        cd.solve(&opts).unwrap();
        for (a, b) in decoupled.iter().zip(cd.beta()) {
            prop_assert!((a - b).abs() < 1e-10, "{} vs {}", a, b);
        }
    }

    #[test]
    fn moments_scale_with_the_data(seed in 0u64..1000, c in 0.1f64..10.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_model(&mut rng, 3, 1);
        let data = simulate(&ChangeSpec::stationary(m, 301).unwrap(), seed).unwrap();
        let opts = LassoOptions { tol: 1e-12, max_sweeps: 1_000_000 };
        let reg = build_regression(&data, 1).unwrap();
        let reg_c = build_regression(&data.scaled(c), 1).unwrap();
        let beta = fit_lasso_with(&reg, 0.0, &opts, None).unwrap();
        let beta_c = fit_lasso_with(&reg_c, 0.0, &opts, None).unwrap();
        for (a, b) in beta.iter().zip(&beta_c) {
            prop_assert!((a - b).abs() < 1e-8);
        }
        for mode in [VarianceMode::Homogeneous, VarianceMode::Heterogeneous] {
            let m1 = estimate_moments(&reg, &beta, mode).unwrap();
            let mc = estimate_moments(&reg_c, &beta, mode).unwrap();
            for j in 0..3 {
                let (s, sc) = (m1.sigma2.component(j), mc.sigma2.component(j));
                let (v, vc) = (m1.fourth.component(j), mc.fourth.component(j));
                prop_assert!((sc - c * c * s).abs() <= 1e-10 * sc.abs().max(1e-300));
                prop_assert!((vc - c.powi(4) * v).abs() <= 1e-9 * vc.abs().max(1e-300));
            }
        }
    }
}

#[test]
fn unpenalized_fits_match_normal_equations() {
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (p, h) = (rng.random_range(1..=5), rng.random_range(1..=2));
        let reg = view(seed, p, h, 500);
        let opts = LassoOptions { tol: 1e-12, max_sweeps: 1_000_000 };
        let beta = fit_lasso_with(&reg, 0.0, &opts, None).unwrap();
        let xtx = reg.x.tr_mul(&reg.x);
        let lu = xtx.lu();
        let hp = reg.predictors();
        for j in 0..p {
            let ls = lu.solve(&reg.x.tr_mul(&reg.y.column(j))).unwrap();
            for c in 0..hp {
                assert!((beta[j * hp + c] - ls[c]).abs() < 1e-6, "seed {seed}");
            }
        }
    }
}

#[test]
fn kkt_certificates_on_random_instances() {
    let tol = 10.0 * LassoOptions::default().tol;
    (0..100u64).into_par_iter().for_each(|seed| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 500);
        let (p, h) = (rng.random_range(1..=5), rng.random_range(1..=2));
        let reg = view(seed + 500, p, h, 300);
        let lambda = rng.random_range(0.01..0.5) * lambda_max(&reg);
        let beta = fit_lasso(&reg, lambda).unwrap();
        let (n, hp) = (reg.samples(), reg.predictors());
        for j in 0..p {
            let b = &beta[j * hp..(j + 1) * hp];
            let resid: Vec<f64> = (0..n)
                .map(|i| reg.y[(i, j)] - (0..hp).map(|c| reg.x[(i, c)] * b[c]).sum::<f64>())
                .collect();
            for c in 0..hp {
                let g: f64 = 2.0 / n as f64 * (0..n).map(|i| reg.x[(i, c)] * resid[i]).sum::<f64>();
                if b[c] != 0.0 {
                    assert!((g - lambda * b[c].signum()).abs() <= tol, "seed {seed}: active {g} vs {lambda}");
                } else {
                    assert!(g.abs() <= lambda + tol, "seed {seed}: inactive {g} vs {lambda}");
                }
            }
        }
    });
}

#[test]
fn cross_validated_penalty_beats_grid_endpoints() {
    let truth = VarModel::diagonal(10, 0.8, 1.0).unwrap();
    let beta_star = truth.coefficients();
    let errors: Vec<[f64; 3]> = (0..20u64)
        .into_par_iter()
        .map(|seed| {
            let data = simulate(&ChangeSpec::stationary(truth.clone(), 501).unwrap(), seed).unwrap();
            let reg = build_regression(&data, 1).unwrap();
            let grid = default_lambda_grid(&reg);
            let chosen = select_lambda_cv(&reg, &grid, DEFAULT_FOLDS).unwrap();
            let err = |l: f64| distance(&fit_lasso(&reg, l).unwrap(), &beta_star);
            [err(chosen), err(grid[0]), err(grid[grid.len() - 1])]
        })
        .collect();
    let mean = |k: usize| errors.iter().map(|e| e[k]).sum::<f64>() / errors.len() as f64;
    assert!(mean(0) < mean(1) && mean(0) < mean(2), "{} {} {}", mean(0), mean(1), mean(2));
}

#[test]
fn bic_finds_a_strong_second_lag() {
    let a1 = DMatrix::from_diagonal_element(5, 5, 0.3);
    let a2 = DMatrix::from_diagonal_element(5, 5, 0.5);
    let m = VarModel::new(vec![a1, a2], NoiseScale::Scalar(1.0), NoiseKind::Gaussian).unwrap();
    let hits = (0..50u64)
        .into_par_iter()
        .filter(|&seed| {
            let data = simulate(&ChangeSpec::stationary(m.clone(), 2003).unwrap(), seed).unwrap();
            select_lag_bic(&data, 3).unwrap() == 2
        })
        .count();
    assert!(hits >= 40, "{hits}/50");
}

#[test]
fn bic_prefers_one_lag_for_white_noise() {
    let m = VarModel::diagonal(5, 0.0, 1.0).unwrap();
    let ones = (0..30u64)
        .into_par_iter()
        .filter(|&seed| {
            let data = simulate(&ChangeSpec::stationary(m.clone(), 1003).unwrap(), seed).unwrap();
            select_lag_bic(&data, 3).unwrap() == 1
        })
        .count();
    assert!(ones > 15, "{ones}/30");
}

#[test]
fn moments_with_true_coefficients() {
    let m = VarModel::diagonal(5, 0.5, 1.5).unwrap();
    let beta = m.coefficients();
    let good = (0..50u64)
        .into_par_iter()
        .filter(|&seed| {
            let data = simulate(&ChangeSpec::stationary(m.clone(), 5001).unwrap(), seed).unwrap();
            let reg = build_regression(&data, 1).unwrap();
            let est = estimate_moments(&reg, &beta, VarianceMode::Homogeneous).unwrap();
            let (s2, v) = (est.sigma2.component(0), est.fourth.component(0));
            (s2 / 1.5 - 1.0).abs() <= 0.05 && (v / (2.0 * 1.5 * 1.5) - 1.0).abs() <= 0.10
        })
        .count();
    assert!(good >= 45, "{good}/50");
}

#[test]
fn baseline_recovers_diagonal_transition() {
    let truth = VarModel::diagonal(10, 0.8, 1.0).unwrap();
    let beta_star = truth.coefficients();
    let close = (0..50u64)
        .into_par_iter()
        .filter(|&seed| {
            let data = simulate(&ChangeSpec::stationary(truth.clone(), 501).unwrap(), seed).unwrap();
            let b = fit_baseline(&data, LagChoice::Fixed(1), VarianceMode::Homogeneous, None).unwrap();
            distance(&b.beta, &beta_star) <= 0.5
        })
        .count();
    assert!(close >= 45, "{close}/50");
}

#[test]
fn heterogeneous_variances_are_recovered() {
    let within = (0..20u64)
        .into_par_iter()
        .map(|seed| {
            let m = base_model(10, true, seed).unwrap();
            let data = simulate(&ChangeSpec::stationary(m.clone(), 2001).unwrap(), seed).unwrap();
            let b = fit_baseline(&data, LagChoice::Fixed(1), VarianceMode::Heterogeneous, None).unwrap();
            (0..10)
                .filter(|&j| (b.sigma2_hat.component(j) / m.noise().component(j) - 1.0).abs() <= 0.15)
                .count()
        })
        .sum::<usize>();
    assert!(within >= 190, "{within}/200 components within 15%");
}
