use mjd_forecast::features::{pct_change, rolling_drift, rolling_vol};
use mjd_forecast::garch::{gjr_fit, gjr_loglik, GarchConfig, GjrGarchParams};
use mjd_forecast::regress::{gbt_fit, goss_sample, ols_solve, DesignMatrix, GbtParams, GossParams, Regressor};
use mjd_forecast::rng::stream_rng;
use mjd_forecast::synth::simulate_gjr;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn design(n: usize, p: usize) -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<f64>)> {
    (
        prop::collection::vec(prop::collection::vec(-10.0..10.0f64, p), n),
        prop::collection::vec(-5.0..5.0f64, n),
    )
}

fn with_intercept(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    rows.iter()
        .map(|r| std::iter::once(1.0).chain(r.iter().copied()).collect())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ols_matches_qr_oracle((rows, y) in design(40, 4)) {
        let rows = with_intercept(&rows);
        let x = DesignMatrix::from_rows(&rows, y.clone()).unwrap();
        let sol = ols_solve(&x).unwrap();
        prop_assume!(sol.ridge_penalty.is_none());

        let a = DMatrix::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j]);
        let qr = a.clone().qr();
        let qty = qr.q().transpose() * DVector::from_vec(y.clone());
        let oracle = qr.r().solve_upper_triangular(&qty).unwrap();
        for (b, o) in sol.coefficients.iter().zip(oracle.iter()) {
            prop_assert!((b - o).abs() <= 1e-8 * (1.0 + o.abs()), "{b} vs {o}");
        }

        // normal equations hold: Xᵀ(y − Xβ) ≈ 0 relative to ‖X‖‖y‖
        let beta = DVector::from_vec(sol.coefficients.clone());
        let resid = DVector::from_vec(y) - &a * beta;
        let grad = a.transpose() * &resid;
        let scale = a.norm() * resid.norm().max(1.0);
        prop_assert!(grad.amax() <= 1e-9 * scale);
    }

    #[test]
    fn rolling_vol_matches_two_pass(prices in prop::collection::vec(1.0..1000.0f64, 3..120), n in 1usize..30) {
        let deltas = pct_change(&prices).unwrap();
        prop_assume!(n <= deltas.len());
        let rho = rolling_drift(&deltas, n).unwrap();
        let vol = rolling_vol(&deltas, &rho, n).unwrap();
        for i in 0..deltas.len() {
            if i + 1 < n {
                prop_assert!(vol[i].is_none());
                continue;
            }
            let w = &deltas[i + 1 - n..=i];
            let mean = w.iter().sum::<f64>() / n as f64;
            let var = w.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / n as f64;
            let got = vol[i].unwrap();
            prop_assert!((got - var.sqrt()).abs() <= 1e-12 * (1.0 + var.sqrt()));
            prop_assert!((rho[i].unwrap() - mean).abs() <= 1e-14 * (1.0 + mean.abs()));
        }
    }

    #[test]
    fn gbt_ignores_monotone_feature_transforms((rows, y) in design(60, 3)) {
        let x = DesignMatrix::from_rows(&rows, y.clone()).unwrap();
        let warped: Vec<Vec<f64>> = rows.iter().map(|r| vec![r[0].exp(), r[1].powi(3), 2.0 * r[2] - 7.0]).collect();
        let xw = DesignMatrix::from_rows(&warped, y).unwrap();
        let params = GbtParams { rounds: 10, ..GbtParams::default() };
        let a = gbt_fit(&x, &params).unwrap();
        let b = gbt_fit(&xw, &params).unwrap();
        for (r, w) in rows.iter().zip(&warped) {
            prop_assert_eq!(a.predict(r).unwrap(), b.predict(w).unwrap());
        }
        prop_assert_eq!(a.train_loss, b.train_loss);
    }

    #[test]
    fn goss_is_reproducible_and_well_formed(g in prop::collection::vec(-3.0..3.0f64, 1..300), seed in any::<u64>(), a in 0.05..0.5f64, b in 0.0..0.5f64) {
        let (i1, w1) = goss_sample(&g, a, b, &mut stream_rng(seed, 3)).unwrap();
        let (i2, w2) = goss_sample(&g, a, b, &mut stream_rng(seed, 3)).unwrap();
        prop_assert_eq!(&i1, &i2);
        prop_assert_eq!(&w1, &w2);
        prop_assert!(i1.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(w1.iter().all(|&w| w == 1.0 || (w - (1.0 - a) / b).abs() < 1e-12));
        // every kept weight-1 row has |g| at least as large as every sampled row
        let min_top = i1.iter().zip(&w1).filter(|(_, &w)| w == 1.0).map(|(&i, _)| g[i].abs()).fold(f64::INFINITY, f64::min);
        let max_rest = i1.iter().zip(&w1).filter(|(_, &w)| w != 1.0).map(|(&i, _)| g[i].abs()).fold(0.0, f64::max);
        prop_assert!(max_rest <= min_top);
    }

    #[test]
    fn gjr_loglik_matches_naive(r in prop::collection::vec(-0.05..0.05f64, 1..200), alpha in 0.0..0.2f64, gamma in 0.0..0.2f64, beta in 0.0..0.7f64, s0 in 1e-5..1e-3f64) {
        let p = GjrGarchParams { omega: 1e-6, alpha, gamma, beta };
        let mut s2 = s0;
        let mut naive = 0.0;
        for t in 0..r.len() {
            if t > 0 {
                let e = r[t - 1];
                let neg = if e < 0.0 { 1.0 } else { 0.0 };
                s2 = 1e-6 + (alpha + gamma * neg) * e * e + beta * s2;
            }
            naive += -0.5 * ((2.0 * std::f64::consts::PI).ln() + s2.ln() + r[t] * r[t] / s2);
        }
        let got = gjr_loglik(&r, &p, s0).unwrap();
        prop_assert!((got - naive).abs() <= 1e-10 * (1.0 + naive.abs()));
    }
}

#[test]
fn gjr_forecast_grows_with_shock_size() {
    let truth = GjrGarchParams {
        omega: 1e-6,
        alpha: 0.05,
        gamma: 0.10,
        beta: 0.85,
    };
    let (r, _) = simulate_gjr(&truth, 3000, 8);
    let fit = gjr_fit(&r, &GarchConfig::default()).unwrap();
    let mut last = 0.0;
    for k in 0..20 {
        let shock = fit.mean - 0.002 * k as f64;
        let mut f = fit.filter();
        f.update(0.0);
        let s = f.update(shock);
        assert!(s >= last, "forecast fell from {last} to {s} for shock {shock}");
        last = s;
    }
    // a negative shock raises the forecast at least as much as a positive one
    let mut up = fit.filter();
    let mut down = fit.filter();
    assert!(down.update(fit.mean - 0.01) >= up.update(fit.mean + 0.01));
}

#[test]
fn gjr_homoskedastic_forecast_is_near_sample_vol() {
    let flat = GjrGarchParams {
        omega: 1e-4,
        alpha: 0.0,
        gamma: 0.0,
        beta: 0.0,
    };
    let (r, _) = simulate_gjr(&flat, 5000, 3);
    let fit = gjr_fit(&r, &GarchConfig::default()).unwrap();
    let sd = (r.iter().map(|x| x * x).sum::<f64>() / r.len() as f64).sqrt();
    let mut filter = fit.filter();
    for &x in &r[..200] {
        let f = filter.update(x);
        assert!((f / sd - 1.0).abs() < 0.2, "forecast {f} vs sample sd {sd}");
    }
}

#[test]
fn goss_fit_is_seeded() {
    let mut rng = stream_rng(3, 0);
    use rand::Rng;
    let rows: Vec<Vec<f64>> = (0..300)
        .map(|_| (0..4).map(|_| rng.random::<f64>()).collect())
        .collect();
    let y: Vec<f64> = rows.iter().map(|r| r[0] - r[1] * r[3]).collect();
    let x = DesignMatrix::from_rows(&rows, y).unwrap();
    let params = |seed| GbtParams {
        rounds: 20,
        goss: Some(GossParams::default()),
        seed,
        ..GbtParams::default()
    };
    assert_eq!(gbt_fit(&x, &params(1)).unwrap(), gbt_fit(&x, &params(1)).unwrap());
    assert_ne!(
        gbt_fit(&x, &params(1)).unwrap().trees,
        gbt_fit(&x, &params(2)).unwrap().trees
    );
}
