use mjd_forecast::backtest::{
    all_combos, forecast_terms, run_combo, sweep_all_combos, DriftTermId, ModelConfig, Signal, SimSettings, TermSet,
    VolTermId,
};
use mjd_forecast::features::{build_feature_table, DelDriftMode, FeatureTable};
use mjd_forecast::ingest::{split_by_month, stitch_months, MonthId};
use mjd_forecast::jumpsim::{mc_forecast, simulate_terminals, IntensityRule, JumpParams, JumpRule, SimConfig};
use mjd_forecast::synth::{synthetic_klines, MarketSpec};

fn table(months: usize, seed: u64) -> FeatureTable {
    let k = synthetic_klines(
        &MarketSpec {
            seed,
            ..MarketSpec::default()
        },
        MonthId::new(2020, 1).unwrap(),
        months,
    );
    let series = stitch_months(&split_by_month(k, "mem").unwrap(), 60, 72).unwrap();
    build_feature_table(&series, 60, DelDriftMode::DriftDifference).unwrap()
}

fn ks_statistic(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            i += 1;
        } else {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

#[test]
fn halving_the_step_keeps_the_terminal_law() {
    let n = 20_000;
    let base = SimConfig::one_hour(
        100.0,
        0.001,
        0.02,
        JumpParams {
            lambda: 0.5,
            m: -0.01,
            s: 0.03,
        },
        n,
        11,
    );
    let (one, _) = simulate_terminals(&base);
    let (two, _) = simulate_terminals(&SimConfig {
        steps: 2,
        seed: 12,
        ..base.clone()
    });
    let (four, _) = simulate_terminals(&SimConfig {
        steps: 4,
        seed: 13,
        ..base
    });
    // two-sample KS critical value at the 0.1% level
    let crit = 1.95 * (2.0 / n as f64).sqrt();
    assert!(ks_statistic(one.clone(), two) < crit);
    assert!(ks_statistic(one, four) < crit);
}

#[test]
fn standard_error_shrinks_with_root_n() {
    let cfg = |n, seed| {
        SimConfig::one_hour(
            100.0,
            0.0,
            0.01,
            JumpParams {
                lambda: 0.2,
                m: 0.0,
                s: 0.02,
            },
            n,
            seed,
        )
    };
    let coarse = mc_forecast(&cfg(4_000, 1)).std_error;
    let fine = mc_forecast(&cfg(64_000, 2)).std_error;
    let ratio = coarse / fine;
    assert!((ratio / 4.0 - 1.0).abs() < 0.05, "SE ratio {ratio}");
}

#[test]
fn negated_drift_flips_every_signal_without_noise() {
    let t = table(2, 5);
    let n = t.len();
    let drift: Vec<Option<f64>> = (0..n).map(|i| Some(1e-4 * ((i % 7) as f64 - 3.0) + 1e-6)).collect();
    let negated: Vec<Option<f64>> = drift.iter().map(|d| d.map(|d| -d)).collect();
    let zero = vec![Some(0.0); n];
    let mut drifts: [Vec<Option<f64>>; 8] = Default::default();
    for d in DriftTermId::ALL {
        drifts[d.index()] = match d {
            DriftTermId::DriftNegated => negated.clone(),
            _ => drift.clone(),
        };
    }
    let vols: [Vec<Option<f64>>; 5] = std::array::from_fn(|_| zero.clone());
    let terms = TermSet::from_series(drifts, vols, vec![true; n]);
    let settings = SimSettings {
        n_sim: 16,
        jump_rule: JumpRule {
            intensity: IntensityRule::Zero,
            ..JumpRule::default()
        },
        ..SimSettings::default()
    };
    let up = run_combo(&t, &terms, DriftTermId::Drift, VolTermId::Vol, &settings);
    let down = run_combo(&t, &terms, DriftTermId::DriftNegated, VolTermId::Vol, &settings);
    assert_eq!(up.forecasts.len(), n - 1);
    for (a, b) in up.forecasts.iter().zip(&down.forecasts) {
        assert_eq!(a.std_error, 0.0);
        assert!((a.forecast - a.open * a.mu.exp()).abs() < 1e-9 * a.open);
        assert_ne!(a.signal, b.signal);
        assert_eq!(a.signal == Signal::Long, a.mu > 0.0);
    }
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    for (rank, i) in idx.into_iter().enumerate() {
        r[i] = rank as f64;
    }
    r
}

#[test]
fn rmse_ranking_survives_reseeding() {
    let t = table(3, 9);
    let terms = forecast_terms(&t, &ModelConfig::default(), 1).unwrap();
    let combos = all_combos();
    let rmse = |seed| -> Vec<f64> {
        let settings = SimSettings {
            n_sim: 2_000,
            seed,
            ..SimSettings::default()
        };
        sweep_all_combos(&t, &terms, &combos, &settings, "test")
            .into_iter()
            .map(|(r, _)| r.rmse.unwrap())
            .collect()
    };
    let (a, b) = (ranks(&rmse(1)), ranks(&rmse(2)));
    let n = a.len() as f64;
    let d2: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).powi(2)).sum();
    let spearman = 1.0 - 6.0 * d2 / (n * (n * n - 1.0));
    assert!(spearman > 0.95, "spearman {spearman}");
}

#[test]
fn sweep_forecasts_are_reproducible() {
    let t = table(2, 4);
    let terms = forecast_terms(&t, &ModelConfig::default(), 3).unwrap();
    let settings = SimSettings {
        n_sim: 500,
        seed: 3,
        ..SimSettings::default()
    };
    let combos = [(DriftTermId::LrPct, VolTermId::ForcVolGjr)];
    let a = sweep_all_combos(&t, &terms, &combos, &settings, "x");
    let b = sweep_all_combos(&t, &terms, &combos, &settings, "x");
    assert_eq!(a[0].1.forecasts, b[0].1.forecasts);
    assert!(a[0].0.error.is_none());
}
