//! The full drift × volatility sweep on three synthetic months, printed as a
//! ranking by hourly RMSE and by transactional accuracy.

use mjd_forecast::backtest::{all_combos, forecast_terms, sweep_all_combos, ModelConfig, SimSettings};
use mjd_forecast::features::{build_feature_table, DelDriftMode};
use mjd_forecast::ingest::{split_by_month, stitch_months, MonthId};
use mjd_forecast::synth::{synthetic_klines, MarketSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let klines = synthetic_klines(&MarketSpec::default(), MonthId::new(2020, 1)?, 3);
    let series = stitch_months(&split_by_month(klines, "synthetic")?, 60, 72)?;
    let table = build_feature_table(&series, 60, DelDriftMode::DriftDifference)?;

    let settings = SimSettings {
        n_sim: 2_000,
        seed: 42,
        ..SimSettings::default()
    };
    let terms = forecast_terms(&table, &ModelConfig::default(), settings.seed)?;
    for (train, predict) in &terms.schedule.pairs {
        println!("train {train} -> predict {predict}");
    }
    for issue in &terms.issues {
        println!("issue: {} in {}: {}", issue.term, issue.month, issue.message);
    }

    let mut reports: Vec<_> = sweep_all_combos(&table, &terms, &all_combos(), &settings, "example")
        .into_iter()
        .map(|(r, _)| r)
        .collect();
    reports.sort_by(|a, b| {
        a.rmse
            .unwrap_or(f64::INFINITY)
            .total_cmp(&b.rmse.unwrap_or(f64::INFINITY))
    });
    println!("\nbest five by RMSE:");
    for r in reports.iter().take(5) {
        println!(
            "{:>20} {:>14} RMSE {:.2} MAPE {:.3}%",
            r.drift.name(),
            r.vol.name(),
            r.rmse.unwrap(),
            r.mape.unwrap()
        );
    }
    reports.sort_by(|a, b| b.accuracy_t.unwrap_or(-1.0).total_cmp(&a.accuracy_t.unwrap_or(-1.0)));
    println!("\nbest five by Accuracy-T:");
    for r in reports.iter().take(5) {
        println!(
            "{:>20} {:>14} Accuracy-T {:.3} over {} transactions",
            r.drift.name(),
            r.vol.name(),
            r.accuracy_t.unwrap_or(f64::NAN),
            r.n_transactions
        );
    }
    Ok(())
}
