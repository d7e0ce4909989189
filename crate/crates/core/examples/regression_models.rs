//! Fits the linear, polynomial and boosted-tree regressors on one month of
//! synthetic features and scores them on the next month's next-hour vol.

use mjd_forecast::features::{build_feature_table, DelDriftMode, FeatureRow};
use mjd_forecast::ingest::{split_by_month, stitch_months, MonthId};
use mjd_forecast::regress::{gbt_fit, ols_fit, poly_fit, DesignMatrix, GbtParams, PolyBasis, Regressor};
use mjd_forecast::synth::{synthetic_klines, MarketSpec};

/// Predictor rows for `month` with the next hour's vol as target.
fn design(rows: &[FeatureRow], month: MonthId) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut x = Vec::new();
    let mut y = Vec::new();
    for w in rows.windows(2) {
        let (now, next) = (&w[0], &w[1]);
        if now.month != month || now.segment != next.segment {
            continue;
        }
        if let (Some(p), Some(v)) = (now.predictors(), next.vol) {
            x.push(p.to_vec());
            y.push(v);
        }
    }
    (x, y)
}

fn rmse(model: &dyn Regressor, x: &[Vec<f64>], y: &[f64]) -> f64 {
    let se: f64 = x
        .iter()
        .zip(y)
        .map(|(r, t)| (model.predict(r).unwrap() - t).powi(2))
        .sum();
    (se / y.len() as f64).sqrt()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (jan, feb) = (MonthId::new(2020, 1)?, MonthId::new(2020, 2)?);
    let klines = synthetic_klines(&MarketSpec::default(), jan, 2);
    let series = stitch_months(&split_by_month(klines, "synthetic")?, 60, 72)?;
    let table = build_feature_table(&series, 60, DelDriftMode::DriftDifference)?;

    let (xr, yr) = design(&table.rows, jan);
    let (xt, yt) = design(&table.rows, feb);
    let train = DesignMatrix::from_rows(&xr, yr)?;
    println!("train {} rows, test {} rows", train.rows(), yt.len());

    let lr = ols_fit(&train)?;
    println!(
        "linear   rmse {:.3e} (ridge fallback: {})",
        rmse(&lr, &xt, &yt),
        lr.is_ridge()
    );
    let poly = poly_fit(&train, PolyBasis::Full)?;
    println!("poly     rmse {:.3e}", rmse(&poly, &xt, &yt));
    let xgb = gbt_fit(&train, &GbtParams::default())?;
    println!("gbt      rmse {:.3e}", rmse(&xgb, &xt, &yt));
    let lgbm = gbt_fit(&train, &GbtParams::lgbm())?;
    println!("gbt+goss rmse {:.3e}", rmse(&lgbm, &xt, &yt));

    let persistence: f64 = xt.iter().zip(&yt).map(|(r, t)| (r[10] - t).powi(2)).sum::<f64>() / yt.len() as f64;
    println!("carry-forward vol rmse {:.3e}", persistence.sqrt());
    Ok(())
}
