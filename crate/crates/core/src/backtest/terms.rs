//! The eight drift and five volatility series fed to the simulator.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::output::{ModelArtifact, StoredModel};
use super::{monthly_retrain_schedule, BacktestError, DriftTermId, Schedule, VolTermId};
use crate::features::{FeatureTable, ForecastSlot};
use crate::garch::{gjr_fit, GarchConfig};
use crate::ingest::MonthId;
use crate::regress::{gbt_fit, DesignMatrix, FeatureRecipe, GbtParams, LinearModel, PolyBasis};
use crate::rng::derive_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub xgb: GbtParams,
    pub lgbm: GbtParams,
    pub poly_basis: PolyBasis,
    pub garch: GarchConfig,
    /// Lower bound applied to regression volatility forecasts.
    pub vol_floor: f64,
    /// Keep fitted models in the returned term set.
    pub keep_models: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            xgb: GbtParams::default(),
            lgbm: GbtParams::lgbm(),
            poly_basis: PolyBasis::Full,
            garch: GarchConfig::default(),
            vol_floor: 1e-8,
            keep_models: true,
        }
    }
}

/// A model failure for one term in one month; that month's values stay empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermIssue {
    pub term: String,
    pub month: MonthId,
    pub message: String,
}

/// Term series aligned with the feature table rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermSet {
    drift: Vec<Vec<Option<f64>>>,
    vol: Vec<Vec<Option<f64>>>,
    /// Rows inside a predicted month that are past warm-up.
    pub eval: Vec<bool>,
    pub schedule: Schedule,
    pub issues: Vec<TermIssue>,
    pub models: Vec<StoredModel>,
}

impl TermSet {
    /// A term set from precomputed series, for custom experiments. Each
    /// series must be as long as `eval`.
    pub fn from_series(drift: [Vec<Option<f64>>; 8], vol: [Vec<Option<f64>>; 5], eval: Vec<bool>) -> Self {
        Self {
            drift: drift.into(),
            vol: vol.into(),
            eval,
            schedule: Schedule {
                pairs: Vec::new(),
                skipped: Vec::new(),
            },
            issues: Vec::new(),
            models: Vec::new(),
        }
    }

    pub fn drift(&self, id: DriftTermId) -> &[Option<f64>] {
        &self.drift[id.index()]
    }

    pub fn vol(&self, id: VolTermId) -> &[Option<f64>] {
        &self.vol[id.index()]
    }

    pub fn len(&self) -> usize {
        self.eval.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eval.is_empty()
    }

    /// Copies the model forecasts into the table's forecast columns.
    pub fn fill_slots(&self, table: &mut FeatureTable) {
        let src: [&[Option<f64>]; 8] = [
            self.drift(DriftTermId::LrPct),
            self.drift(DriftTermId::PolyPct),
            self.drift(DriftTermId::XgbPct),
            self.drift(DriftTermId::LgbmPct),
            self.vol(VolTermId::ForcVolLr),
            self.vol(VolTermId::ForcVolPoly),
            self.vol(VolTermId::ForcVolXgb),
            self.vol(VolTermId::ForcVolGjr),
        ];
        for (i, row) in table.rows.iter_mut().enumerate() {
            for slot in ForecastSlot::ALL {
                row.forecasts[slot.index()] = src[slot.index()].get(i).copied().flatten();
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Learner {
    Linear,
    Poly,
    Xgb,
    Lgbm,
}

/// Regression-term outputs for one predicted month.
struct MonthOutput {
    /// `(term name, rows, values)` written into the series.
    values: Vec<(TermKey, Vec<(usize, f64)>)>,
    issues: Vec<TermIssue>,
    models: Vec<StoredModel>,
}

#[derive(Debug, Clone, Copy)]
enum TermKey {
    Drift(DriftTermId),
    Vol(VolTermId),
}

impl TermKey {
    fn name(self) -> &'static str {
        match self {
            TermKey::Drift(d) => d.name(),
            TermKey::Vol(v) => v.name(),
        }
    }
}

fn month_key(m: MonthId) -> u64 {
    (m.year as i64 * 12 + m.month as i64) as u64
}

fn fit_learner(learner: Learner, x: &DesignMatrix, cfg: &ModelConfig, seed: u64) -> Result<ModelArtifact, String> {
    match learner {
        Learner::Linear => LinearModel::fit(x, FeatureRecipe::Linear).map(ModelArtifact::Linear),
        Learner::Poly => LinearModel::fit(x, FeatureRecipe::Poly2 { basis: cfg.poly_basis }).map(ModelArtifact::Linear),
        Learner::Xgb => gbt_fit(
            x,
            &GbtParams {
                seed,
                ..cfg.xgb.clone()
            },
        )
        .map(ModelArtifact::Gbt),
        Learner::Lgbm => gbt_fit(
            x,
            &GbtParams {
                seed,
                ..cfg.lgbm.clone()
            },
        )
        .map(ModelArtifact::Gbt),
    }
    .map_err(|e| e.to_string())
}

fn forecast_month(table: &FeatureTable, train: MonthId, predict: MonthId, cfg: &ModelConfig, seed: u64) -> MonthOutput {
    let rows = &table.rows;
    // inputs at row i, targets from row i + 1 (the hour being forecast)
    let train_idx: Vec<usize> = (0..rows.len())
        .filter(|&i| {
            rows[i].month == train
                && rows[i].predictors().is_some()
                && table.has_next_hour(i)
                && rows[i + 1].vol.is_some()
        })
        .collect();
    let predict_idx: Vec<usize> = (0..rows.len())
        .filter(|&i| rows[i].month == predict && rows[i].predictors().is_some())
        .collect();
    let inputs: Vec<Vec<f64>> = train_idx
        .iter()
        .map(|&i| rows[i].predictors().unwrap().to_vec())
        .collect();
    let y_drift: Vec<f64> = train_idx.iter().map(|&i| rows[i + 1].pct_change).collect();
    let y_vol: Vec<f64> = train_idx.iter().map(|&i| rows[i + 1].vol.unwrap()).collect();

    let mut out = MonthOutput {
        values: Vec::new(),
        issues: Vec::new(),
        models: Vec::new(),
    };
    let jobs = [
        (TermKey::Drift(DriftTermId::LrPct), Learner::Linear),
        (TermKey::Drift(DriftTermId::PolyPct), Learner::Poly),
        (TermKey::Drift(DriftTermId::XgbPct), Learner::Xgb),
        (TermKey::Drift(DriftTermId::LgbmPct), Learner::Lgbm),
        (TermKey::Vol(VolTermId::ForcVolLr), Learner::Linear),
        (TermKey::Vol(VolTermId::ForcVolPoly), Learner::Poly),
        (TermKey::Vol(VolTermId::ForcVolXgb), Learner::Xgb),
    ];
    for (j, (key, learner)) in jobs.into_iter().enumerate() {
        let target = match key {
            TermKey::Drift(_) => y_drift.clone(),
            TermKey::Vol(_) => y_vol.clone(),
        };
        let fitted = DesignMatrix::from_rows(&inputs, target)
            .map_err(|e| e.to_string())
            .and_then(|x| fit_learner(learner, &x, cfg, derive_seed(seed, &[month_key(train), j as u64])));
        match fitted {
            Ok(model) => {
                let vals = predict_idx
                    .iter()
                    .filter_map(|&i| {
                        let v = model.predict(&rows[i].predictors().unwrap())?;
                        let v = match key {
                            TermKey::Vol(_) => v.max(cfg.vol_floor),
                            TermKey::Drift(_) => v,
                        };
                        v.is_finite().then_some((i, v))
                    })
                    .collect();
                out.values.push((key, vals));
                if cfg.keep_models {
                    out.models.push(StoredModel {
                        term: key.name().to_string(),
                        train_month: train,
                        model,
                    });
                }
            }
            Err(message) => out.issues.push(TermIssue {
                term: key.name().to_string(),
                month: predict,
                message,
            }),
        }
    }

    let returns: Vec<f64> = rows.iter().filter(|r| r.month == train).map(|r| r.pct_change).collect();
    match gjr_fit(&returns, &cfg.garch) {
        Ok(fit) => {
            if !fit.converged {
                out.issues.push(TermIssue {
                    term: VolTermId::ForcVolGjr.name().to_string(),
                    month: predict,
                    message: format!(
                        "optimizer stopped after {} iterations without converging",
                        fit.iterations
                    ),
                });
            }
            let mut filter = fit.filter();
            let mut vals = Vec::new();
            for (i, r) in rows.iter().enumerate().filter(|(_, r)| r.month == predict) {
                let v = filter.update(r.pct_change);
                if r.predictors().is_some() && v.is_finite() {
                    vals.push((i, v));
                }
            }
            out.values.push((TermKey::Vol(VolTermId::ForcVolGjr), vals));
            if cfg.keep_models {
                out.models.push(StoredModel {
                    term: VolTermId::ForcVolGjr.name().to_string(),
                    train_month: train,
                    model: ModelArtifact::Gjr(fit),
                });
            }
        }
        Err(e) => out.issues.push(TermIssue {
            term: VolTermId::ForcVolGjr.name().to_string(),
            month: predict,
            message: e.to_string(),
        }),
    }
    out
}

/// Builds every drift and volatility series under the monthly schedule.
pub fn forecast_terms(table: &FeatureTable, cfg: &ModelConfig, seed: u64) -> Result<TermSet, BacktestError> {
    let schedule = monthly_retrain_schedule(table)?;
    let n = table.rows.len();
    let outputs: Vec<MonthOutput> = schedule
        .pairs
        .par_iter()
        .map(|&(train, predict)| forecast_month(table, train, predict, cfg, seed))
        .collect();

    let predicted: Vec<MonthId> = schedule.pairs.iter().map(|p| p.1).collect();
    let eval: Vec<bool> = table
        .rows
        .iter()
        .map(|r| predicted.contains(&r.month) && !r.is_warmup())
        .collect();
    let mut drift = vec![vec![None; n]; 8];
    let mut vol = vec![vec![None; n]; 5];
    for (i, r) in table.rows.iter().enumerate().filter(|(i, _)| eval[*i]) {
        drift[DriftTermId::PctChange.index()][i] = Some(r.pct_change);
        drift[DriftTermId::Drift.index()][i] = r.drift;
        drift[DriftTermId::PctChangeNegated.index()][i] = Some(-r.pct_change);
        drift[DriftTermId::DriftNegated.index()][i] = r.drift.map(|d| -d);
        vol[VolTermId::Vol.index()][i] = r.vol;
    }
    let mut issues = Vec::new();
    let mut models = Vec::new();
    for out in outputs {
        for (key, vals) in out.values {
            let series = match key {
                TermKey::Drift(d) => &mut drift[d.index()],
                TermKey::Vol(v) => &mut vol[v.index()],
            };
            for (i, v) in vals {
                series[i] = Some(v);
            }
        }
        issues.extend(out.issues);
        models.extend(out.models);
    }
    for issue in &issues {
        log::warn!("{} for {}: {}", issue.term, issue.month, issue.message);
    }
    Ok(TermSet {
        drift,
        vol,
        eval,
        schedule,
        issues,
        models,
    })
}

/// The eight drift series, indexed like [`DriftTermId::ALL`].
pub fn forecast_drift_terms(
    table: &FeatureTable,
    cfg: &ModelConfig,
    seed: u64,
) -> Result<Vec<Vec<Option<f64>>>, BacktestError> {
    Ok(forecast_terms(table, cfg, seed)?.drift)
}

/// The five volatility series, indexed like [`VolTermId::ALL`].
pub fn forecast_vol_terms(
    table: &FeatureTable,
    cfg: &ModelConfig,
    seed: u64,
) -> Result<Vec<Vec<Option<f64>>>, BacktestError> {
    Ok(forecast_terms(table, cfg, seed)?.vol)
}
