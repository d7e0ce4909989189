//! Plain-text artifacts: the combination table, per-pair forecast files and
//! the model store.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::metrics::ConfusionMatrix;
use super::sweep::{ComboReport, HourlyForecast};
use super::BacktestError;
use crate::garch::GarchFit;
use crate::ingest::MonthId;
use crate::regress::{GbtEnsemble, LinearModel, Regressor};

pub const MODEL_STORE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelArtifact {
    Linear(LinearModel),
    Gbt(GbtEnsemble),
    Gjr(GarchFit),
}

impl ModelArtifact {
    /// Regression prediction for a raw feature row; `None` for GJR fits and
    /// width mismatches.
    pub fn predict(&self, row: &[f64]) -> Option<f64> {
        match self {
            ModelArtifact::Linear(m) => m.predict(row).ok(),
            ModelArtifact::Gbt(m) => m.predict(row).ok(),
            ModelArtifact::Gjr(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredModel {
    pub term: String,
    pub train_month: MonthId,
    pub model: ModelArtifact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelStore {
    pub version: u32,
    pub config_fingerprint: String,
    pub models: Vec<StoredModel>,
}

impl ModelStore {
    pub fn new(config_fingerprint: &str, models: Vec<StoredModel>) -> Self {
        Self {
            version: MODEL_STORE_VERSION,
            config_fingerprint: config_fingerprint.to_string(),
            models,
        }
    }

    pub fn write_json<W: Write>(&self, w: W) -> Result<(), BacktestError> {
        serde_json::to_writer(w, self)?;
        Ok(())
    }

    pub fn read_json<R: Read>(r: R) -> Result<Self, BacktestError> {
        let store: ModelStore = serde_json::from_reader(r)?;
        if store.version != MODEL_STORE_VERSION {
            return Err(BacktestError::Json(serde::de::Error::custom(format!(
                "model store version {} is not supported",
                store.version
            ))));
        }
        Ok(store)
    }
}

pub const COMBO_COLUMNS: [&str; 28] = [
    "drift",
    "vol",
    "RMSE",
    "MAPE",
    "RMSE-T",
    "MAPE-T",
    "Accuracy",
    "Accuracy-T",
    "Precision-T",
    "Recall-T",
    "F1-score-T",
    "Specificity-T",
    "n_hours",
    "n_transactions",
    "tp",
    "tn",
    "fp",
    "fn",
    "tp_t",
    "tn_t",
    "fp_t",
    "fn_t",
    "skipped_hours",
    "clamped_hours",
    "total_jumps",
    "seed",
    "fingerprint",
    "error",
];

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_else(|| "NaN".into())
}

fn uncell(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|v| !v.is_nan())
}

pub fn write_combos_csv<W: Write>(w: W, reports: &[ComboReport]) -> Result<(), BacktestError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(COMBO_COLUMNS)?;
    for r in reports {
        let c = &r.confusion;
        let t = &r.confusion_t;
        let rec: Vec<String> = vec![
            r.drift.to_string(),
            r.vol.to_string(),
            cell(r.rmse),
            cell(r.mape),
            cell(r.rmse_t),
            cell(r.mape_t),
            cell(r.accuracy),
            cell(r.accuracy_t),
            cell(r.precision_t),
            cell(r.recall_t),
            cell(r.f1_t),
            cell(r.specificity_t),
            r.n_hours.to_string(),
            r.n_transactions.to_string(),
            c.tp.to_string(),
            c.tn.to_string(),
            c.fp.to_string(),
            c.fn_.to_string(),
            t.tp.to_string(),
            t.tn.to_string(),
            t.fp.to_string(),
            t.fn_.to_string(),
            r.skipped_hours.to_string(),
            r.clamped_hours.to_string(),
            r.total_jumps.to_string(),
            r.seed.to_string(),
            r.fingerprint.clone(),
            r.error.clone().unwrap_or_default(),
        ];
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_combos_csv<R: Read>(r: R) -> Result<Vec<ComboReport>, BacktestError> {
    let mut rdr = csv::Reader::from_reader(r);
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        if rec.len() != COMBO_COLUMNS.len() {
            return Err(BacktestError::BadCombo(format!("row with {} fields", rec.len())));
        }
        let int = |i: usize| -> Result<u64, BacktestError> {
            rec[i]
                .parse()
                .map_err(|_| BacktestError::BadCombo(format!("{} = {:?}", COMBO_COLUMNS[i], &rec[i])))
        };
        let cm = |o: usize| -> Result<ConfusionMatrix, BacktestError> {
            Ok(ConfusionMatrix {
                tp: int(o)?,
                tn: int(o + 1)?,
                fp: int(o + 2)?,
                fn_: int(o + 3)?,
            })
        };
        out.push(ComboReport {
            drift: rec[0].parse()?,
            vol: rec[1].parse()?,
            rmse: uncell(&rec[2]),
            mape: uncell(&rec[3]),
            rmse_t: uncell(&rec[4]),
            mape_t: uncell(&rec[5]),
            accuracy: uncell(&rec[6]),
            accuracy_t: uncell(&rec[7]),
            precision_t: uncell(&rec[8]),
            recall_t: uncell(&rec[9]),
            f1_t: uncell(&rec[10]),
            specificity_t: uncell(&rec[11]),
            n_hours: int(12)? as usize,
            n_transactions: int(13)? as usize,
            confusion: cm(14)?,
            confusion_t: cm(18)?,
            skipped_hours: int(22)? as usize,
            clamped_hours: int(23)? as usize,
            total_jumps: int(24)?,
            seed: int(25)?,
            fingerprint: rec[26].to_string(),
            error: (!rec[27].is_empty()).then(|| rec[27].to_string()),
        });
    }
    Ok(out)
}

pub fn write_forecasts_csv<W: Write>(w: W, forecasts: &[HourlyForecast]) -> Result<(), BacktestError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "open_time",
        "open",
        "mu",
        "sigma",
        "lambda",
        "forecast",
        "std_error",
        "signal",
        "realized_next_open",
        "true_label",
        "jumps",
    ])?;
    for f in forecasts {
        out.write_record([
            f.open_time.to_string(),
            f.open.to_string(),
            f.mu.to_string(),
            f.sigma.to_string(),
            f.lambda.to_string(),
            f.forecast.to_string(),
            f.std_error.to_string(),
            f.signal.as_str().to_string(),
            f.realized_next_open.to_string(),
            f.true_label().as_str().to_string(),
            f.jumps.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}
