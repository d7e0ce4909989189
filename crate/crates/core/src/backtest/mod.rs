//! Monthly walk-forward backtest over every drift × volatility pair.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::FeatureTable;
use crate::ingest::MonthId;

mod metrics;
mod output;
mod sweep;
mod terms;

pub use metrics::{
    change_points, classification_metrics, regression_metrics, regression_metrics_from, transactional_filter,
    ClassificationMetrics, ConfusionMatrix, RegressionMetrics,
};
pub use output::{
    read_combos_csv, write_combos_csv, write_forecasts_csv, ModelArtifact, ModelStore, StoredModel, COMBO_COLUMNS,
    MODEL_STORE_VERSION,
};
pub use sweep::{run_combo, sweep_all_combos, ComboReport, ComboRun, HourlyForecast, Signal, SimSettings, TieRule};
pub use terms::{forecast_drift_terms, forecast_terms, forecast_vol_terms, ModelConfig, TermIssue, TermSet};

#[derive(Debug, Error)]
pub enum BacktestError {
    #[error("need at least 2 calendar months, found {0}")]
    InsufficientMonths(usize),
    #[error("no evaluation points")]
    EmptyEvaluation,
    #[error("unknown term id {0:?}")]
    UnknownTermId(String),
    #[error("bad combo {0:?}, expected <drift>,<vol>")]
    BadCombo(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriftTermId {
    PctChange,
    Drift,
    LrPct,
    PolyPct,
    XgbPct,
    LgbmPct,
    PctChangeNegated,
    DriftNegated,
}

impl DriftTermId {
    pub const ALL: [DriftTermId; 8] = [
        DriftTermId::PctChange,
        DriftTermId::Drift,
        DriftTermId::LrPct,
        DriftTermId::PolyPct,
        DriftTermId::XgbPct,
        DriftTermId::LgbmPct,
        DriftTermId::PctChangeNegated,
        DriftTermId::DriftNegated,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DriftTermId::PctChange => "pct_change",
            DriftTermId::Drift => "drift",
            DriftTermId::LrPct => "lr_pct",
            DriftTermId::PolyPct => "poly_pct",
            DriftTermId::XgbPct => "xgb_pct",
            DriftTermId::LgbmPct => "lgbm_pct",
            DriftTermId::PctChangeNegated => "pct_change_negated",
            DriftTermId::DriftNegated => "drift_negated",
        }
    }

    pub fn index(self) -> usize {
        Self::ALL.iter().position(|d| *d == self).unwrap()
    }

    /// The series this term negates, if it is a negation.
    pub fn negation_of(self) -> Option<DriftTermId> {
        match self {
            DriftTermId::PctChangeNegated => Some(DriftTermId::PctChange),
            DriftTermId::DriftNegated => Some(DriftTermId::Drift),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VolTermId {
    Vol,
    ForcVolLr,
    ForcVolPoly,
    ForcVolXgb,
    ForcVolGjr,
}

impl VolTermId {
    pub const ALL: [VolTermId; 5] = [
        VolTermId::Vol,
        VolTermId::ForcVolLr,
        VolTermId::ForcVolPoly,
        VolTermId::ForcVolXgb,
        VolTermId::ForcVolGjr,
    ];

    pub fn name(self) -> &'static str {
        match self {
            VolTermId::Vol => "vol",
            VolTermId::ForcVolLr => "forc_vol_lr",
            VolTermId::ForcVolPoly => "forc_vol_poly",
            VolTermId::ForcVolXgb => "forc_vol_xgb",
            VolTermId::ForcVolGjr => "forc_vol_gjr",
        }
    }

    pub fn index(self) -> usize {
        Self::ALL.iter().position(|d| *d == self).unwrap()
    }
}

macro_rules! term_id_traits {
    ($t:ty) => {
        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }

        impl FromStr for $t {
            type Err = BacktestError;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                <$t>::ALL
                    .into_iter()
                    .find(|t| t.name() == s.trim())
                    .ok_or_else(|| BacktestError::UnknownTermId(s.to_string()))
            }
        }
    };
}

term_id_traits!(DriftTermId);
term_id_traits!(VolTermId);

/// Parses `"<drift>,<vol>"`.
pub fn parse_combo(s: &str) -> Result<(DriftTermId, VolTermId), BacktestError> {
    let (d, v) = s
        .split_once(',')
        .ok_or_else(|| BacktestError::BadCombo(s.to_string()))?;
    Ok((d.parse()?, v.parse()?))
}

/// All 40 pairs, drift-major.
pub fn all_combos() -> Vec<(DriftTermId, VolTermId)> {
    DriftTermId::ALL
        .into_iter()
        .flat_map(|d| VolTermId::ALL.into_iter().map(move |v| (d, v)))
        .collect()
}

/// Train-on-previous-month pairs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    pub pairs: Vec<(MonthId, MonthId)>,
    /// Months that could not be predicted because their predecessor is absent.
    pub skipped: Vec<MonthId>,
}

/// Each month is predicted by models trained on the calendar month right
/// before it. The first month only trains.
pub fn monthly_retrain_schedule(table: &FeatureTable) -> Result<Schedule, BacktestError> {
    schedule_for_months(&table.months())
}

pub fn schedule_for_months(months: &[MonthId]) -> Result<Schedule, BacktestError> {
    if months.len() < 2 {
        return Err(BacktestError::InsufficientMonths(months.len()));
    }
    let mut pairs = Vec::new();
    let mut skipped = Vec::new();
    for w in months.windows(2) {
        if w[0].next() == w[1] {
            pairs.push((w[0], w[1]));
        } else {
            log::warn!("month {} has no predecessor in the data, skipped", w[1]);
            skipped.push(w[1]);
        }
    }
    Ok(Schedule { pairs, skipped })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(y: i32, mo: u32) -> MonthId {
        MonthId::new(y, mo).unwrap()
    }

    #[test]
    fn schedule_pairs_consecutive_months() {
        let s = schedule_for_months(&[m(2020, 1), m(2020, 2), m(2020, 3), m(2020, 4)]).unwrap();
        assert_eq!(
            s.pairs,
            vec![
                (m(2020, 1), m(2020, 2)),
                (m(2020, 2), m(2020, 3)),
                (m(2020, 3), m(2020, 4))
            ]
        );
        assert!(s.skipped.is_empty());
        assert!(matches!(
            schedule_for_months(&[m(2020, 1)]),
            Err(BacktestError::InsufficientMonths(1))
        ));
        let s = schedule_for_months(&[m(2020, 1), m(2020, 3), m(2020, 4)]).unwrap();
        assert_eq!(s.pairs, vec![(m(2020, 3), m(2020, 4))]);
        assert_eq!(s.skipped, vec![m(2020, 3)]);
        let s = schedule_for_months(&[m(2020, 12), m(2021, 1)]).unwrap();
        assert_eq!(s.pairs.len(), 1);
    }

    #[test]
    fn term_ids_round_trip() {
        assert_eq!(all_combos().len(), 40);
        for d in DriftTermId::ALL {
            assert_eq!(d.name().parse::<DriftTermId>().unwrap(), d);
        }
        for v in VolTermId::ALL {
            assert_eq!(v.to_string().parse::<VolTermId>().unwrap(), v);
        }
        assert_eq!(
            parse_combo("drift_negated,forc_vol_gjr").unwrap(),
            (DriftTermId::DriftNegated, VolTermId::ForcVolGjr)
        );
        assert!(matches!(
            "nope".parse::<DriftTermId>(),
            Err(BacktestError::UnknownTermId(_))
        ));
        assert!(matches!(parse_combo("drift"), Err(BacktestError::BadCombo(_))));
    }
}
