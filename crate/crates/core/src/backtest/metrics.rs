use serde::{Deserialize, Serialize};

use super::sweep::{HourlyForecast, Signal};
use super::BacktestError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionMetrics {
    pub rmse: f64,
    /// Percent.
    pub mape: f64,
}

/// RMSE and MAPE of forecasts against the realized next open.
pub fn regression_metrics(forecasts: &[HourlyForecast]) -> Result<RegressionMetrics, BacktestError> {
    let y: Vec<f64> = forecasts.iter().map(|f| f.realized_next_open).collect();
    let yhat: Vec<f64> = forecasts.iter().map(|f| f.forecast).collect();
    regression_metrics_from(&y, &yhat)
}

pub fn regression_metrics_from(y: &[f64], yhat: &[f64]) -> Result<RegressionMetrics, BacktestError> {
    if y.is_empty() || y.len() != yhat.len() {
        return Err(BacktestError::EmptyEvaluation);
    }
    let n = y.len() as f64;
    let mut se = 0.0;
    let mut ape = 0.0;
    for (a, f) in y.iter().zip(yhat) {
        se += (a - f) * (a - f);
        ape += ((a - f) / a).abs();
    }
    Ok(RegressionMetrics {
        rmse: (se / n).sqrt(),
        mape: ape / n * 100.0,
    })
}

/// Long is the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

impl ConfusionMatrix {
    pub fn from_pairs(predicted: &[Signal], actual: &[Signal]) -> Self {
        let mut m = ConfusionMatrix::default();
        for (p, a) in predicted.iter().zip(actual) {
            match (p, a) {
                (Signal::Long, Signal::Long) => m.tp += 1,
                (Signal::Short, Signal::Short) => m.tn += 1,
                (Signal::Long, Signal::Short) => m.fp += 1,
                (Signal::Short, Signal::Long) => m.fn_ += 1,
            }
        }
        m
    }

    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }

    pub fn accuracy(&self) -> Option<f64> {
        ratio(self.tp + self.tn, self.total())
    }

    pub fn precision(&self) -> Option<f64> {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> Option<f64> {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn specificity(&self) -> Option<f64> {
        ratio(self.tn, self.tn + self.fp)
    }

    /// Harmonic mean of precision and recall; absent if either is, or both are 0.
    pub fn f1(&self) -> Option<f64> {
        let (p, r) = (self.precision()?, self.recall()?);
        (p + r > 0.0).then(|| 2.0 * p * r / (p + r))
    }
}

/// Ratios are `None` when their denominator is zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassificationMetrics {
    pub confusion: ConfusionMatrix,
    pub accuracy: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub specificity: Option<f64>,
}

impl ClassificationMetrics {
    pub fn from_confusion(confusion: ConfusionMatrix) -> Self {
        Self {
            confusion,
            accuracy: confusion.accuracy(),
            precision: confusion.precision(),
            recall: confusion.recall(),
            f1: confusion.f1(),
            specificity: confusion.specificity(),
        }
    }
}

/// Signals scored against the realized direction of the next open.
pub fn classification_metrics(forecasts: &[HourlyForecast]) -> Result<ClassificationMetrics, BacktestError> {
    if forecasts.is_empty() {
        return Err(BacktestError::EmptyEvaluation);
    }
    let predicted: Vec<Signal> = forecasts.iter().map(|f| f.signal).collect();
    let actual: Vec<Signal> = forecasts.iter().map(|f| f.true_label()).collect();
    Ok(ClassificationMetrics::from_confusion(ConfusionMatrix::from_pairs(
        &predicted, &actual,
    )))
}

/// Indices where the signal differs from the one before; index 0 always.
pub fn change_points(signals: &[Signal]) -> Vec<usize> {
    (0..signals.len())
        .filter(|&i| i == 0 || signals[i] != signals[i - 1])
        .collect()
}

/// The hours at which the signal changes.
pub fn transactional_filter(forecasts: &[HourlyForecast]) -> Vec<HourlyForecast> {
    let signals: Vec<Signal> = forecasts.iter().map(|f| f.signal).collect();
    change_points(&signals)
        .into_iter()
        .map(|i| forecasts[i].clone())
        .collect()
}
