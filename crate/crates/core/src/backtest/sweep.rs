use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{
    classification_metrics, regression_metrics, transactional_filter, ClassificationMetrics, ConfusionMatrix,
};
use super::terms::TermSet;
use super::{DriftTermId, VolTermId};
use crate::features::FeatureTable;
use crate::jumpsim::{mc_forecast, JumpRule, JumpSampler, SimConfig};
use crate::rng::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Signal {
    Long,
    Short,
}

impl Signal {
    pub fn as_str(self) -> &'static str {
        match self {
            Signal::Long => "long",
            Signal::Short => "short",
        }
    }
}

/// What to do when the forecast equals the current open.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieRule {
    #[default]
    Short,
    /// Repeat the previous hour's signal (short at the first hour).
    HoldPrevious,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimSettings {
    pub n_sim: usize,
    pub seed: u64,
    pub jump_rule: JumpRule,
    pub sampler: JumpSampler,
    pub tie_rule: TieRule,
}

impl Default for SimSettings {
    fn default() -> Self {
        Self {
            n_sim: 10_000,
            seed: 0,
            jump_rule: JumpRule::default(),
            sampler: JumpSampler::CompoundPoisson,
            tie_rule: TieRule::Short,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HourlyForecast {
    pub open_time: i64,
    pub drift: DriftTermId,
    pub vol: VolTermId,
    pub open: f64,
    pub mu: f64,
    pub sigma: f64,
    pub lambda: f64,
    /// MC mean of the next open.
    pub forecast: f64,
    pub std_error: f64,
    pub signal: Signal,
    pub realized_next_open: f64,
    pub jumps: u64,
}

impl HourlyForecast {
    /// Long iff the next open is strictly above the current one.
    pub fn true_label(&self) -> Signal {
        if self.realized_next_open > self.open {
            Signal::Long
        } else {
            Signal::Short
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ComboRun {
    pub forecasts: Vec<HourlyForecast>,
    /// Evaluation hours dropped for a missing term or next open.
    pub skipped_hours: usize,
    /// Hours whose jump intensity was clamped to zero.
    pub clamped_hours: usize,
    pub total_jumps: u64,
}

/// Hour-by-hour MC forecasts for one drift × volatility pair. Every hour
/// restarts from the realized open.
pub fn run_combo(
    table: &FeatureTable,
    terms: &TermSet,
    drift: DriftTermId,
    vol: VolTermId,
    settings: &SimSettings,
) -> ComboRun {
    let mus = terms.drift(drift);
    let sigmas = terms.vol(vol);
    let mut run = ComboRun::default();
    let mut last_signal = Signal::Short;
    for (i, row) in table.rows.iter().enumerate() {
        if !terms.eval.get(i).copied().unwrap_or(false) {
            continue;
        }
        let (Some(mu), Some(sigma), true) = (mus[i], sigmas[i], table.has_next_hour(i)) else {
            run.skipped_hours += 1;
            continue;
        };
        let sigma = sigma.max(0.0);
        let (jumps, clamped) = settings.jump_rule.params(mu, sigma);
        run.clamped_hours += clamped as usize;
        let config = SimConfig {
            sampler: settings.sampler,
            ..SimConfig::one_hour(
                row.open,
                mu,
                sigma,
                jumps,
                settings.n_sim,
                derive_seed(
                    settings.seed,
                    &[row.open_time as u64, drift.index() as u64, vol.index() as u64],
                ),
            )
        };
        let mc = mc_forecast(&config);
        let signal = if mc.mean_price > row.open {
            Signal::Long
        } else if mc.mean_price < row.open {
            Signal::Short
        } else {
            match settings.tie_rule {
                TieRule::Short => Signal::Short,
                TieRule::HoldPrevious => last_signal,
            }
        };
        last_signal = signal;
        run.total_jumps += mc.total_jumps;
        run.forecasts.push(HourlyForecast {
            open_time: row.open_time,
            drift,
            vol,
            open: row.open,
            mu,
            sigma,
            lambda: jumps.lambda,
            forecast: mc.mean_price,
            std_error: mc.std_error,
            signal,
            realized_next_open: table.rows[i + 1].open,
            jumps: mc.total_jumps,
        });
    }
    run
}

/// One row of the combination table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComboReport {
    pub drift: DriftTermId,
    pub vol: VolTermId,
    pub rmse: Option<f64>,
    pub mape: Option<f64>,
    pub rmse_t: Option<f64>,
    pub mape_t: Option<f64>,
    pub accuracy: Option<f64>,
    pub accuracy_t: Option<f64>,
    pub precision_t: Option<f64>,
    pub recall_t: Option<f64>,
    pub f1_t: Option<f64>,
    pub specificity_t: Option<f64>,
    /// Hourly confusion counts.
    pub confusion: ConfusionMatrix,
    /// Confusion counts on the change-point subset.
    pub confusion_t: ConfusionMatrix,
    pub n_hours: usize,
    pub n_transactions: usize,
    pub skipped_hours: usize,
    pub clamped_hours: usize,
    pub total_jumps: u64,
    pub seed: u64,
    pub fingerprint: String,
    pub error: Option<String>,
}

impl ComboReport {
    pub fn from_run(drift: DriftTermId, vol: VolTermId, run: &ComboRun, seed: u64, fingerprint: &str) -> Self {
        let mut report = ComboReport {
            drift,
            vol,
            rmse: None,
            mape: None,
            rmse_t: None,
            mape_t: None,
            accuracy: None,
            accuracy_t: None,
            precision_t: None,
            recall_t: None,
            f1_t: None,
            specificity_t: None,
            confusion: ConfusionMatrix::default(),
            confusion_t: ConfusionMatrix::default(),
            n_hours: run.forecasts.len(),
            n_transactions: 0,
            skipped_hours: run.skipped_hours,
            clamped_hours: run.clamped_hours,
            total_jumps: run.total_jumps,
            seed,
            fingerprint: fingerprint.to_string(),
            error: None,
        };
        let (Ok(reg), Ok(cls)) = (
            regression_metrics(&run.forecasts),
            classification_metrics(&run.forecasts),
        ) else {
            report.error = Some(format!("no evaluation points ({} hours skipped)", run.skipped_hours));
            return report;
        };
        let trans = transactional_filter(&run.forecasts);
        let reg_t = regression_metrics(&trans).expect("first hour is always retained");
        let cls_t: ClassificationMetrics = classification_metrics(&trans).expect("non-empty");
        report.rmse = Some(reg.rmse);
        report.mape = Some(reg.mape);
        report.rmse_t = Some(reg_t.rmse);
        report.mape_t = Some(reg_t.mape);
        report.accuracy = cls.accuracy;
        report.confusion = cls.confusion;
        report.accuracy_t = cls_t.accuracy;
        report.precision_t = cls_t.precision;
        report.recall_t = cls_t.recall;
        report.f1_t = cls_t.f1;
        report.specificity_t = cls_t.specificity;
        report.confusion_t = cls_t.confusion;
        report.n_transactions = trans.len();
        report
    }
}

/// Runs the given pairs (in the given order) and reports each one.
pub fn sweep_all_combos(
    table: &FeatureTable,
    terms: &TermSet,
    combos: &[(DriftTermId, VolTermId)],
    settings: &SimSettings,
    fingerprint: &str,
) -> Vec<(ComboReport, ComboRun)> {
    combos
        .par_iter()
        .map(|&(d, v)| {
            let run = run_combo(table, terms, d, v, settings);
            let report = ComboReport::from_run(d, v, &run, settings.seed, fingerprint);
            if let Some(e) = &report.error {
                log::warn!("combo {d}__{v}: {e}");
            }
            (report, run)
        })
        .collect()
}
