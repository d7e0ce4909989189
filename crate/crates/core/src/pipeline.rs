//! End-to-end commands: features, simulate, backtest and report.
//!
//! Each command validates its inputs completely before creating anything
//! under `output_dir`, and writes nowhere else.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::backtest::{
    all_combos, forecast_terms, read_combos_csv, sweep_all_combos, write_combos_csv, write_forecasts_csv,
    BacktestError, ComboReport, DriftTermId, ModelStore, Schedule, TermIssue, TermSet, VolTermId,
};
use crate::config::{sha256_hex, RunConfig};
use crate::error::Error;
use crate::features::{build_feature_table, histogram, pearson_corr_matrix, Bins, Column, FeatureTable};
use crate::ingest::{load_months, stitch_months, Gap, KlineSchema, MonthId, ParseMode, HOUR_MS};
use crate::jumpsim::{simulate_path, SimConfig};
use crate::rng::{derive_seed, stream_rng};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataFile {
    pub name: String,
    pub sha256: String,
    pub rows: usize,
    pub dropped_rows: usize,
}

/// Parsed, stitched and featurized input data.
#[derive(Debug, Clone)]
pub struct LoadedData {
    pub table: FeatureTable,
    pub files: Vec<DataFile>,
    pub gaps: Vec<Gap>,
}

/// Months available for `symbol` under `dir`, from file names.
pub fn discover_months(dir: &Path, symbol: &str) -> Result<Vec<MonthId>, Error> {
    if !dir.is_dir() {
        return Err(crate::ingest::IngestError::MissingDataDir(dir.to_path_buf()).into());
    }
    let prefix = format!("{symbol}-1h-");
    let mut months: Vec<MonthId> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok())
        .filter_map(|e| {
            let name = e.file_name().into_string().ok()?;
            name.strip_prefix(&prefix)?.strip_suffix(".csv")?.parse().ok()
        })
        .collect();
    months.sort();
    months.dedup();
    Ok(months)
}

/// Loads the configured month range and builds the feature table.
pub fn load_data(cfg: &RunConfig) -> Result<LoadedData, Error> {
    let found = discover_months(&cfg.data_dir, &cfg.symbol)?;
    let start = cfg.start.or(found.first().copied());
    let end = cfg.end.or(found.last().copied());
    let (Some(start), Some(end)) = (start, end) else {
        return Err(Error::Usage(format!(
            "no {}-1h-YYYY-MM.csv files under {}",
            cfg.symbol,
            cfg.data_dir.display()
        )));
    };
    let mode = if cfg.strict {
        ParseMode::Strict
    } else {
        ParseMode::Lenient
    };
    let months = load_months(&cfg.data_dir, &cfg.symbol, start, end, &KlineSchema::EXCHANGE, mode)?;
    let mut files = Vec::new();
    for m in &months {
        let path = PathBuf::from(&m.source_path);
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        files.push(DataFile {
            name: path
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default(),
            sha256: sha256_hex(&bytes),
            rows: m.klines.len(),
            dropped_rows: m.dropped.len(),
        });
    }
    let series = stitch_months(&months, cfg.lookback_hours, cfg.max_gap_hours)?;
    let table = build_feature_table(&series, cfg.window, cfg.del_drift_mode)?;
    Ok(LoadedData {
        table,
        files,
        gaps: series.gaps,
    })
}

/// Accompanies every command's outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub software_version: String,
    pub seed: u64,
    pub config_fingerprint: String,
    pub config: serde_json::Value,
    pub data_files: Vec<DataFile>,
    pub gaps: Vec<Gap>,
    pub schedule: Option<Schedule>,
    pub term_issues: Vec<TermIssue>,
    /// `<drift>__<vol>` → message.
    pub combo_failures: BTreeMap<String, String>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    fn new(command: &str, cfg: &RunConfig, data: &LoadedData) -> Self {
        Self {
            command: command.into(),
            software_version: env!("CARGO_PKG_VERSION").into(),
            seed: cfg.sim.seed,
            config_fingerprint: cfg.fingerprint(),
            config: serde_json::from_str(&cfg.canonical_json()).expect("canonical json parses"),
            data_files: data.files.clone(),
            gaps: data.gaps.clone(),
            schedule: None,
            term_issues: Vec::new(),
            combo_failures: BTreeMap::new(),
            outputs: Vec::new(),
        }
    }
}

/// Collects output files in memory so nothing is written until every
/// artifact has been produced.
#[derive(Default)]
struct Outputs {
    files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    fn add(&mut self, name: impl Into<String>, bytes: Vec<u8>) {
        self.files.push((name.into(), bytes));
    }

    fn names(&self) -> Vec<String> {
        self.files.iter().map(|f| f.0.clone()).collect()
    }

    fn commit(self, dir: &Path) -> Result<Vec<PathBuf>, Error> {
        let mut written = Vec::new();
        for (name, bytes) in self.files {
            let path = dir.join(&name);
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
            }
            fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
            written.push(path);
        }
        Ok(written)
    }
}

fn csv_bytes<F>(f: F) -> Result<Vec<u8>, Error>
where
    F: FnOnce(&mut Vec<u8>) -> Result<(), csv::Error>,
{
    let mut buf = Vec::new();
    f(&mut buf).map_err(BacktestError::from)?;
    Ok(buf)
}

fn terms_if_possible(data: &LoadedData, cfg: &RunConfig) -> Result<Option<TermSet>, Error> {
    match forecast_terms(&data.table, &cfg.models, cfg.sim.seed) {
        Ok(t) => Ok(Some(t)),
        Err(BacktestError::InsufficientMonths(n)) => {
            log::info!("{n} month(s) of data: model forecast columns left empty");
            Ok(None)
        }
        Err(e) => Err(e.into()),
    }
}

/// Writes `features.csv`, `correlation.csv`, `histograms/<column>.csv` and
/// `features_manifest.json`. Forecast columns are filled when at least two
/// months are loaded.
pub fn cmd_features(cfg: &RunConfig) -> Result<Vec<PathBuf>, Error> {
    cfg.validate()?;
    let mut data = load_data(cfg)?;
    let terms = terms_if_possible(&data, cfg)?;
    if let Some(t) = &terms {
        t.fill_slots(&mut data.table);
    }
    let table = &data.table;

    let mut out = Outputs::default();
    out.add("features.csv", csv_bytes(|b| table.write_csv(b))?);

    let columns: Vec<Column> = Column::all()
        .into_iter()
        .filter(|c| table.rows.iter().filter(|r| r.column(*c).is_some()).count() >= 2)
        .collect();
    let corr = pearson_corr_matrix(table, &columns)?;
    out.add(
        "correlation.csv",
        csv_bytes(|b| {
            let mut w = csv::Writer::from_writer(b);
            let mut header = vec![""];
            header.extend(columns.iter().map(|c| c.name()));
            w.write_record(&header)?;
            for (c, row) in columns.iter().zip(&corr) {
                let mut rec = vec![c.name().to_string()];
                rec.extend(row.iter().map(|v| v.to_string()));
                w.write_record(&rec)?;
            }
            w.flush()?;
            Ok(())
        })?,
    );

    for c in &columns {
        let values: Vec<f64> = table
            .rows
            .iter()
            .filter(|r| !r.is_warmup())
            .filter_map(|r| r.column(*c))
            .collect();
        let h = histogram(&values, Bins::Count(cfg.histogram_bins))?;
        out.add(
            format!("histograms/{}.csv", c.name()),
            csv_bytes(|b| {
                let mut w = csv::Writer::from_writer(b);
                w.write_record(["bin_lo", "bin_hi", "count"])?;
                for (k, n) in h.counts.iter().enumerate() {
                    w.write_record([h.edges[k].to_string(), h.edges[k + 1].to_string(), n.to_string()])?;
                }
                w.flush()?;
                Ok(())
            })?,
        );
    }

    let mut manifest = RunManifest::new("features", cfg, &data);
    if let Some(t) = terms {
        manifest.schedule = Some(t.schedule);
        manifest.term_issues = t.issues;
    }
    manifest.outputs = out.names();
    out.add(
        "features_manifest.json",
        serde_json::to_vec_pretty(&manifest).map_err(BacktestError::from)?,
    );
    out.commit(&cfg.output_dir)
}

/// Starting point and term values for a sample path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathStart {
    pub open_time: i64,
    pub s0: f64,
    pub mu: f64,
    pub sigma: f64,
}

/// The latest hour at which both terms are available.
pub fn latest_terms(
    data: &LoadedData,
    cfg: &RunConfig,
    drift: DriftTermId,
    vol: VolTermId,
) -> Result<PathStart, Error> {
    let table = &data.table;
    let pass_through = matches!(
        drift,
        DriftTermId::PctChange | DriftTermId::Drift | DriftTermId::PctChangeNegated | DriftTermId::DriftNegated
    ) && vol == VolTermId::Vol;
    let pick = |mus: &dyn Fn(usize) -> Option<f64>, sigmas: &dyn Fn(usize) -> Option<f64>| {
        (0..table.rows.len()).rev().find_map(|i| {
            Some(PathStart {
                open_time: table.rows[i].open_time,
                s0: table.rows[i].open,
                mu: mus(i)?,
                sigma: sigmas(i)?.max(0.0),
            })
        })
    };
    let start = if pass_through {
        let mu = |i: usize| {
            let r = &table.rows[i];
            if r.is_warmup() {
                return None;
            }
            match drift {
                DriftTermId::PctChange => Some(r.pct_change),
                DriftTermId::PctChangeNegated => Some(-r.pct_change),
                DriftTermId::Drift => r.drift,
                _ => r.drift.map(|d| -d),
            }
        };
        let sigma = |i: usize| table.rows[i].vol.filter(|_| !table.rows[i].is_warmup());
        pick(&mu, &sigma)
    } else {
        let terms = forecast_terms(table, &cfg.models, cfg.sim.seed)?;
        let mu = |i: usize| terms.drift(drift)[i];
        let sigma = |i: usize| terms.vol(vol)[i];
        pick(&mu, &sigma)
    };
    start.ok_or_else(|| Error::Model(format!("no hour has both {drift} and {vol} available")))
}

/// Writes `sample_path.csv` (hour, time, price) for an `hours`-long path
/// from the latest available price, with `simulate_manifest.json`.
pub fn cmd_simulate(cfg: &RunConfig, drift: DriftTermId, vol: VolTermId, hours: usize) -> Result<Vec<PathBuf>, Error> {
    cfg.validate()?;
    let data = load_data(cfg)?;
    let start = latest_terms(&data, cfg, drift, vol)?;
    let (jumps, _) = cfg.sim.jump_rule.params(start.mu, start.sigma);
    let sim = SimConfig {
        horizon: hours as f64,
        sampler: cfg.sim.sampler,
        ..SimConfig::one_hour(start.s0, start.mu, start.sigma, jumps, 1, cfg.sim.seed)
    };
    let seed = derive_seed(
        cfg.sim.seed,
        &[start.open_time as u64, drift.index() as u64, vol.index() as u64],
    );
    let path = simulate_path(&sim, &mut stream_rng(seed, 0));

    let mut out = Outputs::default();
    out.add(
        "sample_path.csv",
        csv_bytes(|b| {
            let mut w = csv::Writer::from_writer(b);
            w.write_record(["hour", "time", "price"])?;
            for (h, p) in path.iter().enumerate() {
                w.write_record([
                    h.to_string(),
                    (start.open_time + h as i64 * HOUR_MS).to_string(),
                    p.to_string(),
                ])?;
            }
            w.flush()?;
            Ok(())
        })?,
    );
    let mut manifest = RunManifest::new("simulate", cfg, &data);
    manifest.outputs = out.names();
    out.add(
        "simulate_manifest.json",
        serde_json::to_vec_pretty(&manifest).map_err(BacktestError::from)?,
    );
    out.commit(&cfg.output_dir)
}

/// Result of a backtest run.
#[derive(Debug, Clone)]
pub struct BacktestOutput {
    pub reports: Vec<ComboReport>,
    pub written: Vec<PathBuf>,
    pub manifest: RunManifest,
}

/// Runs the sweep (optionally restricted to `combos`) and writes
/// `combos.csv`, `forecasts/<drift>__<vol>.csv`, `models.json` and
/// `run_manifest.json`.
///
/// Combo failures do not stop the sweep; they are listed in the manifest
/// and the returned reports, and the caller decides the exit status.
pub fn cmd_backtest(cfg: &RunConfig, combos: Option<&[(DriftTermId, VolTermId)]>) -> Result<BacktestOutput, Error> {
    cfg.validate()?;
    let data = load_data(cfg)?;
    let terms = forecast_terms(&data.table, &cfg.models, cfg.sim.seed)?;
    let selected = combos.map(|c| c.to_vec()).unwrap_or_else(all_combos);
    let fingerprint = cfg.fingerprint();
    let results = sweep_all_combos(&data.table, &terms, &selected, &cfg.sim, &fingerprint);
    let reports: Vec<ComboReport> = results.iter().map(|r| r.0.clone()).collect();

    let mut out = Outputs::default();
    out.add("combos.csv", {
        let mut b = Vec::new();
        write_combos_csv(&mut b, &reports)?;
        b
    });
    for (report, run) in &results {
        let mut b = Vec::new();
        write_forecasts_csv(&mut b, &run.forecasts)?;
        out.add(format!("forecasts/{}__{}.csv", report.drift, report.vol), b);
    }
    if cfg.save_models {
        let store = ModelStore::new(&fingerprint, terms.models.clone());
        let mut b = Vec::new();
        store.write_json(&mut b)?;
        out.add("models.json", b);
    }

    let mut manifest = RunManifest::new("backtest", cfg, &data);
    manifest.schedule = Some(terms.schedule.clone());
    manifest.term_issues = terms.issues.clone();
    manifest.combo_failures = reports
        .iter()
        .filter_map(|r| Some((format!("{}__{}", r.drift, r.vol), r.error.clone()?)))
        .collect();
    manifest.outputs = out.names();
    out.add(
        "run_manifest.json",
        serde_json::to_vec_pretty(&manifest).map_err(BacktestError::from)?,
    );
    let written = out.commit(&cfg.output_dir)?;
    Ok(BacktestOutput {
        reports,
        written,
        manifest,
    })
}

/// Whether larger values of a combo metric are better.
fn higher_is_better(metric: &str) -> bool {
    !(metric.starts_with("RMSE") || metric.starts_with("MAPE"))
}

fn metric_value(r: &ComboReport, metric: &str) -> Option<f64> {
    match metric {
        "RMSE" => r.rmse,
        "MAPE" => r.mape,
        "RMSE-T" => r.rmse_t,
        "MAPE-T" => r.mape_t,
        "Accuracy" => r.accuracy,
        "Accuracy-T" => r.accuracy_t,
        "Precision-T" => r.precision_t,
        "Recall-T" => r.recall_t,
        "F1-score-T" => r.f1_t,
        "Specificity-T" => r.specificity_t,
        _ => None,
    }
}

pub const REPORT_METRICS: [&str; 10] = [
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
];

/// Case-insensitive metric lookup, also accepting `_` for `-`.
pub fn canonical_metric(name: &str) -> Option<&'static str> {
    let norm = |s: &str| s.to_ascii_lowercase().replace('_', "-");
    REPORT_METRICS.into_iter().find(|m| norm(m) == norm(name))
}

/// Reads `combos.csv` (or a directory containing it) and renders a table
/// sorted best-first by `metric`. Missing values sort last.
pub fn cmd_report(path: &Path, metric: &str) -> Result<String, Error> {
    let metric = canonical_metric(metric).ok_or_else(|| {
        Error::Usage(format!(
            "unknown metric {metric:?}; expected one of {}",
            REPORT_METRICS.join(", ")
        ))
    })?;
    let file = if path.is_dir() {
        path.join("combos.csv")
    } else {
        path.to_path_buf()
    };
    let reader = fs::File::open(&file).map_err(|e| Error::io(&file, e))?;
    let mut reports = read_combos_csv(reader)?;
    let hib = higher_is_better(metric);
    reports.sort_by(|a, b| match (metric_value(a, metric), metric_value(b, metric)) {
        (Some(x), Some(y)) => {
            if hib {
                y.total_cmp(&x)
            } else {
                x.total_cmp(&y)
            }
        }
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => std::cmp::Ordering::Equal,
    });
    let fmt = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "n/a".into());
    let mut s = format!(
        "{:<20} {:<14} {:>10} {:>8} {:>10} {:>8} {:>8} {:>10} {:>11} {:>8} {:>10} {:>7} {:>6}\n",
        "drift", "vol", "RMSE", "MAPE", "RMSE-T", "MAPE-T", "Acc", "Acc-T", "Prec-T", "Rec-T", "F1-T", "hours", "trans"
    );
    for r in &reports {
        s.push_str(&format!(
            "{:<20} {:<14} {:>10} {:>8} {:>10} {:>8} {:>8} {:>10} {:>11} {:>8} {:>10} {:>7} {:>6}\n",
            r.drift.name(),
            r.vol.name(),
            fmt(r.rmse),
            fmt(r.mape),
            fmt(r.rmse_t),
            fmt(r.mape_t),
            fmt(r.accuracy),
            fmt(r.accuracy_t),
            fmt(r.precision_t),
            fmt(r.recall_t),
            fmt(r.f1_t),
            r.n_hours,
            r.n_transactions
        ));
    }
    s.push_str(&format!(
        "sorted by {metric} ({})\n",
        if hib { "descending" } else { "ascending" }
    ));
    Ok(s)
}
