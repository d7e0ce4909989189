//! Hourly feature engineering on the open price.
//!
//! Every column except `open` is taken from the previous hour, so that a row
//! stamped at hour `i` carries nothing from hour `i` besides its open price.
//! Percent change, rolling drift, rolling volatility and delta drift are all
//! computed on the open series and so have zero delay.

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{Kline, MonthId, StitchedSeries, HOUR_MS};

#[derive(Debug, Error, PartialEq)]
pub enum FeatureError {
    #[error("price at index {0} is not positive")]
    NonPositivePrice(usize),
    #[error("need at least {needed} values, found {found}")]
    TooShort { needed: usize, found: usize },
    #[error("window {window} exceeds series length {len}")]
    WindowExceedsSeries { window: usize, len: usize },
    #[error("rolling window must be at least 1")]
    ZeroWindow,
    #[error("column {0} has zero variance")]
    ZeroVariance(String),
    #[error("correlation needs at least 2 complete rows, found {0}")]
    TooFewRows(usize),
    #[error("histogram needs at least one bin")]
    NoBins,
}

/// δ_i = (P_i − P_{i−1}) / P_{i−1}.
pub fn pct_change(prices: &[f64]) -> Result<Vec<f64>, FeatureError> {
    if prices.len() < 2 {
        return Err(FeatureError::TooShort {
            needed: 2,
            found: prices.len(),
        });
    }
    if let Some(i) = prices.iter().position(|p| !(*p > 0.0)) {
        return Err(FeatureError::NonPositivePrice(i));
    }
    Ok(prices.windows(2).map(|w| (w[1] - w[0]) / w[0]).collect())
}

fn check_window(len: usize, n: usize) -> Result<(), FeatureError> {
    if n == 0 {
        return Err(FeatureError::ZeroWindow);
    }
    if len < n {
        return Err(FeatureError::WindowExceedsSeries { window: n, len });
    }
    Ok(())
}

/// Trailing mean of the last `n` deltas ending at each index. The first
/// `n − 1` entries are warm-up and come back as `None`.
pub fn rolling_drift(deltas: &[f64], n: usize) -> Result<Vec<Option<f64>>, FeatureError> {
    check_window(deltas.len(), n)?;
    Ok((0..deltas.len())
        .map(|i| {
            (i + 1 >= n).then(|| {
                let w = &deltas[i + 1 - n..=i];
                w.iter().sum::<f64>() / n as f64
            })
        })
        .collect())
}

/// Population standard deviation of the trailing `n` deltas about the
/// aligned rolling drift.
pub fn rolling_vol(deltas: &[f64], rho: &[Option<f64>], n: usize) -> Result<Vec<Option<f64>>, FeatureError> {
    check_window(deltas.len(), n)?;
    if rho.len() != deltas.len() {
        return Err(FeatureError::TooShort {
            needed: deltas.len(),
            found: rho.len(),
        });
    }
    Ok((0..deltas.len())
        .map(|i| {
            let mean = rho[i]?;
            if i + 1 < n {
                return None;
            }
            let w = &deltas[i + 1 - n..=i];
            let ss: f64 = w.iter().map(|d| (d - mean) * (d - mean)).sum();
            Some((ss / n as f64).sqrt())
        })
        .collect())
}

/// First difference of an optional series; `None` wherever either side is.
pub fn delta_drift(rho: &[Option<f64>]) -> Result<Vec<Option<f64>>, FeatureError> {
    if rho.len() < 2 {
        return Err(FeatureError::TooShort {
            needed: 2,
            found: rho.len(),
        });
    }
    Ok(rho
        .windows(2)
        .map(|w| match (w[0], w[1]) {
            (Some(a), Some(b)) => Some(b - a),
            _ => None,
        })
        .collect())
}

/// What `del_drift` differences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DelDriftMode {
    /// ρ_i − ρ_{i−1}: change in rolling drift.
    #[default]
    DriftDifference,
    /// δ_i − δ_{i−1}: change in percent change.
    PctChangeDifference,
}

/// Forecast columns filled in by the backtest after model training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForecastSlot {
    LrPct,
    PolyPct,
    XgbPct,
    LgbmPct,
    ForcVolLr,
    ForcVolPoly,
    ForcVolXgb,
    ForcVolGjr,
}

impl ForecastSlot {
    pub const ALL: [ForecastSlot; 8] = [
        ForecastSlot::LrPct,
        ForecastSlot::PolyPct,
        ForecastSlot::XgbPct,
        ForecastSlot::LgbmPct,
        ForecastSlot::ForcVolLr,
        ForecastSlot::ForcVolPoly,
        ForecastSlot::ForcVolXgb,
        ForecastSlot::ForcVolGjr,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ForecastSlot::LrPct => "lr_pct",
            ForecastSlot::PolyPct => "poly_pct",
            ForecastSlot::XgbPct => "xgb_pct",
            ForecastSlot::LgbmPct => "lgbm_pct",
            ForecastSlot::ForcVolLr => "forc_vol_lr",
            ForecastSlot::ForcVolPoly => "forc_vol_poly",
            ForecastSlot::ForcVolXgb => "forc_vol_xgb",
            ForecastSlot::ForcVolGjr => "forc_vol_gjr",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Names of the 12 predictor columns, in predictor order.
pub const BASE_COLUMNS: [&str; 12] = [
    "open",
    "close",
    "high",
    "low",
    "volume",
    "quote_volume",
    "count",
    "taker_buy_volume",
    "pct_change",
    "drift",
    "vol",
    "del_drift",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub open_time: i64,
    pub month: MonthId,
    /// Index of the contiguous (gap-free) run this row belongs to.
    pub segment: usize,
    pub open: f64,
    pub close: f64,
    pub high: f64,
    pub low: f64,
    pub volume: f64,
    pub quote_volume: f64,
    pub count: f64,
    pub taker_buy_volume: f64,
    pub pct_change: f64,
    pub drift: Option<f64>,
    pub vol: Option<f64>,
    pub del_drift: Option<f64>,
    pub forecasts: [Option<f64>; 8],
}

impl FeatureRow {
    pub fn is_warmup(&self) -> bool {
        self.drift.is_none() || self.vol.is_none() || self.del_drift.is_none()
    }

    /// The 12 predictors, or `None` during warm-up.
    pub fn predictors(&self) -> Option<[f64; 12]> {
        Some([
            self.open,
            self.close,
            self.high,
            self.low,
            self.volume,
            self.quote_volume,
            self.count,
            self.taker_buy_volume,
            self.pct_change,
            self.drift?,
            self.vol?,
            self.del_drift?,
        ])
    }

    pub fn forecast(&self, slot: ForecastSlot) -> Option<f64> {
        self.forecasts[slot.index()]
    }

    /// Value of a named column (base or forecast slot).
    pub fn column(&self, column: Column) -> Option<f64> {
        match column {
            Column::Base(i) => match i {
                0..=8 => Some(
                    [
                        self.open,
                        self.close,
                        self.high,
                        self.low,
                        self.volume,
                        self.quote_volume,
                        self.count,
                        self.taker_buy_volume,
                        self.pct_change,
                    ][i],
                ),
                9 => self.drift,
                10 => self.vol,
                11 => self.del_drift,
                _ => None,
            },
            Column::Slot(s) => self.forecast(s),
        }
    }
}

/// A column selector for correlation and histogram output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Column {
    Base(usize),
    Slot(ForecastSlot),
}

impl Column {
    pub fn name(self) -> &'static str {
        match self {
            Column::Base(i) => BASE_COLUMNS[i],
            Column::Slot(s) => s.name(),
        }
    }

    pub fn base() -> Vec<Column> {
        (0..12).map(Column::Base).collect()
    }

    pub fn all() -> Vec<Column> {
        Column::base()
            .into_iter()
            .chain(ForecastSlot::ALL.into_iter().map(Column::Slot))
            .collect()
    }

    pub fn by_name(name: &str) -> Option<Column> {
        Column::all().into_iter().find(|c| c.name() == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureTable {
    pub rows: Vec<FeatureRow>,
    pub window: usize,
    pub del_drift_mode: DelDriftMode,
}

impl FeatureTable {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn months(&self) -> Vec<MonthId> {
        let mut out: Vec<MonthId> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.month) {
                out.push(r.month);
            }
        }
        out
    }

    /// Whether row `i + 1` is the hour directly after row `i`.
    pub fn has_next_hour(&self, i: usize) -> bool {
        self.rows
            .get(i + 1)
            .map(|n| n.open_time == self.rows[i].open_time + HOUR_MS)
            .unwrap_or(false)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), csv::Error> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["open_time"];
        header.extend(BASE_COLUMNS);
        header.extend(ForecastSlot::ALL.iter().map(|s| s.name()));
        out.write_record(&header)?;
        let cell = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.rows {
            let mut rec = vec![r.open_time.to_string()];
            rec.extend(Column::all().into_iter().map(|c| cell(r.column(c))));
            out.write_record(&rec)?;
        }
        out.flush()?;
        Ok(())
    }
}

fn segment_bounds(klines: &[Kline]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=klines.len() {
        if i == klines.len() || klines[i].open_time - klines[i - 1].open_time != HOUR_MS {
            out.push((start, i));
            start = i;
        }
    }
    out
}

/// Builds the feature table over a stitched series.
///
/// Each gap-free run is processed on its own, so no rolling window ever
/// spans missing hours; every run contributes `n` warm-up rows.
pub fn build_feature_table(
    series: &StitchedSeries,
    n: usize,
    mode: DelDriftMode,
) -> Result<FeatureTable, FeatureError> {
    if n == 0 {
        return Err(FeatureError::ZeroWindow);
    }
    let mut rows = Vec::new();
    let mut longest = 0;
    for (seg, (start, end)) in segment_bounds(&series.klines).into_iter().enumerate() {
        let k = &series.klines[start..end];
        longest = longest.max(k.len());
        if k.len() < 2 {
            continue;
        }
        let opens: Vec<f64> = k.iter().map(|k| k.open).collect();
        let deltas = pct_change(&opens).map_err(|e| match e {
            FeatureError::NonPositivePrice(i) => FeatureError::NonPositivePrice(start + i),
            other => other,
        })?;
        let (rho, sigma) = if deltas.len() >= n {
            let rho = rolling_drift(&deltas, n)?;
            let sigma = rolling_vol(&deltas, &rho, n)?;
            (rho, sigma)
        } else {
            (vec![None; deltas.len()], vec![None; deltas.len()])
        };
        let del: Vec<Option<f64>> = match mode {
            DelDriftMode::DriftDifference => rho
                .iter()
                .enumerate()
                .map(|(j, r)| match (j.checked_sub(1).and_then(|p| rho[p]), r) {
                    (Some(a), Some(b)) => Some(b - a),
                    _ => None,
                })
                .collect(),
            // keep the warm-up boundary identical to the drift-difference mode
            DelDriftMode::PctChangeDifference => (0..deltas.len())
                .map(|j| (j >= 1 && j >= n && rho[j].is_some()).then(|| deltas[j] - deltas[j - 1]))
                .collect(),
        };
        for j in 0..deltas.len() {
            let cur = &k[j + 1];
            let prev = &k[j];
            rows.push(FeatureRow {
                open_time: cur.open_time,
                month: series
                    .tags
                    .get(start + j + 1)
                    .copied()
                    .unwrap_or_else(|| MonthId::from_epoch_ms(cur.open_time)),
                segment: seg,
                open: cur.open,
                close: prev.close,
                high: prev.high,
                low: prev.low,
                volume: prev.volume,
                quote_volume: prev.quote_volume,
                count: prev.count as f64,
                taker_buy_volume: prev.taker_buy_volume,
                pct_change: deltas[j],
                drift: rho[j],
                vol: sigma[j],
                del_drift: del[j],
                forecasts: [None; 8],
            });
        }
    }
    if rows.iter().all(|r| r.is_warmup()) {
        return Err(FeatureError::WindowExceedsSeries {
            window: n + 2,
            len: longest,
        });
    }
    Ok(FeatureTable {
        rows,
        window: n,
        del_drift_mode: mode,
    })
}

/// Pearson correlation matrix over rows where every selected column is
/// defined. Row-major, `columns.len()` square.
pub fn pearson_corr_matrix(table: &FeatureTable, columns: &[Column]) -> Result<Vec<Vec<f64>>, FeatureError> {
    let data: Vec<Vec<f64>> = table
        .rows
        .iter()
        .filter_map(|r| columns.iter().map(|c| r.column(*c)).collect::<Option<Vec<f64>>>())
        .collect();
    if data.len() < 2 {
        return Err(FeatureError::TooFewRows(data.len()));
    }
    let cols: Vec<Vec<f64>> = (0..columns.len())
        .map(|j| data.iter().map(|r| r[j]).collect())
        .collect();
    pearson_matrix(&cols, &columns.iter().map(|c| c.name().to_string()).collect::<Vec<_>>())
}

/// Pearson correlation of equally long columns.
pub fn pearson_matrix(cols: &[Vec<f64>], names: &[String]) -> Result<Vec<Vec<f64>>, FeatureError> {
    let n = cols.first().map(|c| c.len()).unwrap_or(0);
    let centered: Vec<(Vec<f64>, f64)> = cols
        .iter()
        .zip(names)
        .map(|(c, name)| {
            let mean = c.iter().sum::<f64>() / n as f64;
            let d: Vec<f64> = c.iter().map(|x| x - mean).collect();
            let norm = d.iter().map(|x| x * x).sum::<f64>().sqrt();
            if !(norm > 0.0) {
                Err(FeatureError::ZeroVariance(name.clone()))
            } else {
                Ok((d, norm))
            }
        })
        .collect::<Result<_, _>>()?;
    let k = cols.len();
    let mut m = vec![vec![0.0; k]; k];
    for i in 0..k {
        m[i][i] = 1.0;
        for j in i + 1..k {
            let (a, na) = &centered[i];
            let (b, nb) = &centered[j];
            let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
            let r = (dot / (na * nb)).clamp(-1.0, 1.0);
            m[i][j] = r;
            m[j][i] = r;
        }
    }
    Ok(m)
}

/// Binning rule for [`histogram`].
#[derive(Debug, Clone, PartialEq)]
pub enum Bins {
    /// Equal-width bins spanning the finite data range.
    Count(usize),
    /// Equal-width bins over `[lo, hi]`; values outside are not counted.
    Range { count: usize, lo: f64, hi: f64 },
    /// Explicit monotone edges; values outside are not counted.
    Edges(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

/// Bins are half-open `[e_k, e_{k+1})` except the last, which is closed.
pub fn histogram(values: &[f64], bins: Bins) -> Result<Histogram, FeatureError> {
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    let equal = |count: usize, lo: f64, hi: f64| -> Vec<f64> {
        let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, lo + 0.5) };
        (0..=count)
            .map(|k| {
                if k == count {
                    hi
                } else {
                    lo + (hi - lo) * k as f64 / count as f64
                }
            })
            .collect()
    };
    let edges = match bins {
        Bins::Count(0) | Bins::Range { count: 0, .. } => return Err(FeatureError::NoBins),
        Bins::Count(count) => {
            let lo = finite.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if finite.is_empty() {
                equal(count, 0.0, 1.0)
            } else {
                equal(count, lo, hi)
            }
        }
        Bins::Range { count, lo, hi } => equal(count, lo, hi),
        Bins::Edges(e) => {
            if e.len() < 2 {
                return Err(FeatureError::NoBins);
            }
            e
        }
    };
    let nb = edges.len() - 1;
    let mut counts = vec![0usize; nb];
    let (lo, hi) = (edges[0], edges[nb]);
    for v in finite {
        if v < lo || v > hi {
            continue;
        }
        // first edge strictly greater than v, minus one
        let k = edges.partition_point(|e| *e <= v).saturating_sub(1).min(nb - 1);
        counts[k] += 1;
    }
    Ok(Histogram { edges, counts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{month_series_from, stitch_months};

    #[test]
    fn pct_change_examples() {
        assert_eq!(pct_change(&[100.0, 100.0, 100.0]).unwrap(), vec![0.0, 0.0]);
        assert_eq!(pct_change(&[100.0, 110.0]).unwrap()[0], (110.0 - 100.0) / 100.0);
        assert_eq!(pct_change(&[100.0, 50.0, 100.0]).unwrap(), vec![-0.5, 1.0]);
        assert_eq!(pct_change(&[1.0, 0.0]), Err(FeatureError::NonPositivePrice(1)));
    }

    #[test]
    fn rolling_drift_examples() {
        let r = rolling_drift(&[0.01; 8], 5).unwrap();
        assert_eq!(r.iter().filter(|v| v.is_none()).count(), 4);
        assert!(r.iter().flatten().all(|v| (v - 0.01).abs() < 1e-15));
        let r = rolling_drift(&[0.1, -0.1, 0.1, -0.1], 2).unwrap();
        assert_eq!(r, vec![None, Some(0.0), Some(0.0), Some(0.0)]);
        assert!(matches!(
            rolling_drift(&[0.1], 2),
            Err(FeatureError::WindowExceedsSeries { .. })
        ));
    }

    #[test]
    fn rolling_vol_examples() {
        let d = [0.02; 10];
        let rho = rolling_drift(&d, 4).unwrap();
        let s = rolling_vol(&d, &rho, 4).unwrap();
        assert!(s.iter().flatten().all(|v| v.abs() < 1e-15));
        let d: Vec<f64> = (0..10).map(|i| if i % 2 == 0 { 0.03 } else { -0.03 }).collect();
        let rho = rolling_drift(&d, 4).unwrap();
        let s = rolling_vol(&d, &rho, 4).unwrap();
        for (r, v) in rho.iter().zip(&s).skip(3) {
            assert!(r.unwrap().abs() < 1e-17);
            assert!((v.unwrap() - 0.03).abs() < 1e-15);
        }
    }

    #[test]
    fn delta_drift_examples() {
        assert_eq!(delta_drift(&[Some(0.5); 3]).unwrap(), vec![Some(0.0); 2]);
        let d = delta_drift(&[Some(1e-4), Some(3e-4)]).unwrap();
        assert!((d[0].unwrap() - 2e-4).abs() < 1e-18);
    }

    #[test]
    fn histogram_examples() {
        assert_eq!(histogram(&[1.0, 1.0, 1.0], Bins::Count(1)).unwrap().counts, vec![3]);
        let h = histogram(
            &[0.0, 0.5, 1.0],
            Bins::Range {
                count: 2,
                lo: 0.0,
                hi: 1.0,
            },
        )
        .unwrap();
        assert_eq!(h.counts, vec![1, 2]);
        assert_eq!(h.edges, vec![0.0, 0.5, 1.0]);
        let h = histogram(&[], Bins::Count(4)).unwrap();
        assert_eq!(h.counts, vec![0; 4]);
        assert!(histogram(&[1.0], Bins::Count(0)).is_err());
        let h = histogram(&[f64::NAN, 2.0, 3.0], Bins::Count(3)).unwrap();
        assert_eq!(h.counts.iter().sum::<usize>(), 2);
    }

    fn series(prices: &[f64]) -> StitchedSeries {
        let m = MonthId::new(2021, 3).unwrap();
        let klines = prices
            .iter()
            .enumerate()
            .map(|(i, p)| Kline {
                open_time: m.start_ms() + i as i64 * HOUR_MS,
                open: *p,
                high: p * 1.01,
                low: p * 0.99,
                close: *p,
                volume: 1.0 + i as f64,
                quote_volume: 2.0,
                count: i as u64,
                taker_buy_volume: 0.5,
            })
            .collect();
        stitch_months(&[month_series_from(klines, "s".into(), vec![]).unwrap()], 0, 0).unwrap()
    }

    #[test]
    fn shifted_columns_and_warmup_count() {
        let prices: Vec<f64> = (0..40).map(|i| 100.0 + (i as f64 * 0.7).sin()).collect();
        let mut s = series(&prices);
        s.klines[9].close = 42.0;
        let t = build_feature_table(&s, 5, DelDriftMode::DriftDifference).unwrap();
        assert_eq!(t.rows.len(), 39);
        assert_eq!(t.rows[9].close, 42.0);
        assert_eq!(t.rows[9].open, prices[10]);
        assert_eq!(t.rows.iter().filter(|r| r.is_warmup()).count(), 5);
        assert!(t.rows[5].predictors().is_some());
    }

    #[test]
    fn gap_restarts_warmup() {
        let prices: Vec<f64> = (0..40).map(|i| 100.0 + i as f64).collect();
        let mut s = series(&prices);
        s.klines.remove(20);
        s.tags.remove(20);
        let t = build_feature_table(&s, 5, DelDriftMode::DriftDifference).unwrap();
        assert_eq!(t.rows.iter().filter(|r| r.is_warmup()).count(), 10);
        let segs: std::collections::BTreeSet<_> = t.rows.iter().map(|r| r.segment).collect();
        assert_eq!(segs.len(), 2);
    }

    #[test]
    fn corr_self_and_affine() {
        let x: Vec<f64> = (0..50).map(|i| ((i * 37) % 11) as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 3.0).collect();
        let m = pearson_matrix(&[x.clone(), y, x], &["x".into(), "y".into(), "z".into()]).unwrap();
        assert!((m[0][1] - 1.0).abs() < 1e-12);
        assert!((m[0][2] - 1.0).abs() < 1e-12);
        assert_eq!(m[1][1], 1.0);
        let err = pearson_matrix(
            &[vec![1.0; 5], vec![1.0, 2.0, 3.0, 4.0, 5.0]],
            &["c".into(), "d".into()],
        );
        assert_eq!(err, Err(FeatureError::ZeroVariance("c".into())));
    }
}
