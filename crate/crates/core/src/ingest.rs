//! Exchange kline dumps: parsing, validation and month stitching.
//!
//! The input layout is the public monthly kline dump (12 columns, optionally
//! headered):
//!
//! ```text
//! open_time, open, high, low, close, volume, close_time, quote_volume,
//! count, taker_buy_volume, taker_buy_quote_volume, ignore
//! ```
//!
//! All timestamps are epoch milliseconds in UTC and month boundaries are
//! computed in UTC. Missing hours are never imputed: they are reported as
//! [`Gap`] markers and downstream feature code restarts its rolling windows
//! after each gap.

use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::{DateTime, Datelike, NaiveDate, TimeZone, Utc};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// One hour in milliseconds.
pub const HOUR_MS: i64 = 3_600_000;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: i/o error: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: malformed row at line {line}: {reason}")]
    MalformedRow { path: String, line: usize, reason: String },
    #[error("{path}: open_time not strictly increasing at line {line}")]
    OrderViolation { path: String, line: usize },
    #[error("{path}: file contains no klines")]
    EmptyFile { path: String },
    #[error("{path}: kline at line {line} falls outside month {expected}")]
    MixedMonths {
        path: String,
        line: usize,
        expected: MonthId,
    },
    #[error("gap of {missing_hours} hours between {before} and {after} exceeds the allowed {max_hours}")]
    GapTooLarge {
        before: MonthId,
        after: MonthId,
        missing_hours: i64,
        max_hours: i64,
    },
    #[error("months out of order: {after} follows {before}")]
    MonthOrder { before: MonthId, after: MonthId },
    #[error("data directory {0} does not exist")]
    MissingDataDir(PathBuf),
    #[error("no kline file for {symbol} {month} under {dir}")]
    MissingMonth {
        symbol: String,
        month: MonthId,
        dir: PathBuf,
    },
    #[error("invalid month identifier {0:?} (expected YYYY-MM)")]
    BadMonth(String),
}

/// A calendar month in UTC.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MonthId {
    pub year: i32,
    pub month: u32,
}

impl MonthId {
    pub fn new(year: i32, month: u32) -> Result<Self, IngestError> {
        if !(1..=12).contains(&month) {
            return Err(IngestError::BadMonth(format!("{year}-{month}")));
        }
        Ok(Self { year, month })
    }

    pub fn from_epoch_ms(ms: i64) -> Self {
        let dt: DateTime<Utc> = Utc
            .timestamp_millis_opt(ms)
            .single()
            .unwrap_or(DateTime::<Utc>::UNIX_EPOCH);
        Self {
            year: dt.year(),
            month: dt.month(),
        }
    }

    pub fn next(self) -> Self {
        if self.month == 12 {
            Self {
                year: self.year + 1,
                month: 1,
            }
        } else {
            Self {
                year: self.year,
                month: self.month + 1,
            }
        }
    }

    /// Epoch milliseconds of 00:00 UTC on the first day of the month.
    pub fn start_ms(self) -> i64 {
        NaiveDate::from_ymd_opt(self.year, self.month, 1)
            .and_then(|d| d.and_hms_opt(0, 0, 0))
            .map(|dt| dt.and_utc().timestamp_millis())
            .expect("valid month")
    }

    pub fn end_ms(self) -> i64 {
        self.next().start_ms()
    }

    pub fn hours(self) -> i64 {
        (self.end_ms() - self.start_ms()) / HOUR_MS
    }

    pub fn contains(self, ms: i64) -> bool {
        ms >= self.start_ms() && ms < self.end_ms()
    }

    /// Inclusive iterator from `self` to `last`.
    pub fn range_inclusive(self, last: MonthId) -> impl Iterator<Item = MonthId> {
        std::iter::successors(Some(self), move |m| {
            let n = m.next();
            (n <= last).then_some(n)
        })
        .take_while(move |m| *m <= last)
    }
}

impl fmt::Display for MonthId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl FromStr for MonthId {
    type Err = IngestError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || IngestError::BadMonth(s.to_string());
        let (y, m) = s.trim().split_once('-').ok_or_else(bad)?;
        let year = y.parse().map_err(|_| bad())?;
        let month = m.parse().map_err(|_| bad())?;
        MonthId::new(year, month).map_err(|_| bad())
    }
}

impl Serialize for MonthId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for MonthId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One hourly OHLCV candle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Kline {
    pub open_time: i64,
    pub open: f64,
    pub high: f64,
    pub low: f64,
    pub close: f64,
    pub volume: f64,
    pub quote_volume: f64,
    pub count: u64,
    pub taker_buy_volume: f64,
}

impl Kline {
    /// Checks the OHLC envelope, positivity and non-negativity invariants.
    pub fn validate(&self) -> Result<(), String> {
        let prices = [self.open, self.high, self.low, self.close];
        if prices.iter().any(|p| !p.is_finite() || *p <= 0.0) {
            return Err("prices must be finite and positive".into());
        }
        for (name, v) in [
            ("volume", self.volume),
            ("quote_volume", self.quote_volume),
            ("taker_buy_volume", self.taker_buy_volume),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(format!("{name} must be finite and non-negative"));
            }
        }
        if self.low > self.open.min(self.close) {
            return Err(format!(
                "low {} above min(open, close) {}",
                self.low,
                self.open.min(self.close)
            ));
        }
        if self.high < self.open.max(self.close) {
            return Err(format!(
                "high {} below max(open, close) {}",
                self.high,
                self.open.max(self.close)
            ));
        }
        Ok(())
    }
}

/// Column positions of each kline field in a CSV row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KlineSchema {
    pub open_time: usize,
    pub open: usize,
    pub high: usize,
    pub low: usize,
    pub close: usize,
    pub volume: usize,
    pub quote_volume: usize,
    pub count: usize,
    pub taker_buy_volume: usize,
}

impl KlineSchema {
    /// Exchange dump order.
    pub const EXCHANGE: KlineSchema = KlineSchema {
        open_time: 0,
        open: 1,
        high: 2,
        low: 3,
        close: 4,
        volume: 5,
        quote_volume: 7,
        count: 8,
        taker_buy_volume: 9,
    };

    fn min_columns(&self) -> usize {
        [
            self.open_time,
            self.open,
            self.high,
            self.low,
            self.close,
            self.volume,
            self.quote_volume,
            self.count,
            self.taker_buy_volume,
        ]
        .into_iter()
        .max()
        .unwrap_or(0)
            + 1
    }
}

impl Default for KlineSchema {
    fn default() -> Self {
        Self::EXCHANGE
    }
}

/// Strict parsing rejects OHLC-inconsistent rows; lenient logs and drops them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParseMode {
    #[default]
    Strict,
    Lenient,
}

/// A run of missing hours between two consecutive klines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gap {
    /// open_time of the last kline before the gap.
    pub before: i64,
    /// open_time of the first kline after the gap.
    pub after: i64,
    pub missing_hours: i64,
}

impl Gap {
    fn between(before: i64, after: i64) -> Option<Gap> {
        let step = after - before;
        (step != HOUR_MS).then(|| Gap {
            before,
            after,
            missing_hours: step / HOUR_MS - 1,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonthSeries {
    pub month: MonthId,
    pub klines: Vec<Kline>,
    pub source_path: String,
    pub gaps: Vec<Gap>,
    /// Rows dropped in lenient mode, as (line, reason).
    pub dropped: Vec<(usize, String)>,
}

impl MonthSeries {
    pub fn year(&self) -> i32 {
        self.month.year
    }
}

/// Dumps from 2025 on carry microsecond timestamps; normalize to milliseconds.
fn normalize_time(raw: i64) -> i64 {
    if raw > 100_000_000_000_000 {
        raw / 1000
    } else {
        raw
    }
}

fn parse_row(record: &csv::StringRecord, schema: &KlineSchema) -> Result<Kline, String> {
    if record.len() < schema.min_columns() {
        return Err(format!(
            "expected at least {} columns, found {}",
            schema.min_columns(),
            record.len()
        ));
    }
    let field = |i: usize| record.get(i).unwrap_or("").trim();
    let num = |i: usize, name: &str| -> Result<f64, String> {
        field(i)
            .parse::<f64>()
            .map_err(|_| format!("unparsable {name} {:?}", field(i)))
    };
    let open_time = field(schema.open_time)
        .parse::<i64>()
        .map_err(|_| format!("unparsable open_time {:?}", field(schema.open_time)))?;
    let count_raw = field(schema.count);
    let count = count_raw
        .parse::<u64>()
        .or_else(|_| {
            count_raw
                .parse::<f64>()
                .ok()
                .filter(|c| c.is_finite() && *c >= 0.0 && c.fract() == 0.0)
                .map(|c| c as u64)
                .ok_or(())
        })
        .map_err(|_| format!("unparsable count {count_raw:?}"))?;
    Ok(Kline {
        open_time: normalize_time(open_time),
        open: num(schema.open, "open")?,
        high: num(schema.high, "high")?,
        low: num(schema.low, "low")?,
        close: num(schema.close, "close")?,
        volume: num(schema.volume, "volume")?,
        quote_volume: num(schema.quote_volume, "quote_volume")?,
        count,
        taker_buy_volume: num(schema.taker_buy_volume, "taker_buy_volume")?,
    })
}

/// Parsed klines plus the `(line, reason)` of every row dropped in lenient mode.
pub type ParsedKlines = (Vec<Kline>, Vec<(usize, String)>);

/// Parses klines from any reader, without the single-month restriction.
pub fn parse_klines<R: Read>(
    reader: R,
    path: &str,
    schema: &KlineSchema,
    mode: ParseMode,
) -> Result<ParsedKlines, IngestError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut klines: Vec<Kline> = Vec::new();
    let mut dropped = Vec::new();
    for (idx, rec) in rdr.records().enumerate() {
        let line = idx + 1;
        let rec = rec.map_err(|e| IngestError::MalformedRow {
            path: path.to_string(),
            line,
            reason: e.to_string(),
        })?;
        if rec.iter().all(|f| f.trim().is_empty()) {
            continue;
        }
        // a header row has a non-numeric first field
        if klines.is_empty()
            && dropped.is_empty()
            && idx == 0
            && rec
                .get(schema.open_time)
                .map(|f| f.trim().parse::<i64>().is_err())
                .unwrap_or(false)
            && rec.iter().any(|f| f.chars().any(|c| c.is_ascii_alphabetic()))
        {
            continue;
        }
        let malformed = |reason: String| IngestError::MalformedRow {
            path: path.to_string(),
            line,
            reason,
        };
        let kline = parse_row(&rec, schema).map_err(malformed)?;
        if let Err(reason) = kline.validate() {
            match mode {
                ParseMode::Strict => return Err(malformed(reason)),
                ParseMode::Lenient => {
                    log::warn!("{path}:{line}: dropping kline: {reason}");
                    dropped.push((line, reason));
                    continue;
                }
            }
        }
        if let Some(prev) = klines.last() {
            if kline.open_time <= prev.open_time {
                return Err(IngestError::OrderViolation {
                    path: path.to_string(),
                    line,
                });
            }
        }
        klines.push(kline);
    }
    Ok((klines, dropped))
}

fn gaps_of(klines: &[Kline]) -> Vec<Gap> {
    klines
        .windows(2)
        .filter_map(|w| Gap::between(w[0].open_time, w[1].open_time))
        .collect()
}

/// Parses one monthly dump file into a validated [`MonthSeries`].
pub fn parse_kline_csv(path: &Path, schema: &KlineSchema, mode: ParseMode) -> Result<MonthSeries, IngestError> {
    let display = path.display().to_string();
    let file = File::open(path).map_err(|source| IngestError::Io {
        path: display.clone(),
        source,
    })?;
    let (klines, dropped) = parse_klines(file, &display, schema, mode)?;
    month_series_from(klines, display, dropped)
}

/// Builds a [`MonthSeries`] from already-ordered klines of one month.
pub fn month_series_from(
    klines: Vec<Kline>,
    source_path: String,
    dropped: Vec<(usize, String)>,
) -> Result<MonthSeries, IngestError> {
    let first = klines.first().ok_or_else(|| IngestError::EmptyFile {
        path: source_path.clone(),
    })?;
    let month = MonthId::from_epoch_ms(first.open_time);
    if let Some(pos) = klines.iter().position(|k| !month.contains(k.open_time)) {
        return Err(IngestError::MixedMonths {
            path: source_path,
            line: pos + 1,
            expected: month,
        });
    }
    let gaps = gaps_of(&klines);
    for g in &gaps {
        log::info!("{source_path}: {} missing hour(s) after {}", g.missing_hours, g.before);
    }
    Ok(MonthSeries {
        month,
        klines,
        source_path,
        gaps,
        dropped,
    })
}

/// Splits an ordered kline list into calendar months.
pub fn split_by_month(klines: Vec<Kline>, source: &str) -> Result<Vec<MonthSeries>, IngestError> {
    let mut out: Vec<MonthSeries> = Vec::new();
    let mut current: Vec<Kline> = Vec::new();
    for k in klines {
        if let Some(last) = current.last() {
            if MonthId::from_epoch_ms(last.open_time) != MonthId::from_epoch_ms(k.open_time) {
                out.push(month_series_from(
                    std::mem::take(&mut current),
                    source.to_string(),
                    Vec::new(),
                )?);
            }
        }
        current.push(k);
    }
    if !current.is_empty() {
        out.push(month_series_from(current, source.to_string(), Vec::new())?);
    }
    Ok(out)
}

/// Writes klines in the 12-column exchange layout (headerless).
///
/// `close_time` is reconstructed as `open_time + 1h - 1ms`; the taker buy
/// quote volume is not tracked and is written as 0.
pub fn write_kline_csv<W: Write>(mut w: W, klines: &[Kline]) -> std::io::Result<()> {
    for k in klines {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},0,0",
            k.open_time,
            k.open,
            k.high,
            k.low,
            k.close,
            k.volume,
            k.open_time + HOUR_MS - 1,
            k.quote_volume,
            k.count,
            k.taker_buy_volume
        )?;
    }
    Ok(())
}

/// Conventional dump file name, e.g. `BTCUSDT-1h-2020-01.csv`.
pub fn month_file_name(symbol: &str, month: MonthId) -> String {
    format!("{symbol}-1h-{month}.csv")
}

/// Loads every month in `[start, end]` from `dir`.
pub fn load_months(
    dir: &Path,
    symbol: &str,
    start: MonthId,
    end: MonthId,
    schema: &KlineSchema,
    mode: ParseMode,
) -> Result<Vec<MonthSeries>, IngestError> {
    if !dir.is_dir() {
        return Err(IngestError::MissingDataDir(dir.to_path_buf()));
    }
    let mut months = Vec::new();
    for month in start.range_inclusive(end) {
        let path = dir.join(month_file_name(symbol, month));
        if !path.is_file() {
            log::warn!("missing month file {}", path.display());
            return Err(IngestError::MissingMonth {
                symbol: symbol.to_string(),
                month,
                dir: dir.to_path_buf(),
            });
        }
        months.push(parse_kline_csv(&path, schema, mode)?);
    }
    Ok(months)
}

/// A continuous kline series built from consecutive months, each row tagged
/// with its calendar month.
#[derive(Debug, Clone, PartialEq)]
pub struct StitchedSeries {
    pub klines: Vec<Kline>,
    pub tags: Vec<MonthId>,
    pub lookback_hours: usize,
    pub gaps: Vec<Gap>,
}

impl StitchedSeries {
    pub fn months(&self) -> Vec<MonthId> {
        let mut out: Vec<MonthId> = Vec::new();
        for t in &self.tags {
            if out.last() != Some(t) {
                out.push(*t);
            }
        }
        out
    }

    /// The month's own rows preceded by up to `lookback_hours` rows of the
    /// prior month.
    pub fn window(&self, month: MonthId) -> &[Kline] {
        let Some(first) = self.tags.iter().position(|t| *t == month) else {
            return &[];
        };
        let last = self.tags.iter().rposition(|t| *t == month).unwrap_or(first);
        let start = first.saturating_sub(self.lookback_hours);
        &self.klines[start..=last]
    }

    pub fn len(&self) -> usize {
        self.klines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.klines.is_empty()
    }
}

/// Concatenates consecutive months into one series.
///
/// Each month's rolling computations may reach back `lookback_hours` into the
/// previous month; [`StitchedSeries::window`] exposes that view. Inter-month
/// gaps of up to `max_gap_hours` missing hours are recorded, larger ones
/// rejected.
pub fn stitch_months(
    months: &[MonthSeries],
    lookback_hours: usize,
    max_gap_hours: i64,
) -> Result<StitchedSeries, IngestError> {
    let mut klines = Vec::new();
    let mut tags = Vec::new();
    let mut gaps = Vec::new();
    for (i, m) in months.iter().enumerate() {
        if i > 0 {
            let prev = &months[i - 1];
            if m.month <= prev.month {
                return Err(IngestError::MonthOrder {
                    before: prev.month,
                    after: m.month,
                });
            }
            let before = prev.klines.last().map(|k| k.open_time).unwrap_or(prev.month.start_ms());
            let after = m.klines.first().map(|k| k.open_time).unwrap_or(m.month.start_ms());
            if let Some(g) = Gap::between(before, after) {
                if g.missing_hours > max_gap_hours || after <= before {
                    return Err(IngestError::GapTooLarge {
                        before: prev.month,
                        after: m.month,
                        missing_hours: g.missing_hours,
                        max_hours: max_gap_hours,
                    });
                }
                log::info!(
                    "{} missing hour(s) between {} and {}",
                    g.missing_hours,
                    prev.month,
                    m.month
                );
                gaps.push(g);
            }
        }
        gaps.extend(m.gaps.iter().copied());
        klines.extend(m.klines.iter().copied());
        tags.extend(std::iter::repeat_n(m.month, m.klines.len()));
    }
    gaps.sort_by_key(|g| g.before);
    Ok(StitchedSeries {
        klines,
        tags,
        lookback_hours,
        gaps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const ROW: &str = "1577836800000,7195.24000000,7196.25000000,7175.46000000,7177.02000000,511.81490100,1577840399999,3675857.18073522,7640,226.17425300,1624286.33426300,0";

    fn kline(t: i64, p: f64) -> Kline {
        Kline {
            open_time: t,
            open: p,
            high: p + 1.0,
            low: p - 1.0,
            close: p,
            volume: 1.0,
            quote_volume: p,
            count: 3,
            taker_buy_volume: 0.5,
        }
    }

    fn month(m: MonthId, rows: usize) -> MonthSeries {
        let klines = (0..rows)
            .map(|i| kline(m.start_ms() + i as i64 * HOUR_MS, 100.0 + i as f64))
            .collect();
        month_series_from(klines, format!("{m}"), Vec::new()).unwrap()
    }

    #[test]
    fn parses_single_exchange_row() {
        let (k, _) = parse_klines(ROW.as_bytes(), "t", &KlineSchema::EXCHANGE, ParseMode::Strict).unwrap();
        let s = month_series_from(k, "t".into(), vec![]).unwrap();
        assert_eq!(s.month, MonthId::new(2020, 1).unwrap());
        let k = s.klines[0];
        assert_eq!(k.open_time, 1577836800000);
        assert_eq!(k.open, 7195.24);
        assert_eq!(k.high, 7196.25);
        assert_eq!(k.low, 7175.46);
        assert_eq!(k.close, 7177.02);
        assert_eq!(k.volume, 511.814901);
        assert_eq!(k.quote_volume, 3675857.18073522);
        assert_eq!(k.count, 7640);
        assert_eq!(k.taker_buy_volume, 226.174253);
    }

    #[test]
    fn header_is_skipped_and_micros_normalized() {
        let text = format!(
            "open_time,open,high,low,close,volume,close_time,quote_volume,count,taker_buy_volume,tbq,ignore\n{}",
            ROW.replacen("1577836800000", "1577836800000000", 1)
        );
        let (k, _) = parse_klines(text.as_bytes(), "t", &KlineSchema::EXCHANGE, ParseMode::Strict).unwrap();
        assert_eq!(k.len(), 1);
        assert_eq!(k[0].open_time, 1577836800000);
    }

    #[test]
    fn duplicate_timestamp_is_order_violation() {
        let text = format!("{ROW}\n{ROW}\n");
        let err = parse_klines(text.as_bytes(), "t", &KlineSchema::EXCHANGE, ParseMode::Strict).unwrap_err();
        assert!(matches!(err, IngestError::OrderViolation { line: 2, .. }));
    }

    #[test]
    fn high_below_open_rejected_strict_dropped_lenient() {
        let bad = ROW.replacen("7196.25000000", "7190.00000000", 1);
        let err = parse_klines(bad.as_bytes(), "t", &KlineSchema::EXCHANGE, ParseMode::Strict).unwrap_err();
        assert!(matches!(err, IngestError::MalformedRow { line: 1, .. }));
        let (k, dropped) = parse_klines(bad.as_bytes(), "t", &KlineSchema::EXCHANGE, ParseMode::Lenient).unwrap();
        assert!(k.is_empty());
        assert_eq!(dropped.len(), 1);
    }

    #[test]
    fn unparsable_numeric_reports_line() {
        let text = format!("{ROW}\n1577840400000,abc,1,1,1,1,1,1,1,1,1,0\n");
        let err = parse_klines(text.as_bytes(), "t", &KlineSchema::EXCHANGE, ParseMode::Strict).unwrap_err();
        assert!(matches!(err, IngestError::MalformedRow { line: 2, .. }), "{err}");
    }

    #[test]
    fn empty_file_rejected() {
        let (k, d) = parse_klines("".as_bytes(), "t", &KlineSchema::EXCHANGE, ParseMode::Strict).unwrap();
        assert!(matches!(
            month_series_from(k, "t".into(), d),
            Err(IngestError::EmptyFile { .. })
        ));
    }

    #[test]
    fn month_arithmetic() {
        let dec = MonthId::new(2020, 12).unwrap();
        assert_eq!(dec.next(), MonthId::new(2021, 1).unwrap());
        assert_eq!(MonthId::new(2020, 2).unwrap().hours(), 29 * 24);
        assert_eq!(MonthId::new(2020, 1).unwrap().start_ms(), 1577836800000);
        assert_eq!("2023-01".parse::<MonthId>().unwrap(), MonthId::new(2023, 1).unwrap());
        assert!("2023-13".parse::<MonthId>().is_err());
        let r: Vec<_> = MonthId::new(2020, 11)
            .unwrap()
            .range_inclusive(MonthId::new(2021, 2).unwrap())
            .collect();
        assert_eq!(r.len(), 4);
    }

    #[test]
    fn stitch_window_includes_lookback() {
        let jan = month(MonthId::new(2020, 1).unwrap(), 744);
        let feb = month(MonthId::new(2020, 2).unwrap(), 696);
        let s = stitch_months(&[jan, feb], 60, 24).unwrap();
        assert_eq!(s.window(MonthId::new(2020, 2).unwrap()).len(), 696 + 60);
        assert_eq!(s.window(MonthId::new(2020, 1).unwrap()).len(), 744);
        assert_eq!(s.len(), 744 + 696);
        assert!(s.gaps.is_empty());
    }

    #[test]
    fn stitch_single_month_unchanged() {
        let jan = month(MonthId::new(2020, 1).unwrap(), 744);
        let s = stitch_months(std::slice::from_ref(&jan), 60, 24).unwrap();
        assert_eq!(s.klines, jan.klines);
    }

    #[test]
    fn stitch_missing_month_is_gap_too_large() {
        let jan = month(MonthId::new(2020, 1).unwrap(), 744);
        let mar = month(MonthId::new(2020, 3).unwrap(), 744);
        assert!(matches!(
            stitch_months(&[jan, mar], 60, 24),
            Err(IngestError::GapTooLarge { .. })
        ));
    }

    #[test]
    fn in_month_gap_is_recorded() {
        let m = MonthId::new(2021, 4).unwrap();
        let mut klines: Vec<_> = (0..10).map(|i| kline(m.start_ms() + i * HOUR_MS, 10.0)).collect();
        klines.remove(4);
        let s = month_series_from(klines, "g".into(), vec![]).unwrap();
        assert_eq!(s.gaps.len(), 1);
        assert_eq!(s.gaps[0].missing_hours, 1);
    }
}
