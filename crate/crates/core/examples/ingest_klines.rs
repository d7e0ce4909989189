//! Parses the bundled kline months, stitches them and reports gaps.
//!
//! ```text
//! cargo run --example ingest_klines -- [data_dir]
//! ```

use std::path::PathBuf;

use mjd_forecast::ingest::{month_file_name, parse_kline_csv, stitch_months, KlineSchema, MonthId, ParseMode};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data"));

    let mut months = Vec::new();
    for m in MonthId::new(2020, 1)?.range_inclusive(MonthId::new(2020, 2)?) {
        let path = dir.join(month_file_name("BTCUSDT", m));
        let series = parse_kline_csv(&path, &KlineSchema::default(), ParseMode::Strict)?;
        let first = &series.klines[0];
        println!(
            "{m}: {} klines, first open {:.2}, last close {:.2}",
            series.klines.len(),
            first.open,
            series.klines.last().unwrap().close
        );
        months.push(series);
    }

    let stitched = stitch_months(&months, 60, 72)?;
    let names: Vec<String> = stitched.months().iter().map(|m| m.to_string()).collect();
    println!("stitched {} hours across {}", stitched.klines.len(), names.join(", "));
    if stitched.gaps.is_empty() {
        println!("no gaps");
    }
    for g in &stitched.gaps {
        println!("gap: {g:?}");
    }
    Ok(())
}
