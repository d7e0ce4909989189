//! Writes synthetic hourly kline months in the exchange dump layout.
//!
//! ```text
//! cargo run --example synthetic_data -- <out_dir> [months] [seed]
//! ```
//!
//! With no arguments it regenerates the two bundled sample months under
//! `crates/core/data`.

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use mjd_forecast::ingest::{month_file_name, split_by_month, write_kline_csv, MonthId};
use mjd_forecast::synth::{synthetic_klines, MarketSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let dir = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data"));
    let months: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(2);
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(2020);

    let spec = MarketSpec {
        seed,
        ..MarketSpec::default()
    };
    let klines = synthetic_klines(&spec, MonthId::new(2020, 1)?, months);
    std::fs::create_dir_all(&dir)?;
    for m in split_by_month(klines, "synthetic")? {
        let path = dir.join(month_file_name("BTCUSDT", m.month));
        write_kline_csv(BufWriter::new(File::create(&path)?), &m.klines)?;
        println!("{} ({} rows)", path.display(), m.klines.len());
    }
    Ok(())
}
