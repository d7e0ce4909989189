//! Builds the hourly feature table on synthetic data and prints a few
//! summaries: column means, a correlation row and a pct_change histogram.

use mjd_forecast::features::{build_feature_table, histogram, pearson_matrix, Bins, Column, DelDriftMode};
use mjd_forecast::ingest::{split_by_month, stitch_months, MonthId};
use mjd_forecast::synth::{synthetic_klines, MarketSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let klines = synthetic_klines(&MarketSpec::default(), MonthId::new(2020, 1)?, 2);
    let series = stitch_months(&split_by_month(klines, "synthetic")?, 60, 72)?;
    let table = build_feature_table(&series, 60, DelDriftMode::DriftDifference)?;
    let warm = table.rows.iter().filter(|r| r.is_warmup()).count();
    println!("{} rows, {warm} warm-up", table.len());

    let cols = Column::base();
    let names: Vec<String> = cols.iter().map(|c| c.name().to_string()).collect();
    // complete rows only, so every column has the same length
    let complete: Vec<_> = table.rows.iter().filter(|r| !r.is_warmup()).collect();
    let data: Vec<Vec<f64>> = cols
        .iter()
        .map(|c| complete.iter().map(|r| r.column(*c).unwrap()).collect())
        .collect();
    for (name, col) in names.iter().zip(&data) {
        println!("{name:>18} mean {:.6e}", col.iter().sum::<f64>() / col.len() as f64);
    }

    let corr = pearson_matrix(&data, &names)?;
    let vol = names.iter().position(|n| n == "vol").unwrap();
    println!("\ncorrelation with vol:");
    for (name, r) in names.iter().zip(&corr[vol]) {
        println!("{name:>18} {r:+.3}");
    }

    let pct: Vec<f64> = table.rows.iter().map(|r| r.pct_change).collect();
    let h = histogram(&pct, Bins::Count(15))?;
    println!("\npct_change histogram:");
    for (i, c) in h.counts.iter().enumerate() {
        println!("{:+.4} {}", h.edges[i], "#".repeat(c / 10));
    }
    Ok(())
}
