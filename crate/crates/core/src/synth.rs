//! Synthetic data with known structure, for tests, examples and the bundled
//! sample months.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::garch::GjrGarchParams;
use crate::ingest::{Kline, MonthId, HOUR_MS};
use crate::rng::stream_rng;

/// Zero-mean GJR-GARCH(1,1) returns with Gaussian innovations, started at
/// the stationary variance. Returns `(returns, conditional variances)`.
pub fn simulate_gjr(params: &GjrGarchParams, n: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = stream_rng(seed, 0);
    let mut s2 = params.unconditional_variance();
    let mut eps = Vec::with_capacity(n);
    let mut var = Vec::with_capacity(n);
    for t in 0..n {
        if t > 0 {
            s2 = params.next_variance(eps[t - 1], s2);
        }
        let z: f64 = rng.sample(StandardNormal);
        eps.push(s2.sqrt() * z);
        var.push(s2);
    }
    (eps, var)
}

/// Shape of a synthetic hourly market.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketSpec {
    pub s0: f64,
    /// Mean hourly return.
    pub mu: f64,
    pub garch: GjrGarchParams,
    /// Probability of a jump in any hour.
    pub jump_prob: f64,
    /// Std of jump returns.
    pub jump_std: f64,
    pub seed: u64,
}

impl Default for MarketSpec {
    fn default() -> Self {
        Self {
            s0: 7195.24,
            mu: 5e-5,
            garch: GjrGarchParams {
                omega: 2e-6,
                alpha: 0.05,
                gamma: 0.08,
                beta: 0.85,
            },
            jump_prob: 0.01,
            jump_std: 0.015,
            seed: 2020,
        }
    }
}

/// Hourly klines covering `months` calendar months from `start`. The open
/// of each hour equals the previous close.
pub fn synthetic_klines(spec: &MarketSpec, start: MonthId, months: usize) -> Vec<Kline> {
    let mut end = start;
    for _ in 0..months {
        end = end.next();
    }
    let hours = ((end.start_ms() - start.start_ms()) / HOUR_MS) as usize;
    let mut rng = stream_rng(spec.seed, 1);
    let mut s2 = spec.garch.unconditional_variance();
    let mut eps = 0.0;
    let mut open = spec.s0;
    let mut out = Vec::with_capacity(hours);
    for h in 0..hours {
        if h > 0 {
            s2 = spec.garch.next_variance(eps, s2);
        }
        let z: f64 = rng.sample(StandardNormal);
        eps = s2.sqrt() * z;
        let mut r = spec.mu + eps;
        if rng.random::<f64>() < spec.jump_prob {
            let j: f64 = rng.sample(StandardNormal);
            r += spec.jump_std * j;
        }
        let close = open * r.exp();
        let wick = s2.sqrt() * 0.5;
        let high = open.max(close) * (1.0 + wick * rng.random::<f64>());
        let low = open.min(close) * (1.0 - wick * rng.random::<f64>());
        let volume = 500.0 * (0.5 * rng.sample::<f64, _>(StandardNormal) + 10.0 * r.abs()).exp();
        let mid = 0.5 * (open + close);
        out.push(Kline {
            open_time: start.start_ms() + h as i64 * HOUR_MS,
            open: round8(open),
            high: round8(high),
            low: round8(low),
            close: round8(close),
            volume: round8(volume),
            quote_volume: round8(volume * mid),
            count: (volume * 15.0).round() as u64,
            taker_buy_volume: round8(volume * rng.random_range(0.3..0.7)),
        });
        open = close;
    }
    // rounding must not break the candle envelope
    for k in &mut out {
        k.high = k.high.max(k.open).max(k.close);
        k.low = k.low.min(k.open).min(k.close);
    }
    out
}

/// Rounds to 8 decimals, the exchange dump precision.
fn round8(x: f64) -> f64 {
    (x * 1e8).round() / 1e8
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn klines_are_valid_and_contiguous() {
        let k = synthetic_klines(&MarketSpec::default(), MonthId::new(2020, 1).unwrap(), 2);
        assert_eq!(k.len(), 744 + 696);
        for w in k.windows(2) {
            assert_eq!(w[1].open_time - w[0].open_time, HOUR_MS);
        }
        assert!(k.iter().all(|k| k.validate().is_ok()));
    }

    #[test]
    fn gjr_simulation_is_seeded() {
        let p = GjrGarchParams {
            omega: 1e-6,
            alpha: 0.05,
            gamma: 0.1,
            beta: 0.85,
        };
        assert_eq!(simulate_gjr(&p, 50, 1), simulate_gjr(&p, 50, 1));
        assert_ne!(simulate_gjr(&p, 50, 1).0, simulate_gjr(&p, 50, 2).0);
    }
}
