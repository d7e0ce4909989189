//! One-hour jump-diffusion Monte Carlo forecasts against the closed-form
//! expectation, with and without jumps, plus a week-long sample path.

use mjd_forecast::jumpsim::{mc_forecast, simulate_path, JumpParams, JumpRule, JumpSampler, SimConfig};
use mjd_forecast::rng::stream_rng;

fn main() {
    let s0 = 16529.59;
    let (mu, sigma) = (5e-4, 0.01);
    let rule = JumpRule::default();
    let (jumps, clamped) = rule.params(mu, sigma);
    println!(
        "jump rule gives λ={:.2e} m={} s={} (clamped: {clamped})",
        jumps.lambda, jumps.m, jumps.s
    );

    for (label, j) in [
        ("no jumps", JumpParams::NONE),
        ("rule", jumps),
        (
            "λ=0.1",
            JumpParams {
                lambda: 0.1,
                m: 0.0,
                s: 0.02,
            },
        ),
    ] {
        for sampler in [JumpSampler::CompoundPoisson, JumpSampler::NormalApprox] {
            let cfg = SimConfig {
                sampler,
                quantiles: vec![0.05, 0.5, 0.95],
                ..SimConfig::one_hour(s0, mu, sigma, j, 10_000, 1)
            };
            let mc = mc_forecast(&cfg);
            let exact = s0 * (mu + j.exp_moment(1.0).ln()).exp();
            println!(
                "{label:>8} {sampler:?}: mean {:.2} ± {:.2} (exact {exact:.2}), 90% band [{:.2}, {:.2}], {} jumps",
                mc.mean_price, mc.std_error, mc.quantiles[0].1, mc.quantiles[2].1, mc.total_jumps
            );
        }
    }

    let week = SimConfig {
        horizon: 168.0,
        ..SimConfig::one_hour(s0, mu, sigma, jumps, 1, 3)
    };
    let path = simulate_path(&week, &mut stream_rng(3, 0));
    let (lo, hi) = path
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &p| (a.min(p), b.max(p)));
    println!(
        "168-hour path: {} points, ends at {:.2}, range [{lo:.2}, {hi:.2}]",
        path.len(),
        path.last().unwrap()
    );
}
