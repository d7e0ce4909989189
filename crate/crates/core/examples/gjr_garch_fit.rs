//! Simulates a GJR-GARCH(1,1) series, fits it back by maximum likelihood and
//! rolls one-step volatility forecasts over fresh data.

use mjd_forecast::garch::{gjr_fit, GarchConfig, GjrGarchParams};
use mjd_forecast::synth::simulate_gjr;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let truth = GjrGarchParams {
        omega: 1e-6,
        alpha: 0.05,
        gamma: 0.10,
        beta: 0.85,
    };
    let (returns, variances) = simulate_gjr(&truth, 20_000, 7);
    let (train, test) = returns.split_at(19_000);

    let fit = gjr_fit(train, &GarchConfig::default())?;
    let p = fit.params;
    println!(
        "true   ω={:.2e} α={:.3} γ={:.3} β={:.3}",
        truth.omega, truth.alpha, truth.gamma, truth.beta
    );
    println!(
        "fitted ω={:.2e} α={:.3} γ={:.3} β={:.3}",
        p.omega, p.alpha, p.gamma, p.beta
    );
    println!(
        "persistence {:.4}, loglik {:.1}, {} iterations",
        p.persistence(),
        fit.loglik,
        fit.iterations
    );

    // forecast for hour t uses returns up to t − 1
    let mut filter = fit.filter();
    let mut forecast = filter.forecast();
    let mut err = 0.0;
    for (t, &r) in test.iter().enumerate() {
        let true_sigma = variances[19_000 + t].sqrt();
        err += (forecast / true_sigma - 1.0).abs();
        forecast = filter.update(r);
    }
    println!(
        "mean relative error against the true σ: {:.2}%",
        100.0 * err / test.len() as f64
    );
    Ok(())
}
