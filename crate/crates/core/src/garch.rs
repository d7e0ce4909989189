//! GJR-GARCH(1,1) with Gaussian innovations.
//!
//! ```text
//! ε_t   = σ_t · z_t,             z_t ~ N(0, 1)
//! σ²_t  = ω + (α + γ·1[ε_{t−1} < 0])·ε²_{t−1} + β·σ²_{t−1}
//! ```
//!
//! subject to ω, α, γ, β > 0 and α + β + γ/2 < 1. Parameters are estimated
//! by maximum likelihood with a Nelder–Mead search over an unconstrained
//! reparameterization that keeps every iterate inside the constraint set.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::optim::NelderMead;

/// Persistence ceiling used by the reparameterization.
const PERSISTENCE_CAP: f64 = 1.0 - 2e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GarchError {
    #[error("need at least {needed} observations, found {found}")]
    TooFewObservations { needed: usize, found: usize },
    #[error("returns have zero variance")]
    ZeroVariance,
    #[error("conditional variance became non-finite or non-positive at t={0}")]
    NonFinite(usize),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GjrGarchParams {
    pub omega: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub beta: f64,
}

impl GjrGarchParams {
    pub fn persistence(&self) -> f64 {
        self.alpha + self.beta + 0.5 * self.gamma
    }

    pub fn validate(&self) -> Result<(), GarchError> {
        let all_pos = [self.omega, self.alpha, self.gamma, self.beta]
            .iter()
            .all(|v| v.is_finite() && *v >= 0.0)
            && self.omega > 0.0;
        if !all_pos {
            return Err(GarchError::InvalidParams(format!("{self:?} must be positive")));
        }
        if self.persistence() >= 1.0 {
            return Err(GarchError::InvalidParams(format!(
                "alpha + beta + gamma/2 = {} is not below 1",
                self.persistence()
            )));
        }
        Ok(())
    }

    /// Long-run variance ω / (1 − α − β − γ/2).
    pub fn unconditional_variance(&self) -> f64 {
        self.omega / (1.0 - self.persistence())
    }

    /// σ²_{t+1} given ε_t and σ²_t.
    #[inline]
    pub fn next_variance(&self, eps: f64, sigma2: f64) -> f64 {
        let load = if eps < 0.0 { self.alpha + self.gamma } else { self.alpha };
        self.omega + load * eps * eps + self.beta * sigma2
    }

    fn to_unconstrained(self) -> [f64; 4] {
        let p = self.persistence() / PERSISTENCE_CAP;
        let (sa, sg, sb) = (self.alpha, 0.5 * self.gamma, self.beta);
        [self.omega.ln(), (p / (1.0 - p)).ln(), (sa / sb).ln(), (sg / sb).ln()]
    }

    fn from_unconstrained(theta: &[f64]) -> Self {
        let p = PERSISTENCE_CAP / (1.0 + (-theta[1]).exp());
        let m = theta[2].max(theta[3]).max(0.0);
        let (ea, eg, eb) = ((theta[2] - m).exp(), (theta[3] - m).exp(), (-m).exp());
        let s = ea + eg + eb;
        Self {
            omega: theta[0].exp(),
            alpha: p * ea / s,
            gamma: 2.0 * p * eg / s,
            beta: p * eb / s,
        }
    }
}

/// Conditional variance path. `σ²[0] = sigma2_0`, then the GJR recursion.
pub fn gjr_variance_path(returns: &[f64], params: &GjrGarchParams, sigma2_0: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(returns.len());
    let mut s2 = sigma2_0;
    for (t, _) in returns.iter().enumerate() {
        if t > 0 {
            s2 = params.next_variance(returns[t - 1], s2);
        }
        out.push(s2);
    }
    out
}

fn loglik_raw(returns: &[f64], params: &GjrGarchParams, sigma2_0: f64) -> Result<f64, GarchError> {
    let ln2pi = (2.0 * PI).ln();
    let mut s2 = sigma2_0;
    let mut ll = 0.0;
    for (t, &e) in returns.iter().enumerate() {
        if t > 0 {
            s2 = params.next_variance(returns[t - 1], s2);
        }
        if !(s2 > 0.0 && s2.is_finite()) {
            return Err(GarchError::NonFinite(t));
        }
        ll -= 0.5 * (ln2pi + s2.ln() + e * e / s2);
    }
    if ll.is_finite() {
        Ok(ll)
    } else {
        Err(GarchError::NonFinite(returns.len()))
    }
}

/// Gaussian log-likelihood Σ −½(ln 2π + ln σ²_t + ε²_t/σ²_t).
pub fn gjr_loglik(returns: &[f64], params: &GjrGarchParams, sigma2_0: f64) -> Result<f64, GarchError> {
    if !(sigma2_0 > 0.0) {
        return Err(GarchError::InvalidParams(format!(
            "sigma2_0 = {sigma2_0} must be positive"
        )));
    }
    loglik_raw(returns, params, sigma2_0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GarchConfig {
    pub min_obs: usize,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for GarchConfig {
    fn default() -> Self {
        Self {
            min_obs: 100,
            max_iter: 2000,
            tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GarchFit {
    pub params: GjrGarchParams,
    pub loglik: f64,
    /// Loglik at the starting point, for diagnostics.
    pub initial_loglik: f64,
    pub sigma2_path: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// Training mean subtracted from returns before fitting.
    pub mean: f64,
    pub sigma2_0: f64,
    /// Last training residual ε_T.
    pub last_residual: f64,
}

impl GarchFit {
    /// A filter that continues the variance recursion past the training data.
    pub fn filter(&self) -> GjrFilter {
        GjrFilter {
            params: self.params,
            mean: self.mean,
            sigma2: *self.sigma2_path.last().expect("non-empty path"),
            residual: self.last_residual,
        }
    }
}

/// Maximum-likelihood fit on a raw return series (demeaned internally).
pub fn gjr_fit(returns: &[f64], config: &GarchConfig) -> Result<GarchFit, GarchError> {
    let n = returns.len();
    if n < config.min_obs.max(2) {
        return Err(GarchError::TooFewObservations {
            needed: config.min_obs.max(2),
            found: n,
        });
    }
    let mean = returns.iter().sum::<f64>() / n as f64;
    let eps: Vec<f64> = returns.iter().map(|r| r - mean).collect();
    let var = eps.iter().map(|e| e * e).sum::<f64>() / n as f64;
    if !(var > 0.0) || !var.is_finite() {
        return Err(GarchError::ZeroVariance);
    }

    let start = GjrGarchParams {
        omega: var * (1.0 - 0.05 - 0.85 - 0.025),
        alpha: 0.05,
        gamma: 0.05,
        beta: 0.85,
    };
    let initial_loglik = loglik_raw(&eps, &start, var)?;
    let objective = |theta: &[f64]| match loglik_raw(&eps, &GjrGarchParams::from_unconstrained(theta), var) {
        Ok(ll) => -ll,
        Err(_) => f64::INFINITY,
    };

    // restart from the incumbent until a restart stops improving
    let mut theta = start.to_unconstrained().to_vec();
    let mut best = -initial_loglik;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < config.max_iter {
        let nm = NelderMead {
            max_iter: config.max_iter - iterations,
            tol: config.tol,
            step: 0.5,
        };
        let r = nm.minimize(&objective, &theta);
        iterations += r.iterations.max(1);
        let improved = best - r.fx;
        if r.fx < best {
            best = r.fx;
            theta = r.x;
        }
        converged = r.converged;
        if !r.converged || improved <= config.tol * (1.0 + best.abs()) {
            break;
        }
    }

    let params = GjrGarchParams::from_unconstrained(&theta);
    let sigma2_path = gjr_variance_path(&eps, &params, var);
    let loglik = loglik_raw(&eps, &params, var)?;
    if !converged {
        log::warn!("GJR-GARCH did not converge in {iterations} iterations");
    }
    Ok(GarchFit {
        params,
        loglik,
        initial_loglik,
        sigma2_path,
        converged,
        iterations,
        mean,
        sigma2_0: var,
        last_residual: *eps.last().unwrap_or(&0.0),
    })
}

/// One-step volatility forecast given the residual ε_T at the end of the fit:
/// `√(ω + (α + γ·1[ε_T < 0])·ε_T² + β·σ²_T)`.
pub fn gjr_forecast_next(fit: &GarchFit, last_residual: f64) -> f64 {
    let s2 = *fit.sigma2_path.last().expect("non-empty path");
    fit.params.next_variance(last_residual, s2).sqrt()
}

/// Rolls one-step volatility forecasts forward without refitting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GjrFilter {
    params: GjrGarchParams,
    mean: f64,
    /// Variance of the most recent residual.
    sigma2: f64,
    residual: f64,
}

impl GjrFilter {
    /// Forecast σ for the observation after the most recent one.
    pub fn forecast(&self) -> f64 {
        self.params.next_variance(self.residual, self.sigma2).sqrt()
    }

    /// Absorbs a new raw return and returns the σ forecast for the next one.
    pub fn update(&mut self, raw_return: f64) -> f64 {
        self.sigma2 = self.params.next_variance(self.residual, self.sigma2);
        self.residual = raw_return - self.mean;
        self.forecast()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(omega: f64, alpha: f64, gamma: f64, beta: f64) -> GjrGarchParams {
        GjrGarchParams {
            omega,
            alpha,
            gamma,
            beta,
        }
    }

    #[test]
    fn zero_shock_path_is_geometric() {
        let params = p(1.0, 0.0, 0.0, 0.5);
        let path = gjr_variance_path(&[0.0; 5], &params, 2.0);
        assert_eq!(path, vec![2.0; 5]);
        let path = gjr_variance_path(&[0.0; 4], &params, 4.0);
        assert_eq!(path, vec![4.0, 3.0, 2.5, 2.25]);
    }

    #[test]
    fn negative_shock_raises_variance() {
        let params = p(1e-6, 0.05, 0.1, 0.85);
        let up = gjr_variance_path(&[0.01, 0.0], &params, 1e-4);
        let down = gjr_variance_path(&[-0.01, 0.0], &params, 1e-4);
        assert!(down[1] > up[1]);
    }

    #[test]
    fn single_term_loglik() {
        let ll = gjr_loglik(&[0.0], &p(0.1, 0.1, 0.1, 0.1), 1.0).unwrap();
        assert!((ll + 0.5 * (2.0 * PI).ln()).abs() < 1e-12);
        assert!((ll + 0.918_938_533_204_672_7).abs() < 1e-12);
    }

    #[test]
    fn reparameterization_round_trips() {
        let q = p(2e-6, 0.07, 0.12, 0.8);
        let back = GjrGarchParams::from_unconstrained(&q.to_unconstrained());
        assert!((back.alpha - q.alpha).abs() < 1e-12);
        assert!((back.gamma - q.gamma).abs() < 1e-12);
        assert!((back.beta - q.beta).abs() < 1e-12);
        assert!((back.omega / q.omega - 1.0).abs() < 1e-12);
        let extreme = GjrGarchParams::from_unconstrained(&[-50.0, 60.0, 80.0, -80.0]);
        assert!(extreme.persistence() < 1.0 - 1e-6);
        assert!(extreme.validate().is_ok());
    }

    #[test]
    fn fit_rejects_degenerate_inputs() {
        let cfg = GarchConfig::default();
        assert!(matches!(
            gjr_fit(&[0.01; 50], &cfg),
            Err(GarchError::TooFewObservations { .. })
        ));
        assert_eq!(gjr_fit(&[0.0; 500], &cfg).unwrap_err(), GarchError::ZeroVariance);
    }

    #[test]
    fn filter_matches_forecast_next() {
        let returns: Vec<f64> = (0..300).map(|i| ((i * 7919 % 97) as f64 - 48.0) * 1e-4).collect();
        let fit = gjr_fit(&returns, &GarchConfig::default()).unwrap();
        let f = fit.filter();
        assert_eq!(f.forecast(), gjr_forecast_next(&fit, fit.last_residual));
        assert!(fit.loglik >= fit.initial_loglik);
    }
}
