//! Merton jump-diffusion simulation and Monte Carlo price forecasts.
//!
//! Prices follow `dS/S = μ dt + σ dW + dJ` with `J` a compound Poisson process
//! of `N(m, s²)` log-jumps at rate `λ`. Paths are generated from the closed
//! form of each sub-step,
//!
//! ```text
//! log S(t+Δ) − log S(t) = (μ − σ²/2)Δ + σ√Δ·Z + J(Δ)
//! ```
//!
//! which is exact in distribution for any step size. The jump increment is
//! drawn either exactly or from its normal approximation `N(mλΔ, λΔs²)`.

use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::rng::stream_rng;

/// Paths per parallel work item; each batch owns one ChaCha stream.
pub const BATCH_PATHS: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpParams {
    /// Jumps per hour.
    pub lambda: f64,
    /// Mean log-jump size.
    pub m: f64,
    /// Standard deviation of the log-jump size.
    pub s: f64,
}

impl JumpParams {
    pub const NONE: JumpParams = JumpParams {
        lambda: 0.0,
        m: 0.0,
        s: 0.0,
    };

    /// E[exp(J(t))] = exp(λt(e^{m + s²/2} − 1)).
    pub fn exp_moment(&self, t: f64) -> f64 {
        (self.lambda * t * ((self.m + 0.5 * self.s * self.s).exp() - 1.0)).exp()
    }
}

/// How a (possibly negative) drift term is turned into a jump intensity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntensityRule {
    /// `max(0, k·μ)`
    #[default]
    Clamp,
    /// `|k·μ|`
    Abs,
    /// No jumps at all.
    Zero,
}

/// Maps per-hour drift and diffusion terms to jump parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct JumpRule {
    pub intensity: IntensityRule,
    /// `k` in the intensity rule.
    pub intensity_multiple: f64,
    pub size_mean: f64,
    /// Jump size std as a multiple of σ.
    pub size_std_multiple: f64,
}

impl Default for JumpRule {
    fn default() -> Self {
        Self {
            intensity: IntensityRule::Clamp,
            intensity_multiple: 2.0,
            size_mean: 0.0,
            size_std_multiple: 2.0,
        }
    }
}

impl JumpRule {
    /// Jump parameters for one hour, and whether the intensity was clamped.
    pub fn params(&self, mu: f64, sigma: f64) -> (JumpParams, bool) {
        let raw = self.intensity_multiple * mu;
        let (lambda, clamped) = match self.intensity {
            IntensityRule::Clamp => (raw.max(0.0), raw < 0.0),
            IntensityRule::Abs => (raw.abs(), false),
            IntensityRule::Zero => (0.0, false),
        };
        (
            JumpParams {
                lambda,
                m: self.size_mean,
                s: self.size_std_multiple * sigma,
            },
            clamped,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JumpSampler {
    /// Poisson count, then a sum of normal jump sizes.
    #[default]
    CompoundPoisson,
    /// A single `N(mλt, λts²)` draw.
    NormalApprox,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub s0: f64,
    /// Drift per hour.
    pub mu: f64,
    /// Diffusion per √hour.
    pub sigma: f64,
    pub jumps: JumpParams,
    pub sampler: JumpSampler,
    /// Horizon in hours.
    pub horizon: f64,
    /// Sub-steps per hour.
    pub steps: usize,
    pub n_sim: usize,
    pub seed: u64,
    /// Quantile levels to report (empty skips the sort).
    pub quantiles: Vec<f64>,
}

impl SimConfig {
    /// One-hour forecast configuration with a single step.
    pub fn one_hour(s0: f64, mu: f64, sigma: f64, jumps: JumpParams, n_sim: usize, seed: u64) -> Self {
        Self {
            s0,
            mu,
            sigma,
            jumps,
            sampler: JumpSampler::CompoundPoisson,
            horizon: 1.0,
            steps: 1,
            n_sim,
            seed,
            quantiles: Vec::new(),
        }
    }

    pub fn total_steps(&self) -> usize {
        (self.steps as f64 * self.horizon).round().max(0.0) as usize
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.s0 > 0.0 && self.s0.is_finite()) {
            return Err(format!("s0 = {} must be positive", self.s0));
        }
        if self.n_sim == 0 || self.steps == 0 {
            return Err("n_sim and steps must be at least 1".into());
        }
        if !(self.sigma >= 0.0) || !self.mu.is_finite() || !self.sigma.is_finite() {
            return Err(format!("invalid drift/diffusion ({}, {})", self.mu, self.sigma));
        }
        if !(self.jumps.lambda >= 0.0
            && self.jumps.lambda.is_finite()
            && self.jumps.s >= 0.0
            && self.jumps.m.is_finite())
        {
            return Err(format!("invalid jump parameters {:?}", self.jumps));
        }
        if !(self.horizon >= 0.0) {
            return Err(format!("horizon {} must be non-negative", self.horizon));
        }
        Ok(())
    }
}

/// Draws J(t) = Σ_{i ≤ N(t)} Y_i with N(t) ~ Poisson(λt), Y_i ~ N(m, s²).
/// Returns the value and the jump count.
pub fn sample_compound_poisson<R: Rng + ?Sized>(jumps: &JumpParams, t: f64, rng: &mut R) -> (f64, u64) {
    JumpDraw::new(jumps, t, JumpSampler::CompoundPoisson).sample(rng)
}

/// Draws from the normal approximation N(mλt, λts²).
pub fn sample_jump_normal_approx<R: Rng + ?Sized>(jumps: &JumpParams, t: f64, rng: &mut R) -> f64 {
    JumpDraw::new(jumps, t, JumpSampler::NormalApprox).sample(rng).0
}

/// Pre-built jump increment sampler for a fixed step length.
#[derive(Debug, Clone, Copy)]
enum JumpDraw {
    None,
    Exact { count: Poisson<f64>, m: f64, s: f64 },
    Normal { mean: f64, sd: f64 },
}

impl JumpDraw {
    fn new(jumps: &JumpParams, t: f64, sampler: JumpSampler) -> Self {
        let rate = jumps.lambda * t;
        if !(rate > 0.0) {
            return JumpDraw::None;
        }
        match sampler {
            JumpSampler::CompoundPoisson => match Poisson::new(rate) {
                Ok(count) => JumpDraw::Exact {
                    count,
                    m: jumps.m,
                    s: jumps.s,
                },
                Err(_) => JumpDraw::None,
            },
            JumpSampler::NormalApprox => JumpDraw::Normal {
                mean: jumps.m * rate,
                sd: (rate).sqrt() * jumps.s,
            },
        }
    }

    #[inline]
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, u64) {
        match *self {
            JumpDraw::None => (0.0, 0),
            JumpDraw::Exact { count, m, s } => {
                let n = count.sample(rng) as u64;
                let mut j = 0.0;
                for _ in 0..n {
                    let z: f64 = rng.sample(StandardNormal);
                    j += m + s * z;
                }
                (j, n)
            }
            JumpDraw::Normal { mean, sd } => {
                let z: f64 = rng.sample(StandardNormal);
                (mean + sd * z, 0)
            }
        }
    }
}

struct Stepper {
    drift: f64,
    diffusion: f64,
    jump: JumpDraw,
}

impl Stepper {
    fn new(config: &SimConfig) -> (Self, usize) {
        let steps = config.total_steps();
        let dt = if steps > 0 { config.horizon / steps as f64 } else { 0.0 };
        (
            Self {
                drift: (config.mu - 0.5 * config.sigma * config.sigma) * dt,
                diffusion: config.sigma * dt.sqrt(),
                jump: JumpDraw::new(&config.jumps, dt, config.sampler),
            },
            steps,
        )
    }

    #[inline]
    fn log_increment<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, u64) {
        let z: f64 = rng.sample(StandardNormal);
        let (j, n) = self.jump.sample(rng);
        (self.drift + self.diffusion * z + j, n)
    }
}

/// One price path of `total_steps() + 1` points starting at `s0`.
pub fn simulate_path<R: Rng + ?Sized>(config: &SimConfig, rng: &mut R) -> Vec<f64> {
    let (stepper, steps) = Stepper::new(config);
    let mut path = Vec::with_capacity(steps + 1);
    path.push(config.s0);
    let mut log_ret = 0.0;
    for _ in 0..steps {
        log_ret += stepper.log_increment(rng).0;
        path.push(config.s0 * log_ret.exp());
    }
    path
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McForecast {
    pub mean_price: f64,
    pub std_error: f64,
    /// `(level, price)` pairs, ascending in level.
    pub quantiles: Vec<(f64, f64)>,
    pub n_sim: usize,
    /// Jumps realized across all paths.
    pub total_jumps: u64,
}

/// Terminal prices of `config.n_sim` paths, in deterministic order.
pub fn simulate_terminals(config: &SimConfig) -> (Vec<f64>, u64) {
    let (stepper, steps) = Stepper::new(config);
    let batches = config.n_sim.div_ceil(BATCH_PATHS);
    let parts: Vec<(Vec<f64>, u64)> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream_rng(config.seed, b as u64);
            let count = BATCH_PATHS.min(config.n_sim - b * BATCH_PATHS);
            let mut out = Vec::with_capacity(count);
            let mut jumps = 0;
            for _ in 0..count {
                let mut log_ret = 0.0;
                for _ in 0..steps {
                    let (inc, n) = stepper.log_increment(&mut rng);
                    log_ret += inc;
                    jumps += n;
                }
                out.push(config.s0 * log_ret.exp());
            }
            (out, jumps)
        })
        .collect();
    let mut terminals = Vec::with_capacity(config.n_sim);
    let mut jumps = 0;
    for (p, j) in parts {
        terminals.extend(p);
        jumps += j;
    }
    (terminals, jumps)
}

/// Linear-interpolation quantile of sorted data.
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Monte Carlo mean of the terminal price with its standard error.
pub fn mc_forecast(config: &SimConfig) -> McForecast {
    let (terminals, total_jumps) = simulate_terminals(config);
    let n = terminals.len();
    // shifted sums: identical samples give their value back exactly
    let shift = terminals[0];
    let mean_price = shift + terminals.iter().map(|x| x - shift).sum::<f64>() / n as f64;
    let std_error = if n > 1 {
        let ss: f64 = terminals.iter().map(|x| (x - mean_price) * (x - mean_price)).sum();
        (ss / (n - 1) as f64).sqrt() / (n as f64).sqrt()
    } else {
        0.0
    };
    let quantiles = if config.quantiles.is_empty() {
        Vec::new()
    } else {
        let mut sorted = terminals;
        sorted.sort_by(f64::total_cmp);
        let mut levels = config.quantiles.clone();
        levels.sort_by(f64::total_cmp);
        levels.into_iter().map(|q| (q, quantile_sorted(&sorted, q))).collect()
    };
    McForecast {
        mean_price,
        std_error,
        quantiles,
        n_sim: n,
        total_jumps,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    #[test]
    fn no_jumps_without_intensity() {
        let mut rng = stream_rng(3, 0);
        let j = JumpParams {
            lambda: 0.0,
            m: 0.5,
            s: 1.0,
        };
        for _ in 0..100 {
            assert_eq!(sample_compound_poisson(&j, 1.0, &mut rng), (0.0, 0));
            assert_eq!(sample_jump_normal_approx(&j, 1.0, &mut rng), 0.0);
        }
    }

    #[test]
    fn deterministic_path_without_noise() {
        let mut cfg = SimConfig::one_hour(100.0, 0.001, 0.0, JumpParams::NONE, 1, 0);
        cfg.horizon = 5.0;
        let path = simulate_path(&cfg, &mut stream_rng(1, 0));
        assert_eq!(path.len(), 6);
        for (k, p) in path.iter().enumerate() {
            assert!((p / (100.0 * (0.001 * k as f64).exp()) - 1.0).abs() < 1e-14);
        }
        cfg.mu = 0.0;
        let path = simulate_path(&cfg, &mut stream_rng(2, 0));
        assert!(path.iter().all(|p| *p == 100.0));
        cfg.horizon = 0.0;
        assert_eq!(simulate_path(&cfg, &mut stream_rng(2, 0)), vec![100.0]);
    }

    #[test]
    fn mc_forecast_exact_when_degenerate() {
        let f = mc_forecast(&SimConfig::one_hour(100.0, 0.001, 0.0, JumpParams::NONE, 10_000, 11));
        assert_eq!(f.mean_price, 100.0 * 0.001f64.exp());
        assert_eq!(f.std_error, 0.0);
        assert_eq!(f.n_sim, 10_000);
    }

    #[test]
    fn quantiles_are_monotone() {
        let mut cfg = SimConfig::one_hour(
            50.0,
            0.0,
            0.02,
            JumpParams {
                lambda: 0.5,
                m: 0.0,
                s: 0.05,
            },
            3000,
            4,
        );
        cfg.quantiles = vec![0.95, 0.05, 0.5];
        let f = mc_forecast(&cfg);
        let q: Vec<f64> = f.quantiles.iter().map(|p| p.1).collect();
        assert!(q.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(f.quantiles[0].0, 0.05);
        assert!(f.total_jumps > 0);
    }

    #[test]
    fn jump_rule_clamps_negative_drift() {
        let rule = JumpRule::default();
        let (p, clamped) = rule.params(-1e-4, 0.01);
        assert_eq!(p.lambda, 0.0);
        assert!(clamped);
        assert_eq!(p.s, 0.02);
        let (p, clamped) = rule.params(3e-4, 0.01);
        assert_eq!((p.lambda, clamped), (6e-4, false));
        let abs = JumpRule {
            intensity: IntensityRule::Abs,
            ..rule
        };
        assert_eq!(abs.params(-1e-4, 0.0).0.lambda, 2e-4);
    }

    #[test]
    fn fixed_seed_is_bit_identical() {
        let cfg = SimConfig::one_hour(
            16529.59,
            1e-4,
            7e-3,
            JumpParams {
                lambda: 0.2,
                m: 0.0,
                s: 0.014,
            },
            5000,
            99,
        );
        assert_eq!(mc_forecast(&cfg), mc_forecast(&cfg));
    }
}
