//! The two price engines: geometric Brownian motion calibrated by the moments
//! of daily log-returns, and the exponential Ornstein-Uhlenbeck (XOU) process
//! calibrated by its closed-form conditional maximum-likelihood estimator.
//!
//! Both act on log-prices, so stepped prices stay strictly positive. Time is
//! measured in trading days; `dt = 1` everywhere unless a caller says
//! otherwise.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math::{self, decay_integral, RATE_EPS};
use crate::timeseries::{LogPriceSeries, ReturnSeries};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SdeError {
    #[error("need at least {needed} observations, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("step length dt={0} must be positive and finite")]
    InvalidDt(f64),
    #[error("denominator of the long-run log-level estimator is zero")]
    ZeroLevelDenominator,
    #[error("decay-ratio estimator has a zero denominator (log-prices identical to the fitted level)")]
    ZeroRatioDenominator,
    #[error("decay-ratio estimate {0} is not positive; its logarithm is undefined")]
    NonPositiveRatio(f64),
    #[error("reversion speed is numerically zero; phi is unbounded (limiting sigma^2 = {sigma_sq_limit})")]
    DegenerateReversion { sigma_sq_limit: f64 },
    #[error("conditional variance is zero; the transition density is degenerate")]
    ZeroVariance,
    #[error("non-finite input")]
    NonFinite,
}

/// Per-day drift and volatility of log-returns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbmParams {
    pub mu: f64,
    pub sigma: f64,
    /// Number of returns the estimates came from (0 for hand-built params).
    #[serde(default)]
    pub n_obs: usize,
}

impl GbmParams {
    pub fn new(mu: f64, sigma: f64) -> Self {
        Self { mu, sigma, n_obs: 0 }
    }

    /// Sample mean and `m - 1` standard deviation of the returns.
    pub fn from_returns(returns: &[f64]) -> Result<Self, SdeError> {
        let m = returns.len();
        if m < 2 {
            return Err(SdeError::TooShort { needed: 2, got: m });
        }
        if returns.iter().any(|r| !r.is_finite()) {
            return Err(SdeError::NonFinite);
        }
        let mu = math::mean(returns);
        let ss = math::sum(returns.iter().map(|r| (r - mu) * (r - mu)));
        Ok(Self {
            mu,
            sigma: math::sqrt(ss / (m - 1) as f64),
            n_obs: m,
        })
    }
}

pub fn calibrate_gbm(returns: &ReturnSeries) -> Result<GbmParams, SdeError> {
    GbmParams::from_returns(&returns.values)
}

/// One exact log-normal step: `price * exp(mu + sigma * z)`.
pub fn gbm_step(price: f64, params: &GbmParams, z: f64) -> f64 {
    price * math::exp(params.mu + params.sigma * z)
}

/// Parameters of `dS = gamma (phi - ln S) S dt + sigma S dW`.
///
/// `gamma` may be negative: the process is then not mean-reverting and its
/// conditional mean diverges exponentially.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XouParams {
    pub gamma: f64,
    pub phi: f64,
    pub sigma: f64,
    pub dt: f64,
}

/// The shifted level and one-step conditional variance of the log-price.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XouDerived {
    /// `phi - sigma^2 / (2 gamma)`.
    pub phi_hh: f64,
    /// `sigma^2 (1 - e^{-2 gamma dt}) / (2 gamma)`.
    pub sigma_hh_sq: f64,
}

impl XouParams {
    pub fn new(gamma: f64, phi: f64, sigma: f64, dt: f64) -> Self {
        Self {
            gamma,
            phi,
            sigma,
            dt,
        }
    }

    pub fn is_mean_reverting(&self) -> bool {
        self.gamma > 0.0
    }

    /// `e^{-gamma dt}`.
    pub fn decay(&self) -> f64 {
        math::exp(-self.gamma * self.dt)
    }

    /// `(phi - sigma^2 / 2 gamma) (1 - e^{-gamma dt})`, finite through `gamma = 0`.
    pub fn drift_term(&self) -> f64 {
        let integral = decay_integral(self.gamma, self.dt);
        self.phi * self.gamma * integral - 0.5 * self.sigma * self.sigma * integral
    }

    pub fn conditional_variance(&self) -> f64 {
        self.sigma * self.sigma * decay_integral(2.0 * self.gamma, self.dt)
    }

    /// Undefined (infinite `phi_hh`) when `gamma` is numerically zero.
    pub fn derived(&self) -> XouDerived {
        XouDerived {
            phi_hh: self.phi - self.sigma * self.sigma / (2.0 * self.gamma),
            sigma_hh_sq: self.conditional_variance(),
        }
    }

    /// Mean of the log-price once transients have died out (`gamma > 0`).
    pub fn stationary_log_mean(&self) -> f64 {
        self.derived().phi_hh
    }

    /// Conditional mean of the next log-price.
    pub fn conditional_mean(&self, log_price: f64) -> f64 {
        log_price * self.decay() + self.drift_term()
    }
}

/// One step of the exact discretisation of the log-price.
///
/// At `gamma = 0` this reduces to a driftless-in-price random walk,
/// `y - sigma^2 dt / 2 + sigma sqrt(dt) z`.
pub fn xou_step(log_price: f64, params: &XouParams, z: f64) -> f64 {
    params.conditional_mean(log_price) + math::sqrt(params.conditional_variance()) * z
}

/// The five lagged sums over `i = 1..n` of log-prices `Y_0..Y_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XouSufficientStats {
    /// `sum Y_{i-1}`
    pub y1: f64,
    /// `sum Y_i`
    pub y2: f64,
    /// `sum Y_{i-1}^2`
    pub y11: f64,
    /// `sum Y_{i-1} Y_i`
    pub y12: f64,
    /// `sum Y_i^2`
    pub y22: f64,
    pub n: usize,
}

impl XouSufficientStats {
    pub fn from_log_prices(values: &[f64]) -> Result<Self, SdeError> {
        if values.len() < 3 {
            return Err(SdeError::TooShort {
                needed: 3,
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(SdeError::NonFinite);
        }
        let pairs = || values.windows(2).map(|w| (w[0], w[1]));
        Ok(Self {
            y1: math::sum(pairs().map(|(a, _)| a)),
            y2: math::sum(pairs().map(|(_, b)| b)),
            y11: math::sum(pairs().map(|(a, _)| a * a)),
            y12: math::sum(pairs().map(|(a, b)| a * b)),
            y22: math::sum(pairs().map(|(_, b)| b * b)),
            n: values.len() - 1,
        })
    }
}

pub fn xou_sufficient_stats(logp: &LogPriceSeries) -> Result<XouSufficientStats, SdeError> {
    XouSufficientStats::from_log_prices(&logp.values)
}

/// Calibration output with the intermediate estimates kept for diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XouFit {
    pub params: XouParams,
    pub derived: XouDerived,
    /// Sums over the raw (unshifted) log-prices.
    pub stats: XouSufficientStats,
    /// The estimate of `e^{-gamma dt}` whose logarithm gives `gamma`.
    pub decay_ratio: f64,
    /// Set when `gamma <= 0`.
    pub non_mean_reverting: bool,
}

/// Closed-form conditional MLE.
///
/// Order of evaluation: shifted level, reversion speed from the decay
/// ratio, conditional variance, then `sigma^2` and `phi` recovered from
/// them. The sums are taken over log-prices shifted by the first value to
/// avoid cancellation; the level estimate is shifted back afterwards (the
/// estimator is translation-equivariant, the ratio and variance invariant).
pub fn calibrate_xou_values(values: &[f64], dt: f64) -> Result<XouFit, SdeError> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(SdeError::InvalidDt(dt));
    }
    let stats = XouSufficientStats::from_log_prices(values)?;
    let shift = values[0];
    let shifted: alloc::vec::Vec<f64> = values.iter().map(|v| v - shift).collect();
    let XouSufficientStats {
        y1,
        y2,
        y11,
        y12,
        y22,
        n,
    } = XouSufficientStats::from_log_prices(&shifted)?;
    let n = n as f64;

    let level_denom = n * (y11 - y12) - (y1 * y1 - y2 * y1);
    if level_denom == 0.0 || !level_denom.is_finite() {
        return Err(SdeError::ZeroLevelDenominator);
    }
    let level = (y2 * y11 - y1 * y12) / level_denom;

    let ratio_num = y12 - level * y1 - level * y2 + n * level * level;
    let ratio_den = y11 - 2.0 * level * y1 + n * level * level;
    if ratio_den == 0.0 {
        return Err(SdeError::ZeroRatioDenominator);
    }
    let ratio = ratio_num / ratio_den;
    if !(ratio > 0.0) {
        return Err(SdeError::NonPositiveRatio(ratio));
    }
    let gamma = -math::ln(ratio) / dt;
    let a = math::exp(-gamma * dt);

    let sigma_hh_sq = (y22 - 2.0 * a * y12 + a * a * y11
        - 2.0 * level * (1.0 - a) * (y2 - a * y1)
        + n * level * level * (1.0 - a) * (1.0 - a))
        / n;
    let sigma_hh_sq = sigma_hh_sq.max(0.0);

    if math::abs(gamma * dt) < RATE_EPS {
        return Err(SdeError::DegenerateReversion {
            sigma_sq_limit: sigma_hh_sq / dt,
        });
    }
    let sigma_sq = sigma_hh_sq * 2.0 * gamma / (1.0 - a * a);
    let phi_hh = level + shift;
    let phi = phi_hh + sigma_sq / (2.0 * gamma);

    let params = XouParams {
        gamma,
        phi,
        sigma: math::sqrt(sigma_sq),
        dt,
    };
    Ok(XouFit {
        params,
        derived: XouDerived {
            phi_hh,
            sigma_hh_sq,
        },
        stats,
        decay_ratio: ratio,
        non_mean_reverting: gamma <= 0.0,
    })
}

pub fn calibrate_xou(logp: &LogPriceSeries, dt: f64) -> Result<XouFit, SdeError> {
    calibrate_xou_values(&logp.values, dt)
}

/// Sum of log transition densities over consecutive log-price pairs.
pub fn xou_loglik_values(params: &XouParams, values: &[f64]) -> Result<f64, SdeError> {
    let var = params.conditional_variance();
    if !(var > 0.0) {
        return Err(SdeError::ZeroVariance);
    }
    let norm = -0.5 * math::ln(2.0 * core::f64::consts::PI * var);
    Ok(math::sum(values.windows(2).map(|w| {
        let resid = w[1] - params.conditional_mean(w[0]);
        norm - resid * resid / (2.0 * var)
    })))
}

pub fn xou_loglik(params: &XouParams, logp: &LogPriceSeries) -> Result<f64, SdeError> {
    xou_loglik_values(params, &logp.values)
}
