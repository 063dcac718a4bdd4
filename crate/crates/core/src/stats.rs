//! Evaluation metrics: MAPE, Pearson and rolling-window correlation, the
//! two-sample Kolmogorov-Smirnov test and a histogram-vs-normal density
//! comparison of returns.

use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math;
use crate::timeseries::{PriceSeries, ReturnSeries};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least {needed} values, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("actual value at index {0} is zero")]
    ZeroActual(usize),
    #[error("input {0} has zero variance")]
    ZeroVariance(&'static str),
    #[error("window size {k} is outside 2..={n}")]
    WindowOutOfRange { k: usize, n: usize },
    #[error("sample is empty")]
    EmptySample,
    #[error("sample contains a non-finite value")]
    NonFinite,
    #[error("need at least 2 bins, got {0}")]
    TooFewBins(usize),
    #[error("exact enumeration is limited to n1 + n2 <= {max}, got {got}")]
    ExactTooLarge { max: usize, got: usize },
}

/// Mean absolute percentage error, in percent.
///
/// A forecast containing a non-finite value (a diverged path) scores `+inf`.
pub fn mape_values(actual: &[f64], forecast: &[f64]) -> Result<f64, StatsError> {
    if actual.len() != forecast.len() {
        return Err(StatsError::LengthMismatch {
            left: actual.len(),
            right: forecast.len(),
        });
    }
    if actual.is_empty() {
        return Err(StatsError::TooShort { needed: 1, got: 0 });
    }
    if let Some(i) = actual.iter().position(|a| *a == 0.0) {
        return Err(StatsError::ZeroActual(i));
    }
    if forecast.iter().any(|f| !f.is_finite()) {
        return Ok(f64::INFINITY);
    }
    let total = math::sum(
        actual
            .iter()
            .zip(forecast)
            .map(|(a, f)| math::abs(a - f) / math::abs(*a)),
    );
    Ok(total / actual.len() as f64 * 100.0)
}

pub fn mape(actual: &PriceSeries, forecast: &PriceSeries) -> Result<f64, StatsError> {
    mape_values(&actual.closes(), &forecast.closes())
}

/// Pearson correlation, clamped to `[-1, 1]`.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(StatsError::TooShort {
            needed: 2,
            got: x.len(),
        });
    }
    let mx = math::mean(x);
    let my = math::mean(y);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        let dx = a - mx;
        let dy = b - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(StatsError::ZeroVariance("x"));
    }
    if syy == 0.0 {
        return Err(StatsError::ZeroVariance("y"));
    }
    Ok((sxy / (math::sqrt(sxx) * math::sqrt(syy))).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RollingPoint {
    /// Zero-based index of the first element of the window.
    pub start: usize,
    /// `None` when either leg is constant over the window.
    pub rho: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RollingCorrSeries {
    pub window: usize,
    pub values: Vec<RollingPoint>,
}

impl RollingCorrSeries {
    pub fn defined(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().filter_map(|p| p.rho)
    }

    pub fn undefined_count(&self) -> usize {
        self.values.iter().filter(|p| p.rho.is_none()).count()
    }
}

/// Pearson correlation over every window `i..i+k`.
pub fn rolling_correlation(x: &[f64], y: &[f64], k: usize) -> Result<RollingCorrSeries, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    let n = x.len();
    if k < 2 || k > n {
        return Err(StatsError::WindowOutOfRange { k, n });
    }
    let values = (0..=n - k)
        .map(|start| {
            let rho = match pearson(&x[start..start + k], &y[start..start + k]) {
                Ok(r) => Some(r),
                Err(StatsError::ZeroVariance(_)) => None,
                Err(_) => unreachable!("window lengths are equal and >= 2"),
            };
            RollingPoint { start, rho }
        })
        .collect();
    Ok(RollingCorrSeries { window: k, values })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KsDecision {
    Similar,
    Different,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub alpha: f64,
    pub decision: KsDecision,
    pub n1: usize,
    pub n2: usize,
}

fn sorted_finite(sample: &[f64]) -> Result<Vec<f64>, StatsError> {
    if sample.is_empty() {
        return Err(StatsError::EmptySample);
    }
    if sample.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let mut v = sample.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    Ok(v)
}

fn ecdf_gap(a: &[f64], b: &[f64]) -> f64 {
    let (n1, n2) = (a.len() as f64, b.len() as f64);
    a.iter()
        .chain(b)
        .map(|&x| {
            let fa = a.partition_point(|v| *v <= x) as f64 / n1;
            let fb = b.partition_point(|v| *v <= x) as f64 / n2;
            math::abs(fa - fb)
        })
        .fold(0.0, f64::max)
}

/// `sup |ECDF_a - ECDF_b|`, both ECDFs right-continuous and evaluated at
/// every pooled sample point.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> Result<f64, StatsError> {
    Ok(ecdf_gap(&sorted_finite(a)?, &sorted_finite(b)?))
}

/// `P(K > lambda)` for the Kolmogorov distribution.
///
/// Uses `2 sum (-1)^{k-1} e^{-2 k^2 lambda^2}`, truncated once a term drops
/// below 1e-12. For small `lambda` that series needs many terms, so the
/// equivalent Jacobi-theta form `1 - sqrt(2 pi)/lambda sum e^{-(2k-1)^2 pi^2 / (8 lambda^2)}`
/// is used instead.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if !(lambda > 0.0) {
        return 1.0;
    }
    if lambda < 0.3 {
        let pi = core::f64::consts::PI;
        let scale = math::sqrt(2.0 * pi) / lambda;
        let mut cdf = 0.0;
        let mut k = 1.0;
        loop {
            let odd = 2.0 * k - 1.0;
            let term = math::exp(-odd * odd * pi * pi / (8.0 * lambda * lambda));
            cdf += term;
            if term < 1e-16 {
                break;
            }
            k += 1.0;
        }
        return (1.0 - scale * cdf).clamp(0.0, 1.0);
    }
    kolmogorov_series(lambda).clamp(0.0, 1.0)
}

/// The alternating series, truncated when a term falls below 1e-12.
pub fn kolmogorov_series(lambda: f64) -> f64 {
    let mut total = 0.0;
    let mut sign = 1.0;
    let mut k = 1.0;
    loop {
        let term = math::exp(-2.0 * k * k * lambda * lambda);
        if term < 1e-12 {
            break;
        }
        total += sign * term;
        sign = -sign;
        k += 1.0;
    }
    2.0 * total
}

/// Two-sided asymptotic two-sample KS test with effective size `n1 n2 / (n1 + n2)`.
pub fn ks_two_sample(a: &[f64], b: &[f64], alpha: f64) -> Result<KsResult, StatsError> {
    let sa = sorted_finite(a)?;
    let sb = sorted_finite(b)?;
    let statistic = ecdf_gap(&sa, &sb);
    let (n1, n2) = (sa.len(), sb.len());
    let en = (n1 as f64 * n2 as f64) / (n1 + n2) as f64;
    let p_value = kolmogorov_survival(statistic * math::sqrt(en));
    Ok(KsResult {
        statistic,
        p_value,
        alpha,
        decision: if p_value < alpha {
            KsDecision::Different
        } else {
            KsDecision::Similar
        },
        n1,
        n2,
    })
}

pub const KS_EXACT_MAX: usize = 20;

/// Exact permutation p-value `P(D >= d_obs)` by enumerating every split of
/// the pooled sample into groups of sizes `n1` and `n2`. Slow; a reference
/// for small samples.
pub fn ks_exact_p_value(a: &[f64], b: &[f64]) -> Result<f64, StatsError> {
    let sa = sorted_finite(a)?;
    let sb = sorted_finite(b)?;
    let total = sa.len() + sb.len();
    if total > KS_EXACT_MAX {
        return Err(StatsError::ExactTooLarge {
            max: KS_EXACT_MAX,
            got: total,
        });
    }
    let observed = ecdf_gap(&sa, &sb);
    let pooled: Vec<f64> = sa.iter().chain(&sb).copied().collect();
    let n1 = sa.len();
    let mut hits = 0u64;
    let mut count = 0u64;
    let mut left = Vec::with_capacity(n1);
    let mut right = Vec::with_capacity(total - n1);
    for mask in 0u32..(1u32 << total) {
        if mask.count_ones() as usize != n1 {
            continue;
        }
        left.clear();
        right.clear();
        for (i, v) in pooled.iter().enumerate() {
            if mask & (1 << i) != 0 {
                left.push(*v);
            } else {
                right.push(*v);
            }
        }
        left.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
        right.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
        count += 1;
        if ecdf_gap(&left, &right) >= observed - 1e-12 {
            hits += 1;
        }
    }
    Ok(hits as f64 / count as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdfComparison {
    pub edges: Vec<f64>,
    pub centers: Vec<f64>,
    pub empirical: Vec<f64>,
    pub normal: Vec<f64>,
    pub mean: f64,
    pub sd: f64,
}

impl PdfComparison {
    /// `sum density * width`; one up to rounding.
    pub fn empirical_mass(&self) -> f64 {
        self.edges
            .windows(2)
            .zip(&self.empirical)
            .map(|(e, d)| d * (e[1] - e[0]))
            .sum()
    }
}

/// Density histogram over `[min, max]` with `bins` equal bins, next to the
/// normal density with the sample mean and (`n - 1`) standard deviation,
/// evaluated at bin centres.
pub fn pdf_comparison_values(returns: &[f64], bins: usize) -> Result<PdfComparison, StatsError> {
    if returns.len() < 2 {
        return Err(StatsError::TooShort {
            needed: 2,
            got: returns.len(),
        });
    }
    if bins < 2 {
        return Err(StatsError::TooFewBins(bins));
    }
    if returns.iter().any(|r| !r.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let n = returns.len() as f64;
    let mean = math::mean(returns);
    let sd = math::sqrt(math::sum(returns.iter().map(|r| (r - mean) * (r - mean))) / (n - 1.0));
    let lo = returns.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = returns.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if sd == 0.0 || hi == lo {
        return Err(StatsError::ZeroVariance("returns"));
    }
    let width = (hi - lo) / bins as f64;
    let mut edges: Vec<f64> = (0..=bins).map(|i| lo + width * i as f64).collect();
    edges[bins] = hi;

    let mut counts = alloc::vec![0usize; bins];
    for &r in returns {
        let idx = (((r - lo) / width) as usize).min(bins - 1);
        counts[idx] += 1;
    }
    let empirical = edges
        .windows(2)
        .zip(&counts)
        .map(|(e, &c)| c as f64 / (n * (e[1] - e[0])))
        .collect();
    let centers: Vec<f64> = edges.windows(2).map(|e| 0.5 * (e[0] + e[1])).collect();
    let norm = 1.0 / (sd * math::sqrt(2.0 * core::f64::consts::PI));
    let normal = centers
        .iter()
        .map(|c| {
            let z = (c - mean) / sd;
            norm * math::exp(-0.5 * z * z)
        })
        .collect();
    Ok(PdfComparison {
        edges,
        centers,
        empirical,
        normal,
        mean,
        sd,
    })
}

pub fn pdf_comparison(returns: &ReturnSeries, bins: usize) -> Result<PdfComparison, StatsError> {
    pdf_comparison_values(&returns.values, bins)
}
