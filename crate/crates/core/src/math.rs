//! Thin wrappers over `libm` so the crate builds without `std`.

#[inline]
pub(crate) fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub(crate) fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub(crate) fn expm1(x: f64) -> f64 {
    libm::expm1(x)
}

#[inline]
pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub(crate) fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

/// Crossover below which `|rate * dt|` is treated as zero.
pub(crate) const RATE_EPS: f64 = 1e-8;

/// `(1 - e^{-rate*dt}) / rate`, continuous through `rate = 0` where it equals `dt`.
pub(crate) fn decay_integral(rate: f64, dt: f64) -> f64 {
    if abs(rate * dt) < RATE_EPS {
        dt
    } else {
        -expm1(-rate * dt) / rate
    }
}

/// Kahan-compensated sum; calibration sums run over thousands of log-prices.
pub(crate) fn sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut total = 0.0;
    let mut carry = 0.0;
    let mut naive = 0.0;
    for v in values {
        naive += v;
        let y = v - carry;
        let t = total + y;
        carry = (t - total) - y;
        total = t;
    }
    if total.is_nan() && carry.is_nan() {
        // An infinite term poisons the compensation; the plain sum is exact there.
        return naive;
    }
    total
}

pub(crate) fn mean(values: &[f64]) -> f64 {
    sum(values.iter().copied()) / values.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sum_with_infinities() {
        assert_eq!(sum([1.0, f64::INFINITY, 2.0]), f64::INFINITY);
        assert_eq!(mean(&[f64::INFINITY, f64::INFINITY]), f64::INFINITY);
        assert!(sum([f64::INFINITY, f64::NEG_INFINITY]).is_nan());
    }

    #[test]
    fn decay_integral_is_continuous_at_zero() {
        let dt = 1.0;
        let near = decay_integral(1e-7, dt);
        assert!((near - dt).abs() < 1e-6);
        assert_eq!(decay_integral(0.0, dt), dt);
        assert!((decay_integral(0.5, 2.0) - (1.0 - (-1.0f64).exp()) / 0.5).abs() < 1e-15);
    }
}
