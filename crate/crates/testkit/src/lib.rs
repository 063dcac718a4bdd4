//! Slow, direct reference implementations. Nothing here calls into
//! `illiquid-core`; the point is to have a second opinion.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Simulate log-prices of the mean-reverting model by its exact transition,
/// `Y' = Y e^{-g dt} + (phi - s^2/2g)(1 - e^{-g dt}) + sqrt(s^2 (1 - e^{-2 g dt}) / 2g) Z`.
pub fn simulate_xou_log(gamma: f64, phi: f64, sigma: f64, dt: f64, y0: f64, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = (-gamma * dt).exp();
    let level = phi - sigma * sigma / (2.0 * gamma);
    let sd = (sigma * sigma * (1.0 - a * a) / (2.0 * gamma)).sqrt();
    let mut out = Vec::with_capacity(n + 1);
    let mut y = y0;
    out.push(y);
    for _ in 0..n {
        let z: f64 = StandardNormal.sample(&mut rng);
        y = y * a + level * (1.0 - a) + sd * z;
        out.push(y);
    }
    out
}

/// Geometric Brownian motion prices from log-returns `mu + sigma Z`.
pub fn simulate_gbm(mu: f64, sigma: f64, s0: f64, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n + 1);
    let mut s = s0;
    out.push(s);
    for _ in 0..n {
        let z: f64 = StandardNormal.sample(&mut rng);
        s *= (mu + sigma * z).exp();
        out.push(s);
    }
    out
}

/// Gaussian transition log-likelihood of a log-price path.
pub fn xou_loglik(gamma: f64, phi: f64, sigma: f64, dt: f64, y: &[f64]) -> f64 {
    if gamma <= 0.0 || sigma <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let a = (-gamma * dt).exp();
    let var = sigma * sigma * (1.0 - a * a) / (2.0 * gamma);
    let level = phi - sigma * sigma / (2.0 * gamma);
    let mut total = 0.0;
    for w in y.windows(2) {
        let m = w[0] * a + level * (1.0 - a);
        let r = w[1] - m;
        total += -0.5 * (2.0 * std::f64::consts::PI * var).ln() - r * r / (2.0 * var);
    }
    total
}

/// Plain Nelder-Mead minimiser.
pub fn nelder_mead<F: Fn(&[f64]) -> f64>(f: &F, x0: &[f64], step: &[f64], tol: f64, max_iter: usize) -> (Vec<f64>, f64) {
    let d = x0.len();
    let mut simplex: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..d {
        let mut v = x0.to_vec();
        v[i] += step[i];
        simplex.push(v);
    }
    let mut vals: Vec<f64> = simplex.iter().map(|v| f(v)).collect();
    for _ in 0..max_iter {
        let mut order: Vec<usize> = (0..=d).collect();
        order.sort_by(|&a, &b| vals[a].partial_cmp(&vals[b]).unwrap_or(std::cmp::Ordering::Equal));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        vals = order.iter().map(|&i| vals[i]).collect();
        if (vals[d] - vals[0]).abs() <= tol * (1.0 + vals[0].abs()) {
            let spread = (0..d)
                .map(|j| simplex.iter().map(|v| (v[j] - simplex[0][j]).abs()).fold(0.0, f64::max))
                .fold(0.0, f64::max);
            if spread < 1e-12 {
                break;
            }
        }
        let centroid: Vec<f64> = (0..d).map(|j| simplex[..d].iter().map(|v| v[j]).sum::<f64>() / d as f64).collect();
        let along = |t: f64| -> Vec<f64> { (0..d).map(|j| centroid[j] + t * (simplex[d][j] - centroid[j])).collect() };
        let xr = along(-1.0);
        let fr = f(&xr);
        if fr < vals[0] {
            let xe = along(-2.0);
            let fe = f(&xe);
            if fe < fr {
                simplex[d] = xe;
                vals[d] = fe;
            } else {
                simplex[d] = xr;
                vals[d] = fr;
            }
        } else if fr < vals[d - 1] {
            simplex[d] = xr;
            vals[d] = fr;
        } else {
            let (xc, fc) = if fr < vals[d] {
                let x = along(-0.5);
                let v = f(&x);
                (x, v)
            } else {
                let x = along(0.5);
                let v = f(&x);
                (x, v)
            };
            if fc < vals[d].min(fr) {
                simplex[d] = xc;
                vals[d] = fc;
            } else {
                let best = simplex[0].clone();
                for i in 1..=d {
                    simplex[i] = (0..d).map(|j| best[j] + 0.5 * (simplex[i][j] - best[j])).collect();
                    vals[i] = f(&simplex[i]);
                }
            }
        }
    }
    let best = (0..=d)
        .min_by(|&a, &b| vals[a].partial_cmp(&vals[b]).unwrap_or(std::cmp::Ordering::Equal))
        .unwrap();
    (simplex[best].clone(), vals[best])
}

/// Numerical maximum-likelihood fit of `(gamma, phi, sigma)`.
///
/// Searches in `(ln gamma, phi, ln sigma)` starting from moment guesses and
/// restarts from the incumbent until the optimum stops moving.
pub fn xou_mle_numeric(y: &[f64], dt: f64) -> (f64, f64, f64) {
    let n = (y.len() - 1) as f64;
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let dsd = (y.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum::<f64>() / n).sqrt();
    let x0 = [(0.1f64).ln(), mean, (dsd / dt.sqrt()).ln()];
    let nll = |x: &[f64]| -> f64 {
        let v = -xou_loglik(x[0].exp(), x[1], x[2].exp(), dt, y);
        if v.is_finite() {
            v
        } else {
            f64::MAX
        }
    };
    let mut x = x0.to_vec();
    let mut fx = nll(&x);
    let mut step = vec![1.0, 0.1 * dsd.max(1e-3) * 10.0, 0.3];
    for _ in 0..60 {
        let (xn, fnew) = nelder_mead(&nll, &x, &step, 1e-15, 20_000);
        let moved = xn.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let improved = fx - fnew;
        x = xn;
        fx = fnew;
        if moved < 1e-10 && improved.abs() < 1e-12 {
            break;
        }
        step = step.iter().map(|s| (s * 0.5).max(1e-6)).collect();
    }
    (x[0].exp(), x[1], x[2].exp())
}

pub fn mape(actual: &[f64], forecast: &[f64]) -> f64 {
    let mut total = 0.0;
    for i in 0..actual.len() {
        total += ((actual[i] - forecast[i]) / actual[i]).abs();
    }
    100.0 * total / actual.len() as f64
}

/// Two-pass textbook Pearson coefficient.
pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for i in 0..x.len() {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx).powi(2);
        syy += (y[i] - my).powi(2);
    }
    sxy / (sxx * syy).sqrt()
}

pub fn rolling(x: &[f64], y: &[f64], k: usize) -> Vec<f64> {
    (0..=x.len() - k).map(|i| pearson(&x[i..i + k], &y[i..i + k])).collect()
}

/// Largest ECDF gap, counting points below each pooled value by scanning.
pub fn ks_d(a: &[f64], b: &[f64]) -> f64 {
    let ecdf = |s: &[f64], x: f64| s.iter().filter(|v| **v <= x).count() as f64 / s.len() as f64;
    a.iter()
        .chain(b)
        .map(|&x| (ecdf(a, x) - ecdf(b, x)).abs())
        .fold(0.0, f64::max)
}

/// `2 sum_{k>=1} (-1)^{k-1} e^{-2 k^2 lambda^2}` summed over a fixed number of terms.
pub fn kolmogorov_tail(lambda: f64, terms: usize) -> f64 {
    let mut total = 0.0;
    for k in 1..=terms {
        let kf = k as f64;
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        total += sign * (-2.0 * kf * kf * lambda * lambda).exp();
    }
    2.0 * total
}

/// Asymptotic two-sample KS p-value.
pub fn ks_p_value(a: &[f64], b: &[f64]) -> f64 {
    let (n1, n2) = (a.len() as f64, b.len() as f64);
    let lambda = ks_d(a, b) * (n1 * n2 / (n1 + n2)).sqrt();
    kolmogorov_tail(lambda, 200).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nelder_mead_finds_quadratic_minimum() {
        let f = |x: &[f64]| (x[0] - 3.0).powi(2) + 10.0 * (x[1] + 1.0).powi(2);
        let (x, _) = nelder_mead(&f, &[0.0, 0.0], &[1.0, 1.0], 1e-16, 10_000);
        assert!((x[0] - 3.0).abs() < 1e-6 && (x[1] + 1.0).abs() < 1e-6);
    }

    #[test]
    fn kolmogorov_tail_known_value() {
        // P(K > 1.36) is close to 0.05.
        assert!((kolmogorov_tail(1.36, 100) - 0.0494).abs() < 1e-3);
    }
}
