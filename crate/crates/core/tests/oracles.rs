use illiquid_core::sde::{calibrate_gbm, calibrate_xou_values, GbmParams};
use illiquid_core::stats::{kolmogorov_survival, ks_statistic, ks_two_sample, mape_values, pearson, rolling_correlation};
use illiquid_core::timeseries::{log_returns, PriceSeries};
use illiquid_testkit as tk;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn dates(n: usize) -> Vec<chrono::NaiveDate> {
    let start = chrono::NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
    (0..n).map(|i| start + chrono::Days::new(i as u64)).collect()
}

#[test]
fn closed_form_matches_numerical_mle() {
    let cases = [
        (0.5, 3.0, 0.2, 1.0 / 252.0, 11),
        (2.0, 4.0, 0.3, 1.0 / 252.0, 12),
        (0.05, 1.0, 0.02, 1.0, 13),
        (0.2, 2.5, 0.05, 1.0, 14),
        (8.0, 0.5, 0.4, 1.0 / 252.0, 15),
    ];
    for (gamma, phi, sigma, dt, seed) in cases {
        let y = tk::simulate_xou_log(gamma, phi, sigma, dt, phi, 2000, seed);
        let fit = calibrate_xou_values(&y, dt).unwrap();
        let (g, p, s) = tk::xou_mle_numeric(&y, dt);
        let cf = fit.params;
        assert!(rel(cf.gamma, g) < 1e-4, "gamma {} vs {g}", cf.gamma);
        assert!(rel(cf.phi, p) < 1e-4, "phi {} vs {p}", cf.phi);
        assert!(rel(cf.sigma, s) < 1e-4, "sigma {} vs {s}", cf.sigma);
    }
}

#[test]
fn gbm_recovery_over_seeds() {
    let (mu, sigma, n) = (0.0005, 0.02, 10_000);
    for seed in 0..20 {
        let closes = tk::simulate_gbm(mu, sigma, 50.0, n, 100 + seed);
        let series = PriceSeries::from_parts(&dates(n + 1), &closes).unwrap();
        let fit: GbmParams = calibrate_gbm(&log_returns(&series).unwrap()).unwrap();
        assert!((fit.mu - mu).abs() < 3.0 * sigma / (n as f64).sqrt());
        assert!(rel(fit.sigma, sigma) < 0.05);
    }
}

#[test]
fn metrics_match_brute_force() {
    let actual: Vec<f64> = (0..50).map(|i| 10.0 + (i as f64 * 0.37).sin()).collect();
    let fc: Vec<f64> = (0..50).map(|i| 10.2 + (i as f64 * 0.41).cos() * 0.8).collect();
    assert!((mape_values(&actual, &fc).unwrap() - tk::mape(&actual, &fc)).abs() < 1e-12);
    assert!((pearson(&actual, &fc).unwrap() - tk::pearson(&actual, &fc)).abs() < 1e-12);
    let r = rolling_correlation(&actual, &fc, 10).unwrap();
    for (got, want) in r.values.iter().zip(tk::rolling(&actual, &fc, 10)) {
        assert!((got.rho.unwrap() - want).abs() < 1e-12);
    }
    let a: Vec<f64> = (0..37).map(|i| (i as f64 * 1.3).sin()).collect();
    let b: Vec<f64> = (0..53).map(|i| (i as f64 * 0.7).cos() * 1.1 + 0.1).collect();
    assert!((ks_statistic(&a, &b).unwrap() - tk::ks_d(&a, &b)).abs() < 1e-12);
    let ks = ks_two_sample(&a, &b, 0.01).unwrap();
    assert!((ks.p_value - tk::ks_p_value(&a, &b)).abs() < 1e-6);
    for lambda in [0.35, 0.5, 0.8, 1.0, 1.36, 2.0, 3.0] {
        assert!((kolmogorov_survival(lambda) - tk::kolmogorov_tail(lambda, 200)).abs() < 1e-6);
    }
}
