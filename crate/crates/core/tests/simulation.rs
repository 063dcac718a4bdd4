use illiquid_core::attenuation::{attenuation_study, ShockPolicy, StudyConfig};
use illiquid_core::markov::{sample_states, steady_state, State, TransitionMatrix};
use illiquid_core::regime::{
    forecast_calibrated, simulate_combined, simulate_plain, CalibratedModel, CombinedParams, ForecastOptions,
    ModelKind, SdeParams, WindowInfo, DEFAULT_DIVERGENCE_CEILING,
};
use illiquid_core::rng::stream;
use illiquid_core::sde::{GbmParams, XouParams};
use illiquid_core::stats::ks_two_sample;
use illiquid_core::timeseries::PriceSeries;

fn series(closes: &[f64]) -> PriceSeries {
    let start = chrono::NaiveDate::from_ymd_opt(2019, 1, 1).unwrap();
    let dates: Vec<_> = start.iter_days().take(closes.len()).collect();
    PriceSeries::from_parts(&dates, closes).unwrap()
}

fn returns(prices: &[f64]) -> Vec<f64> {
    prices.windows(2).map(|w| (w[1] / w[0]).ln()).collect()
}

#[test]
fn moving_days_follow_the_sde() {
    let sde = SdeParams::Gbm(GbmParams::new(0.0005, 0.015));
    let w = series(&[1.0, 2.0]);
    let combined = CombinedParams {
        sde,
        chain: TransitionMatrix::new(0.7, 0.6).unwrap(),
        sde_window: WindowInfo::of(&w, true),
        chain_window: WindowInfo::of(&w, false),
    };
    let mut rejections = 0;
    for seed in 0..20 {
        let mm = simulate_combined(&combined, 10.0, State::Move, 3000, &mut stream(seed), DEFAULT_DIVERGENCE_CEILING);
        let plain = simulate_plain(&sde, 10.0, 2000, &mut stream(1000 + seed), DEFAULT_DIVERGENCE_CEILING);
        let moves: Vec<f64> = returns(&mm.closes).into_iter().filter(|r| *r != 0.0).collect();
        let ks = ks_two_sample(&moves, &returns(&plain.closes), 0.01).unwrap();
        if ks.p_value < 0.01 {
            rejections += 1;
        }
    }
    assert!(rejections <= 2, "{rejections} rejections");
}

#[test]
fn sampled_chain_occupancy() {
    for (p, q) in [(0.9, 0.3), (0.5, 0.5), (0.2, 0.95)] {
        let tm = TransitionMatrix::new(p, q).unwrap();
        let pi = steady_state(&tm).unwrap();
        let states = sample_states(&tm, State::Flat, 100_000, &mut stream(7));
        let flat = states.iter().filter(|s| **s == State::Flat).count() as f64 / states.len() as f64;
        assert!((flat - pi.pi0).abs() < 0.01);
    }
}

#[test]
fn explosive_reversion_scores_infinite() {
    let closes: Vec<f64> = (0..200)
        .map(|t| (3.0 + 0.01 * 1.02f64.powi(t) + 1e-4 * ((t * 7919 % 13) as f64 - 6.0)).exp())
        .collect();
    let cal = series(&closes);
    let actual = series(&[5.0, 5.1, 5.2]);
    let model = CalibratedModel::calibrate(ModelKind::Xou, &cal, 1.0).unwrap();
    assert!(model.non_mean_reverting);
    let res = forecast_calibrated(&model, &actual, &ForecastOptions::new(5, 1)).unwrap();
    assert_eq!(res.divergence_count(), 5);
    assert!(res.mapes().iter().all(|m| *m == f64::INFINITY));
    let params = SdeParams::Xou(XouParams::new(-0.5, 1.0, 0.1, 1.0));
    let path = simulate_plain(&params, 1.0, 200, &mut stream(3), DEFAULT_DIVERGENCE_CEILING);
    assert!(path.diverged);
}

#[test]
fn small_attenuation_study_tracks_limit() {
    let cfg = StudyConfig {
        grid: vec![(0.875, 0.5), (0.7, 0.7), (0.5, 0.875)],
        params_x: GbmParams::new(0.0, 0.01),
        params_y: GbmParams::new(0.0, 0.01),
        rho: 0.8,
        horizon: 20_000,
        replications: 2,
        master_seed: 99,
        s0: 100.0,
        policy: ShockPolicy::Aligned,
    };
    let report = attenuation_study(&cfg).unwrap();
    assert!(report.monotone_non_increasing);
    for row in &report.rows {
        let limit = row.rho_limit_mu0.unwrap();
        assert!((row.rho_measured.unwrap() - limit).abs() < 0.05, "{row:?}");
    }
}

#[test]
fn queued_policy_consumes_shocks_in_order() {
    use illiquid_core::attenuation::{modulate_pair, returns_of, simulate_correlated_gbm_pair};
    let g = GbmParams::new(0.0002, 0.01);
    let pair = simulate_correlated_gbm_pair(&g, &g, 0.5, 2000, 10.0, &mut stream(4)).unwrap();
    let chain = TransitionMatrix::new(0.6, 0.5).unwrap();
    for policy in [ShockPolicy::Queued, ShockPolicy::Aligned] {
        let m = modulate_pair(&pair, &chain, &chain, State::Move, State::Flat, 1, 2, policy);
        for (leg, inc) in [(&m.x, &pair.increments_x), (&m.y, &pair.increments_y)] {
            let r = returns_of(&leg.prices);
            let applied: Vec<f64> = r.iter().zip(&leg.states).filter(|(_, s)| **s == State::Move).map(|(v, _)| *v).collect();
            assert_eq!(applied.len(), leg.consumed);
            let expected: Vec<f64> = match policy {
                ShockPolicy::Queued => inc[..leg.consumed].to_vec(),
                ShockPolicy::Aligned => inc.iter().zip(&leg.states).filter(|(_, s)| **s == State::Move).map(|(v, _)| *v).collect(),
            };
            for (a, e) in applied.iter().zip(&expected) {
                assert!((a - e).abs() < 1e-9);
            }
            assert!(r.iter().zip(&leg.states).all(|(v, s)| *s == State::Move || *v == 0.0));
        }
    }
}

#[test]
fn modulation_never_raises_correlation() {
    let cfg = StudyConfig {
        grid: vec![(0.3, 0.9), (0.6, 0.6), (0.9, 0.4)],
        params_x: GbmParams::new(0.001, 0.02),
        params_y: GbmParams::new(-0.0005, 0.01),
        rho: 0.6,
        horizon: 5000,
        replications: 3,
        master_seed: 17,
        s0: 20.0,
        policy: ShockPolicy::Aligned,
    };
    for row in attenuation_study(&cfg).unwrap().rows {
        assert!(row.rho_measured.unwrap() <= row.rho_unmodulated + 0.02, "{row:?}");
    }
}

#[test]
fn prediction_without_illiquidity_is_rho() {
    use illiquid_core::attenuation::predicted_attenuation;
    let g = GbmParams::new(0.0, 0.013);
    assert_eq!(predicted_attenuation(&g, &g, 0.0, 0.0, 0.73).unwrap(), 0.73);
    let r = predicted_attenuation(&g, &g, 0.36364, 0.36364, 0.9).unwrap();
    assert!((r - 0.57273).abs() < 1e-5);
}
