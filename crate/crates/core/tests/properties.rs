use chrono::{Datelike, Days, NaiveDate, Weekday};
use illiquid_core::markov::{steady_state, TransitionMatrix};
use illiquid_core::stats::{ks_statistic, mape_values, pearson};
use illiquid_core::timeseries::{
    forward_fill_calendar, log_returns, remove_repetitions, weekday_calendar, weekly_resample, PriceSeries,
};
use proptest::prelude::*;

fn series_from(closes: &[f64]) -> PriceSeries {
    let start = NaiveDate::from_ymd_opt(2021, 3, 1).unwrap();
    let dates: Vec<_> = (0..closes.len()).map(|i| start + Days::new(i as u64)).collect();
    PriceSeries::from_parts(&dates, closes).unwrap()
}

fn sticky_closes() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec((1u32..6, 0.5f64..200.0), 2..60).prop_map(|runs| {
        runs.into_iter()
            .flat_map(|(len, v)| std::iter::repeat_n((v * 100.0).round() / 100.0, len as usize))
            .collect()
    })
}

proptest! {
    #[test]
    fn cleaning_is_idempotent_and_repeat_free(closes in sticky_closes()) {
        let once = remove_repetitions(&series_from(&closes));
        let twice = remove_repetitions(once.series());
        prop_assert_eq!(once.series(), twice.series());
        prop_assert_eq!(twice.removed(), 0);
        let c = once.series().closes();
        prop_assert!(c.windows(2).all(|w| w[0] != w[1]));
        prop_assert_eq!(once.series().first(), series_from(&closes).first());
    }

    #[test]
    fn log_returns_telescope(closes in prop::collection::vec(0.1f64..1000.0, 2..200)) {
        let s = series_from(&closes);
        let r = log_returns(&s).unwrap();
        let total: f64 = r.values.iter().sum();
        let want = (closes[closes.len() - 1] / closes[0]).ln();
        prop_assert!((total - want).abs() < 1e-9);
    }

    #[test]
    fn weekly_sample_lands_on_weekday(
        closes in prop::collection::vec(1.0f64..50.0, 10..80),
        gap in prop::collection::vec(any::<bool>(), 80),
    ) {
        let start = NaiveDate::from_ymd_opt(2022, 1, 3).unwrap();
        let cal = weekday_calendar(start, start + Days::new(120));
        let obs: Vec<_> = cal.iter().zip(&closes).enumerate()
            .filter(|(i, _)| *i == 0 || !gap[*i])
            .map(|(_, (d, c))| (*d, *c))
            .collect();
        let (d, c): (Vec<_>, Vec<_>) = obs.into_iter().unzip();
        let raw = PriceSeries::from_parts(&d, &c).unwrap();
        let span: Vec<_> = cal.iter().copied().filter(|x| *x <= *d.last().unwrap()).collect();
        let filled = forward_fill_calendar(&raw, &span).unwrap();
        prop_assert_eq!(filled.len(), span.len());
        if let Ok(weekly) = weekly_resample(&filled, Weekday::Fri) {
            prop_assert!(weekly.dates().iter().all(|x| x.weekday() == Weekday::Fri));
        }
    }

    #[test]
    fn pearson_symmetry_and_affine_invariance(
        pairs in prop::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 3..60),
        scale in 0.01f64..100.0,
        shift in -50.0f64..50.0,
    ) {
        let (x, y): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        if let Ok(r) = pearson(&x, &y) {
            prop_assert!((-1.0..=1.0).contains(&r));
            prop_assert!((pearson(&y, &x).unwrap() - r).abs() < 1e-9);
            let xs: Vec<f64> = x.iter().map(|v| v * scale + shift).collect();
            prop_assert!((pearson(&xs, &y).unwrap() - r).abs() < 1e-7);
            let xn: Vec<f64> = x.iter().map(|v| -v).collect();
            prop_assert!((pearson(&xn, &y).unwrap() + r).abs() < 1e-9);
        }
    }

    #[test]
    fn ks_symmetric_and_rank_based(
        a in prop::collection::vec(-10.0f64..10.0, 1..40),
        b in prop::collection::vec(-10.0f64..10.0, 1..40),
    ) {
        let d = ks_statistic(&a, &b).unwrap();
        prop_assert!((0.0..=1.0).contains(&d));
        prop_assert_eq!(d, ks_statistic(&b, &a).unwrap());
        let ea: Vec<f64> = a.iter().map(|v| v.exp()).collect();
        let eb: Vec<f64> = b.iter().map(|v| v.exp()).collect();
        prop_assert!((ks_statistic(&ea, &eb).unwrap() - d).abs() < 1e-12);
        prop_assert_eq!(ks_statistic(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn mape_scale_invariant(
        pairs in prop::collection::vec((0.1f64..100.0, 0.1f64..100.0), 1..50),
        c in 0.01f64..100.0,
    ) {
        let (a, f): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let m = mape_values(&a, &f).unwrap();
        prop_assert!(m >= 0.0);
        let ac: Vec<f64> = a.iter().map(|v| v * c).collect();
        let fc: Vec<f64> = f.iter().map(|v| v * c).collect();
        prop_assert!((mape_values(&ac, &fc).unwrap() - m).abs() < 1e-9 * (1.0 + m));
        prop_assert_eq!(mape_values(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn stationary_vector_is_left_eigenvector(p in 0.0f64..1.0, q in 0.0f64..1.0) {
        let tm = TransitionMatrix::new(p, q).unwrap();
        let pi = steady_state(&tm).unwrap();
        let a = tm.matrix();
        prop_assert!((pi.pi0 * a[0][0] + pi.pi1 * a[1][0] - pi.pi0).abs() < 1e-12);
        prop_assert!((pi.pi0 * a[0][1] + pi.pi1 * a[1][1] - pi.pi1).abs() < 1e-12);
        prop_assert!((pi.pi0 + pi.pi1 - 1.0).abs() < 1e-12);
        prop_assert!(pi.pi0 >= 0.0 && pi.pi1 >= 0.0);
    }
}

proptest! {
    #[test]
    fn fill_then_clean_keeps_distinct_transitions(
        closes in sticky_closes(),
        keep in prop::collection::vec(any::<bool>(), 400),
    ) {
        let start = NaiveDate::from_ymd_opt(2022, 1, 3).unwrap();
        let cal = weekday_calendar(start, start + Days::new(800));
        let obs: Vec<_> = cal.iter().zip(&closes).enumerate()
            .filter(|(i, _)| *i == 0 || keep[*i])
            .map(|(_, (d, c))| (*d, *c))
            .collect();
        let (d, c): (Vec<_>, Vec<_>) = obs.into_iter().unzip();
        let sparse = PriceSeries::from_parts(&d, &c).unwrap();
        let span: Vec<_> = cal.iter().copied().filter(|x| *x <= *d.last().unwrap()).collect();
        let filled = forward_fill_calendar(&sparse, &span).unwrap();
        prop_assert_eq!(remove_repetitions(&filled).series().closes(), remove_repetitions(&sparse).series().closes());
    }

    #[test]
    fn full_window_rolling_equals_pearson(pairs in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 2..40)) {
        use illiquid_core::stats::rolling_correlation;
        let (x, y): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let r = rolling_correlation(&x, &y, x.len()).unwrap();
        prop_assert_eq!(r.values.len(), 1);
        prop_assert_eq!(r.values[0].rho, pearson(&x, &y).ok());
    }
}
