//! Thread-pool versions of the forecast and attenuation drivers. Each path
//! or cell draws from its own seeded stream and results are reassembled in
//! index order, so the thread count never changes the output.

use illiquid_core::attenuation::{assemble_report, study_cell, AttenuationError, AttenuationReport, StudyConfig};
use illiquid_core::regime::{assemble_forecast, forecast_path, CalibratedModel, ForecastOptions, ForecastResult, RegimeError};
use illiquid_core::timeseries::PriceSeries;
use rayon::prelude::*;

/// Runs `f` on a pool of `jobs` threads; `0` means rayon's default, `1` runs inline.
pub fn with_pool<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> T {
    if jobs == 1 {
        return f();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

pub fn par_forecast(
    model: &CalibratedModel,
    actual: &PriceSeries,
    opts: &ForecastOptions,
    jobs: usize,
) -> Result<ForecastResult, RegimeError> {
    if opts.n_sims == 0 {
        return Err(RegimeError::NoSimulations);
    }
    let closes = actual.closes();
    let paths = with_pool(jobs, || {
        (0..opts.n_sims)
            .into_par_iter()
            .map(|i| forecast_path(model, &closes, i, opts))
            .collect()
    });
    Ok(assemble_forecast(model, actual, opts, paths))
}

pub fn par_attenuation_study(config: &StudyConfig, jobs: usize) -> Result<AttenuationReport, AttenuationError> {
    let rows = with_pool(jobs, || {
        (0..config.grid.len())
            .into_par_iter()
            .map(|cell| study_cell(config, cell))
            .collect::<Result<Vec<_>, _>>()
    })?;
    Ok(assemble_report(config, rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use illiquid_core::attenuation::{attenuation_study, ShockPolicy};
    use illiquid_core::regime::{forecast_calibrated, ModelKind};
    use illiquid_core::sde::GbmParams;

    fn series(closes: &[f64]) -> PriceSeries {
        let start = chrono::NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
        let dates: Vec<_> = start.iter_days().take(closes.len()).collect();
        PriceSeries::from_parts(&dates, closes).unwrap()
    }

    #[test]
    fn forecast_matches_sequential() {
        let logs = illiquid_testkit::simulate_xou_log(0.1, 4.0, 0.05, 1.0, 4.0, 119, 3);
        let mut cal: Vec<f64> = logs.iter().map(|y| (y.exp() * 100.0).round() / 100.0).collect();
        for i in (1..cal.len()).step_by(3) {
            cal[i] = cal[i - 1];
        }
        let cal = series(&cal);
        let actual = series(&[55.0, 55.0, 56.0, 57.5, 57.0]);
        for kind in ModelKind::ALL {
            let model = CalibratedModel::calibrate(kind, &cal, 1.0).unwrap();
            let opts = ForecastOptions::new(16, 9);
            let seq = forecast_calibrated(&model, &actual, &opts).unwrap();
            assert_eq!(par_forecast(&model, &actual, &opts, 4).unwrap(), seq);
        }
    }

    #[test]
    fn study_matches_sequential() {
        let cfg = StudyConfig {
            grid: vec![(0.0, 1.0), (0.5, 0.5), (0.8, 0.6)],
            params_x: GbmParams::new(0.0, 0.01),
            params_y: GbmParams::new(0.0, 0.02),
            rho: 0.6,
            horizon: 500,
            replications: 3,
            master_seed: 5,
            s0: 10.0,
            policy: ShockPolicy::Aligned,
        };
        assert_eq!(par_attenuation_study(&cfg, 3).unwrap(), attenuation_study(&cfg).unwrap());
    }
}
