//! Markov-modulated engines (MM-gBm, MM-XOU), their plain counterparts, and
//! the multi-simulation forecaster.
//!
//! A combined model takes its SDE parameters from the cleaned calibration
//! window and its transition matrix from the state encoding of the raw
//! window. During simulation the chain decides each day whether the price
//! repeats exactly (state 0) or takes one SDE step (state 1).

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use chrono::NaiveDate;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::markov::{self, MarkovError, State, TransitionMatrix};
use crate::math;
use crate::rng::{self, derive_seed};
use crate::sde::{self, GbmParams, SdeError, XouFit, XouParams};
use crate::stats;
use crate::timeseries::{self, PriceSeries, TimeseriesError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RegimeError {
    #[error("sde layer: {0}")]
    Sde(#[from] SdeError),
    #[error("markov layer: {0}")]
    Markov(#[from] MarkovError),
    #[error("series: {0}")]
    Series(#[from] TimeseriesError),
    #[error("model {model} needs {expected} parameters")]
    ParamsMismatch {
        model: ModelKind,
        expected: &'static str,
    },
    #[error("actual series is empty")]
    NoActuals,
    #[error("n_sims must be at least 1")]
    NoSimulations,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Gbm,
    Xou,
    MmGbm,
    MmXou,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [ModelKind::MmGbm, ModelKind::Gbm, ModelKind::MmXou, ModelKind::Xou];

    pub fn is_combined(self) -> bool {
        matches!(self, ModelKind::MmGbm | ModelKind::MmXou)
    }

    pub fn sde(self) -> SdeKind {
        match self {
            ModelKind::Gbm | ModelKind::MmGbm => SdeKind::Gbm,
            ModelKind::Xou | ModelKind::MmXou => SdeKind::Xou,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Gbm => "gbm",
            ModelKind::Xou => "xou",
            ModelKind::MmGbm => "mm-gbm",
            ModelKind::MmXou => "mm-xou",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = &'static str;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gbm" => Ok(ModelKind::Gbm),
            "xou" => Ok(ModelKind::Xou),
            "mm-gbm" => Ok(ModelKind::MmGbm),
            "mm-xou" => Ok(ModelKind::MmXou),
            _ => Err("model must be one of gbm, xou, mm-gbm, mm-xou"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SdeKind {
    Gbm,
    Xou,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SdeParams {
    Gbm(GbmParams),
    Xou(XouParams),
}

impl SdeParams {
    pub fn kind(&self) -> SdeKind {
        match self {
            SdeParams::Gbm(_) => SdeKind::Gbm,
            SdeParams::Xou(_) => SdeKind::Xou,
        }
    }

    pub fn sigma(&self) -> f64 {
        match self {
            SdeParams::Gbm(g) => g.sigma,
            SdeParams::Xou(x) => x.sigma,
        }
    }

    /// True for XOU parameters with `gamma < 0`, whose conditional mean
    /// runs away exponentially.
    pub fn diverges(&self) -> bool {
        matches!(self, SdeParams::Xou(x) if x.gamma < 0.0)
    }
}

/// Where a calibration window came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowInfo {
    pub start: NaiveDate,
    pub end: NaiveDate,
    pub n: usize,
    pub cleaned: bool,
}

impl WindowInfo {
    pub fn of(series: &PriceSeries, cleaned: bool) -> Self {
        Self {
            start: series.first().date,
            end: series.last().date,
            n: series.len(),
            cleaned,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CombinedParams {
    pub sde: SdeParams,
    pub chain: TransitionMatrix,
    pub sde_window: WindowInfo,
    pub chain_window: WindowInfo,
}

fn calibrate_sde(
    series: &PriceSeries,
    kind: SdeKind,
    dt: f64,
) -> Result<(SdeParams, Option<XouFit>), SdeError> {
    match kind {
        SdeKind::Gbm => {
            let returns = timeseries::log_returns(series).map_err(|_| SdeError::TooShort {
                needed: 2,
                got: series.len(),
            })?;
            Ok((SdeParams::Gbm(sde::calibrate_gbm(&returns)?), None))
        }
        SdeKind::Xou => {
            let fit = sde::calibrate_xou(&timeseries::log_prices(series), dt)?;
            Ok((SdeParams::Xou(fit.params), Some(fit)))
        }
    }
}

/// SDE layer from the cleaned window, chain from the raw window's states.
pub fn calibrate_combined(
    window: &PriceSeries,
    kind: SdeKind,
    dt: f64,
) -> Result<CombinedParams, RegimeError> {
    Ok(calibrate_combined_detailed(window, kind, dt)?.0)
}

fn calibrate_combined_detailed(
    window: &PriceSeries,
    kind: SdeKind,
    dt: f64,
) -> Result<(CombinedParams, Option<XouFit>), RegimeError> {
    let cleaned = timeseries::remove_repetitions(window);
    let (sde, fit) = calibrate_sde(cleaned.series(), kind, dt)?;
    let states = markov::encode_states(window)?;
    let chain = markov::estimate_transitions(&states)?;
    Ok((
        CombinedParams {
            sde,
            chain,
            sde_window: WindowInfo::of(cleaned.series(), true),
            chain_window: WindowInfo::of(window, false),
        },
        fit,
    ))
}

/// The last observation of a calibration window, from which forecasts start.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Anchor {
    pub date: NaiveDate,
    pub close: f64,
    /// Last observed trade state; `None` for a single-point window.
    pub state: Option<State>,
}

impl Anchor {
    pub fn of(series: &PriceSeries) -> Self {
        let last = series.last();
        let state = markov::encode_states(series).ok().and_then(|s| s.last());
        Self {
            date: last.date,
            close: last.close,
            state,
        }
    }
}

/// Any of the four models, ready to forecast.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibratedModel {
    pub model: ModelKind,
    pub sde: SdeParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chain: Option<TransitionMatrix>,
    pub sde_window: WindowInfo,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chain_window: Option<WindowInfo>,
    pub anchor: Anchor,
    /// XOU with `gamma <= 0`.
    pub non_mean_reverting: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xou_fit: Option<XouFit>,
}

impl CalibratedModel {
    pub fn calibrate(model: ModelKind, window: &PriceSeries, dt: f64) -> Result<Self, RegimeError> {
        let anchor = Anchor::of(window);
        if model.is_combined() {
            let (c, fit) = calibrate_combined_detailed(window, model.sde(), dt)?;
            Ok(Self {
                model,
                sde: c.sde,
                chain: Some(c.chain),
                sde_window: c.sde_window,
                chain_window: Some(c.chain_window),
                anchor,
                non_mean_reverting: fit.is_some_and(|f| f.non_mean_reverting),
                xou_fit: fit,
            })
        } else {
            let (sde, fit) = calibrate_sde(window, model.sde(), dt)?;
            Ok(Self {
                model,
                sde,
                chain: None,
                sde_window: WindowInfo::of(window, false),
                chain_window: None,
                anchor,
                non_mean_reverting: fit.is_some_and(|f| f.non_mean_reverting),
                xou_fit: fit,
            })
        }
    }

    /// Builds a model from explicit parameters, e.g. for synthetic studies.
    pub fn from_parts(
        model: ModelKind,
        sde: SdeParams,
        chain: Option<TransitionMatrix>,
        anchor: Anchor,
    ) -> Result<Self, RegimeError> {
        let expected = match model.sde() {
            SdeKind::Gbm => "gbm",
            SdeKind::Xou => "xou",
        };
        if sde.kind() != model.sde() {
            return Err(RegimeError::ParamsMismatch { model, expected });
        }
        if model.is_combined() != chain.is_some() {
            return Err(RegimeError::ParamsMismatch {
                model,
                expected: if model.is_combined() {
                    "a transition matrix"
                } else {
                    "no transition matrix"
                },
            });
        }
        let window = WindowInfo {
            start: anchor.date,
            end: anchor.date,
            n: 0,
            cleaned: false,
        };
        Ok(Self {
            model,
            sde,
            chain,
            sde_window: window,
            chain_window: chain.map(|_| window),
            anchor,
            non_mean_reverting: matches!(sde, SdeParams::Xou(x) if x.gamma <= 0.0),
            xou_fit: None,
        })
    }

    pub fn combined(&self) -> Option<CombinedParams> {
        Some(CombinedParams {
            sde: self.sde,
            chain: self.chain?,
            sde_window: self.sde_window,
            chain_window: self.chain_window?,
        })
    }
}

/// Paths whose price leaves `[s0 / ceiling, s0 * ceiling]` are diverged.
pub const DEFAULT_DIVERGENCE_CEILING: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulatedPath {
    /// Prices after `s0`, one per simulated day. Entries after a divergence are `+inf`.
    pub closes: Vec<f64>,
    /// Regime state of each day; absent for plain SDE paths.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub states: Option<Vec<State>>,
    pub diverged: bool,
}

impl SimulatedPath {
    pub fn to_series(&self, dates: &[NaiveDate]) -> Result<PriceSeries, TimeseriesError> {
        PriceSeries::from_parts(dates, &self.closes)
    }
}

struct Engine {
    sde: SdeParams,
    price: f64,
    log_price: f64,
    lower: f64,
    upper: f64,
    diverged: bool,
}

impl Engine {
    fn new(sde: SdeParams, s0: f64, ceiling: f64) -> Self {
        Self {
            sde,
            price: s0,
            log_price: math::ln(s0),
            lower: s0 / ceiling,
            upper: s0 * ceiling,
            diverged: false,
        }
    }

    fn advance(&mut self, z: f64) {
        match &self.sde {
            SdeParams::Gbm(g) => self.price = sde::gbm_step(self.price, g, z),
            SdeParams::Xou(x) => {
                self.log_price = sde::xou_step(self.log_price, x, z);
                self.price = math::exp(self.log_price);
            }
        }
        if !(self.price.is_finite() && self.price >= self.lower && self.price <= self.upper) {
            self.diverged = true;
        }
    }

    fn current(&self) -> f64 {
        if self.diverged {
            f64::INFINITY
        } else {
            self.price
        }
    }
}

/// Regime-switched path: each day draws the next chain state from the
/// current state's row; state 0 repeats the previous price bit for bit,
/// state 1 takes one SDE step.
pub fn simulate_combined<R: Rng + ?Sized>(
    params: &CombinedParams,
    s0: f64,
    initial_state: State,
    horizon: usize,
    rng: &mut R,
    ceiling: f64,
) -> SimulatedPath {
    let mut engine = Engine::new(params.sde, s0, ceiling);
    let mut state = initial_state;
    let mut closes = Vec::with_capacity(horizon);
    let mut states = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        state = params.chain.step(state, rng);
        if state == State::Move && !engine.diverged {
            engine.advance(rng::standard_normal(rng));
        }
        closes.push(engine.current());
        states.push(state);
    }
    SimulatedPath {
        closes,
        states: Some(states),
        diverged: engine.diverged,
    }
}

/// Pure SDE path, one step per day.
pub fn simulate_plain<R: Rng + ?Sized>(
    params: &SdeParams,
    s0: f64,
    horizon: usize,
    rng: &mut R,
    ceiling: f64,
) -> SimulatedPath {
    let mut engine = Engine::new(*params, s0, ceiling);
    let closes = (0..horizon)
        .map(|_| {
            if !engine.diverged {
                engine.advance(rng::standard_normal(rng));
            }
            engine.current()
        })
        .collect();
    SimulatedPath {
        closes,
        states: None,
        diverged: engine.diverged,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForecastOptions {
    pub n_sims: usize,
    pub master_seed: u64,
    pub divergence_ceiling: f64,
}

impl ForecastOptions {
    pub fn new(n_sims: usize, master_seed: u64) -> Self {
        Self {
            n_sims,
            master_seed,
            divergence_ceiling: DEFAULT_DIVERGENCE_CEILING,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastPath {
    pub index: usize,
    pub seed: u64,
    pub closes: Vec<f64>,
    /// Percent; `+inf` for a diverged path.
    pub mape: f64,
    pub diverged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastResult {
    pub model: ModelKind,
    pub horizon: usize,
    pub dates: Vec<NaiveDate>,
    pub actual: Vec<f64>,
    pub paths: Vec<ForecastPath>,
    pub s0: f64,
    /// Chain state the combined models start from.
    pub initial_state: Option<State>,
    pub master_seed: u64,
    pub non_mean_reverting: bool,
}

impl ForecastResult {
    pub fn mapes(&self) -> Vec<f64> {
        self.paths.iter().map(|p| p.mape).collect()
    }

    pub fn mean_mape(&self) -> f64 {
        math::mean(&self.mapes())
    }

    pub fn median_mape(&self) -> f64 {
        median(&self.mapes())
    }

    pub fn divergence_count(&self) -> usize {
        self.paths.iter().filter(|p| p.diverged).count()
    }
}

/// Midpoint of the two central values for even counts.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(core::cmp::Ordering::Equal));
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Seed of forecast path `index` under `master_seed`.
pub fn path_seed(master_seed: u64, index: usize) -> u64 {
    derive_seed(master_seed, index as u64)
}

/// One free-running forecast path from the model's anchor, scored against `actual`.
///
/// Non-mean-reverting XOU parameters mark the path diverged regardless of
/// how far it has travelled.
pub fn forecast_path(
    model: &CalibratedModel,
    actual: &[f64],
    index: usize,
    opts: &ForecastOptions,
) -> ForecastPath {
    let seed = path_seed(opts.master_seed, index);
    let mut rng = rng::stream(seed);
    let horizon = actual.len();
    let s0 = model.anchor.close;
    let path = match model.combined() {
        Some(c) => simulate_combined(
            &c,
            s0,
            model.anchor.state.unwrap_or(State::Move),
            horizon,
            &mut rng,
            opts.divergence_ceiling,
        ),
        None => simulate_plain(&model.sde, s0, horizon, &mut rng, opts.divergence_ceiling),
    };
    let diverged = path.diverged || model.sde.diverges();
    let mape = if diverged {
        f64::INFINITY
    } else {
        stats::mape_values(actual, &path.closes).unwrap_or(f64::INFINITY)
    };
    ForecastPath {
        index,
        seed,
        closes: path.closes,
        mape,
        diverged,
    }
}

fn check_forecast_inputs(actual: &PriceSeries, opts: &ForecastOptions) -> Result<(), RegimeError> {
    if actual.is_empty() {
        return Err(RegimeError::NoActuals);
    }
    if opts.n_sims == 0 {
        return Err(RegimeError::NoSimulations);
    }
    Ok(())
}

/// Assembles a result from paths produced in any order.
pub fn assemble_forecast(
    model: &CalibratedModel,
    actual: &PriceSeries,
    opts: &ForecastOptions,
    mut paths: Vec<ForecastPath>,
) -> ForecastResult {
    paths.sort_by_key(|p| p.index);
    ForecastResult {
        model: model.model,
        horizon: actual.len(),
        dates: actual.dates(),
        actual: actual.closes(),
        paths,
        s0: model.anchor.close,
        initial_state: if model.model.is_combined() {
            Some(model.anchor.state.unwrap_or(State::Move))
        } else {
            None
        },
        master_seed: opts.master_seed,
        non_mean_reverting: model.non_mean_reverting,
    }
}

/// `n_sims` free-running paths of length `actual.len()`, each scored by MAPE.
pub fn forecast_calibrated(
    model: &CalibratedModel,
    actual: &PriceSeries,
    opts: &ForecastOptions,
) -> Result<ForecastResult, RegimeError> {
    check_forecast_inputs(actual, opts)?;
    let closes = actual.closes();
    let paths = (0..opts.n_sims)
        .map(|i| forecast_path(model, &closes, i, opts))
        .collect();
    Ok(assemble_forecast(model, actual, opts, paths))
}

/// Calibrates `model` on `calibration` and forecasts the span of `actual`.
pub fn forecast(
    model: ModelKind,
    calibration: &PriceSeries,
    actual: &PriceSeries,
    opts: &ForecastOptions,
    dt: f64,
) -> Result<ForecastResult, RegimeError> {
    check_forecast_inputs(actual, opts)?;
    let calibrated = CalibratedModel::calibrate(model, calibration, dt)?;
    forecast_calibrated(&calibrated, actual, opts)
}
