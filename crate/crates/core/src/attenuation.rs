//! Correlation attenuation under independent no-trade regimes.
//!
//! Two gBm legs share correlated shocks; each leg is then switched on and
//! off by its own two-state chain. Days in state 0 carry a zero return, so
//! the measured correlation of the legs' returns shrinks as the no-trade
//! occupancy `pi0` grows. For independent chains and time-aligned shocks
//! the moments give
//!
//! ```text
//!             (1 - pi0x)(1 - pi0y) rho sx sy
//! rho_XY = -----------------------------------------------------------------
//!          sqrt(((1 - pi0x) sx^2 + (1 - pi0x) pi0x mx^2) ((1 - pi0y) sy^2 + (1 - pi0y) pi0y my^2))
//! ```
//!
//! which is `rho (1 - pi0)` for equal legs with zero drift.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::markov::{steady_state, State, TransitionMatrix};
use crate::math;
use crate::rng::{self, derive_seed, derive_seed2};
use crate::sde::{gbm_step, GbmParams};
use crate::stats::{self, StatsError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AttenuationError {
    #[error("target correlation {0} is outside [-1, 1]")]
    InvalidRho(f64),
    #[error("no-trade probability {0} is outside [0, 1]")]
    InvalidProbability(f64),
    #[error("pi0 = 1 on a leg: that leg never moves and the correlation is undefined")]
    NeverMoves,
    #[error("horizon must be at least 2 steps")]
    HorizonTooShort,
    #[error("replications must be at least 1")]
    NoReplications,
}

/// What happens to a leg's shock on a no-trade day.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShockPolicy {
    /// Day `t` always uses shock `t`; a no-trade day discards it. Keeps the
    /// legs' shocks aligned in time.
    #[default]
    Aligned,
    /// A no-trade day leaves the shock queued for the next trading day, so
    /// each leg consumes its shocks in order with no gaps.
    Queued,
}

/// Whether the study correlates daily log-returns or price levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrelationBasis {
    #[default]
    Returns,
    Prices,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbmPair {
    /// Per-step log increments `mu + sigma z`.
    pub increments_x: Vec<f64>,
    pub increments_y: Vec<f64>,
    /// Prices including the starting value; `horizon + 1` entries.
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

fn prices_from(s0: f64, params: &GbmParams, shocks: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut price = s0;
    let mut prices = Vec::with_capacity(shocks.len() + 1);
    prices.push(price);
    let increments = shocks
        .iter()
        .map(|&z| {
            price = gbm_step(price, params, z);
            prices.push(price);
            params.mu + params.sigma * z
        })
        .collect();
    (increments, prices)
}

/// Two gBm legs with `z2 = rho z1 + sqrt(1 - rho^2) w`.
pub fn simulate_correlated_gbm_pair<R: rand::Rng + ?Sized>(
    params_x: &GbmParams,
    params_y: &GbmParams,
    rho: f64,
    horizon: usize,
    s0: f64,
    rng: &mut R,
) -> Result<GbmPair, AttenuationError> {
    if !(-1.0..=1.0).contains(&rho) {
        return Err(AttenuationError::InvalidRho(rho));
    }
    let ortho = math::sqrt(1.0 - rho * rho);
    let (zx, zy): (Vec<f64>, Vec<f64>) = (0..horizon)
        .map(|_| {
            let z1 = rng::standard_normal(rng);
            let w = rng::standard_normal(rng);
            (z1, rho * z1 + ortho * w)
        })
        .unzip();
    let (increments_x, x) = prices_from(s0, params_x, &zx);
    let (increments_y, y) = prices_from(s0, params_y, &zy);
    Ok(GbmPair {
        increments_x,
        increments_y,
        x,
        y,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulatedLeg {
    pub prices: Vec<f64>,
    pub states: Vec<State>,
    /// How many of the leg's increments were applied.
    pub consumed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulatedPair {
    pub x: ModulatedLeg,
    pub y: ModulatedLeg,
}

/// Regime-switches one leg. Each day draws the next state; a move day
/// applies an increment (chosen per `policy`), a no-trade day repeats the price.
pub fn modulate_leg<R: rand::Rng + ?Sized>(
    s0: f64,
    increments: &[f64],
    chain: &TransitionMatrix,
    initial: State,
    policy: ShockPolicy,
    rng: &mut R,
) -> ModulatedLeg {
    let mut state = initial;
    let mut log_price = math::ln(s0);
    let mut next = 0;
    let mut prices = Vec::with_capacity(increments.len() + 1);
    let mut states = Vec::with_capacity(increments.len());
    prices.push(s0);
    for t in 0..increments.len() {
        state = chain.step(state, rng);
        states.push(state);
        if state == State::Move {
            let k = match policy {
                ShockPolicy::Aligned => t,
                ShockPolicy::Queued => next,
            };
            log_price += increments[k];
            next += 1;
            prices.push(math::exp(log_price));
        } else {
            prices.push(prices[prices.len() - 1]);
        }
    }
    ModulatedLeg {
        prices,
        states,
        consumed: next,
    }
}

/// Independent chains drive the two legs from separate streams.
#[allow(clippy::too_many_arguments)]
pub fn modulate_pair(
    pair: &GbmPair,
    chain_x: &TransitionMatrix,
    chain_y: &TransitionMatrix,
    initial_x: State,
    initial_y: State,
    seed_x: u64,
    seed_y: u64,
    policy: ShockPolicy,
) -> ModulatedPair {
    let mut rx = rng::stream(seed_x);
    let mut ry = rng::stream(seed_y);
    ModulatedPair {
        x: modulate_leg(pair.x[0], &pair.increments_x, chain_x, initial_x, policy, &mut rx),
        y: modulate_leg(pair.y[0], &pair.increments_y, chain_y, initial_y, policy, &mut ry),
    }
}

/// Log-returns of a price path.
pub fn returns_of(prices: &[f64]) -> Vec<f64> {
    prices.windows(2).map(|w| math::ln(w[1] / w[0])).collect()
}

/// Correlation of two paths on the chosen basis; `None` when a leg is constant.
pub fn measure(x: &[f64], y: &[f64], basis: CorrelationBasis) -> Option<f64> {
    let r = match basis {
        CorrelationBasis::Returns => stats::pearson(&returns_of(x), &returns_of(y)),
        CorrelationBasis::Prices => stats::pearson(x, y),
    };
    match r {
        Ok(v) => Some(v),
        Err(StatsError::ZeroVariance(_)) => None,
        Err(e) => unreachable!("paths have equal length >= 2: {e}"),
    }
}

fn check_pi(pi: f64) -> Result<(), AttenuationError> {
    if !(0.0..=1.0).contains(&pi) {
        return Err(AttenuationError::InvalidProbability(pi));
    }
    Ok(())
}

/// The moment-based prediction of the measured return correlation.
pub fn predicted_attenuation(
    params_x: &GbmParams,
    params_y: &GbmParams,
    pi0x: f64,
    pi0y: f64,
    rho: f64,
) -> Result<f64, AttenuationError> {
    check_pi(pi0x)?;
    check_pi(pi0y)?;
    if pi0x == 1.0 || pi0y == 1.0 {
        return Err(AttenuationError::NeverMoves);
    }
    let (ax, ay) = (1.0 - pi0x, 1.0 - pi0y);
    let vx = ax * params_x.sigma * params_x.sigma + ax * pi0x * params_x.mu * params_x.mu;
    let vy = ay * params_y.sigma * params_y.sigma + ay * pi0y * params_y.mu * params_y.mu;
    Ok(rho * (ax * params_x.sigma / math::sqrt(vx)) * (ay * params_y.sigma / math::sqrt(vy)))
}

/// The zero-drift limit, `rho sqrt((1 - pi0x)(1 - pi0y))`; `rho (1 - pi0)` for equal legs.
pub fn attenuation_limit_mu0(pi0x: f64, pi0y: f64, rho: f64) -> Result<f64, AttenuationError> {
    check_pi(pi0x)?;
    check_pi(pi0y)?;
    Ok(rho * math::sqrt((1.0 - pi0x) * (1.0 - pi0y)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelatedPairConfig {
    pub params_x: GbmParams,
    pub params_y: GbmParams,
    pub rho: f64,
    pub chain_x: TransitionMatrix,
    pub chain_y: TransitionMatrix,
    pub horizon: usize,
    pub master_seed: u64,
    #[serde(default = "default_s0")]
    pub s0: f64,
    #[serde(default)]
    pub policy: ShockPolicy,
}

fn default_s0() -> f64 {
    100.0
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairRun {
    pub pair: GbmPair,
    pub modulated: ModulatedPair,
}

fn initial_state<R: rand::Rng + ?Sized>(chain: &TransitionMatrix, rng: &mut R) -> State {
    match steady_state(chain) {
        Ok(ss) if rng.random::<f64>() < ss.pi0 => State::Flat,
        _ => State::Move,
    }
}

impl CorrelatedPairConfig {
    /// Simulates and modulates one pair. Shocks, each chain, and each
    /// chain's stationary starting state come from separate streams derived
    /// from `master_seed`.
    pub fn run(&self) -> Result<PairRun, AttenuationError> {
        let mut shocks = rng::stream(derive_seed(self.master_seed, 0));
        let pair = simulate_correlated_gbm_pair(
            &self.params_x,
            &self.params_y,
            self.rho,
            self.horizon,
            self.s0,
            &mut shocks,
        )?;
        let mut init = rng::stream(derive_seed(self.master_seed, 3));
        let ix = initial_state(&self.chain_x, &mut init);
        let iy = initial_state(&self.chain_y, &mut init);
        let modulated = modulate_pair(
            &pair,
            &self.chain_x,
            &self.chain_y,
            ix,
            iy,
            derive_seed(self.master_seed, 1),
            derive_seed(self.master_seed, 2),
            self.policy,
        );
        Ok(PairRun { pair, modulated })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    /// `(p, q)` cells, applied to both legs.
    pub grid: Vec<(f64, f64)>,
    pub params_x: GbmParams,
    pub params_y: GbmParams,
    pub rho: f64,
    pub horizon: usize,
    pub replications: usize,
    pub master_seed: u64,
    pub s0: f64,
    pub policy: ShockPolicy,
}

impl StudyConfig {
    fn validate(&self) -> Result<(), AttenuationError> {
        if !(-1.0..=1.0).contains(&self.rho) {
            return Err(AttenuationError::InvalidRho(self.rho));
        }
        if self.horizon < 2 {
            return Err(AttenuationError::HorizonTooShort);
        }
        if self.replications == 0 {
            return Err(AttenuationError::NoReplications);
        }
        for &(p, q) in &self.grid {
            check_pi(p)?;
            check_pi(q)?;
        }
        Ok(())
    }
}

/// One grid cell, averaged over replications.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttenuationRow {
    pub p: f64,
    pub q: f64,
    /// `None` when the chain has no unique stationary distribution.
    pub pi0: Option<f64>,
    /// Mean return correlation of the modulated legs over defined replications.
    pub rho_measured: Option<f64>,
    /// Same, on price levels.
    pub rho_measured_prices: Option<f64>,
    /// Mean return correlation of the unmodulated gBm legs.
    pub rho_unmodulated: f64,
    pub rho_predicted: Option<f64>,
    pub rho_limit_mu0: Option<f64>,
    pub replications: usize,
    /// Replications where a modulated leg was constant.
    pub degenerate: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttenuationReport {
    pub rows: Vec<AttenuationRow>,
    pub rho: f64,
    pub horizon: usize,
    pub replications: usize,
    pub policy: ShockPolicy,
    /// Measured correlation never increases along rows sorted by `pi0`.
    pub monotone_non_increasing: bool,
}

fn mean_defined(values: &[Option<f64>]) -> Option<f64> {
    let defined: Vec<f64> = values.iter().filter_map(|v| *v).collect();
    if defined.is_empty() {
        None
    } else {
        Some(math::mean(&defined))
    }
}

/// All replications of grid cell `cell`. Replication `r` draws from streams
/// that depend only on `(master_seed, cell, r)`.
pub fn study_cell(config: &StudyConfig, cell: usize) -> Result<AttenuationRow, AttenuationError> {
    config.validate()?;
    let (p, q) = config.grid[cell];
    let chain = TransitionMatrix::new(p, q).map_err(|_| AttenuationError::InvalidProbability(p))?;
    let pi0 = steady_state(&chain).ok().map(|s| s.pi0);

    let mut measured = Vec::with_capacity(config.replications);
    let mut measured_prices = Vec::with_capacity(config.replications);
    let mut unmodulated = Vec::with_capacity(config.replications);
    for r in 0..config.replications {
        let run = CorrelatedPairConfig {
            params_x: config.params_x,
            params_y: config.params_y,
            rho: config.rho,
            chain_x: chain,
            chain_y: chain,
            horizon: config.horizon,
            master_seed: derive_seed2(config.master_seed, cell as u64, r as u64),
            s0: config.s0,
            policy: config.policy,
        }
        .run()?;
        let m = &run.modulated;
        measured.push(measure(&m.x.prices, &m.y.prices, CorrelationBasis::Returns));
        measured_prices.push(measure(&m.x.prices, &m.y.prices, CorrelationBasis::Prices));
        unmodulated.push(measure(&run.pair.x, &run.pair.y, CorrelationBasis::Returns));
    }
    let degenerate = measured.iter().filter(|m| m.is_none()).count();
    let predicted = pi0.and_then(|pi| {
        predicted_attenuation(&config.params_x, &config.params_y, pi, pi, config.rho).ok()
    });
    Ok(AttenuationRow {
        p,
        q,
        pi0,
        rho_measured: mean_defined(&measured),
        rho_measured_prices: mean_defined(&measured_prices),
        rho_unmodulated: mean_defined(&unmodulated).unwrap_or(f64::NAN),
        rho_predicted: predicted,
        rho_limit_mu0: pi0.and_then(|pi| attenuation_limit_mu0(pi, pi, config.rho).ok()),
        replications: config.replications,
        degenerate,
    })
}

/// Builds the report from rows in grid order.
pub fn assemble_report(config: &StudyConfig, rows: Vec<AttenuationRow>) -> AttenuationReport {
    let mut ordered: Vec<(f64, Option<f64>)> = rows
        .iter()
        .filter_map(|r| r.pi0.map(|pi| (pi, r.rho_measured)))
        .collect();
    ordered.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(core::cmp::Ordering::Equal));
    let monotone = ordered
        .windows(2)
        .all(|w| match (w[0].1, w[1].1) {
            (Some(a), Some(b)) => b <= a,
            _ => true,
        });
    AttenuationReport {
        rows,
        rho: config.rho,
        horizon: config.horizon,
        replications: config.replications,
        policy: config.policy,
        monotone_non_increasing: monotone,
    }
}

pub fn attenuation_study(config: &StudyConfig) -> Result<AttenuationReport, AttenuationError> {
    config.validate()?;
    let rows = (0..config.grid.len())
        .map(|cell| study_cell(config, cell))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(assemble_report(config, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat(mu: f64, sigma: f64) -> GbmParams {
        GbmParams::new(mu, sigma)
    }

    #[test]
    fn unit_rho_gives_identical_returns() {
        let p = flat(0.001, 0.02);
        let mut r = rng::stream(1);
        let pair = simulate_correlated_gbm_pair(&p, &p, 1.0, 500, 100.0, &mut r).unwrap();
        assert_eq!(pair.increments_x, pair.increments_y);
        assert_eq!(pair.x, pair.y);
        assert!(simulate_correlated_gbm_pair(&p, &p, 1.5, 5, 1.0, &mut r).is_err());
    }

    #[test]
    fn pair_correlation_converges() {
        let p = flat(0.0, 0.02);
        for (rho, seed) in [(0.0, 5u64), (0.9, 6)] {
            let mut r = rng::stream(seed);
            let pair = simulate_correlated_gbm_pair(&p, &p, rho, 100_000, 100.0, &mut r).unwrap();
            let m = measure(&pair.x, &pair.y, CorrelationBasis::Returns).unwrap();
            assert!((m - rho).abs() <= 0.02, "rho {rho} measured {m}");
        }
    }

    #[test]
    fn always_moving_chains_leave_pair_unchanged() {
        let p = flat(0.0005, 0.02);
        let mut r = rng::stream(2);
        let pair = simulate_correlated_gbm_pair(&p, &p, 0.5, 300, 50.0, &mut r).unwrap();
        let chain = TransitionMatrix::new(0.2, 1.0).unwrap();
        for policy in [ShockPolicy::Aligned, ShockPolicy::Queued] {
            let m = modulate_pair(&pair, &chain, &chain, State::Move, State::Move, 1, 2, policy);
            for (a, b) in m.x.prices.iter().zip(&pair.x) {
                assert!((a - b).abs() <= 1e-9 * b);
            }
            for (a, b) in m.y.prices.iter().zip(&pair.y) {
                assert!((a - b).abs() <= 1e-9 * b);
            }
        }
    }

    #[test]
    fn frozen_leg_is_undefined() {
        let p = flat(0.0, 0.02);
        let mut r = rng::stream(2);
        let pair = simulate_correlated_gbm_pair(&p, &p, 0.5, 300, 50.0, &mut r).unwrap();
        let frozen = TransitionMatrix::new(1.0, 0.5).unwrap();
        let live = TransitionMatrix::new(0.2, 0.9).unwrap();
        let m = modulate_pair(&pair, &frozen, &live, State::Flat, State::Move, 1, 2, ShockPolicy::Aligned);
        assert!(m.x.prices.iter().all(|v| *v == 50.0));
        assert_eq!(measure(&m.x.prices, &m.y.prices, CorrelationBasis::Returns), None);
    }

    #[test]
    fn zero_return_fraction_matches_pi0() {
        let p = flat(0.0, 0.02);
        let chain = TransitionMatrix::new(0.7, 0.5).unwrap();
        let pi0 = steady_state(&chain).unwrap().pi0;
        let mut r = rng::stream(4);
        let pair = simulate_correlated_gbm_pair(&p, &p, 0.3, 100_000, 10.0, &mut r).unwrap();
        let m = modulate_pair(&pair, &chain, &chain, State::Move, State::Move, 7, 8, ShockPolicy::Aligned);
        for leg in [&m.x, &m.y] {
            let zeros = returns_of(&leg.prices).iter().filter(|v| **v == 0.0).count() as f64;
            assert!((zeros / 100_000.0 - pi0).abs() <= 0.01);
        }
    }

    #[test]
    fn queued_policy_consumes_a_prefix() {
        let p = flat(0.0, 0.02);
        let chain = TransitionMatrix::new(0.6, 0.6).unwrap();
        let mut r = rng::stream(4);
        let pair = simulate_correlated_gbm_pair(&p, &p, 0.3, 2_000, 10.0, &mut r).unwrap();
        let m = modulate_pair(&pair, &chain, &chain, State::Move, State::Move, 7, 8, ShockPolicy::Queued);
        let used: Vec<f64> = returns_of(&m.x.prices).into_iter().filter(|v| *v != 0.0).collect();
        assert_eq!(used.len(), m.x.consumed);
        for (u, inc) in used.iter().zip(&pair.increments_x) {
            assert!((u - inc).abs() < 1e-12);
        }
    }

    #[test]
    fn prediction_examples() {
        let p = flat(0.0, 0.02);
        assert_eq!(predicted_attenuation(&p, &p, 0.0, 0.0, 0.7).unwrap(), 0.7);
        let v = predicted_attenuation(&p, &p, 0.36364, 0.36364, 0.9).unwrap();
        assert!((v - 0.9 * (1.0 - 0.36364)).abs() < 1e-12);
        assert!((v - 0.572_724).abs() < 1e-6);
        let v = predicted_attenuation(&p, &p, 0.5, 0.5, 0.8).unwrap();
        assert!((v - 0.4).abs() < 1e-15);
        assert_eq!(predicted_attenuation(&p, &p, 1.0, 0.2, 0.8), Err(AttenuationError::NeverMoves));

        // Equal legs with drift: rho sigma^2 (1 - pi) / (sigma^2 + pi mu^2).
        let d = flat(0.01, 0.02);
        let pi = 0.3;
        let expected = 0.8 * 0.0004 * (1.0 - pi) / (0.0004 + pi * 0.0001);
        assert!((predicted_attenuation(&d, &d, pi, pi, 0.8).unwrap() - expected).abs() < 1e-14);
    }

    #[test]
    fn study_is_deterministic_and_unmodulated_cell_tracks_rho() {
        let cfg = StudyConfig {
            grid: alloc::vec![(0.0, 1.0), (0.7, 0.7)],
            params_x: flat(0.0, 0.02),
            params_y: flat(0.0, 0.02),
            rho: 0.8,
            horizon: 20_000,
            replications: 2,
            master_seed: 9,
            s0: 100.0,
            policy: ShockPolicy::Aligned,
        };
        let a = attenuation_study(&cfg).unwrap();
        let b = attenuation_study(&cfg).unwrap();
        assert_eq!(a, b);
        let first = a.rows[0];
        assert_eq!(first.pi0, Some(0.0));
        assert!((first.rho_measured.unwrap() - 0.8).abs() <= 0.03);
        assert!(a.rows[1].rho_measured.unwrap() < first.rho_measured.unwrap());
    }
}
