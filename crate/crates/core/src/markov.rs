//! Two-state trade / no-trade chain.
//!
//! State 0 ([`State::Flat`]) means the next close equals the current one;
//! state 1 ([`State::Move`]) means it differs. The chain is parameterised by
//! `p = P(0 -> 0)` and `q = P(1 -> 1)`; off-diagonals are always derived, so
//! rows of the transition matrix sum to one exactly.

use alloc::vec::Vec;
use core::fmt;

use chrono::NaiveDate;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::timeseries::PriceSeries;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MarkovError {
    #[error("need at least 2 prices to encode states, got {0}")]
    TooShort(usize),
    #[error("state {0} never occurs as a transition source; its row of the transition matrix is undefined")]
    UnobservedSource(State),
    #[error("transition probability {name}={value} is outside [0, 1]")]
    InvalidProbability { name: &'static str, value: f64 },
    #[error("p = q = 1: both states are absorbing and the stationary distribution is not unique")]
    NoUniqueStationary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum State {
    Flat = 0,
    Move = 1,
}

impl State {
    pub fn index(self) -> usize {
        self as usize
    }
}

impl From<State> for u8 {
    fn from(s: State) -> u8 {
        s as u8
    }
}

impl TryFrom<u8> for State {
    type Error = &'static str;

    fn try_from(v: u8) -> Result<Self, Self::Error> {
        match v {
            0 => Ok(State::Flat),
            1 => Ok(State::Move),
            _ => Err("state must be 0 or 1"),
        }
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", *self as u8)
    }
}

/// One state per consecutive price pair, dated by the later observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSeries {
    pub states: Vec<State>,
    pub dates: Vec<NaiveDate>,
}

impl StateSeries {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn last(&self) -> Option<State> {
        self.states.last().copied()
    }

    pub fn count(&self, state: State) -> usize {
        self.states.iter().filter(|s| **s == state).count()
    }
}

pub fn encode_states(series: &PriceSeries) -> Result<StateSeries, MarkovError> {
    let obs = series.observations();
    if obs.len() < 2 {
        return Err(MarkovError::TooShort(obs.len()));
    }
    #[allow(clippy::float_cmp)]
    let (states, dates) = obs
        .windows(2)
        .map(|w| {
            let s = if w[1].close == w[0].close {
                State::Flat
            } else {
                State::Move
            };
            (s, w[1].date)
        })
        .unzip();
    Ok(StateSeries { states, dates })
}

/// Transition tallies indexed `0->0: 0, 0->1: 1, 1->0: 2, 1->1: 3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TransitionCounts(pub [u64; 4]);

impl TransitionCounts {
    pub fn tally(states: &[State]) -> Self {
        let mut counts = [0u64; 4];
        for w in states.windows(2) {
            counts[2 * w[0].index() + w[1].index()] += 1;
        }
        Self(counts)
    }

    pub fn get(&self, from: State, to: State) -> u64 {
        self.0[2 * from.index() + to.index()]
    }

    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionMatrix {
    p: f64,
    q: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    counts: Option<TransitionCounts>,
}

impl TransitionMatrix {
    pub fn new(p: f64, q: f64) -> Result<Self, MarkovError> {
        for (name, value) in [("p", p), ("q", q)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(MarkovError::InvalidProbability { name, value });
            }
        }
        Ok(Self { p, q, counts: None })
    }

    /// Maximum-likelihood estimate from raw transition counts, no smoothing.
    pub fn estimate(states: &[State]) -> Result<Self, MarkovError> {
        let counts = TransitionCounts::tally(states);
        let [c00, c01, c10, c11] = counts.0;
        if c00 + c01 == 0 {
            return Err(MarkovError::UnobservedSource(State::Flat));
        }
        if c10 + c11 == 0 {
            return Err(MarkovError::UnobservedSource(State::Move));
        }
        Ok(Self {
            p: c00 as f64 / (c00 + c01) as f64,
            q: c11 as f64 / (c10 + c11) as f64,
            counts: Some(counts),
        })
    }

    /// `P(0 -> 0)`.
    pub fn p(&self) -> f64 {
        self.p
    }

    /// `P(1 -> 1)`.
    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn counts(&self) -> Option<&TransitionCounts> {
        self.counts.as_ref()
    }

    /// Probability of remaining in `state` for one step.
    pub fn stay(&self, state: State) -> f64 {
        match state {
            State::Flat => self.p,
            State::Move => self.q,
        }
    }

    /// `[[p, 1-p], [1-q, q]]`.
    pub fn matrix(&self) -> [[f64; 2]; 2] {
        [[self.p, 1.0 - self.p], [1.0 - self.q, self.q]]
    }

    /// Draws the state following `current`.
    pub fn step<R: Rng + ?Sized>(&self, current: State, rng: &mut R) -> State {
        let u: f64 = rng.random();
        match (current, u < self.stay(current)) {
            (s, true) => s,
            (State::Flat, false) => State::Move,
            (State::Move, false) => State::Flat,
        }
    }
}

impl fmt::Display for TransitionMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let a = self.matrix();
        writeln!(f, "[{:.4} {:.4}]", a[0][0], a[0][1])?;
        write!(f, "[{:.4} {:.4}]", a[1][0], a[1][1])
    }
}

pub fn estimate_transitions(states: &StateSeries) -> Result<TransitionMatrix, MarkovError> {
    TransitionMatrix::estimate(&states.states)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteadyState {
    pub pi0: f64,
    pub pi1: f64,
}

/// Stationary distribution `pi` with `pi A = pi`.
///
/// Balance across the cut between the two states gives
/// `pi0 (1 - p) = pi1 (1 - q)`, so `pi0 = (1 - q) / (2 - p - q)`.
pub fn steady_state(tm: &TransitionMatrix) -> Result<SteadyState, MarkovError> {
    let denom = 2.0 - tm.p - tm.q;
    if denom <= 0.0 {
        return Err(MarkovError::NoUniqueStationary);
    }
    let pi0 = (1.0 - tm.q) / denom;
    Ok(SteadyState { pi0, pi1: 1.0 - pi0 })
}

/// `n` states following `initial`, each drawn from the row of the current state.
pub fn sample_states<R: Rng + ?Sized>(
    tm: &TransitionMatrix,
    initial: State,
    n: usize,
    rng: &mut R,
) -> Vec<State> {
    let mut current = initial;
    (0..n)
        .map(|_| {
            current = tm.step(current, rng);
            current
        })
        .collect()
}
