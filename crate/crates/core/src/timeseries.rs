//! Dated daily closing prices and the transforms applied before calibration:
//! calendar forward-fill, repetition removal ("cleaning"), weekly resampling,
//! log-prices and log-returns.

use alloc::vec::Vec;

use chrono::{Datelike, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TimeseriesError {
    #[error("price series is empty")]
    Empty,
    #[error("observation {index} ({date}): close {close} is not a positive finite price")]
    NonPositive {
        index: usize,
        date: NaiveDate,
        close: f64,
    },
    #[error("observation {index}: date {date} does not follow {previous}")]
    NotIncreasing {
        index: usize,
        date: NaiveDate,
        previous: NaiveDate,
    },
    #[error("series has {len} observations, need at least {needed}")]
    TooShort { len: usize, needed: usize },
    #[error("calendar starts on {calendar_start} before the first observation on {first_observation}")]
    CalendarBeforeFirstObservation {
        calendar_start: NaiveDate,
        first_observation: NaiveDate,
    },
    #[error("observation dated {0} is not on the calendar")]
    DateOffCalendar(NaiveDate),
    #[error("calendar is not strictly increasing at {0}")]
    CalendarNotIncreasing(NaiveDate),
    #[error("no observation falls on {0:?}")]
    WeekdayAbsent(Weekday),
    #[error("window {start}..={end} selects no observations")]
    EmptyWindow { start: NaiveDate, end: NaiveDate },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub date: NaiveDate,
    pub close: f64,
}

impl Observation {
    pub fn new(date: NaiveDate, close: f64) -> Self {
        Self { date, close }
    }
}

/// Daily closes with strictly increasing dates and strictly positive prices.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct PriceSeries {
    observations: Vec<Observation>,
}

impl PriceSeries {
    pub fn new(observations: Vec<Observation>) -> Result<Self, TimeseriesError> {
        if observations.is_empty() {
            return Err(TimeseriesError::Empty);
        }
        for (index, obs) in observations.iter().enumerate() {
            if !(obs.close.is_finite() && obs.close > 0.0) {
                return Err(TimeseriesError::NonPositive {
                    index,
                    date: obs.date,
                    close: obs.close,
                });
            }
            if index > 0 {
                let previous = observations[index - 1].date;
                if obs.date <= previous {
                    return Err(TimeseriesError::NotIncreasing {
                        index,
                        date: obs.date,
                        previous,
                    });
                }
            }
        }
        Ok(Self { observations })
    }

    /// Pairs `dates` with `closes` positionally.
    pub fn from_parts(dates: &[NaiveDate], closes: &[f64]) -> Result<Self, TimeseriesError> {
        let observations = dates
            .iter()
            .zip(closes)
            .map(|(&date, &close)| Observation { date, close })
            .collect();
        Self::new(observations)
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    /// Always false; kept for API symmetry with collections.
    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn closes(&self) -> Vec<f64> {
        self.observations.iter().map(|o| o.close).collect()
    }

    pub fn dates(&self) -> Vec<NaiveDate> {
        self.observations.iter().map(|o| o.date).collect()
    }

    pub fn first(&self) -> Observation {
        self.observations[0]
    }

    pub fn last(&self) -> Observation {
        self.observations[self.observations.len() - 1]
    }

    /// Observations with `start <= date <= end`.
    pub fn window(&self, start: NaiveDate, end: NaiveDate) -> Result<Self, TimeseriesError> {
        let observations: Vec<_> = self
            .observations
            .iter()
            .filter(|o| o.date >= start && o.date <= end)
            .copied()
            .collect();
        if observations.is_empty() {
            return Err(TimeseriesError::EmptyWindow { start, end });
        }
        Ok(Self { observations })
    }

    /// The first `n` observations (or all of them when shorter).
    pub fn head(&self, n: usize) -> Result<Self, TimeseriesError> {
        let n = n.min(self.len());
        Self::new(self.observations[..n].to_vec())
    }

    /// The last `n` observations (or all of them when shorter).
    pub fn tail(&self, n: usize) -> Result<Self, TimeseriesError> {
        let n = n.min(self.len());
        Self::new(self.observations[self.len() - n..].to_vec())
    }
}

impl<'de> Deserialize<'de> for PriceSeries {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let observations = Vec::<Observation>::deserialize(deserializer)?;
        PriceSeries::new(observations).map_err(serde::de::Error::custom)
    }
}

/// A price series with consecutive equal closes collapsed to their first occurrence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CleanedSeries {
    series: PriceSeries,
    kept_indices: Vec<usize>,
    source_len: usize,
}

impl CleanedSeries {
    pub fn series(&self) -> &PriceSeries {
        &self.series
    }

    pub fn into_series(self) -> PriceSeries {
        self.series
    }

    /// Positions in the source series that survived cleaning.
    pub fn kept_indices(&self) -> &[usize] {
        &self.kept_indices
    }

    pub fn source_len(&self) -> usize {
        self.source_len
    }

    pub fn removed(&self) -> usize {
        self.source_len - self.series.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnSeries {
    /// Date of the later observation of each pair.
    pub dates: Vec<NaiveDate>,
    pub values: Vec<f64>,
}

impl ReturnSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogPriceSeries {
    pub dates: Vec<NaiveDate>,
    pub values: Vec<f64>,
}

impl LogPriceSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// One price per calendar date; days without an observation repeat the most
/// recent earlier close. Never back-fills.
pub fn forward_fill_calendar(
    series: &PriceSeries,
    calendar: &[NaiveDate],
) -> Result<PriceSeries, TimeseriesError> {
    let first = series.first();
    match calendar.first() {
        None => return Err(TimeseriesError::Empty),
        Some(&start) if start < first.date => {
            return Err(TimeseriesError::CalendarBeforeFirstObservation {
                calendar_start: start,
                first_observation: first.date,
            })
        }
        Some(_) => {}
    }
    for pair in calendar.windows(2) {
        if pair[1] <= pair[0] {
            return Err(TimeseriesError::CalendarNotIncreasing(pair[1]));
        }
    }

    let (span_start, span_end) = (calendar[0], calendar[calendar.len() - 1]);
    let obs = series.observations();
    // An observation inside the calendar span but not on it would be silently lost.
    if let Some(off) = obs
        .iter()
        .filter(|o| o.date >= span_start && o.date <= span_end)
        .find(|o| calendar.binary_search(&o.date).is_err())
    {
        return Err(TimeseriesError::DateOffCalendar(off.date));
    }

    let mut next = 0;
    let mut current = None;
    let mut filled = Vec::with_capacity(calendar.len());
    for &day in calendar {
        while next < obs.len() && obs[next].date <= day {
            current = Some(obs[next].close);
            next += 1;
        }
        // Unreachable: the calendar starts on or after the first observation.
        let close = current.ok_or(TimeseriesError::CalendarBeforeFirstObservation {
            calendar_start: day,
            first_observation: first.date,
        })?;
        filled.push(Observation { date: day, close });
    }
    PriceSeries::new(filled)
}

/// Monday-Friday dates from `start` to `end` inclusive.
pub fn weekday_calendar(start: NaiveDate, end: NaiveDate) -> Vec<NaiveDate> {
    start
        .iter_days()
        .take_while(|d| *d <= end)
        .filter(|d| !matches!(d.weekday(), Weekday::Sat | Weekday::Sun))
        .collect()
}

/// Keeps the first observation and every observation whose close differs
/// from the previously retained close. Equality is exact.
pub fn remove_repetitions(series: &PriceSeries) -> CleanedSeries {
    let obs = series.observations();
    let mut kept = Vec::with_capacity(obs.len());
    let mut kept_indices = Vec::with_capacity(obs.len());
    for (i, o) in obs.iter().enumerate() {
        #[allow(clippy::float_cmp)]
        let repeat = kept.last().is_some_and(|last: &Observation| last.close == o.close);
        if !repeat {
            kept.push(*o);
            kept_indices.push(i);
        }
    }
    CleanedSeries {
        series: PriceSeries { observations: kept },
        kept_indices,
        source_len: obs.len(),
    }
}

/// Observations that fall on `weekday`, in order. Expects a forward-filled series.
pub fn weekly_resample(
    series: &PriceSeries,
    weekday: Weekday,
) -> Result<PriceSeries, TimeseriesError> {
    let observations: Vec<_> = series
        .observations()
        .iter()
        .filter(|o| o.date.weekday() == weekday)
        .copied()
        .collect();
    if observations.is_empty() {
        return Err(TimeseriesError::WeekdayAbsent(weekday));
    }
    Ok(PriceSeries { observations })
}

/// `ln(close_i / close_{i-1})` for each consecutive pair.
pub fn log_returns(series: &PriceSeries) -> Result<ReturnSeries, TimeseriesError> {
    let obs = series.observations();
    if obs.len() < 2 {
        return Err(TimeseriesError::TooShort {
            len: obs.len(),
            needed: 2,
        });
    }
    let (dates, values) = obs
        .windows(2)
        .map(|w| (w[1].date, math::ln(w[1].close / w[0].close)))
        .unzip();
    Ok(ReturnSeries { dates, values })
}

pub fn log_prices(series: &PriceSeries) -> LogPriceSeries {
    let (dates, values) = series
        .observations()
        .iter()
        .map(|o| (o.date, math::ln(o.close)))
        .unzip();
    LogPriceSeries { dates, values }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn d(y: i32, m: u32, day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, day).unwrap()
    }

    fn consecutive(closes: &[f64]) -> PriceSeries {
        let dates: Vec<_> = d(2024, 1, 1).iter_days().take(closes.len()).collect();
        PriceSeries::from_parts(&dates, closes).unwrap()
    }

    #[test]
    fn rejects_zero_close() {
        let err = PriceSeries::new(vec![
            Observation::new(d(2024, 1, 1), 10.0),
            Observation::new(d(2024, 1, 2), 0.0),
        ])
        .unwrap_err();
        assert!(matches!(err, TimeseriesError::NonPositive { index: 1, .. }));
    }

    #[test]
    fn rejects_duplicate_and_empty() {
        let err = PriceSeries::new(vec![
            Observation::new(d(2024, 1, 1), 10.0),
            Observation::new(d(2024, 1, 1), 11.0),
        ])
        .unwrap_err();
        assert!(matches!(err, TimeseriesError::NotIncreasing { index: 1, .. }));
        assert_eq!(PriceSeries::new(vec![]).unwrap_err(), TimeseriesError::Empty);
    }

    #[test]
    fn wednesday_price_carries_to_thursday_and_friday() {
        // 2024-01-03 is a Wednesday.
        let s = PriceSeries::new(vec![
            Observation::new(d(2024, 1, 1), 98.0),
            Observation::new(d(2024, 1, 3), 100.0),
        ])
        .unwrap();
        let cal = weekday_calendar(d(2024, 1, 1), d(2024, 1, 5));
        let filled = forward_fill_calendar(&s, &cal).unwrap();
        assert_eq!(filled.closes(), vec![98.0, 98.0, 100.0, 100.0, 100.0]);
        assert_eq!(filled.last().date.weekday(), Weekday::Fri);
    }

    #[test]
    fn fill_over_own_dates_is_identity() {
        let s = consecutive(&[1.0, 2.0, 3.0]);
        assert_eq!(forward_fill_calendar(&s, &s.dates()).unwrap(), s);
    }

    #[test]
    fn fill_hand_example() {
        let s = PriceSeries::new(vec![
            Observation::new(d(2024, 1, 1), 10.0),
            Observation::new(d(2024, 1, 4), 12.0),
        ])
        .unwrap();
        let cal: Vec<_> = d(2024, 1, 1).iter_days().take(5).collect();
        let filled = forward_fill_calendar(&s, &cal).unwrap();
        assert_eq!(filled.closes(), vec![10.0, 10.0, 10.0, 12.0, 12.0]);
    }

    #[test]
    fn fill_rejects_calendar_before_first_observation() {
        let s = PriceSeries::new(vec![Observation::new(d(2024, 1, 3), 10.0)]).unwrap();
        let cal: Vec<_> = d(2024, 1, 1).iter_days().take(5).collect();
        assert!(matches!(
            forward_fill_calendar(&s, &cal),
            Err(TimeseriesError::CalendarBeforeFirstObservation { .. })
        ));
    }

    #[test]
    fn fill_rejects_observation_off_calendar() {
        // Saturday observation against a weekday calendar.
        let s = PriceSeries::new(vec![
            Observation::new(d(2024, 1, 1), 10.0),
            Observation::new(d(2024, 1, 6), 11.0),
            Observation::new(d(2024, 1, 9), 12.0),
        ])
        .unwrap();
        let cal = weekday_calendar(d(2024, 1, 1), d(2024, 1, 12));
        assert_eq!(
            forward_fill_calendar(&s, &cal),
            Err(TimeseriesError::DateOffCalendar(d(2024, 1, 6)))
        );
    }

    #[test]
    fn remove_repetitions_examples() {
        let cleaned = remove_repetitions(&consecutive(&[100.0, 100.0, 101.0, 101.0, 101.0, 102.0]));
        assert_eq!(cleaned.series().closes(), vec![100.0, 101.0, 102.0]);
        assert_eq!(cleaned.kept_indices(), &[0, 2, 5]);
        assert_eq!(cleaned.removed(), 3);

        let alt = consecutive(&[100.0, 101.0, 100.0, 101.0]);
        assert_eq!(remove_repetitions(&alt).series(), &alt);

        let constant = remove_repetitions(&consecutive(&[100.0, 100.0, 100.0]));
        assert_eq!(constant.series().closes(), vec![100.0]);
    }

    #[test]
    fn weekly_resample_counts_fridays() {
        let cal = weekday_calendar(d(2024, 1, 1), d(2024, 1, 12));
        assert_eq!(cal.len(), 10);
        let closes: Vec<f64> = (1..=10).map(f64::from).collect();
        let s = PriceSeries::from_parts(&cal, &closes).unwrap();
        let fridays = weekly_resample(&s, Weekday::Fri).unwrap();
        assert_eq!(fridays.closes(), vec![5.0, 10.0]);
        assert_eq!(weekly_resample(&fridays, Weekday::Fri).unwrap(), fridays);
        assert_eq!(
            weekly_resample(&s, Weekday::Sat),
            Err(TimeseriesError::WeekdayAbsent(Weekday::Sat))
        );
    }

    #[test]
    fn log_return_examples() {
        assert_eq!(log_returns(&consecutive(&[100.0, 100.0])).unwrap().values, vec![0.0]);
        let r = log_returns(&consecutive(&[100.0, 110.0])).unwrap();
        assert_eq!(r.values, vec![libm::log(1.1)]);
        let r = log_returns(&consecutive(&[100.0, 110.0, 100.0])).unwrap();
        assert!((r.values[0] + r.values[1]).abs() < 1e-15);
        assert_eq!(r.dates[0], d(2024, 1, 2));
        assert!(matches!(
            log_returns(&consecutive(&[100.0])),
            Err(TimeseriesError::TooShort { len: 1, .. })
        ));
    }

    #[test]
    fn log_price_examples() {
        assert_eq!(log_prices(&consecutive(&[1.0])).values, vec![0.0]);
        let e = core::f64::consts::E;
        let lp = log_prices(&consecutive(&[e, e * e])).values;
        assert!((lp[0] - 1.0).abs() < 1e-15 && (lp[1] - 2.0).abs() < 1e-15);
        let lp = log_prices(&consecutive(&[100.0])).values;
        assert!((lp[0] - 4.605_170_185_988_091).abs() < 1e-14);
    }

    #[test]
    fn window_selects_inclusive_range() {
        let s = consecutive(&[1.0, 2.0, 3.0, 4.0]);
        let w = s.window(d(2024, 1, 2), d(2024, 1, 3)).unwrap();
        assert_eq!(w.closes(), vec![2.0, 3.0]);
        assert!(s.window(d(2025, 1, 1), d(2025, 2, 1)).is_err());
    }
}
