//! Seeded synthetic series with known change points, for examples,
//! calibration and tests.

use chrono::{DateTime, Datelike, Duration, NaiveDate, NaiveTime, Utc, Weekday};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::ingest::{BarSeries, Model, MovementSeries};

pub const BARS_PER_DAY: usize = 13;

/// `(length, mean, sigma)` for one stationary regime.
pub type Regime = (usize, f64, f64);

/// Concatenated Gaussian regimes.
pub fn piecewise_gaussian(regimes: &[Regime], seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(regimes.iter().map(|r| r.0).sum());
    for &(len, mean, sigma) in regimes {
        let normal = Normal::new(mean, sigma).expect("finite positive sigma");
        out.extend((0..len).map(|_| normal.sample(&mut rng)));
    }
    out
}

/// Cursor positions of the true change points of `regimes`.
pub fn true_boundaries(regimes: &[Regime]) -> Vec<usize> {
    regimes
        .iter()
        .scan(0, |acc, r| {
            *acc += r.0;
            Some(*acc)
        })
        .take(regimes.len().saturating_sub(1))
        .collect()
}

/// Random zero-mean regimes with lengths in `lengths` and sigmas drawn
/// from `sigmas`; adjacent regimes never share a sigma.
pub fn random_regimes(
    count: usize,
    lengths: std::ops::RangeInclusive<usize>,
    sigmas: &[f64],
    seed: u64,
) -> Vec<Regime> {
    assert!(sigmas.len() >= 2, "need at least two sigmas");
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5e_ed0f_4e91);
    let mut prev: Option<usize> = None;
    (0..count)
        .map(|_| {
            let len = rng.random_range(lengths.clone());
            let mut k = rng.random_range(0..sigmas.len());
            while Some(k) == prev {
                k = rng.random_range(0..sigmas.len());
            }
            prev = Some(k);
            (len, 0.0, sigmas[k])
        })
        .collect()
}

/// Bar-end instants on a weekday calendar of 13 half-hour bars per day
/// (10:00 through 16:00 UTC), starting Monday 2001-01-01.
pub fn bar_timestamps(count: usize) -> Vec<DateTime<Utc>> {
    let mut out = Vec::with_capacity(count);
    let mut date = NaiveDate::from_ymd_opt(2001, 1, 1).expect("valid date");
    let first = NaiveTime::from_hms_opt(10, 0, 0).expect("valid time");
    while out.len() < count {
        if !matches!(date.weekday(), Weekday::Sat | Weekday::Sun) {
            for k in 0..BARS_PER_DAY.min(count - out.len()) {
                let t = date.and_time(first) + Duration::minutes(30 * k as i64);
                out.push(t.and_utc());
            }
        }
        date = date.succ_opt().expect("date in range");
    }
    out
}

/// Wrap raw movements in a series with synthetic bar timestamps.
pub fn movement_series(model: Model, values: Vec<f64>) -> MovementSeries {
    let mut ts = bar_timestamps(values.len() + 1);
    ts.remove(0);
    MovementSeries::new(model, values, ts, BARS_PER_DAY).expect("finite synthetic values")
}

/// Bars from a log-price random walk: `ln X_t = ln start + cumsum(log_moves)`.
pub fn bars_from_log_moves(start: f64, log_moves: &[f64]) -> BarSeries {
    let mut values = Vec::with_capacity(log_moves.len() + 1);
    let mut level = start.ln();
    values.push(start);
    for m in log_moves {
        level += m;
        values.push(level.exp());
    }
    BarSeries::new(bar_timestamps(values.len()), values, BARS_PER_DAY).expect("positive prices")
}
