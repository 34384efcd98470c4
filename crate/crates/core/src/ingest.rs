//! Tick aggregation into fixed-frequency bars and derivation of the
//! movement series that the segmentation engine consumes.
//!
//! Bars are sampled on a [`TradingCalendar`]: every `bar_width` after the
//! session open, the bar value is the price of the last tick at or before
//! the bar-end instant. Consecutive sessions are concatenated without any
//! overnight interpolation.

use std::collections::BTreeSet;
use std::io::{Read, Write};
use std::path::Path;

use chrono::{DateTime, Duration, FixedOffset, NaiveDate, NaiveTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tick {
    pub timestamp: DateTime<Utc>,
    pub price: f64,
}

/// Session hours and bar width used to sample ticks into bars.
///
/// Session times are wall-clock times at `utc_offset`.
#[derive(Clone, Debug, PartialEq)]
pub struct TradingCalendar {
    pub session_open: NaiveTime,
    pub session_close: NaiveTime,
    pub bar_width: Duration,
    pub holidays: BTreeSet<NaiveDate>,
    pub utc_offset: FixedOffset,
    /// Emit a final, shorter bar at the close when `bar_width` does not
    /// divide the session length.
    pub truncated_final_bar: bool,
    /// Carry the last value forward to every bar up to the close. When
    /// false, a session stops at the first bar that covers its last tick.
    pub extend_to_close: bool,
}

impl Default for TradingCalendar {
    /// 9:30-16:00 session, half-hour bars, 13 bars per day.
    fn default() -> Self {
        Self {
            session_open: NaiveTime::from_hms_opt(9, 30, 0).expect("valid time"),
            session_close: NaiveTime::from_hms_opt(16, 0, 0).expect("valid time"),
            bar_width: Duration::minutes(30),
            holidays: BTreeSet::new(),
            utc_offset: FixedOffset::east_opt(0).expect("valid offset"),
            truncated_final_bar: false,
            extend_to_close: true,
        }
    }
}

impl TradingCalendar {
    pub fn validate(&self) -> Result<()> {
        if self.session_open >= self.session_close {
            return Err(Error::Config("session_open must precede session_close".into()));
        }
        if self.bar_width <= Duration::zero() {
            return Err(Error::Config("bar_width must be positive".into()));
        }
        if self.bar_width > self.session_close - self.session_open {
            return Err(Error::Config("bar_width exceeds the session length".into()));
        }
        Ok(())
    }

    /// Bar-end times of day for one full session.
    pub fn bar_ends(&self) -> Vec<NaiveTime> {
        let session = self.session_close - self.session_open;
        let full = (session.num_milliseconds() / self.bar_width.num_milliseconds()) as i32;
        let mut ends: Vec<NaiveTime> = (1..=full)
            .map(|k| self.session_open + self.bar_width * k)
            .collect();
        let covered = self.bar_width * full;
        if self.truncated_final_bar && covered < session {
            ends.push(self.session_close);
        }
        ends
    }

    pub fn bars_per_session(&self) -> usize {
        self.bar_ends().len()
    }
}

/// Index values sampled at fixed bar frequency.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BarSeries {
    timestamps: Vec<DateTime<Utc>>,
    values: Vec<f64>,
    bars_per_day: usize,
}

impl BarSeries {
    pub fn new(timestamps: Vec<DateTime<Utc>>, values: Vec<f64>, bars_per_day: usize) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyData);
        }
        if timestamps.len() != values.len() {
            return Err(Error::Incompatible(format!(
                "{} timestamps for {} values",
                timestamps.len(),
                values.len()
            )));
        }
        if bars_per_day == 0 {
            return Err(Error::Config("bars_per_day must be positive".into()));
        }
        if let Some(i) = values.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::BadValue { index: i });
        }
        if let Some(i) = timestamps.windows(2).position(|w| w[0] >= w[1]) {
            return Err(Error::Parse(format!(
                "bar timestamps not strictly increasing at row {}",
                i + 1
            )));
        }
        Ok(Self {
            timestamps,
            values,
            bars_per_day,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn timestamps(&self) -> &[DateTime<Utc>] {
        &self.timestamps
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn bars_per_day(&self) -> usize {
        self.bars_per_day
    }
}

/// Which transform of the index is modeled as piecewise-stationary Gaussian.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    /// Absolute moves `X_t - X_{t-1}`.
    Normal,
    /// Log moves `ln X_t - ln X_{t-1}`.
    Lognormal,
}

impl std::fmt::Display for Model {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Model::Normal => "normal",
            Model::Lognormal => "lognormal",
        })
    }
}

/// The differenced series that gets segmented. `values[i]` is the move
/// into bar `i + 1`, stamped with that bar's end instant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MovementSeries {
    model: Model,
    values: Vec<f64>,
    timestamps: Vec<DateTime<Utc>>,
    bars_per_day: usize,
}

impl MovementSeries {
    pub fn new(
        model: Model,
        values: Vec<f64>,
        timestamps: Vec<DateTime<Utc>>,
        bars_per_day: usize,
    ) -> Result<Self> {
        if values.len() != timestamps.len() {
            return Err(Error::Incompatible(format!(
                "{} timestamps for {} movements",
                timestamps.len(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::BadValue { index: i });
        }
        Ok(Self {
            model,
            values,
            timestamps,
            bars_per_day,
        })
    }

    pub fn model(&self) -> Model {
        self.model
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn timestamps(&self) -> &[DateTime<Utc>] {
        &self.timestamps
    }

    pub fn bars_per_day(&self) -> usize {
        self.bars_per_day
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Sample sorted ticks into bars on `calendar`.
pub fn aggregate_ticks(ticks: &[Tick], calendar: &TradingCalendar) -> Result<BarSeries> {
    calendar.validate()?;
    if ticks.is_empty() {
        return Err(Error::EmptyData);
    }
    for (i, t) in ticks.iter().enumerate() {
        if !(t.price.is_finite() && t.price > 0.0) {
            return Err(Error::BadTick {
                index: i,
                reason: format!("price {} is not positive", t.price),
            });
        }
        if i > 0 && t.timestamp < ticks[i - 1].timestamp {
            return Err(Error::BadTick {
                index: i,
                reason: "ticks are not sorted by timestamp".into(),
            });
        }
    }

    let bar_ends = calendar.bar_ends();
    let mut timestamps = Vec::new();
    let mut values = Vec::new();

    // In-session ticks grouped by local trading date; input order is preserved.
    let mut day: Option<NaiveDate> = None;
    let mut day_ticks: Vec<(NaiveTime, f64)> = Vec::new();
    let mut flush = |date: NaiveDate, day_ticks: &mut Vec<(NaiveTime, f64)>| {
        if day_ticks.is_empty() {
            return;
        }
        let last_tick = day_ticks[day_ticks.len() - 1].0;
        let mut cursor = 0;
        let mut current: Option<f64> = None;
        for &end in &bar_ends {
            while cursor < day_ticks.len() && day_ticks[cursor].0 <= end {
                current = Some(day_ticks[cursor].1);
                cursor += 1;
            }
            if let Some(v) = current {
                let local = date.and_time(end);
                let instant = local - calendar.utc_offset;
                timestamps.push(DateTime::<Utc>::from_naive_utc_and_offset(instant, Utc));
                values.push(v);
            }
            if !calendar.extend_to_close && end >= last_tick {
                break;
            }
        }
        day_ticks.clear();
    };

    for tick in ticks {
        let local = tick.timestamp.naive_utc() + calendar.utc_offset;
        let (date, tod) = (local.date(), local.time());
        if calendar.holidays.contains(&date)
            || tod < calendar.session_open
            || tod > calendar.session_close
        {
            continue;
        }
        if day != Some(date) {
            if let Some(d) = day {
                flush(d, &mut day_ticks);
            }
            day = Some(date);
        }
        day_ticks.push((tod, tick.price));
    }
    if let Some(d) = day {
        flush(d, &mut day_ticks);
    }

    if values.is_empty() {
        return Err(Error::EmptyData);
    }
    BarSeries::new(timestamps, values, calendar.bars_per_session())
}

/// Difference the bar series under `model`.
pub fn movements(bars: &BarSeries, model: Model) -> Result<MovementSeries> {
    let x = bars.values();
    if x.len() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            got: x.len(),
        });
    }
    let values: Vec<f64> = match model {
        Model::Normal => x.windows(2).map(|w| w[1] - w[0]).collect(),
        Model::Lognormal => {
            if let Some(i) = x.iter().position(|v| !(*v > 0.0)) {
                return Err(Error::BadValue { index: i });
            }
            x.windows(2).map(|w| w[1].ln() - w[0].ln()).collect()
        }
    };
    MovementSeries::new(
        model,
        values,
        bars.timestamps()[1..].to_vec(),
        bars.bars_per_day(),
    )
}

pub(crate) fn format_timestamp(ts: &DateTime<Utc>) -> String {
    ts.to_rfc3339_opts(SecondsFormat::AutoSi, true)
}

/// Accepts RFC 3339 / ISO-8601 with offset, or a naive timestamp taken as UTC.
pub(crate) fn parse_timestamp(s: &str) -> Result<DateTime<Utc>> {
    let s = s.trim();
    if let Ok(ts) = DateTime::parse_from_rfc3339(s) {
        return Ok(ts.with_timezone(&Utc));
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f"] {
        if let Ok(naive) = chrono::NaiveDateTime::parse_from_str(s, fmt) {
            return Ok(naive.and_utc());
        }
    }
    Err(Error::Parse(format!("bad timestamp {s:?}")))
}

#[derive(Deserialize)]
struct TickRow {
    timestamp: String,
    price: f64,
}

#[derive(Serialize, Deserialize)]
struct BarRow {
    timestamp: String,
    value: f64,
}

/// Read a `timestamp,price` CSV. Rows are stably sorted by timestamp.
pub fn read_ticks_csv<R: Read>(reader: R) -> Result<Vec<Tick>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut ticks = Vec::new();
    for (i, row) in rdr.deserialize::<TickRow>().enumerate() {
        let row = row.map_err(|e| Error::BadTick {
            index: i,
            reason: e.to_string(),
        })?;
        let timestamp = parse_timestamp(&row.timestamp).map_err(|e| Error::BadTick {
            index: i,
            reason: e.to_string(),
        })?;
        ticks.push(Tick {
            timestamp,
            price: row.price,
        });
    }
    if ticks.is_empty() {
        return Err(Error::EmptyData);
    }
    ticks.sort_by_key(|t| t.timestamp);
    Ok(ticks)
}

pub fn read_ticks_file(path: &Path) -> Result<Vec<Tick>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_ticks_csv(file)
}

/// Read a `timestamp,value` CSV. When `bars_per_day` is not given it is
/// taken as the largest number of bars sharing one UTC date.
pub fn read_bars_csv<R: Read>(reader: R, bars_per_day: Option<usize>) -> Result<BarSeries> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut timestamps = Vec::new();
    let mut values = Vec::new();
    for row in rdr.deserialize::<BarRow>() {
        let row = row?;
        timestamps.push(parse_timestamp(&row.timestamp)?);
        values.push(row.value);
    }
    if values.is_empty() {
        return Err(Error::EmptyData);
    }
    let bars_per_day = bars_per_day.unwrap_or_else(|| {
        timestamps
            .chunk_by(|a, b| a.date_naive() == b.date_naive())
            .map(<[_]>::len)
            .max()
            .unwrap_or(1)
    });
    BarSeries::new(timestamps, values, bars_per_day)
}

pub fn read_bars_file(path: &Path, bars_per_day: Option<usize>) -> Result<BarSeries> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_bars_csv(file, bars_per_day)
}

pub fn write_bars_csv<W: Write>(bars: &BarSeries, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    for (ts, v) in bars.timestamps().iter().zip(bars.values()) {
        wtr.serialize(BarRow {
            timestamp: format_timestamp(ts),
            value: *v,
        })?;
    }
    wtr.flush().map_err(|e| Error::Parse(e.to_string()))?;
    Ok(())
}
