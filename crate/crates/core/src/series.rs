//! Daily four-channel congestion series.
//!
//! Each operational day runs from `t_start` to `t_end` (which may extend past
//! midnight) and is cut into `dt`-minute bins. Every movement at the study
//! airport lands in exactly one bin of one day, keyed by its actual time:
//!
//! | channel | content                                   |
//! |---------|-------------------------------------------|
//! | 0       | departure delay minutes, summed per bin   |
//! | 1       | arrival delay minutes, summed per bin     |
//! | 2       | departures per bin                        |
//! | 3       | arrivals per bin                          |
//!
//! Delay channels only accumulate positive delay; early operations still
//! count in the volume channels.

use std::collections::BTreeMap;
use std::io::Write;

use chrono::{Datelike, Duration, NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{minute_of_day, CleanDataset, Role};

pub const CHANNELS: usize = 4;
pub const DEP_DELAY: usize = 0;
pub const ARR_DELAY: usize = 1;
pub const DEP_COUNT: usize = 2;
pub const ARR_COUNT: usize = 3;

pub const CHANNEL_NAMES: [&str; CHANNELS] =
    ["dep_delay_min", "arr_delay_min", "departures", "arrivals"];

const MINUTES_PER_DAY: u32 = 1440;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SeriesError {
    #[error("invalid series window: {0}")]
    InvalidConfig(String),
}

/// Operational window and bin width, all in minutes of day.
/// `t_end` above 1440 reaches into the following calendar day.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeriesConfig {
    pub t_start: u32,
    pub t_end: u32,
    pub dt: u32,
}

impl Default for SeriesConfig {
    fn default() -> Self {
        Self {
            t_start: 300,
            t_end: 1500,
            dt: 15,
        }
    }
}

impl SeriesConfig {
    pub fn validate(&self) -> Result<(), SeriesError> {
        let bad = |msg: String| Err(SeriesError::InvalidConfig(msg));
        if self.t_start >= MINUTES_PER_DAY {
            return bad(format!("t_start {} must be below 1440", self.t_start));
        }
        if self.t_end <= self.t_start || self.t_end - self.t_start > MINUTES_PER_DAY {
            return bad(format!(
                "window {}..{} must be non-empty and at most one day",
                self.t_start, self.t_end
            ));
        }
        if self.dt == 0 || !(self.t_end - self.t_start).is_multiple_of(self.dt) {
            return bad(format!(
                "bin width {} must divide the window length {}",
                self.dt,
                self.t_end - self.t_start
            ));
        }
        Ok(())
    }

    /// Number of bins per operational day.
    pub fn n_ts(&self) -> usize {
        ((self.t_end - self.t_start) / self.dt) as usize
    }

    fn span(&self) -> u32 {
        self.t_end - self.t_start
    }

    /// Offset in minutes from the start of the operational day, or `None`
    /// in the dead window. The flag tells whether the event belongs to the
    /// previous calendar day.
    pub(crate) fn offset(&self, minute: u32) -> Option<(u32, bool)> {
        if minute >= self.t_start && minute - self.t_start < self.span() {
            Some((minute - self.t_start, false))
        } else {
            let wrapped = minute + MINUTES_PER_DAY - self.t_start;
            (wrapped < self.span()).then_some((wrapped, true))
        }
    }
}

/// A bin inside one operational day.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Slot {
    /// Calendar date on which the operational day starts.
    pub day: NaiveDate,
    pub bin: usize,
}

/// Map an event time to its operational day and bin; `None` in the dead
/// window between `t_end` and `t_start`.
pub fn assign_day(event: NaiveDateTime, cfg: &SeriesConfig) -> Option<Slot> {
    let (offset, previous) = cfg.offset(minute_of_day(event))?;
    let day = if previous {
        event.date() - Duration::days(1)
    } else {
        event.date()
    };
    Some(Slot {
        day,
        bin: (offset / cfg.dt) as usize,
    })
}

/// The congestion series of one airport-day.
#[derive(Debug, Clone, PartialEq)]
pub struct DailySeries {
    pub date: NaiveDate,
    /// 1-based day of year.
    pub day_index: u32,
    pub channels: [Vec<f64>; CHANNELS],
}

impl DailySeries {
    fn zeros(date: NaiveDate, n_ts: usize) -> Self {
        Self {
            date,
            day_index: date.ordinal(),
            channels: std::array::from_fn(|_| vec![0.0; n_ts]),
        }
    }

    pub fn channel(&self, j: usize) -> &[f64] {
        &self.channels[j]
    }

    pub fn departures(&self) -> usize {
        self.channels[DEP_COUNT].iter().sum::<f64>() as usize
    }

    pub fn arrivals(&self) -> usize {
        self.channels[ARR_COUNT].iter().sum::<f64>() as usize
    }

    /// True when no movement was binned into this day.
    pub fn is_empty(&self) -> bool {
        self.departures() + self.arrivals() == 0
    }
}

/// Result of binning a cleaned dataset into daily series.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesBuild {
    /// One entry per calendar day of the year, in date order; empty when
    /// the year carries no data.
    pub days: Vec<DailySeries>,
    /// Movements binned into the year's days.
    pub binned: usize,
    pub out_of_window: usize,
    /// In-window movements whose operational day lies in another year.
    pub out_of_year: usize,
}

#[derive(Default, Clone)]
struct BinAccumulator {
    // Integer seconds keep the sums independent of record order.
    dep_delay_s: i64,
    arr_delay_s: i64,
    departures: u32,
    arrivals: u32,
}

pub fn days_in_year(year: i32) -> Vec<NaiveDate> {
    let Some(first) = NaiveDate::from_ymd_opt(year, 1, 1) else {
        return Vec::new();
    };
    first
        .iter_days()
        .take_while(|d| d.year() == year)
        .collect()
}

/// Bin every movement of `data` into the operational days of `year`.
pub fn build_daily_series(
    data: &CleanDataset,
    cfg: &SeriesConfig,
    year: i32,
) -> Result<SeriesBuild, SeriesError> {
    cfg.validate()?;
    let n_ts = cfg.n_ts();
    let mut bins: BTreeMap<NaiveDate, Vec<BinAccumulator>> = BTreeMap::new();
    let mut out_of_window = 0;
    let mut out_of_year = 0;
    let mut binned = 0;

    for movement in data.movements() {
        let Some(slot) = assign_day(movement.actual, cfg) else {
            out_of_window += 1;
            continue;
        };
        if slot.day.year() != year {
            out_of_year += 1;
            continue;
        }
        binned += 1;
        let acc = &mut bins
            .entry(slot.day)
            .or_insert_with(|| vec![BinAccumulator::default(); n_ts])[slot.bin];
        let late_s = movement.delay_s.max(0);
        match movement.role {
            Role::Departure => {
                acc.dep_delay_s += late_s;
                acc.departures += 1;
            }
            Role::Arrival => {
                acc.arr_delay_s += late_s;
                acc.arrivals += 1;
            }
        }
    }

    if bins.is_empty() {
        log::warn!("no movements of {} fall into year {year}", data.airport);
        return Ok(SeriesBuild {
            days: Vec::new(),
            binned,
            out_of_window,
            out_of_year,
        });
    }

    let days = days_in_year(year)
        .into_iter()
        .map(|date| {
            let mut series = DailySeries::zeros(date, n_ts);
            if let Some(day_bins) = bins.get(&date) {
                for (t, acc) in day_bins.iter().enumerate() {
                    series.channels[DEP_DELAY][t] = acc.dep_delay_s as f64 / 60.0;
                    series.channels[ARR_DELAY][t] = acc.arr_delay_s as f64 / 60.0;
                    series.channels[DEP_COUNT][t] = f64::from(acc.departures);
                    series.channels[ARR_COUNT][t] = f64::from(acc.arrivals);
                }
            }
            series
        })
        .collect();

    Ok(SeriesBuild {
        days,
        binned,
        out_of_window,
        out_of_year,
    })
}

/// Long-format dump: one row per day and bin with the four channels as
/// columns.
pub fn write_series_csv<W: Write>(sink: W, days: &[DailySeries]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    let mut header = vec!["date", "day_index", "bin"];
    header.extend(CHANNEL_NAMES);
    w.write_record(&header)?;
    for day in days {
        let date = day.date.to_string();
        let day_index = day.day_index.to_string();
        for t in 0..day.channels[0].len() {
            let mut row = vec![date.clone(), day_index.clone(), t.to_string()];
            row.extend(day.channels.iter().map(|c| c[t].to_string()));
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{parse_timestamp, AirportCode, FlightRecord};

    fn ts(s: &str) -> NaiveDateTime {
        parse_timestamp(s).unwrap()
    }

    fn date(s: &str) -> NaiveDate {
        s.parse().unwrap()
    }

    fn dataset(records: Vec<FlightRecord>) -> CleanDataset {
        crate::ingest::clean(records, "CAN".parse().unwrap(), &SeriesConfig::default())
    }

    fn flight(departing: bool, sched: &str, delay_min: i64) -> FlightRecord {
        let can: AirportCode = "CAN".parse().unwrap();
        let pek: AirportCode = "PEK".parse().unwrap();
        let sched = ts(sched);
        let actual = sched + Duration::minutes(delay_min);
        if departing {
            FlightRecord {
                flight_id: "D".into(),
                origin: can,
                destination: pek,
                sched_dep: sched,
                actual_dep: Some(actual),
                sched_arr: sched + Duration::hours(3),
                actual_arr: Some(actual + Duration::hours(3)),
                dep_delay_s: None,
            }
        } else {
            FlightRecord {
                flight_id: "A".into(),
                origin: pek,
                destination: can,
                sched_dep: sched - Duration::hours(3),
                actual_dep: Some(actual - Duration::hours(3)),
                sched_arr: sched,
                actual_arr: Some(actual),
                dep_delay_s: None,
            }
        }
    }

    #[test]
    fn default_window_has_80_bins() {
        let cfg = SeriesConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.n_ts(), 80);
    }

    #[test]
    fn assign_day_boundaries() {
        let cfg = SeriesConfig::default();
        assert_eq!(
            assign_day(ts("2023-05-10T05:00"), &cfg),
            Some(Slot { day: date("2023-05-10"), bin: 0 })
        );
        assert_eq!(
            assign_day(ts("2023-05-11T00:59"), &cfg),
            Some(Slot { day: date("2023-05-10"), bin: 79 })
        );
        assert_eq!(assign_day(ts("2023-05-10T03:30"), &cfg), None);
        assert_eq!(assign_day(ts("2023-05-10T01:00"), &cfg), None);
        assert_eq!(assign_day(ts("2023-05-10T04:59"), &cfg), None);
        assert_eq!(
            assign_day(ts("2023-01-01T00:10"), &cfg),
            Some(Slot { day: date("2022-12-31"), bin: 76 })
        );
    }

    /// Exhaustive check of every minute of the day against the rule
    /// t in [05:00, 25:00), written out independently of `SeriesConfig::offset`.
    #[test]
    fn assign_day_matches_window_rule_for_all_minutes() {
        let cfg = SeriesConfig::default();
        let base = date("2023-07-15");
        for m in 0..1440u32 {
            let t = base.and_hms_opt(m / 60, m % 60, 0).unwrap();
            let expected = if m >= 300 {
                Some(Slot { day: base, bin: ((m - 300) / 15) as usize })
            } else if m < 60 {
                Some(Slot { day: base.pred_opt().unwrap(), bin: ((m + 1440 - 300) / 15) as usize })
            } else {
                None
            };
            assert_eq!(assign_day(t, &cfg), expected, "minute {m}");
        }
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let bad = [
            SeriesConfig { t_start: 300, t_end: 300, dt: 15 },
            SeriesConfig { t_start: 300, t_end: 1500, dt: 0 },
            SeriesConfig { t_start: 300, t_end: 1500, dt: 7 },
            SeriesConfig { t_start: 1500, t_end: 1600, dt: 10 },
            SeriesConfig { t_start: 0, t_end: 1500, dt: 10 },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
    }

    #[test]
    fn single_departure_lands_in_first_bin() {
        let data = dataset(vec![flight(true, "2023-03-01T04:47", 20)]);
        let build = build_daily_series(&data, &SeriesConfig::default(), 2023).unwrap();
        assert_eq!(build.days.len(), 365);
        let day = &build.days[59];
        assert_eq!(day.date, date("2023-03-01"));
        assert_eq!(day.day_index, 60);
        assert_eq!(day.channels[DEP_DELAY][0], 20.0);
        assert_eq!(day.channels[DEP_COUNT][0], 1.0);
        let rest: f64 = day.channels.iter().flatten().sum::<f64>() - 21.0;
        assert_eq!(rest, 0.0);
    }

    #[test]
    fn early_arrivals_count_but_add_no_delay() {
        // bin 3 is 05:45-05:59
        let data = dataset(vec![
            flight(false, "2023-03-01T05:40", 10),
            flight(false, "2023-03-01T05:55", -5),
        ]);
        let build = build_daily_series(&data, &SeriesConfig::default(), 2023).unwrap();
        let day = &build.days[59];
        // Oracle: direct accumulation of clipped delays.
        let expected_delay: f64 = [10.0f64, -5.0].iter().map(|d| d.max(0.0)).sum();
        assert_eq!(day.channels[ARR_DELAY][3], expected_delay);
        assert_eq!(day.channels[ARR_COUNT][3], 2.0);
    }

    #[test]
    fn full_day_conserves_departures() {
        let records: Vec<_> = (0..400)
            .map(|i| {
                let minute = 300 + (i * 1199) / 399;
                let t = date("2023-06-01").and_hms_opt(0, 0, 0).unwrap()
                    + Duration::minutes(minute as i64);
                flight(true, &t.format("%Y-%m-%dT%H:%M").to_string(), 0)
            })
            .collect();
        let data = dataset(records);
        let build = build_daily_series(&data, &SeriesConfig::default(), 2023).unwrap();
        let day = build.days.iter().find(|d| d.date == date("2023-06-01")).unwrap();
        assert_eq!(day.departures(), 400);
        assert_eq!(build.binned, 400);
    }

    #[test]
    fn leap_year_has_366_days_and_empty_year_none() {
        let data = dataset(vec![flight(true, "2024-02-29T10:00", 0)]);
        let build = build_daily_series(&data, &SeriesConfig::default(), 2024).unwrap();
        assert_eq!(build.days.len(), 366);
        let other = build_daily_series(&data, &SeriesConfig::default(), 2023).unwrap();
        assert!(other.days.is_empty());
        assert_eq!(other.out_of_year, 1);
    }

    #[test]
    fn series_dump_has_one_row_per_bin() {
        let data = dataset(vec![flight(true, "2023-03-01T10:00", 3)]);
        let build = build_daily_series(&data, &SeriesConfig::default(), 2023).unwrap();
        let mut buf = Vec::new();
        write_series_csv(&mut buf, &build.days[..2]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 2 * 80);
        assert!(text.starts_with("date,day_index,bin,dep_delay_min,arr_delay_min,departures,arrivals\n"));
    }
}
