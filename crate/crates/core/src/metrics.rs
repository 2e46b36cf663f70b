//! Congestion indicators per hour, per day and per cluster.
//!
//! * `Q`: movements per hour by actual time (dynamic capacity)
//! * `V`: movements per hour by scheduled time (dynamic traffic flow)
//! * `ω`: mean hour-to-hour relative change of `Q`
//! * `θ`: mean hour-to-hour relative change of `V`
//! * `γ`: share of movements delayed by at most 15 minutes
//! * `τ`: positive delay minutes per movement
//!
//! Hours are clock hours of the operational day, `05:00-05:59` through
//! `00:00-00:59` with the default window.

use std::collections::BTreeMap;
use std::io::Write;

use chrono::NaiveDate;
use serde::Serialize;
use thiserror::Error;

use crate::ingest::{minute_of_day, CleanDataset, Movement};
use crate::series::{assign_day, SeriesConfig};

/// A movement is on time when its delay does not exceed this.
pub const ON_TIME_THRESHOLD_S: i64 = 15 * 60;

pub const METRIC_NAMES: [&str; 6] = ["q", "v", "omega", "theta", "gamma", "tau"];

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("change rates need at least 2 hourly values, got {0}")]
    TooFewHours(usize),
    #[error("no daily metrics for {0}")]
    MissingDay(NaiveDate),
    #[error("{dates} dates but {labels} cluster labels")]
    LengthMismatch { dates: usize, labels: usize },
    #[error("cluster index {index} out of range for k = {k}")]
    LabelOutOfRange { index: usize, k: usize },
    #[error("csv error: {0}")]
    Csv(String),
}

impl From<csv::Error> for MetricsError {
    fn from(e: csv::Error) -> Self {
        Self::Csv(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct HourlyCounts {
    /// Clock hour, 0..24.
    pub hour: u32,
    pub q: u32,
    pub v: u32,
}

fn hour_count(cfg: &SeriesConfig) -> usize {
    (cfg.t_end - cfg.t_start).div_ceil(60) as usize
}

/// Operational day and hour bucket of an event, `None` in the dead window.
fn hour_slot(t: chrono::NaiveDateTime, cfg: &SeriesConfig) -> Option<(NaiveDate, usize)> {
    let slot = assign_day(t, cfg)?;
    let (offset, _) = cfg.offset(minute_of_day(t))?;
    Some((slot.day, (offset / 60) as usize))
}

fn empty_hours(cfg: &SeriesConfig) -> Vec<HourlyCounts> {
    (0..hour_count(cfg))
        .map(|h| HourlyCounts {
            hour: (cfg.t_start / 60 + h as u32) % 24,
            q: 0,
            v: 0,
        })
        .collect()
}

/// Hourly actual (`q`) and scheduled (`v`) movement counts for one
/// operational day. Actual and scheduled times are bucketed independently.
pub fn hourly_counts(data: &CleanDataset, day: NaiveDate, cfg: &SeriesConfig) -> Vec<HourlyCounts> {
    let mut hours = empty_hours(cfg);
    for m in data.movements() {
        if let Some((d, h)) = hour_slot(m.actual, cfg) {
            if d == day {
                hours[h].q += 1;
            }
        }
        if let Some((d, h)) = hour_slot(m.scheduled, cfg) {
            if d == day {
                hours[h].v += 1;
            }
        }
    }
    hours
}

/// Relative hour-to-hour changes with zero predecessors skipped.
#[derive(Debug, Clone, PartialEq)]
pub struct ChangeRates {
    pub rates: Vec<f64>,
    pub skipped: usize,
}

impl ChangeRates {
    /// Mean rate, or `None` when every pair was skipped.
    pub fn mean(&self) -> Option<f64> {
        (!self.rates.is_empty()).then(|| self.rates.iter().sum::<f64>() / self.rates.len() as f64)
    }
}

/// `|x[h] - x[h-1]| / x[h-1]` for consecutive hours.
pub fn change_rates(series: &[f64]) -> Result<ChangeRates, MetricsError> {
    if series.len() < 2 {
        return Err(MetricsError::TooFewHours(series.len()));
    }
    let mut out = ChangeRates {
        rates: Vec::with_capacity(series.len() - 1),
        skipped: 0,
    };
    for pair in series.windows(2) {
        if pair[0] == 0.0 {
            out.skipped += 1;
        } else {
            out.rates.push((pair[1] - pair[0]).abs() / pair[0]);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Punctuality {
    pub gamma: f64,
    pub tau: f64,
    pub total: usize,
    pub on_time: usize,
    /// No movements: reported as γ = 1, τ = 0.
    pub empty: bool,
}

pub fn punctuality<'a>(movements: impl IntoIterator<Item = &'a Movement>) -> Punctuality {
    let (mut total, mut on_time, mut late_s) = (0usize, 0usize, 0i64);
    for m in movements {
        total += 1;
        if m.delay_s <= ON_TIME_THRESHOLD_S {
            on_time += 1;
        }
        late_s += m.delay_s.max(0);
    }
    if total == 0 {
        return Punctuality {
            gamma: 1.0,
            tau: 0.0,
            total,
            on_time,
            empty: true,
        };
    }
    Punctuality {
        gamma: on_time as f64 / total as f64,
        tau: late_s as f64 / 60.0 / total as f64,
        total,
        on_time,
        empty: false,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DailyMetrics {
    pub date: NaiveDate,
    pub day_index: u32,
    pub q_bar: f64,
    pub v_bar: f64,
    pub omega: f64,
    pub theta: f64,
    pub gamma: f64,
    pub tau: f64,
    /// Movements with actual time inside this operational day.
    pub movements: usize,
    pub omega_skipped: usize,
    pub theta_skipped: usize,
    /// ω had no defined hour pair and is reported as 0.
    pub omega_undefined: bool,
    pub theta_undefined: bool,
    pub empty: bool,
}

impl DailyMetrics {
    pub fn values(&self) -> [f64; 6] {
        [self.q_bar, self.v_bar, self.omega, self.theta, self.gamma, self.tau]
    }

    fn from_parts(date: NaiveDate, hours: &[HourlyCounts], movements: &[Movement]) -> Self {
        use chrono::Datelike;
        let q: Vec<f64> = hours.iter().map(|h| f64::from(h.q)).collect();
        let v: Vec<f64> = hours.iter().map(|h| f64::from(h.v)).collect();
        let n = hours.len() as f64;
        let (omega, theta) = match (change_rates(&q), change_rates(&v)) {
            (Ok(o), Ok(t)) => (o, t),
            // A single-hour window has no hour pairs at all.
            _ => (
                ChangeRates { rates: vec![], skipped: 0 },
                ChangeRates { rates: vec![], skipped: 0 },
            ),
        };
        let p = punctuality(movements);
        Self {
            date,
            day_index: date.ordinal(),
            q_bar: q.iter().sum::<f64>() / n,
            v_bar: v.iter().sum::<f64>() / n,
            omega: omega.mean().unwrap_or(0.0),
            theta: theta.mean().unwrap_or(0.0),
            gamma: p.gamma,
            tau: p.tau,
            movements: p.total,
            omega_skipped: omega.skipped,
            theta_skipped: theta.skipped,
            omega_undefined: omega.mean().is_none(),
            theta_undefined: theta.mean().is_none(),
            empty: p.empty,
        }
    }
}

/// Daily metrics for each of `dates`, grouping the dataset in one pass.
pub fn daily_metrics(data: &CleanDataset, cfg: &SeriesConfig, dates: &[NaiveDate]) -> Vec<DailyMetrics> {
    let mut hours: BTreeMap<NaiveDate, Vec<HourlyCounts>> = BTreeMap::new();
    let mut moves: BTreeMap<NaiveDate, Vec<Movement>> = BTreeMap::new();
    for m in data.movements() {
        if let Some((d, h)) = hour_slot(m.actual, cfg) {
            hours.entry(d).or_insert_with(|| empty_hours(cfg))[h].q += 1;
            moves.entry(d).or_default().push(m);
        }
        if let Some((d, h)) = hour_slot(m.scheduled, cfg) {
            hours.entry(d).or_insert_with(|| empty_hours(cfg))[h].v += 1;
        }
    }
    let blank = empty_hours(cfg);
    dates
        .iter()
        .map(|&d| {
            DailyMetrics::from_parts(
                d,
                hours.get(&d).unwrap_or(&blank),
                moves.get(&d).map_or(&[][..], Vec::as_slice),
            )
        })
        .collect()
}

/// Mean indicators of one cluster.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterRow {
    /// 1-based cluster label as in the assignments file.
    pub cluster: usize,
    pub q_bar: f64,
    pub v_bar: f64,
    pub omega_bar: f64,
    pub theta_bar: f64,
    pub gamma_bar: f64,
    pub tau_bar: f64,
    pub days: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterEvaluation {
    /// Sorted by descending `q_bar`; clusters without days come last.
    pub rows: Vec<ClusterRow>,
}

impl ClusterEvaluation {
    pub fn total_days(&self) -> usize {
        self.rows.iter().map(|r| r.days).sum()
    }
}

/// Average each daily indicator over the member days of every cluster.
/// `labels` are 0-based cluster indices aligned with `dates`.
pub fn evaluate_clusters(
    daily: &[DailyMetrics],
    dates: &[NaiveDate],
    labels: &[usize],
    k: usize,
) -> Result<ClusterEvaluation, MetricsError> {
    if dates.len() != labels.len() {
        return Err(MetricsError::LengthMismatch {
            dates: dates.len(),
            labels: labels.len(),
        });
    }
    let by_date: BTreeMap<NaiveDate, &DailyMetrics> = daily.iter().map(|d| (d.date, d)).collect();
    let mut sums = vec![[0.0f64; 6]; k];
    let mut days = vec![0usize; k];
    for (date, &label) in dates.iter().zip(labels) {
        if label >= k {
            return Err(MetricsError::LabelOutOfRange { index: label, k });
        }
        let m = by_date.get(date).ok_or(MetricsError::MissingDay(*date))?;
        for (s, v) in sums[label].iter_mut().zip(m.values()) {
            *s += v;
        }
        days[label] += 1;
    }
    let mut rows: Vec<ClusterRow> = (0..k)
        .map(|c| {
            let mean = |i: usize| {
                if days[c] == 0 {
                    f64::NAN
                } else {
                    sums[c][i] / days[c] as f64
                }
            };
            ClusterRow {
                cluster: c + 1,
                q_bar: mean(0),
                v_bar: mean(1),
                omega_bar: mean(2),
                theta_bar: mean(3),
                gamma_bar: mean(4),
                tau_bar: mean(5),
                days: days[c],
            }
        })
        .collect();
    rows.sort_by(|a, b| match (a.q_bar.is_nan(), b.q_bar.is_nan()) {
        (false, false) => b.q_bar.total_cmp(&a.q_bar).then(a.cluster.cmp(&b.cluster)),
        (x, y) => x.cmp(&y).then(a.cluster.cmp(&b.cluster)),
    });
    Ok(ClusterEvaluation { rows })
}

pub fn write_evaluation_csv<W: Write>(sink: W, eval: &ClusterEvaluation) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["cluster", "q_bar", "v_bar", "omega_bar", "theta_bar", "gamma_bar", "tau_bar", "days"])?;
    for r in &eval.rows {
        w.write_record([
            format!("C{}", r.cluster),
            r.q_bar.to_string(),
            r.v_bar.to_string(),
            r.omega_bar.to_string(),
            r.theta_bar.to_string(),
            r.gamma_bar.to_string(),
            r.tau_bar.to_string(),
            r.days.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// JSON form of the evaluation; undefined means serialise as `null`.
pub fn evaluation_json(eval: &ClusterEvaluation) -> serde_json::Value {
    let num = |x: f64| serde_json::Number::from_f64(x).map_or(serde_json::Value::Null, serde_json::Value::Number);
    let rows: Vec<serde_json::Value> = eval
        .rows
        .iter()
        .map(|r| {
            serde_json::json!({
                "cluster": format!("C{}", r.cluster),
                "q_bar": num(r.q_bar),
                "v_bar": num(r.v_bar),
                "omega_bar": num(r.omega_bar),
                "theta_bar": num(r.theta_bar),
                "gamma_bar": num(r.gamma_bar),
                "tau_bar": num(r.tau_bar),
                "days": r.days,
            })
        })
        .collect();
    serde_json::json!({ "clusters": rows, "total_days": eval.total_days() })
}

/// Long format for box plots: one row per (cluster, metric, day).
pub fn write_boxplot_long<W: Write>(
    sink: W,
    daily: &[DailyMetrics],
    dates: &[NaiveDate],
    labels: &[usize],
) -> Result<(), MetricsError> {
    let by_date: BTreeMap<NaiveDate, &DailyMetrics> = daily.iter().map(|d| (d.date, d)).collect();
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["cluster", "metric", "date", "value"])?;
    for (metric_idx, metric) in METRIC_NAMES.iter().enumerate() {
        for (date, &label) in dates.iter().zip(labels) {
            let m = by_date.get(date).ok_or(MetricsError::MissingDay(*date))?;
            w.write_record([
                format!("C{}", label + 1),
                metric.to_string(),
                date.to_string(),
                m.values()[metric_idx].to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| MetricsError::Csv(e.to_string()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{clean, parse_timestamp, FlightRecord, Role};
    use chrono::Duration;

    fn ts(s: &str) -> chrono::NaiveDateTime {
        parse_timestamp(s).unwrap()
    }

    fn movement(delay_min: i64) -> Movement {
        let t = ts("2023-01-01T10:00");
        Movement {
            role: Role::Arrival,
            scheduled: t,
            actual: t + Duration::minutes(delay_min),
            delay_s: delay_min * 60,
        }
    }

    fn record(departing: bool, sched: &str, actual: &str) -> FlightRecord {
        let (can, pek) = ("CAN".parse().unwrap(), "PEK".parse().unwrap());
        let (sched, actual) = (ts(sched), ts(actual));
        let far = Duration::hours(3);
        if departing {
            FlightRecord {
                flight_id: "D".into(),
                origin: can,
                destination: pek,
                sched_dep: sched,
                actual_dep: Some(actual),
                sched_arr: sched + far,
                actual_arr: Some(actual + far),
                dep_delay_s: None,
            }
        } else {
            FlightRecord {
                flight_id: "A".into(),
                origin: pek,
                destination: can,
                sched_dep: sched - far,
                actual_dep: Some(actual - far),
                sched_arr: sched,
                actual_arr: Some(actual),
                dep_delay_s: None,
            }
        }
    }

    fn day() -> NaiveDate {
        "2023-04-02".parse().unwrap()
    }

    #[test]
    fn hourly_counts_bucket_actual_and_scheduled_independently() {
        let cfg = SeriesConfig::default();
        let mut records: Vec<_> = (0..3)
            .map(|i| record(true, "2023-04-02T09:05", &format!("2023-04-02T09:{:02}", 10 + i)))
            .collect();
        records.extend((0..2).map(|_| record(false, "2023-04-02T09:30", "2023-04-02T09:45")));
        records.push(record(true, "2023-04-02T08:55", "2023-04-02T09:10"));
        let data = clean(records, "CAN".parse().unwrap(), &cfg);
        let hours = hourly_counts(&data, day(), &cfg);
        assert_eq!(hours.len(), 20);
        assert_eq!(hours[0].hour, 5);
        assert_eq!(hours[19].hour, 0);
        let nine = hours.iter().find(|h| h.hour == 9).unwrap();
        let eight = hours.iter().find(|h| h.hour == 8).unwrap();
        assert_eq!(nine.q, 6);
        assert_eq!(nine.v, 5);
        assert_eq!((eight.q, eight.v), (0, 1));
    }

    #[test]
    fn hourly_counts_of_empty_day_are_zero() {
        let cfg = SeriesConfig::default();
        let data = clean(vec![], "CAN".parse().unwrap(), &cfg);
        assert!(hourly_counts(&data, day(), &cfg).iter().all(|h| h.q == 0 && h.v == 0));
    }

    #[test]
    fn after_midnight_counts_for_previous_day() {
        let cfg = SeriesConfig::default();
        let data = clean(
            vec![record(false, "2023-04-03T00:20", "2023-04-03T00:40")],
            "CAN".parse().unwrap(),
            &cfg,
        );
        let hours = hourly_counts(&data, day(), &cfg);
        assert_eq!(hours[19], HourlyCounts { hour: 0, q: 1, v: 1 });
    }

    #[test]
    fn change_rate_examples() {
        assert_eq!(change_rates(&[50.0, 60.0]).unwrap().rates, vec![0.2]);
        assert_eq!(change_rates(&[40.0, 40.0, 40.0]).unwrap().rates, vec![0.0, 0.0]);
        let r = change_rates(&[0.0, 10.0]).unwrap();
        assert!(r.rates.is_empty());
        assert_eq!(r.skipped, 1);
        assert_eq!(r.mean(), None);
        assert_eq!(change_rates(&[1.0]), Err(MetricsError::TooFewHours(1)));
    }

    #[test]
    fn punctuality_examples() {
        let ms: Vec<_> = [0, 0, 0, 0, 0, 0, 15, 5, 16, 40].iter().map(|&d| movement(d)).collect();
        assert_eq!(punctuality(&ms).gamma, 0.8);
        let ms: Vec<_> = [0, 0, 30, 60].iter().map(|&d| movement(d)).collect();
        assert_eq!(punctuality(&ms).tau, 22.5);
        let ms: Vec<_> = [-5, -10, -1].iter().map(|&d| movement(d)).collect();
        let p = punctuality(&ms);
        assert_eq!((p.gamma, p.tau), (1.0, 0.0));
        let p = punctuality(&[]);
        assert!(p.empty && p.gamma == 1.0 && p.tau == 0.0);
    }

    fn metrics(date: &str, q_bar: f64) -> DailyMetrics {
        DailyMetrics {
            date: date.parse().unwrap(),
            day_index: 1,
            q_bar,
            v_bar: q_bar + 1.0,
            omega: 0.1,
            theta: 0.2,
            gamma: 0.9,
            tau: 5.0,
            movements: 10,
            omega_skipped: 0,
            theta_skipped: 0,
            omega_undefined: false,
            theta_undefined: false,
            empty: false,
        }
    }

    #[test]
    fn evaluate_clusters_means_and_ordering() {
        let daily = vec![metrics("2023-01-01", 50.0), metrics("2023-01-02", 70.0), metrics("2023-01-03", 90.0)];
        let dates: Vec<NaiveDate> = daily.iter().map(|d| d.date).collect();
        let eval = evaluate_clusters(&daily, &dates, &[0, 0, 1], 3).unwrap();
        assert_eq!(eval.rows.len(), 3);
        assert_eq!(eval.rows[0].cluster, 2);
        assert_eq!(eval.rows[0].q_bar, 90.0);
        assert_eq!(eval.rows[0].tau_bar, 5.0);
        assert_eq!(eval.rows[1].q_bar, 60.0);
        assert_eq!(eval.rows[1].days, 2);
        assert!(eval.rows[2].q_bar.is_nan());
        assert_eq!(eval.rows[2].days, 0);
        assert_eq!(eval.total_days(), 3);

        let mut buf = Vec::new();
        write_evaluation_csv(&mut buf, &eval).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("cluster,q_bar,v_bar,omega_bar,theta_bar,gamma_bar,tau_bar,days\nC2,90,"));
        assert_eq!(text.lines().count(), 4);
        let json = evaluation_json(&eval);
        assert!(json["clusters"][2]["q_bar"].is_null());
    }

    #[test]
    fn evaluate_clusters_errors() {
        let daily = vec![metrics("2023-01-01", 50.0)];
        let other: NaiveDate = "2023-02-01".parse().unwrap();
        assert_eq!(
            evaluate_clusters(&daily, &[other], &[0], 1),
            Err(MetricsError::MissingDay(other))
        );
        assert!(matches!(
            evaluate_clusters(&daily, &[daily[0].date], &[3], 2),
            Err(MetricsError::LabelOutOfRange { .. })
        ));
    }

    #[test]
    fn boxplot_rows_cover_every_metric_and_day() {
        let daily = vec![metrics("2023-01-01", 50.0), metrics("2023-01-02", 70.0)];
        let dates: Vec<NaiveDate> = daily.iter().map(|d| d.date).collect();
        let mut buf = Vec::new();
        write_boxplot_long(&mut buf, &daily, &dates, &[0, 1]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 6 * 2);
        assert!(text.contains("C2,q,2023-01-02,70\n"));
    }
}
