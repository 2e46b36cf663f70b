//! Flight-movement ingestion: CSV parsing, row validation and cleaning.
//!
//! Parsing never drops a row silently. A row either becomes a
//! [`FlightRecord`] or a [`Reject`] carrying the original fields and a
//! reason code. Cleaning then filters records down to those that touch the
//! study airport, carry both actual times and fall inside the operational
//! window, counting every drop so that rows are conserved end to end.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use chrono::{NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::series::{assign_day, SeriesConfig};

/// Timestamp layout used by input and output CSVs.
pub const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M";

/// Allowed disagreement between a supplied departure delay and the one
/// implied by the timestamps.
pub const DELAY_TOLERANCE_S: i64 = 60;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read input: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("input has no header row")]
    MissingHeader,
    #[error("missing mandatory column `{0}`")]
    MissingColumn(String),
    #[error("invalid airport code `{0}`")]
    InvalidAirport(String),
}

/// Three-letter IATA airport code, stored upper-case.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AirportCode([u8; 3]);

impl AirportCode {
    pub fn as_str(&self) -> &str {
        // Only ASCII letters are ever stored.
        std::str::from_utf8(&self.0).expect("airport code is ASCII")
    }
}

impl FromStr for AirportCode {
    type Err = IngestError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let bytes = s.as_bytes();
        if bytes.len() != 3 || !bytes.iter().all(u8::is_ascii_alphabetic) {
            return Err(IngestError::InvalidAirport(s.to_string()));
        }
        let mut code = [0u8; 3];
        for (dst, src) in code.iter_mut().zip(bytes) {
            *dst = src.to_ascii_uppercase();
        }
        Ok(Self(code))
    }
}

impl fmt::Display for AirportCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for AirportCode {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for AirportCode {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One flight movement as it appears in the source data.
///
/// Timestamps are local wall-clock time at the respective airport.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlightRecord {
    pub flight_id: String,
    pub origin: AirportCode,
    pub destination: AirportCode,
    pub sched_dep: NaiveDateTime,
    pub actual_dep: Option<NaiveDateTime>,
    pub sched_arr: NaiveDateTime,
    pub actual_arr: Option<NaiveDateTime>,
    pub dep_delay_s: Option<i64>,
}

/// Which side of a flight happens at the study airport.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Departure,
    Arrival,
}

/// The part of a flight that happens at the study airport.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Movement {
    pub role: Role,
    pub scheduled: NaiveDateTime,
    pub actual: NaiveDateTime,
    /// Signed delay in seconds; negative for early operations.
    pub delay_s: i64,
}

impl Movement {
    pub fn delay_min(&self) -> f64 {
        self.delay_s as f64 / 60.0
    }

    /// Delay minutes clipped at zero.
    pub fn positive_delay_min(&self) -> f64 {
        self.delay_s.max(0) as f64 / 60.0
    }
}

impl FlightRecord {
    pub fn role_at(&self, airport: AirportCode) -> Option<Role> {
        if self.origin == airport {
            Some(Role::Departure)
        } else if self.destination == airport {
            Some(Role::Arrival)
        } else {
            None
        }
    }

    /// Departure delay in seconds: the supplied column when present,
    /// otherwise recomputed from the timestamps.
    pub fn departure_delay_s(&self) -> Option<i64> {
        self.dep_delay_s.or_else(|| {
            self.actual_dep
                .map(|actual| (actual - self.sched_dep).num_seconds())
        })
    }

    pub fn arrival_delay_s(&self) -> Option<i64> {
        self.actual_arr
            .map(|actual| (actual - self.sched_arr).num_seconds())
    }

    /// The movement at `airport`, if the flight touches it and the
    /// role-relevant actual time is known.
    pub fn movement_at(&self, airport: AirportCode) -> Option<Movement> {
        match self.role_at(airport)? {
            Role::Departure => Some(Movement {
                role: Role::Departure,
                scheduled: self.sched_dep,
                actual: self.actual_dep?,
                delay_s: self.departure_delay_s()?,
            }),
            Role::Arrival => Some(Movement {
                role: Role::Arrival,
                scheduled: self.sched_arr,
                actual: self.actual_arr?,
                delay_s: self.arrival_delay_s()?,
            }),
        }
    }
}

/// Source column names for each record field (`[input.columns]`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ColumnMapping {
    pub flight_id: String,
    pub origin: String,
    pub destination: String,
    pub sched_dep: String,
    pub actual_dep: String,
    pub sched_arr: String,
    pub actual_arr: String,
    /// Optional in the input; recomputed from timestamps when absent.
    pub dep_delay_s: String,
}

impl Default for ColumnMapping {
    fn default() -> Self {
        Self {
            flight_id: "flight_id".into(),
            origin: "origin".into(),
            destination: "destination".into(),
            sched_dep: "sched_dep".into(),
            actual_dep: "actual_dep".into(),
            sched_arr: "sched_arr".into(),
            actual_arr: "actual_arr".into(),
            dep_delay_s: "dep_delay_s".into(),
        }
    }
}

/// Why a row could not become a [`FlightRecord`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RejectReason {
    FieldCount { expected: usize, found: usize },
    InvalidUtf8,
    EmptyFlightId,
    BadAirport { column: String },
    BadTimestamp { column: String },
    BadDelay,
    SameOriginDestination,
    DelayMismatch { supplied_s: i64, computed_s: i64 },
}

impl RejectReason {
    pub fn code(&self) -> &'static str {
        match self {
            Self::FieldCount { .. } => "field_count",
            Self::InvalidUtf8 => "invalid_utf8",
            Self::EmptyFlightId => "empty_flight_id",
            Self::BadAirport { .. } => "bad_airport",
            Self::BadTimestamp { .. } => "bad_timestamp",
            Self::BadDelay => "bad_delay",
            Self::SameOriginDestination => "same_origin_destination",
            Self::DelayMismatch { .. } => "delay_mismatch",
        }
    }
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::FieldCount { expected, found } => {
                write!(f, "field_count: expected {expected}, found {found}")
            }
            Self::BadAirport { column } => write!(f, "bad_airport: {column}"),
            Self::BadTimestamp { column } => write!(f, "bad_timestamp: {column}"),
            Self::DelayMismatch {
                supplied_s,
                computed_s,
            } => write!(
                f,
                "delay_mismatch: supplied {supplied_s}s, timestamps give {computed_s}s"
            ),
            other => f.write_str(other.code()),
        }
    }
}

/// A malformed input row, kept verbatim.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reject {
    /// 1-based line number in the source, header included.
    pub line: u64,
    pub fields: Vec<String>,
    pub reason: RejectReason,
}

#[derive(Debug, Clone)]
pub struct ParseOutcome {
    pub header: Vec<String>,
    pub records: Vec<FlightRecord>,
    pub rejects: Vec<Reject>,
}

impl ParseOutcome {
    /// Number of data rows seen (records + rejects).
    pub fn row_count(&self) -> usize {
        self.records.len() + self.rejects.len()
    }
}

struct ColumnIndex {
    flight_id: usize,
    origin: usize,
    destination: usize,
    sched_dep: usize,
    actual_dep: usize,
    sched_arr: usize,
    actual_arr: usize,
    dep_delay_s: Option<usize>,
}

impl ColumnIndex {
    fn resolve(header: &[String], mapping: &ColumnMapping) -> Result<Self, IngestError> {
        let find = |name: &str| header.iter().position(|h| h.trim() == name);
        let require = |name: &str| find(name).ok_or_else(|| IngestError::MissingColumn(name.into()));
        Ok(Self {
            flight_id: require(&mapping.flight_id)?,
            origin: require(&mapping.origin)?,
            destination: require(&mapping.destination)?,
            sched_dep: require(&mapping.sched_dep)?,
            actual_dep: require(&mapping.actual_dep)?,
            sched_arr: require(&mapping.sched_arr)?,
            actual_arr: require(&mapping.actual_arr)?,
            dep_delay_s: find(&mapping.dep_delay_s),
        })
    }
}

pub fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    let s = s.trim();
    NaiveDateTime::parse_from_str(s, TIMESTAMP_FORMAT)
        .or_else(|_| NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S"))
        .ok()
}

pub fn format_timestamp(t: NaiveDateTime) -> String {
    t.format(TIMESTAMP_FORMAT).to_string()
}

fn parse_row(
    fields: &[String],
    cols: &ColumnIndex,
    mapping: &ColumnMapping,
) -> Result<FlightRecord, RejectReason> {
    let field = |i: usize| fields[i].trim();
    let airport = |i: usize, column: &str| {
        field(i).parse::<AirportCode>().map_err(|_| RejectReason::BadAirport {
            column: column.to_string(),
        })
    };
    let required_time = |i: usize, column: &str| {
        parse_timestamp(field(i)).ok_or_else(|| RejectReason::BadTimestamp {
            column: column.to_string(),
        })
    };
    let optional_time = |i: usize, column: &str| {
        if field(i).is_empty() {
            Ok(None)
        } else {
            required_time(i, column).map(Some)
        }
    };

    let flight_id = field(cols.flight_id).to_string();
    if flight_id.is_empty() {
        return Err(RejectReason::EmptyFlightId);
    }
    let origin = airport(cols.origin, &mapping.origin)?;
    let destination = airport(cols.destination, &mapping.destination)?;
    if origin == destination {
        return Err(RejectReason::SameOriginDestination);
    }
    let sched_dep = required_time(cols.sched_dep, &mapping.sched_dep)?;
    let actual_dep = optional_time(cols.actual_dep, &mapping.actual_dep)?;
    let sched_arr = required_time(cols.sched_arr, &mapping.sched_arr)?;
    let actual_arr = optional_time(cols.actual_arr, &mapping.actual_arr)?;
    let dep_delay_s = match cols.dep_delay_s.map(field) {
        None | Some("") => None,
        Some(raw) => Some(parse_delay(raw).ok_or(RejectReason::BadDelay)?),
    };

    if let (Some(actual), Some(supplied_s)) = (actual_dep, dep_delay_s) {
        let computed_s = (actual - sched_dep).num_seconds();
        if (supplied_s - computed_s).abs() > DELAY_TOLERANCE_S {
            return Err(RejectReason::DelayMismatch {
                supplied_s,
                computed_s,
            });
        }
    }

    Ok(FlightRecord {
        flight_id,
        origin,
        destination,
        sched_dep,
        actual_dep,
        sched_arr,
        actual_arr,
        dep_delay_s,
    })
}

// Some exports write integral seconds as "1200.0".
fn parse_delay(raw: &str) -> Option<i64> {
    raw.parse::<i64>().ok().or_else(|| {
        let v = raw.parse::<f64>().ok()?;
        (v.is_finite() && v.fract() == 0.0 && v.abs() < 1e15).then_some(v as i64)
    })
}

/// Parse a flight-movement CSV.
///
/// Fatal errors are limited to an unreadable stream, a missing header and a
/// missing mandatory column. Everything else is reported per row.
pub fn parse_records<R: Read>(
    source: R,
    mapping: &ColumnMapping,
) -> Result<ParseOutcome, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(source);

    let header: Vec<String> = reader
        .byte_headers()?
        .iter()
        .map(|h| String::from_utf8_lossy(h).trim_start_matches('\u{feff}').to_string())
        .collect();
    if header.is_empty() || header.iter().all(|h| h.trim().is_empty()) {
        return Err(IngestError::MissingHeader);
    }
    let cols = ColumnIndex::resolve(&header, mapping)?;

    let mut records = Vec::new();
    let mut rejects = Vec::new();
    let mut row = csv::ByteRecord::new();
    loop {
        match reader.read_byte_record(&mut row) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) => match e.kind() {
                csv::ErrorKind::Io(_) => return Err(e.into()),
                _ => {
                    let line = e.position().map_or(0, |p| p.line());
                    rejects.push(Reject {
                        line,
                        fields: Vec::new(),
                        reason: RejectReason::InvalidUtf8,
                    });
                    continue;
                }
            },
        }
        let line = row.position().map_or(0, |p| p.line());
        let decoded: Result<Vec<String>, _> = row
            .iter()
            .map(|f| std::str::from_utf8(f).map(str::to_string))
            .collect();
        let fields = match decoded {
            Ok(fields) => fields,
            Err(_) => {
                rejects.push(Reject {
                    line,
                    fields: row.iter().map(|f| String::from_utf8_lossy(f).into_owned()).collect(),
                    reason: RejectReason::InvalidUtf8,
                });
                continue;
            }
        };
        if fields.len() != header.len() {
            rejects.push(Reject {
                line,
                reason: RejectReason::FieldCount {
                    expected: header.len(),
                    found: fields.len(),
                },
                fields,
            });
            continue;
        }
        match parse_row(&fields, &cols, mapping) {
            Ok(record) => records.push(record),
            Err(reason) => rejects.push(Reject {
                line,
                fields,
                reason,
            }),
        }
    }

    Ok(ParseOutcome {
        header,
        records,
        rejects,
    })
}

/// Write the rejects report: the original columns followed by the source
/// line number, reason code and a human-readable detail.
pub fn write_rejects<W: Write>(
    sink: W,
    header: &[String],
    rejects: &[Reject],
) -> Result<(), IngestError> {
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(sink);
    let mut head: Vec<&str> = header.iter().map(String::as_str).collect();
    head.extend(["reject_line", "reject_reason", "reject_detail"]);
    w.write_record(&head)?;
    for reject in rejects {
        let mut row: Vec<String> = reject.fields.clone();
        row.resize(header.len(), String::new());
        row.push(reject.line.to_string());
        row.push(reject.reason.code().to_string());
        row.push(reject.reason.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Write records using the column names of `mapping`; the output parses
/// back to the same records.
pub fn write_records<W: Write>(
    sink: W,
    records: &[FlightRecord],
    mapping: &ColumnMapping,
) -> Result<(), IngestError> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record([
        &mapping.flight_id,
        &mapping.origin,
        &mapping.destination,
        &mapping.sched_dep,
        &mapping.actual_dep,
        &mapping.sched_arr,
        &mapping.actual_arr,
        &mapping.dep_delay_s,
    ])?;
    let opt_time = |t: Option<NaiveDateTime>| t.map(format_timestamp).unwrap_or_default();
    for r in records {
        w.write_record([
            r.flight_id.clone(),
            r.origin.to_string(),
            r.destination.to_string(),
            format_timestamp(r.sched_dep),
            opt_time(r.actual_dep),
            format_timestamp(r.sched_arr),
            opt_time(r.actual_arr),
            r.dep_delay_s.map(|d| d.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Records retained for one study airport, plus drop counters.
#[derive(Debug, Clone, PartialEq)]
pub struct CleanDataset {
    pub airport: AirportCode,
    pub records: Vec<FlightRecord>,
    /// Flights neither departing from nor arriving at the airport.
    pub dropped_unrelated: usize,
    /// Missing actual departure or actual arrival time.
    pub dropped_missing: usize,
    /// Role-relevant actual time inside the dead window.
    pub dropped_window: usize,
}

impl CleanDataset {
    /// Rows that entered `clean`.
    pub fn input_count(&self) -> usize {
        self.records.len() + self.dropped_unrelated + self.dropped_missing + self.dropped_window
    }

    pub fn movements(&self) -> impl Iterator<Item = Movement> + '_ {
        self.records
            .iter()
            .filter_map(move |r| r.movement_at(self.airport))
    }
}

/// Keep the flights of `airport` that carry both actual times and whose
/// role-relevant actual time lies in the operational window.
pub fn clean(
    records: impl IntoIterator<Item = FlightRecord>,
    airport: AirportCode,
    cfg: &SeriesConfig,
) -> CleanDataset {
    let mut out = CleanDataset {
        airport,
        records: Vec::new(),
        dropped_unrelated: 0,
        dropped_missing: 0,
        dropped_window: 0,
    };
    for record in records {
        let Some(role) = record.role_at(airport) else {
            out.dropped_unrelated += 1;
            continue;
        };
        let (Some(actual_dep), Some(actual_arr)) = (record.actual_dep, record.actual_arr) else {
            out.dropped_missing += 1;
            continue;
        };
        let event = match role {
            Role::Departure => actual_dep,
            Role::Arrival => actual_arr,
        };
        if assign_day(event, cfg).is_none() {
            out.dropped_window += 1;
            continue;
        }
        out.records.push(record);
    }
    if out.records.is_empty() {
        log::warn!("no valid records remain for airport {airport}");
    }
    out
}

/// Whole-file statistics reported by `ingest-check`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IngestReport {
    pub airport: AirportCode,
    pub rows: usize,
    pub parsed: usize,
    pub rejected: usize,
    /// Parsed records, any airport, lacking an actual time.
    pub missing_actual_any_airport: usize,
    pub missing_actual_fraction: f64,
    pub dropped_unrelated: usize,
    pub dropped_missing: usize,
    pub dropped_window: usize,
    pub retained: usize,
    pub balanced: bool,
    pub reject_reasons: std::collections::BTreeMap<String, usize>,
}

impl IngestReport {
    pub fn new(parsed: &ParseOutcome, cleaned: &CleanDataset) -> Self {
        let missing = parsed
            .records
            .iter()
            .filter(|r| r.actual_dep.is_none() || r.actual_arr.is_none())
            .count();
        let mut reject_reasons = std::collections::BTreeMap::new();
        for r in &parsed.rejects {
            *reject_reasons.entry(r.reason.code().to_string()).or_insert(0) += 1;
        }
        let rows = parsed.row_count();
        Self {
            airport: cleaned.airport,
            rows,
            parsed: parsed.records.len(),
            rejected: parsed.rejects.len(),
            missing_actual_any_airport: missing,
            missing_actual_fraction: if parsed.records.is_empty() {
                0.0
            } else {
                missing as f64 / parsed.records.len() as f64
            },
            dropped_unrelated: cleaned.dropped_unrelated,
            dropped_missing: cleaned.dropped_missing,
            dropped_window: cleaned.dropped_window,
            retained: cleaned.records.len(),
            balanced: rows == parsed.rejects.len() + cleaned.input_count(),
            reject_reasons,
        }
    }
}

/// Minute of day of a timestamp, 0..1440.
pub(crate) fn minute_of_day(t: NaiveDateTime) -> u32 {
    t.hour() * 60 + t.minute()
}
