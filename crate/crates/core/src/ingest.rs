//! Daily export ingestion: parse, clean, fill short gaps, build calendars.
//!
//! Input is the canonical CSV `station_id,date,pollutant,value,unit` with
//! ISO-8601 dates. Other export formats plug in by producing [`RawRow`]s.
//! The pseudo-pollutant token `TEMP` (unit `degC`) carries the optional
//! daily temperature.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::Write;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aqi::{meets_validity_rule, AqiError, AqiReport, BreakpointTable};
use crate::pollutant::{Concentration, Pollutant, Unit};

pub const DEFAULT_MAX_GAP_DAYS: u32 = 3;
pub const DATA_HEADER: [&str; 5] = ["station_id", "date", "pollutant", "value", "unit"];
pub const TEMPERATURE_TOKEN: &str = "TEMP";
pub const TEMPERATURE_UNIT: &str = "degC";

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("data file header must be `{}`", DATA_HEADER.join(","))]
    Header,
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("series is not strictly ascending by date at {0}")]
    UnsortedInput(NaiveDate),
    #[error("series mixes stations `{0}` and `{1}`")]
    MixedStations(String, String),
    #[error("max gap must be at least one day")]
    ZeroMaxGap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Measured,
    Interpolated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub value: f64,
    pub provenance: Provenance,
}

impl Sample {
    pub fn measured(value: f64) -> Self {
        Sample {
            value,
            provenance: Provenance::Measured,
        }
    }
}

/// All samples for one station on one day, in canonical units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailyRecord {
    pub station_id: String,
    pub date: NaiveDate,
    pub samples: BTreeMap<Pollutant, Sample>,
    pub temperature_c: Option<f64>,
}

impl DailyRecord {
    pub fn new(station_id: impl Into<String>, date: NaiveDate) -> Self {
        DailyRecord {
            station_id: station_id.into(),
            date,
            samples: BTreeMap::new(),
            temperature_c: None,
        }
    }

    pub fn with_sample(mut self, pollutant: Pollutant, value: f64) -> Self {
        self.samples.insert(pollutant, Sample::measured(value));
        self
    }

    pub fn concentrations(&self) -> Vec<Concentration> {
        self.samples
            .iter()
            .filter_map(|(p, s)| Concentration::canonical(*p, s.value).ok())
            .collect()
    }

    /// Enough AQI-bearing pollutants for a valid report.
    pub fn is_available(&self) -> bool {
        meets_validity_rule(self.samples.keys().copied())
    }

    pub fn aqi_report(&self, table: &BreakpointTable) -> Result<AqiReport, AqiError> {
        table.report(&self.concentrations())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AvailabilityCalendar {
    pub station_id: String,
    pub dates: Vec<NaiveDate>,
}

/// One unvalidated data row as read from an export.
#[derive(Debug, Clone, PartialEq)]
pub struct RawRow {
    /// Line number in the source file, header being line 1.
    pub line: u64,
    pub station_id: String,
    pub date: String,
    pub pollutant: String,
    pub value: String,
    pub unit: String,
    pub raw: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RejectReason {
    MalformedRow,
    UnknownStation,
    MalformedDate,
    UnknownPollutant,
    UnknownUnit,
    NonNumeric,
    NonFinite,
    Negative,
    Duplicate,
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RejectedRow {
    pub line: u64,
    pub reason: RejectReason,
    pub raw: String,
}

/// Splits canonical CSV text into raw rows. Rows with the wrong number of
/// fields come back as rejections rather than aborting the read.
pub fn read_raw_rows(input: &str) -> Result<Vec<Result<RawRow, RejectedRow>>, IngestError> {
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .has_headers(true)
        .from_reader(input.as_bytes());
    let header = rdr.headers()?;
    if header.iter().map(str::trim).ne(DATA_HEADER) {
        return Err(IngestError::Header);
    }
    let mut records = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let pos = rec.position().expect("reader tracks positions").clone();
        records.push((pos, rec));
    }
    let mut out = Vec::with_capacity(records.len());
    for (i, (pos, rec)) in records.iter().enumerate() {
        let start = pos.byte() as usize;
        let end = records.get(i + 1).map_or(input.len(), |(p, _)| p.byte() as usize);
        let raw = input[start..end].trim_end_matches(['\r', '\n']).to_string();
        let line = pos.line();
        if rec.len() != DATA_HEADER.len() {
            out.push(Err(RejectedRow {
                line,
                reason: RejectReason::MalformedRow,
                raw,
            }));
            continue;
        }
        let f = |i: usize| rec[i].trim().to_string();
        out.push(Ok(RawRow {
            line,
            station_id: f(0),
            date: f(1),
            pollutant: f(2),
            value: f(3),
            unit: f(4),
            raw,
        }));
    }
    Ok(out)
}

fn parse_value(s: &str) -> Result<f64, RejectReason> {
    let cleaned: String = s
        .chars()
        .filter(|c| !c.is_whitespace() && *c != ',')
        .map(|c| if c == '\u{2212}' { '-' } else { c })
        .collect();
    let v: f64 = cleaned.parse().map_err(|_| RejectReason::NonNumeric)?;
    if !v.is_finite() {
        return Err(RejectReason::NonFinite);
    }
    Ok(v + 0.0)
}

fn parse_date(s: &str) -> Result<NaiveDate, RejectReason> {
    NaiveDate::parse_from_str(s, "%Y-%m-%d").map_err(|_| RejectReason::MalformedDate)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Field {
    Pollutant(Pollutant),
    Temperature,
}

fn parse_field(token: &str, unit: &str) -> Result<Field, RejectReason> {
    if token.eq_ignore_ascii_case(TEMPERATURE_TOKEN) || token.eq_ignore_ascii_case("temperature") {
        let u = unit.trim().to_ascii_lowercase();
        return match u.as_str() {
            "degc" | "c" | "°c" | "celsius" => Ok(Field::Temperature),
            _ => Err(RejectReason::UnknownUnit),
        };
    }
    token
        .parse::<Pollutant>()
        .map(Field::Pollutant)
        .map_err(|_| RejectReason::UnknownPollutant)
}

#[derive(Debug, Clone, Default)]
pub struct CleanOutput {
    /// Measured records grouped by station and date, sorted.
    pub records: Vec<DailyRecord>,
    pub accepted: usize,
    pub rejected: Vec<RejectedRow>,
}

/// Validates raw rows against the station registry.
///
/// Rejections: unknown station, malformed date, unknown pollutant or unit,
/// non-numeric, non-finite or negative value, and any repeat of an already
/// accepted `(station, date, pollutant)`; the earlier row wins. Values are
/// converted into each pollutant's canonical unit.
pub fn parse_and_clean(rows: impl IntoIterator<Item = RawRow>, stations: &HashSet<String>) -> CleanOutput {
    let mut grouped: BTreeMap<(String, NaiveDate), DailyRecord> = BTreeMap::new();
    let mut seen: HashSet<(String, NaiveDate, Field)> = HashSet::new();
    let mut out = CleanOutput::default();

    for row in rows {
        let checked = (|| {
            if !stations.contains(&row.station_id) {
                return Err(RejectReason::UnknownStation);
            }
            let date = parse_date(&row.date)?;
            let field = parse_field(&row.pollutant, &row.unit)?;
            let value = match field {
                Field::Temperature => parse_value(&row.value)?,
                Field::Pollutant(p) => {
                    let unit: Unit = row.unit.parse().map_err(|_| RejectReason::UnknownUnit)?;
                    let v = parse_value(&row.value)?;
                    if v < 0.0 {
                        return Err(RejectReason::Negative);
                    }
                    unit.convert(v, p.canonical_unit())
                }
            };
            if !seen.insert((row.station_id.clone(), date, field)) {
                return Err(RejectReason::Duplicate);
            }
            Ok((date, field, value))
        })();

        match checked {
            Ok((date, field, value)) => {
                out.accepted += 1;
                let rec = grouped
                    .entry((row.station_id.clone(), date))
                    .or_insert_with(|| DailyRecord::new(row.station_id.clone(), date));
                match field {
                    Field::Pollutant(p) => {
                        rec.samples.insert(p, Sample::measured(value));
                    }
                    Field::Temperature => rec.temperature_c = Some(value),
                }
            }
            Err(reason) => out.rejected.push(RejectedRow {
                line: row.line,
                reason,
                raw: row.raw,
            }),
        }
    }
    out.records = grouped.into_values().collect();
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapFill {
    pub records: Vec<DailyRecord>,
    pub calendar: AvailabilityCalendar,
    pub interpolated: usize,
}

/// Linearly fills interior per-pollutant gaps of at most `max_gap_days`
/// missing days in one station's date-ordered series.
///
/// Gaps are found per pollutant: a day is missing for a pollutant when no
/// record exists that day or the record lacks that pollutant. Longer gaps
/// and leading or trailing runs stay missing. Records are created for days
/// that gain at least one interpolated value. The returned calendar lists
/// every date whose record meets the AQI validity rule.
pub fn interpolate_gaps(series: &[DailyRecord], max_gap_days: u32) -> Result<GapFill, IngestError> {
    if max_gap_days == 0 {
        return Err(IngestError::ZeroMaxGap);
    }
    let Some(first) = series.first() else {
        return Ok(GapFill {
            records: Vec::new(),
            calendar: AvailabilityCalendar {
                station_id: String::new(),
                dates: Vec::new(),
            },
            interpolated: 0,
        });
    };
    for w in series.windows(2) {
        if w[1].station_id != w[0].station_id {
            return Err(IngestError::MixedStations(
                w[0].station_id.clone(),
                w[1].station_id.clone(),
            ));
        }
        if w[1].date <= w[0].date {
            return Err(IngestError::UnsortedInput(w[1].date));
        }
    }

    let station = first.station_id.clone();
    let mut by_date: BTreeMap<NaiveDate, DailyRecord> = series.iter().map(|r| (r.date, r.clone())).collect();
    let mut fills: Vec<(NaiveDate, Pollutant, f64)> = Vec::new();

    for p in Pollutant::ALL {
        let known: Vec<(NaiveDate, f64)> = by_date
            .values()
            .filter_map(|r| r.samples.get(&p).map(|s| (r.date, s.value)))
            .collect();
        for w in known.windows(2) {
            let ((d0, v0), (d1, v1)) = (w[0], w[1]);
            let steps = (d1 - d0).num_days();
            let missing = steps - 1;
            if missing < 1 || missing > i64::from(max_gap_days) {
                continue;
            }
            let (lo, hi) = (v0.min(v1), v0.max(v1));
            for i in 1..steps {
                let v = v0 + (v1 - v0) * i as f64 / steps as f64;
                fills.push((d0 + chrono::Days::new(i as u64), p, v.clamp(lo, hi)));
            }
        }
    }

    let interpolated = fills.len();
    for (date, p, value) in fills {
        by_date
            .entry(date)
            .or_insert_with(|| DailyRecord::new(station.clone(), date))
            .samples
            .insert(
                p,
                Sample {
                    value,
                    provenance: Provenance::Interpolated,
                },
            );
    }

    let records: Vec<DailyRecord> = by_date.into_values().collect();
    let calendar = AvailabilityCalendar {
        station_id: station,
        dates: records.iter().filter(|r| r.is_available()).map(|r| r.date).collect(),
    };
    Ok(GapFill {
        records,
        calendar,
        interpolated,
    })
}

/// Result of a full ingestion pass over one data file.
#[derive(Debug, Clone)]
pub struct IngestOutcome {
    pub total_rows: usize,
    pub accepted: usize,
    pub rejected: Vec<RejectedRow>,
    pub interpolated: usize,
    pub stations: BTreeMap<String, GapFill>,
}

/// Reads, cleans and gap-fills a canonical data file. Stations are
/// gap-filled in parallel.
pub fn ingest_csv(input: &str, stations: &HashSet<String>, max_gap_days: u32) -> Result<IngestOutcome, IngestError> {
    if max_gap_days == 0 {
        return Err(IngestError::ZeroMaxGap);
    }
    let rows = read_raw_rows(input)?;
    let total_rows = rows.len();
    let mut rejected = Vec::new();
    let mut good = Vec::new();
    for r in rows {
        match r {
            Ok(row) => good.push(row),
            Err(rej) => rejected.push(rej),
        }
    }
    let cleaned = parse_and_clean(good, stations);
    rejected.extend(cleaned.rejected);
    rejected.sort_by_key(|r| r.line);

    let mut per_station: HashMap<String, Vec<DailyRecord>> = HashMap::new();
    for rec in cleaned.records {
        per_station.entry(rec.station_id.clone()).or_default().push(rec);
    }
    let filled = per_station
        .into_par_iter()
        .map(|(id, recs)| interpolate_gaps(&recs, max_gap_days).map(|g| (id, g)))
        .collect::<Result<BTreeMap<_, _>, _>>()?;

    Ok(IngestOutcome {
        total_rows,
        accepted: cleaned.accepted,
        interpolated: filled.values().map(|g| g.interpolated).sum(),
        rejected,
        stations: filled,
    })
}

/// Writes the rejection report `row_number,reason,raw_line`.
pub fn write_rejections(rejected: &[RejectedRow], writer: impl Write) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["row_number", "reason", "raw_line"])?;
    for r in rejected {
        w.write_record([r.line.to_string(), r.reason.to_string(), r.raw.clone()])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes records back out as canonical ingestion CSV. Only measured
/// samples are written so that re-ingesting reproduces the interpolation.
pub fn write_records_csv<'a>(
    records: impl IntoIterator<Item = &'a DailyRecord>,
    writer: impl Write,
) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(DATA_HEADER)?;
    for r in records {
        let date = r.date.to_string();
        for (p, s) in &r.samples {
            if s.provenance == Provenance::Measured {
                w.write_record([
                    &r.station_id,
                    &date,
                    p.code(),
                    &s.value.to_string(),
                    p.canonical_unit().token(),
                ])?;
            }
        }
        if let Some(t) = r.temperature_c {
            w.write_record([
                &r.station_id,
                &date,
                TEMPERATURE_TOKEN,
                &t.to_string(),
                TEMPERATURE_UNIT,
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
