//! Daily AQI series and before/after comparisons around a pivot date.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::aqi::BreakpointTable;
use crate::ingest::DailyRecord;
use crate::pollutant::Pollutant;
use crate::store::{Store, StoreError};

pub const TREND_CSV_VERSION: &str = "# airq-trend v1";
pub const SLOPE_WINDOW: usize = 7;

#[derive(Debug, Error)]
pub enum TrendError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("range start {from} is after its end {to}")]
    BadRange { from: NaiveDate, to: NaiveDate },
}

/// What a trend series reports per day.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Aqi,
    SubIndex(Pollutant),
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("aqi") {
            return Ok(Metric::Aqi);
        }
        match s.parse::<Pollutant>() {
            Ok(p) if p.is_aqi_bearing() => Ok(Metric::SubIndex(p)),
            _ => Err(format!("unknown metric `{s}`")),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Metric::Aqi => f.write_str("aqi"),
            Metric::SubIndex(p) => f.write_str(p.code()),
        }
    }
}

impl Serialize for Metric {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TrendPoint {
    pub date: NaiveDate,
    pub overall_aqi: u16,
    pub sub_indices: BTreeMap<Pollutant, u16>,
}

impl TrendPoint {
    pub fn metric(&self, metric: Metric) -> Option<u16> {
        match metric {
            Metric::Aqi => Some(self.overall_aqi),
            Metric::SubIndex(p) => self.sub_indices.get(&p).copied(),
        }
    }
}

/// One point per record that meets the availability rule.
pub fn series_from_records(records: &[DailyRecord], table: &BreakpointTable) -> Vec<TrendPoint> {
    records
        .iter()
        .filter(|r| r.is_available())
        .filter_map(|r| {
            let report = r.aqi_report(table).ok()?;
            Some(TrendPoint {
                date: r.date,
                overall_aqi: report.overall,
                sub_indices: report.sub_indices.iter().map(|s| (s.pollutant, s.value)).collect(),
            })
        })
        .collect()
}

/// Trend over the availability calendar within `from..=to`. Days without
/// data are omitted, not zero-filled.
pub fn station_series(
    store: &Store,
    station_id: &str,
    from: NaiveDate,
    to: NaiveDate,
    table: &BreakpointTable,
) -> Result<Vec<TrendPoint>, TrendError> {
    if from > to {
        return Err(TrendError::BadRange { from, to });
    }
    let records = store.records_between(station_id, from, to)?;
    Ok(series_from_records(&records, table))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PivotSummary {
    pub pivot: NaiveDate,
    pub days_before: usize,
    pub days_after: usize,
    pub mean_before: f64,
    pub mean_after: f64,
    /// `None` when the pre-pivot mean is zero.
    pub percent_change: Option<f64>,
    /// Largest least-squares slope, in AQI per day, over any seven
    /// consecutive available days on or after the pivot.
    pub max_slope_7d: Option<f64>,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Ordinary least-squares slope of `y` against `x`.
pub fn ols_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let mx = mean(&points.iter().map(|p| p.0).collect::<Vec<_>>());
    let my = mean(&points.iter().map(|p| p.1).collect::<Vec<_>>());
    let sxx: f64 = points.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = points.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    Some(sxy / sxx)
}

/// Largest OLS slope over every run of `window` consecutive points, with
/// `x` in days.
pub fn max_window_slope(points: &[(NaiveDate, f64)], window: usize) -> Option<f64> {
    let origin = points.first()?.0;
    let xy: Vec<(f64, f64)> = points
        .iter()
        .map(|(d, v)| ((*d - origin).num_days() as f64, *v))
        .collect();
    xy.windows(window).filter_map(ols_slope).reduce(f64::max)
}

/// Means on either side of `pivot` (the pivot day counts as after), their
/// percent change, and the steepest post-pivot weekly rise. `None` unless
/// both sides have data.
pub fn pivot_summary(points: &[TrendPoint], pivot: NaiveDate) -> Option<PivotSummary> {
    let (before, after): (Vec<_>, Vec<_>) = points.iter().partition(|p| p.date < pivot);
    if before.is_empty() || after.is_empty() {
        return None;
    }
    let b: Vec<f64> = before.iter().map(|p| f64::from(p.overall_aqi)).collect();
    let a: Vec<(NaiveDate, f64)> = after.iter().map(|p| (p.date, f64::from(p.overall_aqi))).collect();
    let mean_before = mean(&b);
    let mean_after = mean(&a.iter().map(|p| p.1).collect::<Vec<_>>());
    Some(PivotSummary {
        pivot,
        days_before: b.len(),
        days_after: a.len(),
        mean_before,
        mean_after,
        percent_change: (mean_before != 0.0).then(|| (mean_after - mean_before) / mean_before * 100.0),
        max_slope_7d: max_window_slope(&a, SLOPE_WINDOW),
    })
}

pub const TREND_COLUMNS: [Pollutant; 7] = Pollutant::AQI_BEARING;

/// Writes the trend CSV: a version comment, header
/// `date,aqi,PM10,PM2.5,NO2,CO,SO2,O3,NH3`, one row per point with empty
/// cells for absent pollutants, then an optional `#`-prefixed summary block.
pub fn write_trend_csv(
    points: &[TrendPoint],
    summary: Option<&PivotSummary>,
    mut out: impl Write,
) -> std::io::Result<()> {
    writeln!(out, "{TREND_CSV_VERSION}")?;
    let mut header = vec!["date".to_string(), "aqi".to_string()];
    header.extend(TREND_COLUMNS.iter().map(|p| p.code().to_string()));
    writeln!(out, "{}", header.join(","))?;
    for p in points {
        let mut row = vec![p.date.to_string(), p.overall_aqi.to_string()];
        row.extend(
            TREND_COLUMNS
                .iter()
                .map(|c| p.sub_indices.get(c).map(u16::to_string).unwrap_or_default()),
        );
        writeln!(out, "{}", row.join(","))?;
    }
    if let Some(s) = summary {
        let opt = |v: Option<f64>| v.map(|v| format!("{v:.4}")).unwrap_or_else(|| "NA".into());
        writeln!(out, "# summary")?;
        writeln!(out, "# pivot,{}", s.pivot)?;
        writeln!(out, "# days_before,{}", s.days_before)?;
        writeln!(out, "# days_after,{}", s.days_after)?;
        writeln!(out, "# mean_before,{:.4}", s.mean_before)?;
        writeln!(out, "# mean_after,{:.4}", s.mean_after)?;
        writeln!(out, "# percent_change,{}", opt(s.percent_change))?;
        writeln!(out, "# max_slope_7d,{}", opt(s.max_slope_7d))?;
    }
    Ok(())
}
