use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::Serialize;

use airq_core::ingest::Provenance;
use airq_core::trend::{Metric, TrendPoint};
use airq_core::{AqiReport, BreakpointTable, DailyRecord, Pollutant, StationMeta};

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct NearestResponse {
    pub station: StationMeta,
    pub distance_km: f64,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SampleView {
    pub pollutant: Pollutant,
    pub value: f64,
    pub unit: &'static str,
    pub provenance: Provenance,
}

/// A stored record with its samples flattened and units spelled out.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RecordView {
    pub station_id: String,
    pub date: NaiveDate,
    pub samples: Vec<SampleView>,
    pub temperature_c: Option<f64>,
}

impl From<&DailyRecord> for RecordView {
    fn from(r: &DailyRecord) -> Self {
        RecordView {
            station_id: r.station_id.clone(),
            date: r.date,
            samples: r
                .samples
                .iter()
                .map(|(p, s)| SampleView {
                    pollutant: *p,
                    value: s.value,
                    unit: p.canonical_unit().symbol(),
                    provenance: s.provenance,
                })
                .collect(),
            temperature_c: r.temperature_c,
        }
    }
}

/// `aqiReport` is null when the record has no AQI-bearing sample.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RecordResponse {
    pub record: RecordView,
    pub aqi_report: Option<AqiReport>,
}

impl RecordResponse {
    pub fn new(record: &DailyRecord, table: &BreakpointTable) -> Self {
        RecordResponse {
            record: record.into(),
            aqi_report: record.aqi_report(table).ok(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct LatestResponse {
    pub record: RecordView,
    pub aqi_report: Option<AqiReport>,
    pub temperature_c: Option<f64>,
}

impl LatestResponse {
    pub fn new(record: &DailyRecord, table: &BreakpointTable) -> Self {
        LatestResponse {
            record: record.into(),
            aqi_report: record.aqi_report(table).ok(),
            temperature_c: record.temperature_c,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TrendRow {
    pub date: NaiveDate,
    pub overall_aqi: u16,
    pub sub_indices: BTreeMap<Pollutant, u16>,
    /// The requested metric; null when that pollutant was not sampled.
    pub value: Option<u16>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TrendResponse {
    pub station_id: String,
    pub metric: Metric,
    pub from: NaiveDate,
    pub to: NaiveDate,
    pub points: Vec<TrendRow>,
}

impl TrendResponse {
    pub fn new(station_id: String, metric: Metric, from: NaiveDate, to: NaiveDate, points: &[TrendPoint]) -> Self {
        TrendResponse {
            station_id,
            metric,
            from,
            to,
            points: points
                .iter()
                .map(|p| TrendRow {
                    date: p.date,
                    overall_aqi: p.overall_aqi,
                    sub_indices: p.sub_indices.clone(),
                    value: p.metric(metric),
                })
                .collect(),
        }
    }
}
