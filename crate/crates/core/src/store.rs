//! File-backed SQLite store for stations, daily records and calendars.
//!
//! Writes go through immediate transactions, so every batch is atomic and
//! SQLite's file lock admits one writer at a time. Readers opened with
//! [`Store::open_read_only`] see a consistent snapshot per statement and can
//! never mutate the file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use chrono::NaiveDate;
use rusqlite::{params, Connection, OpenFlags, OptionalExtension, TransactionBehavior};
use thiserror::Error;

use crate::geo::{GeoPoint, StationMeta};
use crate::ingest::{AvailabilityCalendar, DailyRecord, Provenance, Sample};
use crate::pollutant::Pollutant;

pub const STORE_FORMAT: &str = "airq-store/1";

const SCHEMA: &str = "
CREATE TABLE IF NOT EXISTS meta (
    key   TEXT PRIMARY KEY,
    value TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS stations (
    id    TEXT PRIMARY KEY,
    name  TEXT NOT NULL,
    city  TEXT NOT NULL,
    state TEXT NOT NULL,
    lat   REAL NOT NULL,
    lon   REAL NOT NULL,
    live  INTEGER NOT NULL
);
CREATE TABLE IF NOT EXISTS records (
    station_id    TEXT NOT NULL REFERENCES stations(id),
    date          TEXT NOT NULL,
    temperature_c REAL,
    PRIMARY KEY (station_id, date)
);
CREATE TABLE IF NOT EXISTS samples (
    station_id TEXT NOT NULL,
    date       TEXT NOT NULL,
    pollutant  TEXT NOT NULL,
    value      REAL NOT NULL,
    provenance TEXT NOT NULL,
    PRIMARY KEY (station_id, date, pollutant),
    FOREIGN KEY (station_id, date) REFERENCES records(station_id, date) ON DELETE CASCADE
);
";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("storage failure: {0}")]
    Sqlite(#[from] rusqlite::Error),
    #[error("no store at {0}")]
    Missing(PathBuf),
    #[error("unsupported store format `{0}`")]
    Format(String),
    #[error("duplicate station id `{0}` in batch")]
    DuplicateId(String),
    #[error("unknown station `{0}`")]
    UnknownStation(String),
    #[error("record for `{got}` in a batch for `{expected}`")]
    MismatchedStation { expected: String, got: String },
    #[error("no record for `{station}`{}", .date.map(|d| format!(" on {d}")).unwrap_or_default())]
    NotFound { station: String, date: Option<NaiveDate> },
    #[error("corrupt row: {0}")]
    Corrupt(String),
}

pub type Result<T> = std::result::Result<T, StoreError>;

pub struct Store {
    conn: Connection,
    path: PathBuf,
}

impl std::fmt::Debug for Store {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Store").field("path", &self.path).finish()
    }
}

fn provenance_token(p: Provenance) -> &'static str {
    match p {
        Provenance::Measured => "measured",
        Provenance::Interpolated => "interpolated",
    }
}

fn parse_provenance(s: &str) -> Result<Provenance> {
    match s {
        "measured" => Ok(Provenance::Measured),
        "interpolated" => Ok(Provenance::Interpolated),
        other => Err(StoreError::Corrupt(format!("provenance `{other}`"))),
    }
}

fn parse_date(s: &str) -> Result<NaiveDate> {
    s.parse().map_err(|_| StoreError::Corrupt(format!("date `{s}`")))
}

impl Store {
    /// Opens the store for writing, creating it if needed.
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let conn = Connection::open(&path)?;
        conn.busy_timeout(Duration::from_secs(5))?;
        conn.pragma_update(None, "foreign_keys", true)?;
        conn.execute_batch(SCHEMA)?;
        let tag: Option<String> = conn
            .query_row("SELECT value FROM meta WHERE key = 'format'", [], |r| r.get(0))
            .optional()?;
        match tag {
            None => {
                conn.execute("INSERT INTO meta (key, value) VALUES ('format', ?1)", [STORE_FORMAT])?;
            }
            Some(t) if t != STORE_FORMAT => return Err(StoreError::Format(t)),
            Some(_) => {}
        }
        Ok(Store { conn, path })
    }

    /// Opens an existing store for writing; fails if the file is absent.
    pub fn open_existing(path: impl AsRef<Path>) -> Result<Self> {
        if !path.as_ref().is_file() {
            return Err(StoreError::Missing(path.as_ref().to_path_buf()));
        }
        Self::open(path)
    }

    /// Opens an existing store without write access.
    pub fn open_read_only(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        if !path.is_file() {
            return Err(StoreError::Missing(path));
        }
        let conn = Connection::open_with_flags(
            &path,
            OpenFlags::SQLITE_OPEN_READ_ONLY | OpenFlags::SQLITE_OPEN_NO_MUTEX,
        )?;
        conn.busy_timeout(Duration::from_secs(5))?;
        let tag: Option<String> = conn
            .query_row("SELECT value FROM meta WHERE key = 'format'", [], |r| r.get(0))
            .optional()
            .map_err(|_| StoreError::Format("<none>".into()))?;
        match tag {
            Some(t) if t == STORE_FORMAT => Ok(Store { conn, path }),
            Some(t) => Err(StoreError::Format(t)),
            None => Err(StoreError::Format("<none>".into())),
        }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Inserts or updates every station in one transaction. Stations not in
    /// the list are left alone.
    pub fn upsert_stations(&mut self, stations: &[StationMeta]) -> Result<usize> {
        let mut ids: Vec<&str> = stations.iter().map(|s| s.id.as_str()).collect();
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(StoreError::DuplicateId(w[0].to_string()));
        }
        let tx = self.conn.transaction_with_behavior(TransactionBehavior::Immediate)?;
        {
            let mut stmt = tx.prepare(
                "INSERT INTO stations (id, name, city, state, lat, lon, live)
                 VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7)
                 ON CONFLICT(id) DO UPDATE SET
                   name = excluded.name, city = excluded.city, state = excluded.state,
                   lat = excluded.lat, lon = excluded.lon, live = excluded.live",
            )?;
            for s in stations {
                stmt.execute(params![
                    s.id,
                    s.name,
                    s.city,
                    s.state,
                    s.location.lat(),
                    s.location.lon(),
                    s.live
                ])?;
            }
        }
        tx.commit()?;
        Ok(stations.len())
    }

    pub fn stations(&self) -> Result<Vec<StationMeta>> {
        let mut stmt = self
            .conn
            .prepare("SELECT id, name, city, state, lat, lon, live FROM stations ORDER BY id")?;
        let rows = stmt.query_map([], station_from_row)?;
        rows.map(|r| r?.map_err(StoreError::Corrupt)).collect()
    }

    pub fn station(&self, id: &str) -> Result<Option<StationMeta>> {
        let row = self
            .conn
            .query_row(
                "SELECT id, name, city, state, lat, lon, live FROM stations WHERE id = ?1",
                [id],
                station_from_row,
            )
            .optional()?;
        row.transpose().map_err(StoreError::Corrupt)
    }

    fn require_station(&self, id: &str) -> Result<()> {
        let n: i64 = self
            .conn
            .query_row("SELECT COUNT(*) FROM stations WHERE id = ?1", [id], |r| r.get(0))?;
        if n == 0 {
            return Err(StoreError::UnknownStation(id.to_string()));
        }
        Ok(())
    }

    /// Stores a batch of records for one station atomically. A record for an
    /// existing date replaces it entirely.
    pub fn put_records(&mut self, station_id: &str, records: &[DailyRecord]) -> Result<usize> {
        self.require_station(station_id)?;
        let tx = self.conn.transaction_with_behavior(TransactionBehavior::Immediate)?;
        {
            let mut del = tx.prepare("DELETE FROM records WHERE station_id = ?1 AND date = ?2")?;
            let mut ins_rec =
                tx.prepare("INSERT INTO records (station_id, date, temperature_c) VALUES (?1, ?2, ?3)")?;
            let mut ins_sample = tx.prepare(
                "INSERT INTO samples (station_id, date, pollutant, value, provenance) VALUES (?1, ?2, ?3, ?4, ?5)",
            )?;
            for r in records {
                if r.station_id != station_id {
                    // dropping `tx` rolls back anything already written
                    return Err(StoreError::MismatchedStation {
                        expected: station_id.to_string(),
                        got: r.station_id.clone(),
                    });
                }
                let date = r.date.to_string();
                del.execute(params![station_id, date])?;
                ins_rec.execute(params![station_id, date, r.temperature_c])?;
                for (p, s) in &r.samples {
                    ins_sample.execute(params![
                        station_id,
                        date,
                        p.code(),
                        s.value,
                        provenance_token(s.provenance)
                    ])?;
                }
            }
        }
        tx.commit()?;
        Ok(records.len())
    }

    /// Records for `station_id` with `from <= date <= to`, ascending.
    pub fn records_between(&self, station_id: &str, from: NaiveDate, to: NaiveDate) -> Result<Vec<DailyRecord>> {
        self.records_in(station_id, &from.to_string(), &to.to_string())
    }

    pub fn all_records(&self, station_id: &str) -> Result<Vec<DailyRecord>> {
        self.records_in(station_id, "0000-01-01", "9999-12-31")
    }

    // bounds compare as ISO-8601 strings
    fn records_in(&self, station_id: &str, from: &str, to: &str) -> Result<Vec<DailyRecord>> {
        self.require_station(station_id)?;
        let mut out: BTreeMap<String, DailyRecord> = BTreeMap::new();
        let mut stmt = self.conn.prepare(
            "SELECT date, temperature_c FROM records
             WHERE station_id = ?1 AND date BETWEEN ?2 AND ?3",
        )?;
        let rows = stmt.query_map(params![station_id, from, to], |r| {
            Ok((r.get::<_, String>(0)?, r.get::<_, Option<f64>>(1)?))
        })?;
        for row in rows {
            let (date, temp) = row?;
            let mut rec = DailyRecord::new(station_id, parse_date(&date)?);
            rec.temperature_c = temp;
            out.insert(date, rec);
        }
        let mut stmt = self.conn.prepare(
            "SELECT date, pollutant, value, provenance FROM samples
             WHERE station_id = ?1 AND date BETWEEN ?2 AND ?3",
        )?;
        let rows = stmt.query_map(params![station_id, from, to], |r| {
            Ok((
                r.get::<_, String>(0)?,
                r.get::<_, String>(1)?,
                r.get::<_, f64>(2)?,
                r.get::<_, String>(3)?,
            ))
        })?;
        for row in rows {
            let (date, pollutant, value, provenance) = row?;
            let p: Pollutant = pollutant
                .parse()
                .map_err(|_| StoreError::Corrupt(format!("pollutant `{pollutant}`")))?;
            let rec = out
                .get_mut(&date)
                .ok_or_else(|| StoreError::Corrupt(format!("orphan sample on {date}")))?;
            rec.samples.insert(
                p,
                Sample {
                    value,
                    provenance: parse_provenance(&provenance)?,
                },
            );
        }
        Ok(out.into_values().collect())
    }

    pub fn get_record(&self, station_id: &str, date: NaiveDate) -> Result<DailyRecord> {
        self.records_between(station_id, date, date)?
            .pop()
            .ok_or_else(|| StoreError::NotFound {
                station: station_id.to_string(),
                date: Some(date),
            })
    }

    /// Dates whose stored record meets the AQI validity rule.
    pub fn get_dates(&self, station_id: &str) -> Result<AvailabilityCalendar> {
        self.require_station(station_id)?;
        let mut stmt = self
            .conn
            .prepare("SELECT date, pollutant FROM samples WHERE station_id = ?1 ORDER BY date")?;
        let rows = stmt.query_map([station_id], |r| Ok((r.get::<_, String>(0)?, r.get::<_, String>(1)?)))?;
        let mut per_date: BTreeMap<String, Vec<Pollutant>> = BTreeMap::new();
        for row in rows {
            let (date, pollutant) = row?;
            if let Ok(p) = pollutant.parse() {
                per_date.entry(date).or_default().push(p);
            }
        }
        let dates = per_date
            .into_iter()
            .filter(|(_, ps)| crate::aqi::meets_validity_rule(ps.iter().copied()))
            .map(|(d, _)| parse_date(&d))
            .collect::<Result<Vec<_>>>()?;
        Ok(AvailabilityCalendar {
            station_id: station_id.to_string(),
            dates,
        })
    }

    /// The record on the most recent date in the availability calendar.
    pub fn get_latest(&self, station_id: &str) -> Result<DailyRecord> {
        let cal = self.get_dates(station_id)?;
        match cal.dates.last() {
            Some(d) => self.get_record(station_id, *d),
            None => Err(StoreError::NotFound {
                station: station_id.to_string(),
                date: None,
            }),
        }
    }
}

type StationRow = std::result::Result<StationMeta, String>;

fn station_from_row(r: &rusqlite::Row<'_>) -> rusqlite::Result<StationRow> {
    let (lat, lon): (f64, f64) = (r.get(4)?, r.get(5)?);
    let (id, name, city, state, live): (String, String, String, String, bool) =
        (r.get(0)?, r.get(1)?, r.get(2)?, r.get(3)?, r.get(6)?);
    Ok(GeoPoint::new(lat, lon)
        .map_err(|e| format!("station {id}: {e}"))
        .map(|location| StationMeta {
            id,
            name,
            city,
            state,
            location,
            live,
        }))
}
