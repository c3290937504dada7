use std::collections::HashSet;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use chrono::NaiveDate;

use airq_api::{router, AppState, NearestResponse};
use airq_core::geo::{read_registry_csv, GeoError};
use airq_core::ingest::{ingest_csv, write_records_csv, write_rejections, IngestError};
use airq_core::trend::{pivot_summary, station_series, write_trend_csv, TrendError};
use airq_core::{BreakpointTable, Concentration, GeoPoint, Pollutant, SceneConfig, StationIndex, Store};

use crate::Failure;

pub const DEFAULT_PIVOT: (i32, u32, u32) = (2020, 3, 25);

pub struct Tables {
    pub table: BreakpointTable,
    pub scene: SceneConfig,
}

impl Tables {
    pub fn load(breakpoints: Option<PathBuf>, scene: Option<PathBuf>) -> Result<Self, Failure> {
        let table = match breakpoints {
            Some(p) => BreakpointTable::load(&p).map_err(|e| Failure::Data(format!("{}: {e}", p.display())))?,
            None => BreakpointTable::cpcb(),
        };
        let scene = match scene {
            Some(p) => SceneConfig::load(&p).map_err(|e| Failure::Data(format!("{}: {e}", p.display())))?,
            None => SceneConfig::default(),
        };
        Ok(Tables { table, scene })
    }
}

fn read_input(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Data(format!("cannot read {}: {e}", path.display())))
}

fn create_output(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::Data(format!("cannot write {}: {e}", path.display())))
}

fn write_failed(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::Data(format!("cannot write {}: {e}", path.display()))
}

pub struct IngestJob {
    pub stations: PathBuf,
    pub data: PathBuf,
    pub store: PathBuf,
    pub max_gap_days: u32,
    pub rejects: Option<PathBuf>,
}

pub fn ingest(job: IngestJob) -> Result<(), Failure> {
    let registry = read_registry_csv(read_input(&job.stations)?.as_bytes())
        .map_err(|e| Failure::Data(format!("{}: {e}", job.stations.display())))?;
    let input = read_input(&job.data)?;

    let mut store = Store::open(&job.store)?;
    let mut known: HashSet<String> = store.stations()?.into_iter().map(|s| s.id).collect();
    known.extend(registry.iter().map(|s| s.id.clone()));

    let outcome = ingest_csv(&input, &known, job.max_gap_days).map_err(|e| match e {
        IngestError::ZeroMaxGap => Failure::Usage(e.to_string()),
        other => Failure::Data(format!("{}: {other}", job.data.display())),
    })?;

    store.upsert_stations(&registry)?;
    let mut days = 0;
    for (id, fill) in &outcome.stations {
        days += store.put_records(id, &fill.records)?;
    }

    for r in &outcome.rejected {
        eprintln!("rejected row {}: {}: {}", r.line, r.reason, r.raw);
    }
    if let Some(path) = &job.rejects {
        let mut out = create_output(path)?;
        write_rejections(&outcome.rejected, &mut out).map_err(|e| write_failed(path, e))?;
        out.flush().map_err(|e| write_failed(path, e))?;
    }
    println!(
        "accepted={} rejected={} interpolated={} stations={} days={}",
        outcome.accepted,
        outcome.rejected.len(),
        outcome.interpolated,
        registry.len(),
        days
    );
    Ok(())
}

pub fn aqi(tables: &Tables, given: &[(Pollutant, f64)], json: bool) -> Result<(), Failure> {
    if given.is_empty() {
        return Err(Failure::Usage("give at least one concentration, e.g. --pm25 45".into()));
    }
    let concentrations = given
        .iter()
        .map(|&(p, v)| Concentration::canonical(p, v).map_err(|e| Failure::Data(format!("--{}: {e}", flag(p)))))
        .collect::<Result<Vec<_>, _>>()?;
    let report = tables
        .table
        .report(&concentrations)
        .map_err(|e| Failure::Data(e.to_string()))?;

    if json {
        println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    } else {
        println!(
            "AQI {} {} (dominant {})",
            report.overall, report.category, report.dominant
        );
        for s in &report.sub_indices {
            println!("  {:<6}{:>4}  {}", s.pollutant.code(), s.value, s.category);
        }
    }
    if !report.valid {
        eprintln!(
            "warning: not a valid AQI ({})",
            report.reason.as_deref().unwrap_or("validity rule not met")
        );
    }
    Ok(())
}

fn flag(p: Pollutant) -> String {
    p.code().to_ascii_lowercase().replace('.', "")
}

pub struct TrendJob {
    pub store: PathBuf,
    pub station: String,
    pub from: NaiveDate,
    pub to: NaiveDate,
    pub pivot: Option<NaiveDate>,
    pub out: PathBuf,
}

pub fn default_pivot() -> NaiveDate {
    let (y, m, d) = DEFAULT_PIVOT;
    NaiveDate::from_ymd_opt(y, m, d).expect("valid date")
}

pub fn trend(tables: &Tables, job: TrendJob) -> Result<(), Failure> {
    let store = Store::open_read_only(&job.store)?;
    let points = station_series(&store, &job.station, job.from, job.to, &tables.table).map_err(|e| match e {
        TrendError::Store(s) => s.into(),
        TrendError::BadRange { .. } => Failure::Usage(e.to_string()),
    })?;
    let pivot = job
        .pivot
        .or_else(|| Some(default_pivot()).filter(|p| (job.from..=job.to).contains(p)));
    let summary = pivot.and_then(|p| pivot_summary(&points, p));

    let mut out = create_output(&job.out)?;
    write_trend_csv(&points, summary.as_ref(), &mut out).map_err(|e| write_failed(&job.out, e))?;
    out.flush().map_err(|e| write_failed(&job.out, e))?;

    println!("wrote {} days to {}", points.len(), job.out.display());
    if let Some(s) = summary {
        let pct = s.percent_change.map_or("NA".into(), |v| format!("{v:+.2}%"));
        let slope = s.max_slope_7d.map_or("NA".into(), |v| format!("{v:.2}/day"));
        println!(
            "pivot {}: mean {:.2} before ({} days), {:.2} after ({} days), change {pct}, max 7-day slope {slope}",
            s.pivot, s.mean_before, s.days_before, s.mean_after, s.days_after
        );
    } else if let Some(p) = pivot {
        println!("no summary: pivot {p} needs data on both sides");
    }
    Ok(())
}

pub fn serve(tables: Tables, store: PathBuf, bind: &str, cors_origin: Option<String>) -> Result<(), Failure> {
    Store::open_read_only(&store)?;
    let state = AppState {
        table: Arc::new(tables.table),
        scene: Arc::new(tables.scene),
        ..AppState::new(store)
    };
    let app = router(state, cors_origin.as_deref()).map_err(|e| Failure::Usage(e.message))?;
    let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure::Storage(e.to_string()))?;
    runtime.block_on(async {
        let listener = airq_api::bind(bind)
            .await
            .map_err(|e| Failure::Usage(format!("cannot bind {bind}: {e}")))?;
        let addr = listener.local_addr().map_err(|e| Failure::Usage(e.to_string()))?;
        println!("listening on http://{addr}");
        let _ = std::io::stdout().flush();
        airq_api::serve(listener, app)
            .await
            .map_err(|e| Failure::Storage(format!("server stopped: {e}")))
    })
}

pub fn nearest(store: &Path, lat: f64, lon: f64, json: bool) -> Result<(), Failure> {
    let point = GeoPoint::new(lat, lon).map_err(|e| Failure::Usage(e.to_string()))?;
    let store = Store::open_read_only(store)?;
    let index = StationIndex::new(store.stations()?).map_err(|e| match e {
        GeoError::EmptyRegistry => Failure::Data("the store has no stations; run `airq ingest` first".into()),
        other => Failure::Data(other.to_string()),
    })?;
    let hit = index.nearest(point).map_err(|e| Failure::Data(e.to_string()))?;
    let response = NearestResponse {
        station: hit.station.clone(),
        distance_km: (hit.distance_km * 10.0).round() / 10.0,
    };
    if json {
        println!(
            "{}",
            serde_json::to_string_pretty(&response).expect("response serializes")
        );
    } else {
        let s = &response.station;
        println!(
            "{}\t{}\t{}, {}\t{:.1} km",
            s.id, s.name, s.city, s.state, response.distance_km
        );
    }
    Ok(())
}

pub fn export(store: &Path, station: Option<&str>, out: &Path) -> Result<(), Failure> {
    let store = Store::open_read_only(store)?;
    let ids: Vec<String> = match station {
        Some(id) => vec![id.to_string()],
        None => store.stations()?.into_iter().map(|s| s.id).collect(),
    };
    let mut records = Vec::new();
    for id in &ids {
        records.extend(store.all_records(id)?);
    }
    let mut w = create_output(out)?;
    write_records_csv(&records, &mut w).map_err(|e| write_failed(out, e))?;
    w.flush().map_err(|e| write_failed(out, e))?;
    println!(
        "exported {} days for {} stations to {}",
        records.len(),
        ids.len(),
        out.display()
    );
    Ok(())
}
