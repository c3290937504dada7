//! `airq`: ingest station data, compute AQI, serve the API, export trends.
//!
//! Exit codes: 0 success, 1 usage, 2 data, 3 storage.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};

use config::Config;

#[derive(Debug, Parser)]
#[command(name = "airq", version, about = "Air quality ingestion, AQI and trend tooling")]
struct Cli {
    /// TOML settings file; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Breakpoint table replacing the bundled CPCB one.
    #[arg(long, global = true)]
    breakpoints: Option<PathBuf>,
    /// Scene configuration replacing the bundled one.
    #[arg(long, global = true)]
    scene: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Load a station registry and daily data into the store.
    Ingest(IngestArgs),
    /// Compute an AQI report from concentrations given on the command line.
    Aqi(AqiArgs),
    /// Export a station's daily AQI series, with a before/after summary.
    Trend(TrendArgs),
    /// Serve the read-only HTTP API.
    Serve(ServeArgs),
    /// Find the station closest to a coordinate.
    Nearest(NearestArgs),
    /// Write stored measurements back out as ingestion CSV.
    Export(ExportArgs),
}

#[derive(Debug, Args)]
struct IngestArgs {
    /// Registry CSV: id,name,city,state,lat,lon,live
    #[arg(long)]
    stations: Option<PathBuf>,
    /// Data CSV: station_id,date,pollutant,value,unit
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    store: Option<PathBuf>,
    /// Longest run of missing days that is filled by interpolation.
    #[arg(long)]
    max_gap_days: Option<u32>,
    /// Also write rejected rows to this CSV.
    #[arg(long)]
    rejects: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AqiArgs {
    /// PM2.5 in µg/m³
    #[arg(long, allow_negative_numbers = true)]
    pm25: Option<f64>,
    /// PM10 in µg/m³
    #[arg(long, allow_negative_numbers = true)]
    pm10: Option<f64>,
    /// NO2 in µg/m³
    #[arg(long, allow_negative_numbers = true)]
    no2: Option<f64>,
    /// SO2 in µg/m³
    #[arg(long, allow_negative_numbers = true)]
    so2: Option<f64>,
    /// CO in mg/m³
    #[arg(long, allow_negative_numbers = true)]
    co: Option<f64>,
    /// O3 in µg/m³
    #[arg(long, allow_negative_numbers = true)]
    o3: Option<f64>,
    /// NH3 in µg/m³
    #[arg(long, allow_negative_numbers = true)]
    nh3: Option<f64>,
    /// Print the report as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct TrendArgs {
    #[arg(long)]
    station: Option<String>,
    #[arg(long)]
    from: Option<NaiveDate>,
    #[arg(long)]
    to: Option<NaiveDate>,
    /// Split date for the summary; defaults to 2020-03-25 when in range.
    #[arg(long)]
    pivot: Option<NaiveDate>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    store: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ServeArgs {
    #[arg(long)]
    store: Option<PathBuf>,
    /// Address to listen on, e.g. 127.0.0.1:8080. Port 0 picks a free port.
    #[arg(long)]
    bind: Option<String>,
    /// Origin allowed to call the API from a browser.
    #[arg(long)]
    cors_origin: Option<String>,
}

#[derive(Debug, Args)]
struct NearestArgs {
    #[arg(long, allow_negative_numbers = true)]
    lat: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    lon: Option<f64>,
    #[arg(long)]
    store: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct ExportArgs {
    #[arg(long)]
    store: Option<PathBuf>,
    /// Only this station; all stations by default.
    #[arg(long)]
    station: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Data(String),
    Storage(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
            Failure::Storage(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Data(m) | Failure::Storage(m) => m,
        }
    }
}

impl From<airq_core::StoreError> for Failure {
    fn from(e: airq_core::StoreError) -> Self {
        use airq_core::StoreError::*;
        match e {
            UnknownStation(_) | NotFound { .. } | DuplicateId(_) | MismatchedStation { .. } => {
                Failure::Data(e.to_string())
            }
            _ => Failure::Storage(e.to_string()),
        }
    }
}

fn required<T>(value: Option<T>, flag: &str) -> Result<T, Failure> {
    value.ok_or_else(|| Failure::Usage(format!("missing --{flag} (flag or config file)")))
}

fn run(cli: Cli) -> Result<(), Failure> {
    let cfg = match &cli.config {
        Some(p) => Config::load(p).map_err(Failure::Usage)?,
        None => Config::default(),
    };
    let tables = commands::Tables::load(
        cli.breakpoints.or_else(|| cfg.breakpoints.clone()),
        cli.scene.or_else(|| cfg.scene.clone()),
    )?;

    match cli.command {
        Command::Ingest(a) => commands::ingest(commands::IngestJob {
            stations: required(a.stations.or(cfg.ingest.stations.clone()), "stations")?,
            data: required(a.data.or(cfg.ingest.data.clone()), "data")?,
            store: required(a.store.or_else(|| cfg.store_for(&cfg.ingest.store)), "store")?,
            max_gap_days: a
                .max_gap_days
                .or(cfg.ingest.max_gap_days)
                .unwrap_or(airq_core::ingest::DEFAULT_MAX_GAP_DAYS),
            rejects: a.rejects.or(cfg.ingest.rejects.clone()),
        }),
        Command::Aqi(a) => {
            let values = [
                (airq_core::Pollutant::Pm25, a.pm25),
                (airq_core::Pollutant::Pm10, a.pm10),
                (airq_core::Pollutant::No2, a.no2),
                (airq_core::Pollutant::So2, a.so2),
                (airq_core::Pollutant::Co, a.co),
                (airq_core::Pollutant::O3, a.o3),
                (airq_core::Pollutant::Nh3, a.nh3),
            ];
            let given: Vec<_> = values.into_iter().filter_map(|(p, v)| v.map(|v| (p, v))).collect();
            commands::aqi(&tables, &given, a.json || cfg.aqi.json.unwrap_or(false))
        }
        Command::Trend(a) => commands::trend(
            &tables,
            commands::TrendJob {
                store: required(a.store.or_else(|| cfg.store_for(&cfg.trend.store)), "store")?,
                station: required(a.station.or(cfg.trend.station.clone()), "station")?,
                from: required(a.from.or(cfg.trend.from), "from")?,
                to: required(a.to.or(cfg.trend.to), "to")?,
                pivot: a.pivot.or(cfg.trend.pivot),
                out: required(a.out.or(cfg.trend.out.clone()), "out")?,
            },
        ),
        Command::Serve(a) => commands::serve(
            tables,
            required(a.store.or_else(|| cfg.store_for(&cfg.serve.store)), "store")?,
            &a.bind
                .or(cfg.serve.bind.clone())
                .unwrap_or_else(|| "127.0.0.1:8080".into()),
            a.cors_origin.or(cfg.serve.cors_origin.clone()),
        ),
        Command::Nearest(a) => commands::nearest(
            &required(a.store.or_else(|| cfg.store_for(&cfg.nearest.store)), "store")?,
            required(a.lat.or(cfg.nearest.lat), "lat")?,
            required(a.lon.or(cfg.nearest.lon), "lon")?,
            a.json || cfg.nearest.json.unwrap_or(false),
        ),
        Command::Export(a) => commands::export(
            &required(a.store.or_else(|| cfg.store_for(&cfg.export.store)), "store")?,
            a.station.or(cfg.export.station.clone()).as_deref(),
            &required(a.out.or(cfg.export.out.clone()), "out")?,
        ),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
