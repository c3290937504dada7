//! Optional TOML settings file. A flag on the command line always wins over
//! the file, and the file wins over built-in defaults.
//!
//! ```toml
//! store = "airq.sqlite"
//! breakpoints = "tables/naqi.toml"
//!
//! [ingest]
//! stations = "stations.csv"
//! data = "daily.csv"
//! max_gap_days = 3
//!
//! [serve]
//! bind = "127.0.0.1:8080"
//! cors_origin = "http://localhost:5173"
//!
//! [trend]
//! pivot = "2020-03-25"
//! ```
//!
//! Relative paths are taken relative to the file's directory.

use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::Deserialize;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub store: Option<PathBuf>,
    pub breakpoints: Option<PathBuf>,
    pub scene: Option<PathBuf>,
    #[serde(default)]
    pub ingest: IngestSection,
    #[serde(default)]
    pub aqi: AqiSection,
    #[serde(default)]
    pub trend: TrendSection,
    #[serde(default)]
    pub serve: ServeSection,
    #[serde(default)]
    pub nearest: NearestSection,
    #[serde(default)]
    pub export: ExportSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IngestSection {
    pub store: Option<PathBuf>,
    pub stations: Option<PathBuf>,
    pub data: Option<PathBuf>,
    pub max_gap_days: Option<u32>,
    pub rejects: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AqiSection {
    pub json: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrendSection {
    pub store: Option<PathBuf>,
    pub station: Option<String>,
    pub from: Option<NaiveDate>,
    pub to: Option<NaiveDate>,
    pub pivot: Option<NaiveDate>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServeSection {
    pub store: Option<PathBuf>,
    pub bind: Option<String>,
    pub cors_origin: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NearestSection {
    pub store: Option<PathBuf>,
    pub lat: Option<f64>,
    pub lon: Option<f64>,
    pub json: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExportSection {
    pub store: Option<PathBuf>,
    pub station: Option<String>,
    pub out: Option<PathBuf>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        let mut cfg: Config = toml::from_str(&text).map_err(|e| format!("config {}: {e}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.rebase(base);
        Ok(cfg)
    }

    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(v) = p {
                if v.is_relative() {
                    *v = base.join(&*v);
                }
            }
        };
        for p in [
            &mut self.store,
            &mut self.breakpoints,
            &mut self.scene,
            &mut self.ingest.store,
            &mut self.ingest.stations,
            &mut self.ingest.data,
            &mut self.ingest.rejects,
            &mut self.trend.store,
            &mut self.trend.out,
            &mut self.serve.store,
            &mut self.nearest.store,
            &mut self.export.store,
            &mut self.export.out,
        ] {
            fix(p);
        }
    }

    /// Section-level store, then the top-level one.
    pub fn store_for(&self, section: &Option<PathBuf>) -> Option<PathBuf> {
        section.clone().or_else(|| self.store.clone())
    }
}
