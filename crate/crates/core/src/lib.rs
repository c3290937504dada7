//! Core of the air-quality platform: NAQI computation, station lookup,
//! ingestion, storage, particle scenes and trend analysis.

pub mod aqi;
pub mod geo;
pub mod ingest;
pub mod pollutant;
pub mod scene;
pub mod store;
pub mod trend;

pub use aqi::{AqiError, AqiReport, BreakpointTable, CategoryBand, SubIndex};
pub use geo::{haversine_km, GeoPoint, StationIndex, StationMeta};
pub use ingest::{AvailabilityCalendar, DailyRecord, Provenance, Sample};
pub use pollutant::{Concentration, Pollutant, Unit};
pub use scene::{generate_scene, PollutantInfo, PollutantRegistry, SceneConfig, SceneSpec};
pub use store::{Store, StoreError};
