//! Great-circle distances and nearest-station lookup.

use std::cmp::Ordering;
use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// IUGG mean Earth radius.
pub const EARTH_RADIUS_KM: f64 = 6371.0088;

// A latitude-only lower bound is compared against the running best with this
// much room, so floating error in the bound can never prune a true winner.
const PRUNE_SLACK_KM: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeoError {
    #[error("latitude {0} is outside [-90, 90]")]
    Latitude(f64),
    #[error("longitude {0} is outside [-180, 180]")]
    Longitude(f64),
    #[error("station registry is empty")]
    EmptyRegistry,
    #[error("station id must not be empty")]
    EmptyId,
    #[error("duplicate station id `{0}`")]
    DuplicateId(String),
    #[error("station registry line {line}: {message}")]
    Csv { line: u64, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPoint")]
pub struct GeoPoint {
    lat: f64,
    lon: f64,
}

#[derive(Deserialize)]
struct RawPoint {
    lat: f64,
    lon: f64,
}

impl TryFrom<RawPoint> for GeoPoint {
    type Error = GeoError;

    fn try_from(r: RawPoint) -> Result<Self, Self::Error> {
        GeoPoint::new(r.lat, r.lon)
    }
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> Result<Self, GeoError> {
        if !(lat.is_finite() && (-90.0..=90.0).contains(&lat)) {
            return Err(GeoError::Latitude(lat));
        }
        if !(lon.is_finite() && (-180.0..=180.0).contains(&lon)) {
            return Err(GeoError::Longitude(lon));
        }
        Ok(GeoPoint { lat, lon })
    }

    pub fn lat(&self) -> f64 {
        self.lat
    }

    pub fn lon(&self) -> f64 {
        self.lon
    }
}

/// Haversine distance in kilometres.
pub fn haversine_km(a: GeoPoint, b: GeoPoint) -> f64 {
    let (phi1, phi2) = (a.lat.to_radians(), b.lat.to_radians());
    let dphi = phi2 - phi1;
    let dlambda = (b.lon - a.lon).to_radians();
    let h = (dphi / 2.0).sin().powi(2) + phi1.cos() * phi2.cos() * (dlambda / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * h.clamp(0.0, 1.0).sqrt().asin()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationMeta {
    pub id: String,
    pub name: String,
    pub city: String,
    pub state: String,
    pub location: GeoPoint,
    pub live: bool,
}

/// Result of a nearest-station query.
#[derive(Debug, Clone, PartialEq)]
pub struct Nearest<'a> {
    pub station: &'a StationMeta,
    pub distance_km: f64,
}

fn closer(a: (f64, &StationMeta), b: (f64, &StationMeta)) -> Ordering {
    a.0.total_cmp(&b.0).then_with(|| a.1.id.cmp(&b.1.id))
}

/// Reference lookup: every station, full haversine, `(distance, id)` minimum.
pub fn nearest_station_naive(user: GeoPoint, registry: &[StationMeta]) -> Result<Nearest<'_>, GeoError> {
    registry
        .iter()
        .map(|s| (haversine_km(user, s.location), s))
        .min_by(|a, b| closer(*a, *b))
        .map(|(distance_km, station)| Nearest { station, distance_km })
        .ok_or(GeoError::EmptyRegistry)
}

/// Station registry sorted by latitude for pruned nearest-station search.
///
/// The great-circle distance between two points is never less than their
/// meridian-arc separation `R·|Δφ|`, so the search walks outward from the
/// query latitude in both directions and stops each side once that bound
/// exceeds the best distance found. Results are identical to
/// [`nearest_station_naive`], ties included.
#[derive(Debug, Clone)]
pub struct StationIndex {
    by_lat: Vec<StationMeta>,
}

impl StationIndex {
    pub fn new(stations: Vec<StationMeta>) -> Result<Self, GeoError> {
        let mut ids: Vec<&str> = stations.iter().map(|s| s.id.as_str()).collect();
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(GeoError::DuplicateId(w[0].to_string()));
        }
        if ids.first() == Some(&"") {
            return Err(GeoError::EmptyId);
        }
        let mut by_lat = stations;
        by_lat.sort_by(|a, b| a.location.lat.total_cmp(&b.location.lat).then_with(|| a.id.cmp(&b.id)));
        Ok(StationIndex { by_lat })
    }

    pub fn len(&self) -> usize {
        self.by_lat.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_lat.is_empty()
    }

    pub fn stations(&self) -> &[StationMeta] {
        &self.by_lat
    }

    pub fn nearest(&self, user: GeoPoint) -> Result<Nearest<'_>, GeoError> {
        if self.by_lat.is_empty() {
            return Err(GeoError::EmptyRegistry);
        }
        let split = self.by_lat.partition_point(|s| s.location.lat < user.lat);
        let mut best: Option<(f64, &StationMeta)> = None;
        let (mut up, mut down) = (split, split);
        let (mut up_open, mut down_open) = (true, true);
        while up_open || down_open {
            if up_open {
                match self.by_lat.get(up) {
                    Some(s) if visit(user, s, &mut best) => up += 1,
                    _ => up_open = false,
                }
            }
            if down_open {
                match down.checked_sub(1).map(|i| &self.by_lat[i]) {
                    Some(s) if visit(user, s, &mut best) => down -= 1,
                    _ => down_open = false,
                }
            }
        }
        let (distance_km, station) = best.expect("registry is non-empty");
        Ok(Nearest { station, distance_km })
    }
}

/// Updates `best` with `s` unless its latitude bound already rules it out.
/// Returns `false` once the bound is exceeded, since stations further along
/// the latitude ordering can only be worse.
fn visit<'a>(user: GeoPoint, s: &'a StationMeta, best: &mut Option<(f64, &'a StationMeta)>) -> bool {
    if let Some((d, _)) = *best {
        let bound = EARTH_RADIUS_KM * (s.location.lat - user.lat).abs().to_radians();
        if bound - PRUNE_SLACK_KM > d {
            return false;
        }
    }
    let cand = (haversine_km(user, s.location), s);
    if best.is_none_or(|b| closer(cand, b) == Ordering::Less) {
        *best = Some(cand);
    }
    true
}

#[derive(Debug, Deserialize)]
struct StationRow {
    id: String,
    name: String,
    city: String,
    state: String,
    lat: f64,
    lon: f64,
    live: String,
}

fn parse_bool(s: &str) -> Option<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" | "y" => Some(true),
        "false" | "0" | "no" | "n" => Some(false),
        _ => None,
    }
}

/// Reads a station registry CSV with header `id,name,city,state,lat,lon,live`.
pub fn read_registry_csv(reader: impl Read) -> Result<Vec<StationMeta>, GeoError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let csv_err = |line: u64, e: &dyn std::fmt::Display| GeoError::Csv {
        line,
        message: e.to_string(),
    };
    let headers = rdr.headers().map_err(|e| csv_err(1, &e))?.clone();
    let expected = ["id", "name", "city", "state", "lat", "lon", "live"];
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(csv_err(1, &format!("expected header `{}`", expected.join(","))));
    }
    let mut out = Vec::new();
    for row in rdr.deserialize::<StationRow>() {
        let row = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            csv_err(line, &e)
        })?;
        let line = out.len() as u64 + 2;
        if row.id.is_empty() {
            return Err(GeoError::EmptyId);
        }
        let live = parse_bool(&row.live).ok_or_else(|| csv_err(line, &format!("bad live flag `{}`", row.live)))?;
        let location = GeoPoint::new(row.lat, row.lon).map_err(|e| csv_err(line, &e))?;
        out.push(StationMeta {
            id: row.id,
            name: row.name,
            city: row.city,
            state: row.state,
            location,
            live,
        });
    }
    // uniqueness check shared with the index
    StationIndex::new(out.clone())?;
    Ok(out)
}

/// Writes the registry back out in the same CSV shape.
pub fn write_registry_csv(stations: &[StationMeta], writer: impl std::io::Write) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["id", "name", "city", "state", "lat", "lon", "live"])?;
    for s in stations {
        w.write_record([
            s.id.clone(),
            s.name.clone(),
            s.city.clone(),
            s.state.clone(),
            s.location.lat.to_string(),
            s.location.lon.to_string(),
            s.live.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
