//! Read-only HTTP/JSON service over an airq store.
//!
//! Every request opens its own read-only connection, so the service holds no
//! state between requests beyond immutable configuration.

mod error;
mod model;

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderValue, Method, StatusCode};
use axum::response::IntoResponse;
use axum::routing::get;
use axum::{Json, Router};
use chrono::NaiveDate;
use tokio::net::{TcpListener, ToSocketAddrs};
use tower_http::cors::CorsLayer;

use airq_core::geo::GeoError;
use airq_core::scene::default_seed;
use airq_core::trend::{station_series, Metric};
use airq_core::{generate_scene, BreakpointTable, GeoPoint, PollutantRegistry, SceneConfig, StationIndex, Store};

pub use error::ApiError;
pub use model::{LatestResponse, NearestResponse, RecordResponse, RecordView, SampleView, TrendResponse, TrendRow};

/// The committed OpenAPI document describing every endpoint.
pub const OPENAPI: &str = include_str!("../schemas/openapi.json");

#[derive(Clone)]
pub struct AppState {
    pub store_path: PathBuf,
    pub table: Arc<BreakpointTable>,
    pub scene: Arc<SceneConfig>,
    pub registry: Arc<PollutantRegistry>,
}

impl AppState {
    pub fn new(store_path: impl Into<PathBuf>) -> Self {
        AppState {
            store_path: store_path.into(),
            table: Arc::new(BreakpointTable::cpcb()),
            scene: Arc::new(SceneConfig::default()),
            registry: Arc::new(PollutantRegistry::bundled()),
        }
    }

    fn open(&self) -> Result<Store, ApiError> {
        Store::open_read_only(&self.store_path).map_err(|e| ApiError::internal(e.to_string()))
    }
}

type Params = Query<HashMap<String, String>>;
type ApiResult<T> = Result<Json<T>, ApiError>;

/// Runs blocking store work off the async executor.
async fn blocking<T, F>(state: AppState, f: F) -> ApiResult<T>
where
    T: Send + 'static,
    F: FnOnce(&AppState, &Store) -> Result<T, ApiError> + Send + 'static,
{
    tokio::task::spawn_blocking(move || {
        let store = state.open()?;
        f(&state, &store)
    })
    .await
    .map_err(|e| ApiError::internal(e.to_string()))?
    .map(Json)
}

fn param<'a>(q: &'a HashMap<String, String>, name: &str) -> Result<&'a str, ApiError> {
    q.get(name)
        .map(String::as_str)
        .ok_or_else(|| ApiError::bad_request("BadRequest", format!("missing query parameter `{name}`")))
}

fn parse_date(raw: &str, name: &str) -> Result<NaiveDate, ApiError> {
    raw.parse()
        .map_err(|_| ApiError::bad_request("BadRequest", format!("`{name}` must be an ISO-8601 date, got `{raw}`")))
}

async fn healthz() -> Json<serde_json::Value> {
    Json(serde_json::json!({ "status": "ok" }))
}

async fn openapi() -> impl IntoResponse {
    ([(header::CONTENT_TYPE, "application/json")], OPENAPI)
}

async fn stations(State(state): State<AppState>) -> ApiResult<Vec<airq_core::StationMeta>> {
    blocking(state, |_, store| Ok(store.stations()?)).await
}

async fn nearest(State(state): State<AppState>, Query(q): Params) -> ApiResult<NearestResponse> {
    let coord = |name: &str| -> Result<f64, ApiError> {
        let raw = param(&q, name).map_err(|e| ApiError::bad_request("BadCoordinates", e.message))?;
        raw.trim()
            .parse::<f64>()
            .map_err(|_| ApiError::bad_request("BadCoordinates", format!("`{name}` is not a number: `{raw}`")))
    };
    let point = GeoPoint::new(coord("lat")?, coord("lon")?)
        .map_err(|e| ApiError::bad_request("BadCoordinates", e.to_string()))?;
    blocking(state, move |_, store| {
        let index = StationIndex::new(store.stations()?).map_err(|e| match e {
            GeoError::EmptyRegistry => ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "EmptyRegistry", e.to_string()),
            other => ApiError::internal(other.to_string()),
        })?;
        let hit = index
            .nearest(point)
            .map_err(|e| ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "EmptyRegistry", e.to_string()))?;
        Ok(NearestResponse {
            station: hit.station.clone(),
            distance_km: (hit.distance_km * 10.0).round() / 10.0,
        })
    })
    .await
}

async fn dates(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<airq_core::AvailabilityCalendar> {
    blocking(state, move |_, store| Ok(store.get_dates(&id)?)).await
}

async fn records(State(state): State<AppState>, Path(id): Path<String>, Query(q): Params) -> ApiResult<RecordResponse> {
    let date = parse_date(param(&q, "date")?, "date")?;
    blocking(state, move |state, store| {
        let record = store.get_record(&id, date)?;
        Ok(RecordResponse::new(&record, &state.table))
    })
    .await
}

async fn latest(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<LatestResponse> {
    blocking(state, move |state, store| {
        let record = store.get_latest(&id)?;
        Ok(LatestResponse::new(&record, &state.table))
    })
    .await
}

async fn scene(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Params,
) -> ApiResult<airq_core::SceneSpec> {
    let date = q.get("date").map(|d| parse_date(d, "date")).transpose()?;
    let seed = q
        .get("seed")
        .map(|s| {
            s.parse::<u64>().map_err(|_| {
                ApiError::bad_request(
                    "BadRequest",
                    format!("`seed` must be an unsigned 64-bit integer, got `{s}`"),
                )
            })
        })
        .transpose()?;
    blocking(state, move |state, store| {
        let record = match date {
            Some(d) => store.get_record(&id, d)?,
            None => store.get_latest(&id)?,
        };
        let report = record.aqi_report(&state.table).map_err(|e| {
            ApiError::new(
                StatusCode::UNPROCESSABLE_ENTITY,
                "NoAqiData",
                format!("{id} on {}: {e}", record.date),
            )
        })?;
        let seed = seed.unwrap_or_else(|| default_seed(&id, record.date));
        generate_scene(&record, &report, seed, &state.scene).map_err(|e| ApiError::internal(e.to_string()))
    })
    .await
}

async fn pollutants(State(state): State<AppState>) -> Json<Vec<airq_core::PollutantInfo>> {
    Json(state.registry.all().cloned().collect())
}

async fn trend(State(state): State<AppState>, Path(id): Path<String>, Query(q): Params) -> ApiResult<TrendResponse> {
    let from = parse_date(param(&q, "from")?, "from")?;
    let to = parse_date(param(&q, "to")?, "to")?;
    let metric: Metric = match q.get("metric") {
        Some(m) => m.parse().map_err(|e: String| ApiError::bad_request("BadRequest", e))?,
        None => Metric::Aqi,
    };
    blocking(state, move |state, store| {
        let points = station_series(store, &id, from, to, &state.table)?;
        Ok(TrendResponse::new(id, metric, from, to, &points))
    })
    .await
}

async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "NotFound", "no such route")
}

/// Builds the router. `cors_origin` allows GET requests from that origin.
pub fn router(state: AppState, cors_origin: Option<&str>) -> Result<Router, ApiError> {
    let mut app = Router::new()
        .route("/healthz", get(healthz))
        .route("/openapi.json", get(openapi))
        .route("/stations", get(stations))
        .route("/stations/nearest", get(nearest))
        .route("/stations/{id}/dates", get(dates))
        .route("/stations/{id}/records", get(records))
        .route("/stations/{id}/latest", get(latest))
        .route("/stations/{id}/scene", get(scene))
        .route("/stations/{id}/trend", get(trend))
        .route("/pollutants", get(pollutants))
        .fallback(not_found)
        .with_state(state);
    if let Some(origin) = cors_origin {
        let origin = HeaderValue::from_str(origin)
            .map_err(|_| ApiError::bad_request("BadRequest", format!("invalid CORS origin `{origin}`")))?;
        app = app.layer(CorsLayer::new().allow_origin(origin).allow_methods([Method::GET]));
    }
    Ok(app)
}

/// Serves until the listener fails.
pub async fn serve(listener: TcpListener, app: Router) -> std::io::Result<()> {
    axum::serve(listener, app).await
}

/// Binds `addr`; the caller reports the actual address (useful with port 0).
pub async fn bind(addr: impl ToSocketAddrs) -> std::io::Result<TcpListener> {
    TcpListener::bind(addr).await
}
