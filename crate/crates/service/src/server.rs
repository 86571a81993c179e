//! HTTP API over a loaded bundle.
//!
//! Every response is a pure function of the bundle and the request. Errors
//! are `{"error": kind, "detail": message}` with status 404 for unknown ids
//! and 400 for malformed parameters.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Duration;

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode, Uri};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tokio::net::TcpListener;
use topicmap::ingest::BaseSet;
use topicmap::lod::LEVELS;
use topicmap::overlay::{CitationMode, NormalizeMode, OverlayError, OverlayResult};

use crate::bundle::{level_file, Bundle, BundleError};

/// Documents fetched for the document overlay are cut off above this size.
pub const MAX_DOCUMENT_BYTES: usize = 8 << 20;

const DEFAULT_SEARCH_LIMIT: usize = 20;

#[derive(Debug, thiserror::Error)]
pub enum ServeError {
    #[error("cannot listen on {addr}: {source}")]
    Bind {
        addr: SocketAddr,
        source: std::io::Error,
    },
    #[error("server stopped: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiError {
    #[serde(skip, default = "internal")]
    pub status: StatusCode,
    pub error: String,
    pub detail: String,
}

fn internal() -> StatusCode {
    StatusCode::INTERNAL_SERVER_ERROR
}

impl ApiError {
    pub fn not_found(detail: impl Into<String>) -> Self {
        ApiError {
            status: StatusCode::NOT_FOUND,
            error: "not_found".into(),
            detail: detail.into(),
        }
    }

    pub fn bad_request(detail: impl Into<String>) -> Self {
        ApiError {
            status: StatusCode::BAD_REQUEST,
            error: "bad_request".into(),
            detail: detail.into(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(&self)).into_response()
    }
}

impl From<OverlayError> for ApiError {
    fn from(e: OverlayError) -> Self {
        match e {
            OverlayError::UnknownUniversity(_) => ApiError::not_found(e.to_string()),
            _ => ApiError::bad_request(e.to_string()),
        }
    }
}

struct AppState {
    bundle: Arc<Bundle>,
    http: reqwest::Client,
}

type Shared = State<Arc<AppState>>;
type Params = Result<Query<HashMap<String, String>>, QueryRejection>;
type ApiResult = Result<Response, ApiError>;

/// All routes of the API over `bundle`.
pub fn router(bundle: Arc<Bundle>) -> Router {
    let http = reqwest::Client::builder()
        .timeout(Duration::from_secs(20))
        .build()
        .expect("HTTP client builds");
    let state = Arc::new(AppState { bundle, http });
    Router::new()
        .route("/api/manifest", get(manifest))
        .route("/api/levels/{z}", get(level))
        .route("/api/countries", get(countries))
        .route("/api/search", get(search))
        .route("/api/node/{topic_id}", get(node))
        .route("/api/overlay/citations", get(citations))
        .route("/api/overlay/hr", get(hr))
        .route("/api/overlay/department", get(department))
        .route("/api/overlay/document", post(document))
        .route("/api/universities", get(universities))
        .fallback(unknown_route)
        .with_state(state)
}

/// Binds `addr`; a busy port is reported as [`ServeError::Bind`].
pub async fn bind(addr: SocketAddr) -> Result<TcpListener, ServeError> {
    TcpListener::bind(addr)
        .await
        .map_err(|source| ServeError::Bind { addr, source })
}

/// Serves `bundle` on `listener` until Ctrl-C.
pub async fn serve(listener: TcpListener, bundle: Arc<Bundle>) -> Result<(), ServeError> {
    axum::serve(listener, router(bundle))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

fn stored(bundle: &Bundle, name: &str) -> ApiResult {
    let bytes = bundle
        .raw(name)
        .ok_or_else(|| ApiError::not_found(format!("{name} is not in the bundle")))?;
    Ok(([(header::CONTENT_TYPE, "application/json")], bytes.to_vec()).into_response())
}

fn params(p: Params) -> Result<HashMap<String, String>, ApiError> {
    p.map(|Query(m)| m)
        .map_err(|e| ApiError::bad_request(e.body_text()))
}

fn required<'a>(p: &'a HashMap<String, String>, key: &str) -> Result<&'a str, ApiError> {
    match p.get(key).map(|v| v.trim()) {
        Some(v) if !v.is_empty() => Ok(v),
        _ => Err(ApiError::bad_request(format!("missing parameter {key:?}"))),
    }
}

fn optional<T: FromStr<Err = String>>(
    p: &HashMap<String, String>,
    key: &str,
    default: T,
) -> Result<T, ApiError> {
    match p.get(key).map(|v| v.trim()) {
        None | Some("") => Ok(default),
        Some(v) => v.parse().map_err(ApiError::bad_request),
    }
}

fn overlay(result: Result<OverlayResult, OverlayError>) -> ApiResult {
    Ok(Json(result?).into_response())
}

async fn manifest(State(s): Shared) -> ApiResult {
    stored(&s.bundle, "manifest.json")
}

async fn level(State(s): Shared, Path(z): Path<String>) -> ApiResult {
    let z: u8 = z
        .parse()
        .map_err(|_| ApiError::bad_request(format!("level {z:?} is not an integer")))?;
    if !(1..=LEVELS).contains(&z) {
        return Err(ApiError::not_found(format!(
            "level {z} does not exist (levels are 1..{LEVELS})"
        )));
    }
    stored(&s.bundle, &level_file(z))
}

async fn countries(State(s): Shared) -> ApiResult {
    stored(&s.bundle, "geometry.json")
}

async fn search(State(s): Shared, p: Params) -> ApiResult {
    let p = params(p)?;
    let q = p.get("q").map(String::as_str).unwrap_or("");
    let limit = match p.get("limit").map(|v| v.trim()) {
        None | Some("") => DEFAULT_SEARCH_LIMIT,
        Some(v) => v
            .parse()
            .map_err(|_| ApiError::bad_request(format!("limit {v:?} is not a count")))?,
    };
    Ok(Json(s.bundle.search(q, limit)).into_response())
}

async fn node(State(s): Shared, Path(id): Path<String>) -> ApiResult {
    match s.bundle.node_info(&id) {
        Ok(info) => Ok(Json(info).into_response()),
        Err(BundleError::UnknownTopic(id)) => {
            Err(ApiError::not_found(format!("unknown topic {id:?}")))
        }
        Err(e) => Err(ApiError::bad_request(e.to_string())),
    }
}

/// `normalize=none` (the default) gives raw citation sums.
fn normalize_param(p: &HashMap<String, String>) -> Result<Option<NormalizeMode>, ApiError> {
    match p.get("normalize").map(|v| v.trim()) {
        None | Some("") | Some("none") => Ok(None),
        Some(v) => v.parse().map(Some).map_err(|_| {
            ApiError::bad_request(format!(
                "unknown normalization {v:?} (expected none, rate or literal)"
            ))
        }),
    }
}

async fn citations(State(s): Shared, p: Params) -> ApiResult {
    let p = params(p)?;
    let university = required(&p, "university")?;
    let mode = optional(&p, "mode", CitationMode::Full)?;
    let normalize = normalize_param(&p)?;
    let base = optional(&p, "base", BaseSet::World)?;
    overlay(s.bundle.citations(university, mode, normalize, base))
}

async fn hr(State(s): Shared, p: Params) -> ApiResult {
    let p = params(p)?;
    let university = required(&p, "university")?;
    let base = optional(&p, "base", BaseSet::World)?;
    overlay(s.bundle.hr(university, base))
}

async fn department(State(s): Shared, p: Params) -> ApiResult {
    let p = params(p)?;
    let keyword = required(&p, "keyword")?;
    overlay(s.bundle.department(keyword))
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DocumentRequest {
    #[serde(default)]
    pub text: Option<String>,
    #[serde(default)]
    pub url: Option<String>,
}

async fn document(
    State(s): Shared,
    body: Result<Json<DocumentRequest>, JsonRejection>,
) -> ApiResult {
    let Json(req) = body.map_err(|e| ApiError::bad_request(e.body_text()))?;
    let text = match (req.text, req.url) {
        (Some(text), None) => text,
        (None, Some(url)) => fetch(&s.http, &url).await?,
        _ => {
            return Err(ApiError::bad_request(
                "body must carry exactly one of \"text\" or \"url\"",
            ))
        }
    };
    Ok(Json(s.bundle.document(&text)).into_response())
}

async fn fetch(client: &reqwest::Client, url: &str) -> Result<String, ApiError> {
    let parsed = reqwest::Url::parse(url)
        .map_err(|e| ApiError::bad_request(format!("invalid url {url:?}: {e}")))?;
    if !matches!(parsed.scheme(), "http" | "https") {
        return Err(ApiError::bad_request(format!(
            "unsupported url scheme {:?}",
            parsed.scheme()
        )));
    }
    let failed = |e: reqwest::Error| ApiError::bad_request(format!("fetching {url} failed: {e}"));
    let resp = client.get(parsed).send().await.map_err(failed)?;
    if !resp.status().is_success() {
        return Err(ApiError::bad_request(format!(
            "fetching {url} returned {}",
            resp.status()
        )));
    }
    let bytes = resp.bytes().await.map_err(failed)?;
    if bytes.len() > MAX_DOCUMENT_BYTES {
        return Err(ApiError::bad_request(format!(
            "document at {url} exceeds {MAX_DOCUMENT_BYTES} bytes"
        )));
    }
    Ok(String::from_utf8_lossy(&bytes).into_owned())
}

async fn universities(State(s): Shared) -> ApiResult {
    Ok(Json(s.bundle.universities()).into_response())
}

async fn unknown_route(uri: Uri) -> ApiError {
    ApiError::not_found(format!("no route for {}", uri.path()))
}
