//! HTTP service: one-hop queries, name resolution, health and config echo.
//!
//! All routes live under `/v1/`. Handlers share one immutable store; the
//! pipeline runs on the blocking pool so slow queries do not stall the
//! reactor. Every response body is hashed into `x-edgar-content-sha256` so
//! clients can compare runs without diffing bodies.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use edgar_core::{
    answer, parse_request, Error, LocalResolver, NameResolver, PipelineConfig, Store, Template,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const STORE_PATH_ENV: &str = "EDGAR_STORE_PATH";
pub const HASH_HEADER: &str = "x-edgar-content-sha256";
pub const TIMINGS_HEADER: &str = "x-edgar-timings";
pub const DEFAULT_RESOLVE_LIMIT: usize = 10;

#[derive(Debug, thiserror::Error)]
pub enum ServeError {
    #[error("binding {addr}: {source}")]
    Bind {
        addr: SocketAddr,
        #[source]
        source: std::io::Error,
    },
    #[error("server: {0}")]
    Server(#[source] std::io::Error),
}

/// Everything a handler needs. Cheap to clone.
#[derive(Clone)]
pub struct AppState {
    pub store: Arc<Store>,
    pub config: Arc<PipelineConfig>,
    pub resolver: Arc<dyn NameResolver>,
    pub store_path: Option<PathBuf>,
}

impl AppState {
    /// Uses a [`LocalResolver`] over the store's node names.
    pub fn new(store: Store, config: PipelineConfig) -> Self {
        let resolver = LocalResolver::from_store(&store);
        Self {
            store: Arc::new(store),
            config: Arc::new(config),
            resolver: Arc::new(resolver),
            store_path: None,
        }
    }

    pub fn with_store_path(mut self, path: PathBuf) -> Self {
        self.store_path = Some(path);
        self
    }

    pub fn with_resolver(mut self, resolver: Arc<dyn NameResolver>) -> Self {
        self.resolver = resolver;
        self
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorBody {
    pub errors: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stage: Option<String>,
}

struct ApiError {
    status: StatusCode,
    body: ErrorBody,
}

impl ApiError {
    fn bad_request(errors: Vec<String>) -> Self {
        Self {
            status: StatusCode::BAD_REQUEST,
            body: ErrorBody {
                errors,
                stage: None,
            },
        }
    }
}

impl From<Error> for ApiError {
    fn from(err: Error) -> Self {
        let status = if err.is_validation() {
            StatusCode::BAD_REQUEST
        } else if err.is_not_found() {
            StatusCode::NOT_FOUND
        } else {
            tracing::error!(error = %err, "query failed");
            StatusCode::INTERNAL_SERVER_ERROR
        };
        Self {
            status,
            body: ErrorBody {
                errors: err.messages(),
                stage: err.stage().map(|s| s.to_string()),
            },
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        json_response(self.status, json_bytes(&self.body))
    }
}

fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("response serializes");
    out.push(b'\n');
    out
}

pub fn content_hash(body: &[u8]) -> String {
    hex::encode(Sha256::digest(body))
}

fn json_response(status: StatusCode, body: Vec<u8>) -> Response {
    let hash = content_hash(&body);
    let mut resp = (status, body).into_response();
    let headers = resp.headers_mut();
    headers.insert(
        header::CONTENT_TYPE,
        HeaderValue::from_static("application/json"),
    );
    headers.insert(
        HASH_HEADER,
        HeaderValue::from_str(&hash).expect("hex is a valid header"),
    );
    resp
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/v1/query", post(query))
        .route("/v1/resolve", post(resolve))
        .route("/v1/health", get(health))
        .route("/v1/meta", get(meta))
        .with_state(state)
}

async fn query(State(state): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let request = parse_request(&body)?;
    let task = tokio::task::spawn_blocking(move || answer(&state.store, &request, &state.config));
    let (message, timings) = task.await.map_err(|e| ApiError {
        status: StatusCode::INTERNAL_SERVER_ERROR,
        body: ErrorBody {
            errors: vec![format!("query task failed: {e}")],
            stage: None,
        },
    })??;
    let mut resp = json_response(StatusCode::OK, message.to_json_bytes());
    let timing = format!(
        "lookup={:.3};enrichment={:.3};inference={:.3}",
        timings.lookup_ms, timings.enrichment_ms, timings.inference_ms
    );
    resp.headers_mut().insert(
        TIMINGS_HEADER,
        HeaderValue::from_str(&timing).expect("ascii"),
    );
    Ok(resp)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ResolveRequest {
    text: String,
    limit: Option<usize>,
}

async fn resolve(State(state): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let req: ResolveRequest = serde_json::from_slice(&body)
        .map_err(|e| ApiError::bad_request(vec![format!("resolve request: {e}")]))?;
    let limit = req.limit.unwrap_or(DEFAULT_RESOLVE_LIMIT);
    if limit == 0 {
        return Err(ApiError::bad_request(vec![
            "limit must be at least 1".into()
        ]));
    }
    let matches = state.resolver.resolve(&req.text, limit);
    Ok(json_response(
        StatusCode::OK,
        json_bytes(&serde_json::json!({ "text": req.text, "matches": matches })),
    ))
}

async fn health(State(state): State<AppState>) -> Response {
    let stats = state.store.stats();
    json_response(
        StatusCode::OK,
        json_bytes(&serde_json::json!({
            "status": "ok",
            "node_count": stats.node_count,
            "edge_count": stats.edge_count,
            "expanded": state.store.is_expanded(),
        })),
    )
}

async fn meta(State(state): State<AppState>) -> Response {
    let templates: Vec<_> = Template::ALL
        .iter()
        .map(|t| serde_json::json!({ "name": t.name(), "question": t.question() }))
        .collect();
    json_response(
        StatusCode::OK,
        json_bytes(&serde_json::json!({
            "version": env!("CARGO_PKG_VERSION"),
            "config": &*state.config,
            "store": state.store.manifest(),
            "store_path": state.store_path,
            "templates": templates,
        })),
    )
}

/// Serves until ctrl-c.
pub async fn serve(state: AppState, addr: SocketAddr) -> Result<(), ServeError> {
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|source| ServeError::Bind { addr, source })?;
    tracing::info!(%addr, "listening");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(ServeError::Server)
}
