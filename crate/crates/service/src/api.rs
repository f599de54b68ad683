//! HTTP routes. Request bodies are JSON with base64 PNG payloads; every
//! response that carries an image also carries the matching scores.

use std::collections::HashMap;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Path, Query, State};
use axum::routing::{get, post};
use axum::{Json, Router};
use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tower_http::services::ServeDir;
use whatif_core::cam::DEFAULT_OVERLAY_ALPHA;
use whatif_core::model::DEFAULT_TOP_K;
use whatif_core::raster::{image_dimensions, DEFAULT_MASK_THRESHOLD};
use whatif_core::{
    classify, compute_cam, decode_image, encode_image, mask_from_image, render_overlay, Algorithm, ClassScores,
    ImageBuffer, InpaintOptions, ModelGraph,
};

use crate::config::ServiceConfig;
use crate::error::ServiceError;
use crate::session::Session;
use crate::store::{new_session_id, SessionStore};

#[derive(Clone)]
pub struct AppState {
    pub graph: Arc<ModelGraph>,
    pub store: Arc<SessionStore>,
    pub config: Arc<ServiceConfig>,
}

impl AppState {
    pub fn new(graph: ModelGraph, config: ServiceConfig) -> Self {
        Self {
            graph: Arc::new(graph),
            store: Arc::new(SessionStore::new(config.session_ttl, config.busy_mode)),
            config: Arc::new(config),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateRequest {
    image: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct InpaintRequest {
    mask: String,
    algorithm: String,
    #[serde(default)]
    params: InpaintOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreateResponse {
    pub session_id: String,
    pub width: usize,
    pub height: usize,
    pub image: String,
    pub scores: ClassScores,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionResponse {
    pub session_id: String,
    pub width: usize,
    pub height: usize,
    pub original: String,
    pub current: String,
    pub original_scores: ClassScores,
    pub scores: ClassScores,
    pub history_depth: usize,
    pub edit_count: usize,
}

/// Body of inpaint and reset responses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageResponse {
    pub image: String,
    pub scores: ClassScores,
    pub history_depth: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UndoResponse {
    pub image: String,
    pub scores: ClassScores,
    /// True when there was nothing to undo and the session is unchanged.
    pub history_empty: bool,
    pub history_depth: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CamResponse {
    pub class_id: usize,
    pub label: String,
    pub mode: String,
    pub logit: f32,
    pub image: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelsResponse {
    pub labels: Vec<String>,
}

pub fn router(state: AppState) -> Router {
    let body_limit = state.config.body_limit;
    let static_dir = state.config.static_dir.clone();
    let api = Router::new()
        .route("/api/session", post(create_session))
        .route("/api/session/{id}", get(get_session))
        .route("/api/session/{id}/inpaint", post(apply_inpaint))
        .route("/api/session/{id}/undo", post(undo))
        .route("/api/session/{id}/reset", post(reset))
        .route("/api/session/{id}/cam", get(get_cam))
        .route("/api/labels", get(labels))
        .layer(DefaultBodyLimit::max(body_limit))
        .with_state(state);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

fn parse_body<T: DeserializeOwned>(body: &[u8]) -> Result<T, ServiceError> {
    serde_json::from_slice(body).map_err(|e| ServiceError::BadRequest(format!("invalid request body: {e}")))
}

fn decode_base64(field: &str, value: &str) -> Result<Vec<u8>, ServiceError> {
    STANDARD
        .decode(value)
        .map_err(|e| ServiceError::BadRequest(format!("`{field}` is not valid base64: {e}")))
}

fn png_base64(img: &ImageBuffer) -> Result<String, ServiceError> {
    Ok(STANDARD.encode(encode_image(img)?))
}

async fn blocking<T, F>(f: F) -> Result<T, ServiceError>
where
    T: Send + 'static,
    F: FnOnce() -> Result<T, ServiceError> + Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ServiceError::Internal(format!("worker task failed: {e}")))?
}

fn persist(config: &ServiceConfig, session: &Session) -> Result<(), ServiceError> {
    if let Some(dir) = &config.snapshot_dir {
        let path = dir.join(format!("{}.json", session.id()));
        session
            .snapshot()
            .write_to(&path)
            .map_err(|e| ServiceError::Internal(format!("writing snapshot {}: {e}", path.display())))?;
    }
    Ok(())
}

fn image_response(session: &Session) -> Result<ImageResponse, ServiceError> {
    Ok(ImageResponse {
        image: png_base64(session.current())?,
        scores: session.scores().clone(),
        history_depth: session.history_depth(),
    })
}

async fn create_session(State(st): State<AppState>, body: Bytes) -> Result<Json<CreateResponse>, ServiceError> {
    let req: CreateRequest = parse_body(&body)?;
    let bytes = decode_base64("image", &req.image)?;
    let (width, height) = image_dimensions(&bytes)?;
    let max = st.config.max_image_dim;
    if width > max || height > max {
        return Err(ServiceError::TooLarge { width, height, max });
    }

    let graph = Arc::clone(&st.graph);
    let history_cap = st.config.history_cap;
    let (session, response) = blocking(move || {
        let img = decode_image(&bytes)?;
        let scores = classify(&graph, &img, DEFAULT_TOP_K)?;
        let session = Session::new(new_session_id(), img, scores, history_cap);
        let response = CreateResponse {
            session_id: session.id().to_owned(),
            width: session.dims().0,
            height: session.dims().1,
            image: png_base64(session.original())?,
            scores: session.scores().clone(),
        };
        Ok((session, response))
    })
    .await?;
    persist(&st.config, &session)?;
    tracing::info!(session = %response.session_id, width, height, "session created");
    st.store.insert(session);
    Ok(Json(response))
}

async fn get_session(
    State(st): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<SessionResponse>, ServiceError> {
    let guard = st.store.read(&id).await?;
    let response = blocking(move || {
        Ok(SessionResponse {
            session_id: guard.id().to_owned(),
            width: guard.dims().0,
            height: guard.dims().1,
            original: png_base64(guard.original())?,
            current: png_base64(guard.current())?,
            original_scores: guard.original_scores().clone(),
            scores: guard.scores().clone(),
            history_depth: guard.history_depth(),
            edit_count: guard.edits().len(),
        })
    })
    .await?;
    Ok(Json(response))
}

async fn apply_inpaint(
    State(st): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<ImageResponse>, ServiceError> {
    let req: InpaintRequest = parse_body(&body)?;
    let algorithm: Algorithm = req.algorithm.parse().map_err(ServiceError::BadRequest)?;
    let mask_png = decode_base64("mask", &req.mask)?;

    let mut guard = st.store.write(&id).await?;
    let graph = Arc::clone(&st.graph);
    let config = Arc::clone(&st.config);
    let response = blocking(move || {
        let mask = mask_from_image(&decode_image(&mask_png)?, DEFAULT_MASK_THRESHOLD)?;
        guard.apply_inpaint(&graph, mask, algorithm, req.params)?;
        persist(&config, &guard)?;
        image_response(&guard)
    })
    .await?;
    Ok(Json(response))
}

async fn undo(State(st): State<AppState>, Path(id): Path<String>) -> Result<Json<UndoResponse>, ServiceError> {
    let mut guard = st.store.write(&id).await?;
    let config = Arc::clone(&st.config);
    let response = blocking(move || {
        let outcome = guard.undo();
        persist(&config, &guard)?;
        Ok(UndoResponse {
            image: png_base64(guard.current())?,
            scores: guard.scores().clone(),
            history_empty: !outcome.changed,
            history_depth: guard.history_depth(),
        })
    })
    .await?;
    Ok(Json(response))
}

async fn reset(State(st): State<AppState>, Path(id): Path<String>) -> Result<Json<ImageResponse>, ServiceError> {
    let mut guard = st.store.write(&id).await?;
    let config = Arc::clone(&st.config);
    let response = blocking(move || {
        guard.reset();
        persist(&config, &guard)?;
        image_response(&guard)
    })
    .await?;
    Ok(Json(response))
}

async fn get_cam(
    State(st): State<AppState>,
    Path(id): Path<String>,
    Query(query): Query<HashMap<String, String>>,
) -> Result<Json<CamResponse>, ServiceError> {
    let class_id: usize = query
        .get("class")
        .ok_or_else(|| ServiceError::BadRequest("missing `class` query parameter".into()))?
        .parse()
        .map_err(|e| ServiceError::BadRequest(format!("`class`: {e}")))?;
    let mode = query.get("mode").map(String::as_str).unwrap_or("overlay").to_owned();
    if mode != "raw" && mode != "overlay" {
        return Err(ServiceError::BadRequest(format!(
            "unknown mode `{mode}` (expected raw or overlay)"
        )));
    }
    let alpha: f32 = match query.get("alpha") {
        Some(a) => a.parse().map_err(|e| ServiceError::BadRequest(format!("`alpha`: {e}")))?,
        None => DEFAULT_OVERLAY_ALPHA,
    };

    let guard = st.store.read(&id).await?;
    let graph = Arc::clone(&st.graph);
    let response = blocking(move || {
        let heat = compute_cam(&graph, guard.current(), class_id)?;
        let image = if mode == "raw" {
            png_base64(&heat.upsampled)?
        } else {
            png_base64(&render_overlay(&heat, guard.current(), alpha)?)?
        };
        Ok(CamResponse {
            class_id,
            label: graph.labels()[class_id].clone(),
            mode,
            logit: heat.logit,
            image,
        })
    })
    .await?;
    Ok(Json(response))
}

async fn labels(State(st): State<AppState>) -> Json<LabelsResponse> {
    Json(LabelsResponse {
        labels: st.graph.labels().to_vec(),
    })
}
