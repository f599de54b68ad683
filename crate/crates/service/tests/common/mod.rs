#![allow(dead_code)]

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use http_body_util::BodyExt;
use serde_json::Value;
use tower::ServiceExt;
use whatif_core::{encode_image, ImageBuffer, Mask, ModelGraph};
use whatif_service::{router, AppState, ServiceConfig};
use whatif_testkit::{fixtures_dir, toy_model_path};

pub fn toy_state(edit: impl FnOnce(&mut ServiceConfig)) -> AppState {
    let mut config = ServiceConfig::new(toy_model_path());
    edit(&mut config);
    let graph = ModelGraph::load_path(&config.model_path).unwrap();
    AppState::new(graph, config)
}

pub fn app(state: &AppState) -> Router {
    router(state.clone())
}

pub fn b64(bytes: &[u8]) -> String {
    STANDARD.encode(bytes)
}

pub fn unb64(s: &str) -> Vec<u8> {
    STANDARD.decode(s).unwrap()
}

pub fn png_b64(img: &ImageBuffer) -> String {
    b64(&encode_image(img).unwrap())
}

pub fn mask_b64(mask: &Mask) -> String {
    png_b64(&mask.to_image())
}

pub fn fixture_bytes(name: &str) -> Vec<u8> {
    std::fs::read(fixtures_dir().join("toy").join(name)).unwrap()
}

pub async fn send(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Vec<u8>) {
    let builder = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(v) => builder
            .header("content-type", "application/json")
            .body(Body::from(serde_json::to_vec(&v).unwrap()))
            .unwrap(),
        None => builder.body(Body::empty()).unwrap(),
    };
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
    (status, bytes)
}

pub async fn send_json(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let (status, bytes) = send(app, method, uri, body).await;
    let value = serde_json::from_slice(&bytes).unwrap_or(Value::Null);
    (status, value)
}

/// Creates a session from an encoded image and returns its id.
pub async fn create(app: &Router, png: &[u8]) -> String {
    let (status, v) = send_json(app, "POST", "/api/session", Some(serde_json::json!({ "image": b64(png) }))).await;
    assert_eq!(status, StatusCode::OK, "{v}");
    v["session_id"].as_str().unwrap().to_owned()
}
