mod common;

use std::time::Duration;

use axum::http::StatusCode;
use common::*;
use serde_json::json;
use whatif_core::{decode_image, ImageBuffer, Mask};
use whatif_service::api::{CamResponse, CreateResponse, ImageResponse, SessionResponse, UndoResponse};
use whatif_service::BusyMode;

fn parse<T: serde::de::DeserializeOwned>(v: serde_json::Value) -> T {
    serde_json::from_value(v).unwrap()
}

fn rect_mask(x0: usize, y0: usize, x1: usize, y1: usize) -> Mask {
    Mask::from_fn(48, 40, |x, y| (x0..x1).contains(&x) && (y0..y1).contains(&y))
}

#[tokio::test]
async fn create_returns_id_and_ranked_scores() {
    let state = toy_state(|_| {});
    let app = app(&state);
    let (status, v) = send_json(&app, "POST", "/api/session", Some(json!({ "image": b64(&fixture_bytes("image.png")) }))).await;
    assert_eq!(status, StatusCode::OK);
    let r: CreateResponse = parse(v);
    assert_eq!(r.session_id.len(), 32);
    assert_eq!((r.width, r.height), (48, 40));
    assert_eq!(r.scores.topk.len(), 5);
    assert!(r.scores.topk.windows(2).all(|w| w[0].probability >= w[1].probability));
    let sum: f64 = r.scores.distribution.iter().map(|&p| p as f64).sum();
    assert!((sum - 1.0).abs() < 1e-5);
    assert!(state.store.contains(&r.session_id));
}

#[tokio::test]
async fn create_rejects_bad_payloads() {
    let app = app(&toy_state(|_| {}));
    let mut corrupt = fixture_bytes("image.png");
    corrupt.truncate(60);
    let (status, v) = send_json(&app, "POST", "/api/session", Some(json!({ "image": b64(&corrupt) }))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(v["error"].as_str().unwrap().contains("decode"), "{v}");

    let (status, _) = send_json(&app, "POST", "/api/session", Some(json!({ "image": "%%%" }))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _) = send(&app, "POST", "/api/session", None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _) = send_json(&app, "POST", "/api/session", Some(json!({ "img": "" }))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn oversize_image_is_413() {
    let app = app(&toy_state(|_| {}));
    let big = ImageBuffer::filled(4096, 4096, 1, 0.5);
    let (status, _) = send_json(&app, "POST", "/api/session", Some(json!({ "image": png_b64(&big) }))).await;
    assert_eq!(status, StatusCode::PAYLOAD_TOO_LARGE);

    let small_cap = app_with_cap(40);
    let (status, _) = send_json(&small_cap, "POST", "/api/session", Some(json!({ "image": b64(&fixture_bytes("image.png")) }))).await;
    assert_eq!(status, StatusCode::PAYLOAD_TOO_LARGE);
}

fn app_with_cap(cap: usize) -> axum::Router {
    app(&toy_state(|c| c.max_image_dim = cap))
}

#[tokio::test]
async fn unknown_session_is_404_everywhere() {
    let app = app(&toy_state(|_| {}));
    let id = "0123456789abcdef0123456789abcdef";
    let mask = mask_b64(&rect_mask(0, 0, 2, 2));
    let cases = [
        ("GET", format!("/api/session/{id}"), None),
        ("POST", format!("/api/session/{id}/inpaint"), Some(json!({"mask": mask, "algorithm": "telea"}))),
        ("POST", format!("/api/session/{id}/undo"), None),
        ("POST", format!("/api/session/{id}/reset"), None),
        ("GET", format!("/api/session/{id}/cam?class=0"), None),
    ];
    for (method, uri, body) in cases {
        let (status, _) = send(&app, method, &uri, body).await;
        assert_eq!(status, StatusCode::NOT_FOUND, "{method} {uri}");
    }
}

#[tokio::test]
async fn inpaint_validation_errors() {
    let app = app(&toy_state(|_| {}));
    let id = create(&app, &fixture_bytes("image.png")).await;
    let uri = format!("/api/session/{id}/inpaint");
    let ok_mask = mask_b64(&rect_mask(10, 10, 14, 14));

    let wrong_dims = mask_b64(&Mask::from_fn(47, 40, |x, _| x < 3));
    let (status, _) = send(&app, "POST", &uri, Some(json!({"mask": wrong_dims, "algorithm": "telea"}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);

    let full = mask_b64(&Mask::from_fn(48, 40, |_, _| true));
    let (status, _) = send(&app, "POST", &uri, Some(json!({"mask": full, "algorithm": "telea"}))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);

    let (status, v) = send_json(&app, "POST", &uri, Some(json!({"mask": ok_mask, "algorithm": "navier-stokes"}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(v["error"].as_str().unwrap().contains("navier-stokes"));

    let rgb_mask = png_b64(&ImageBuffer::filled(48, 40, 3, 0.0));
    let (status, _) = send(&app, "POST", &uri, Some(json!({"mask": rgb_mask, "algorithm": "telea"}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);

    let (status, _) = send(&app, "POST", &uri, Some(json!({"mask": ok_mask, "algorithm": "telea", "params": {"colour": 1}}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);

    let (status, _) = send(&app, "POST", &uri, Some(json!({"mask": ok_mask, "algorithm": "telea", "params": {"radius": 0}}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);

    // a patch larger than the image leaves no source region
    let (status, _) = send(&app, "POST", &uri, Some(json!({"mask": ok_mask, "algorithm": "patchmatch", "params": {"patch_size": 41}}))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);

    // none of the failures above touched the session
    let (_, v) = send_json(&app, "GET", &format!("/api/session/{id}"), None).await;
    let s: SessionResponse = parse(v);
    assert_eq!(s.history_depth, 0);
    assert_eq!(s.current, s.original);
}

#[tokio::test]
async fn empty_mask_leaves_image_and_scores_unchanged() {
    let app = app(&toy_state(|_| {}));
    let png = fixture_bytes("image.png");
    let (_, v) = send_json(&app, "POST", "/api/session", Some(json!({ "image": b64(&png) }))).await;
    let created: CreateResponse = parse(v);
    for algorithm in ["telea", "patchmatch"] {
        let (status, v) = send_json(
            &app,
            "POST",
            &format!("/api/session/{}/inpaint", created.session_id),
            Some(json!({"mask": mask_b64(&Mask::new(48, 40)), "algorithm": algorithm})),
        )
        .await;
        assert_eq!(status, StatusCode::OK);
        let r: ImageResponse = parse(v);
        assert_eq!(r.image, created.image);
        assert_eq!(r.scores, created.scores);
    }
}

#[tokio::test]
async fn undo_and_reset_semantics() {
    let state = toy_state(|_| {});
    let app = app(&state);
    let id = create(&app, &fixture_bytes("image.png")).await;
    let original = state.store.read(&id).await.unwrap().original().clone();

    let (_, v) = send_json(&app, "POST", &format!("/api/session/{id}/undo"), None).await;
    let u: UndoResponse = parse(v);
    assert!(u.history_empty);
    assert_eq!(u.history_depth, 0);
    assert_eq!(decode_image(&unb64(&u.image)).unwrap(), original);

    let mask = mask_b64(&decode_mask_fixture());
    let (status, v) = send_json(&app, "POST", &format!("/api/session/{id}/inpaint"), Some(json!({"mask": mask, "algorithm": "telea"}))).await;
    assert_eq!(status, StatusCode::OK);
    let r: ImageResponse = parse(v);
    assert_eq!(r.history_depth, 1);
    assert_ne!(*state.store.read(&id).await.unwrap().current(), original);

    let (_, v) = send_json(&app, "POST", &format!("/api/session/{id}/undo"), None).await;
    let u: UndoResponse = parse(v);
    assert!(!u.history_empty);
    assert_eq!(*state.store.read(&id).await.unwrap().current(), original);

    for _ in 0..2 {
        send(&app, "POST", &format!("/api/session/{id}/inpaint"), Some(json!({"mask": mask, "algorithm": "patchmatch"}))).await;
    }
    let (_, v) = send_json(&app, "POST", &format!("/api/session/{id}/reset"), None).await;
    let r: ImageResponse = parse(v);
    assert_eq!(r.history_depth, 0);
    let session = state.store.read(&id).await.unwrap();
    assert_eq!(*session.current(), original);
    assert!(session.edits().is_empty());
}

#[tokio::test]
async fn history_cap_evicts_oldest() {
    let state = toy_state(|c| c.history_cap = 2);
    let app = app(&state);
    let id = create(&app, &fixture_bytes("image.png")).await;
    let uri = format!("/api/session/{id}/inpaint");
    for i in 0..4 {
        let mask = mask_b64(&rect_mask(4 + 8 * i, 5, 8 + 8 * i, 9));
        let (_, v) = send_json(&app, "POST", &uri, Some(json!({"mask": mask, "algorithm": "telea"}))).await;
        assert_eq!(v["history_depth"], (i + 1).min(2));
    }
    let mut undone = 0;
    loop {
        let (_, v) = send_json(&app, "POST", &format!("/api/session/{id}/undo"), None).await;
        if v["history_empty"] == true {
            break;
        }
        undone += 1;
    }
    assert_eq!(undone, 2);
}

fn decode_mask_fixture() -> Mask {
    whatif_core::mask_from_image(&decode_image(&fixture_bytes("mask.png")).unwrap(), 0.5).unwrap()
}

#[tokio::test]
async fn cam_modes() {
    let state = toy_state(|_| {});
    let app = app(&state);
    let id = create(&app, &fixture_bytes("image.png")).await;
    let current = state.store.read(&id).await.unwrap().current().clone();

    let (status, v) = send_json(&app, "GET", &format!("/api/session/{id}/cam?class=3&mode=raw"), None).await;
    assert_eq!(status, StatusCode::OK);
    let raw: CamResponse = parse(v);
    assert_eq!(raw.label, "baseball");
    let heat = decode_image(&unb64(&raw.image)).unwrap();
    assert_eq!((heat.width(), heat.height(), heat.channels()), (48, 40, 1));

    let (_, v) = send_json(&app, "GET", &format!("/api/session/{id}/cam?class=3&mode=overlay&alpha=0"), None).await;
    let overlay: CamResponse = parse(v);
    assert_eq!(unb64(&overlay.image), whatif_core::encode_image(&current).unwrap());

    let (_, v) = send_json(&app, "GET", &format!("/api/session/{id}/cam?class=3"), None).await;
    assert_eq!(v["mode"], "overlay");

    for query in ["class=10", "class=x", "", "class=1&mode=heat", "class=1&alpha=2"] {
        let (status, _) = send(&app, "GET", &format!("/api/session/{id}/cam?{query}"), None).await;
        assert_eq!(status, StatusCode::BAD_REQUEST, "{query}");
    }

    // an edit that changes nothing leaves the CAM unchanged
    send(&app, "POST", &format!("/api/session/{id}/inpaint"), Some(json!({"mask": mask_b64(&Mask::new(48, 40)), "algorithm": "telea"}))).await;
    let (_, v) = send_json(&app, "GET", &format!("/api/session/{id}/cam?class=3&mode=raw"), None).await;
    let again: CamResponse = parse(v);
    assert_eq!(again, raw);
}

#[tokio::test]
async fn labels_route() {
    let app = app(&toy_state(|_| {}));
    let (status, v) = send_json(&app, "GET", "/api/labels", None).await;
    assert_eq!(status, StatusCode::OK);
    let labels: Vec<String> = serde_json::from_value(v["labels"].clone()).unwrap();
    assert_eq!(labels.len(), 10);
    assert_eq!(labels[0], "dock");
    assert_eq!(labels[1], "ocean liner");
}

#[tokio::test]
async fn reject_mode_answers_409_while_busy() {
    let state = toy_state(|c| c.busy_mode = BusyMode::Reject);
    let app = app(&state);
    let id = create(&app, &fixture_bytes("image.png")).await;
    let guard = state.store.write(&id).await.unwrap();
    let body = json!({"mask": mask_b64(&rect_mask(1, 1, 3, 3)), "algorithm": "telea"});
    let (status, _) = send(&app, "POST", &format!("/api/session/{id}/inpaint"), Some(body.clone())).await;
    assert_eq!(status, StatusCode::CONFLICT);
    drop(guard);
    let (status, _) = send(&app, "POST", &format!("/api/session/{id}/inpaint"), Some(body)).await;
    assert_eq!(status, StatusCode::OK);
}

#[tokio::test]
async fn wait_mode_queues_behind_running_edit() {
    let state = toy_state(|_| {});
    let app = app(&state);
    let id = create(&app, &fixture_bytes("image.png")).await;
    let guard = state.store.write(&id).await.unwrap();
    let body = json!({"mask": mask_b64(&rect_mask(1, 1, 3, 3)), "algorithm": "telea"});
    let uri = format!("/api/session/{id}/inpaint");
    let app2 = app.clone();
    let pending = tokio::spawn(async move { send(&app2, "POST", &uri, Some(body)).await.0 });
    tokio::time::sleep(Duration::from_millis(50)).await;
    assert!(!pending.is_finished());
    drop(guard);
    assert_eq!(pending.await.unwrap(), StatusCode::OK);
}

#[tokio::test]
async fn static_dir_is_served_outside_api() {
    let dir = std::env::temp_dir().join(format!("whatif-static-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    std::fs::write(dir.join("index.html"), "<p>hi</p>").unwrap();
    let app = app(&toy_state(|c| c.static_dir = Some(dir.clone())));
    let (status, body) = send(&app, "GET", "/index.html", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, b"<p>hi</p>");
    std::fs::remove_dir_all(&dir).unwrap();
}
