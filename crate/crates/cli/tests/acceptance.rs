//! End-to-end acceptance run. Prints one line per criterion and exits
//! non-zero if any hard criterion fails. Latency is reported but never fails
//! the run. Set `WHATIF_BLESS=1` to (re)write the golden response files.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;
use whatif_cli::bench;
use whatif_core::model::DEFAULT_TOP_K;
use whatif_core::patchmatch::{nnf_iterate, seeded_rng, NearestNeighborField};
use whatif_core::raster::DEFAULT_MASK_THRESHOLD;
use whatif_core::tensor::{conv2d, global_avg_pool, maxpool2d, softmax};
use whatif_core::{
    classify, compute_cam, decode_image, encode_image, inpaint, inpaint_patchmatch, inpaint_telea, load_model,
    mask_from_image, march_distance, Algorithm, ClassScores, ImageBuffer, InpaintOptions, Mask, ModelGraph, PatchMatchParams,
};
use whatif_service::{router, AppState, ServiceConfig, Session, SessionSnapshot};
use whatif_testkit::{
    brute_force_boundary_distance, close, conv2d_naive, disk_mask, exhaustive_nnf, fixtures_dir, gap_naive,
    maxpool_naive, periodic_texture, random_cam_model, random_image, random_tensor, rng, single_hole_fill,
    softmax_naive, toy_model_path,
};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

// ---- 1: operators ------------------------------------------------------------

fn operator_oracles() -> Outcome {
    const CASES: usize = 128;
    let start = Instant::now();
    let mut r = rng(0xC0FFEE);
    use rand::Rng;
    for case in 0..CASES {
        let cin = r.random_range(1..5usize);
        let cout = r.random_range(1..6usize);
        let (h, w) = (r.random_range(3..12usize), r.random_range(3..12usize));
        let k = [1, 2, 3][r.random_range(0..3usize)];
        let stride = r.random_range(1..3usize);
        let pad = r.random_range(0..2usize);
        let x = random_tensor(&mut r, &[1, cin, h, w], 1.0);
        let wt = random_tensor(&mut r, &[cout, cin, k, k], 1.0);
        let b = random_tensor(&mut r, &[cout], 1.0);
        let got = conv2d(&x, &wt, &b, stride, pad).map_err(|e| e.to_string())?;
        let want = conv2d_naive(&x, &wt, &b, stride, pad);
        ensure!(got.data().len() == want.len(), "conv case {case}: length");
        for (g, w) in got.data().iter().zip(&want) {
            ensure!(close(*g as f64, *w, 1e-5), "conv case {case}: {g} vs {w}");
        }
    }
    for case in 0..CASES {
        let c = r.random_range(1..5usize);
        let (h, w) = (r.random_range(3..14usize), r.random_range(3..14usize));
        let k = r.random_range(2..4usize);
        let s = r.random_range(1..3usize);
        let x = random_tensor(&mut r, &[1, c, h, w], 3.0);
        let got = maxpool2d(&x, k, s).map_err(|e| e.to_string())?;
        let want = maxpool_naive(&x, k, s);
        ensure!(got.data().len() == want.len(), "maxpool case {case}: length");
        for (g, w) in got.data().iter().zip(&want) {
            ensure!(close(*g as f64, *w, 1e-5), "maxpool case {case}: {g} vs {w}");
        }
    }
    for case in 0..CASES {
        let c = r.random_range(1..8usize);
        let (h, w) = (r.random_range(1..10usize), r.random_range(1..10usize));
        let x = random_tensor(&mut r, &[1, c, h, w], 5.0);
        let got = global_avg_pool(&x).map_err(|e| e.to_string())?;
        for (g, w) in got.data().iter().zip(gap_naive(&x)) {
            ensure!(close(*g as f64, w, 1e-5), "gap case {case}: {g} vs {w}");
        }
    }
    for case in 0..CASES {
        let c = r.random_range(1..20usize);
        let x = random_tensor(&mut r, &[1, c, 1, 1], 30.0);
        let got = softmax(&x).map_err(|e| e.to_string())?;
        for (g, w) in got.data().iter().zip(softmax_naive(x.data())) {
            ensure!(close(*g as f64, w, 1e-5), "softmax case {case}: {g} vs {w}");
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure!(secs < 30.0, "took {secs:.1} s (limit 30 s)");
    Ok(format!("{CASES} cases each for conv2d/maxpool2d/gap/softmax in {secs:.2} s"))
}

// ---- 2: CAM identity -----------------------------------------------------------

fn cam_identity() -> Outcome {
    const MODELS: u64 = 24;
    let mut worst = 0.0f64;
    for seed in 0..MODELS {
        let classes = 3 + (seed as usize % 6);
        let (manifest, blobs) = random_cam_model(seed, classes);
        let graph = load_model(&manifest, &blobs).map_err(|e| e.to_string())?;
        let img = random_image(&mut rng(seed + 1000), 20 + seed as usize, 15, 3);
        let logits = graph.forward_image(&img).map_err(|e| e.to_string())?.logits;
        let mut best = (f64::NEG_INFINITY, 0);
        for (c, &logit) in logits.iter().enumerate() {
            let mean = compute_cam(&graph, &img, c).map_err(|e| e.to_string())?.raw_mean();
            worst = worst.max((mean - logit as f64).abs());
            ensure!((mean - logit as f64).abs() <= 1e-4, "model {seed} class {c}: mean {mean} vs logit {logit}");
            if mean > best.0 {
                best = (mean, c);
            }
        }
        let top1 = classify(&graph, &img, 1).map_err(|e| e.to_string())?.topk[0].class_id;
        ensure!(top1 == best.1, "model {seed}: classify top-1 {top1}, CAM top-1 {}", best.1);
    }
    Ok(format!("{MODELS} random models, max |mean(CAM) - logit| = {worst:.2e}, top-1 agrees"))
}

// ---- 3: Telea -----------------------------------------------------------------

fn telea_suite() -> Outcome {
    let noise = random_image(&mut rng(3), 30, 22, 3);
    let same = inpaint_telea(&noise, &Mask::new(30, 22), 5).map_err(|e| e.to_string())?;
    ensure!(same == noise, "empty mask changed the image");

    let flat = ImageBuffer::filled(40, 30, 3, 0.625);
    let hole = disk_mask(40, 30, 18.0, 14.0, 8.0);
    let out = inpaint_telea(&flat, &hole, 5).map_err(|e| e.to_string())?;
    let dev = out.data().iter().map(|v| (v - 0.625).abs()).fold(0.0f32, f32::max);
    ensure!(dev <= 1e-6, "constant fill deviates by {dev}");

    let ramp = ImageBuffer::from_fn(16, 16, 1, |x, _, _| x as f32 / 15.0);
    let single = Mask::from_fn(16, 16, |x, y| x == 7 && y == 7);
    let v = inpaint_telea(&ramp, &single, 3).map_err(|e| e.to_string())?.get(7, 7, 0) as f64;
    let oracle = single_hole_fill(&ramp, 7, 7, 3, 0);
    ensure!((v - oracle).abs() <= 1.0 / 255.0, "single hole {v} vs oracle {oracle}");

    let disk = disk_mask(32, 32, 15.5, 15.5, 11.0);
    let t = march_distance(&disk).map_err(|e| e.to_string())?;
    let truth = brute_force_boundary_distance(&disk);
    let worst = t.iter().zip(&truth).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    ensure!(worst < 0.9, "distance deviates by {worst}");

    let mask = disk_mask(30, 22, 12.0, 10.0, 6.0);
    let a = inpaint_telea(&noise, &mask, 5).map_err(|e| e.to_string())?;
    let b = inpaint_telea(&noise, &mask, 5).map_err(|e| e.to_string())?;
    ensure!(a == b, "two runs differ");
    Ok(format!(
        "identity, flat fill (dev {dev:.1e}), single hole |{:.2e}|, distance max err {worst:.3}, deterministic",
        (v - oracle).abs()
    ))
}

// ---- 4: PatchMatch --------------------------------------------------------------

fn patchmatch_suite() -> Outcome {
    let start = Instant::now();
    let img = random_image(&mut rng(0), 32, 32, 3);
    let mask = Mask::from_fn(32, 32, |x, y| (13..19).contains(&x) && (13..19).contains(&y));
    let mut calls = 0;
    let mut ratio = 0.0;
    for seed in 0..4u64 {
        let mut r = seeded_rng(seed);
        let mut nnf = NearestNeighborField::random(&img, &mask, 7, &mut r).map_err(|e| e.to_string())?;
        for it in 0..5 {
            let before = nnf.total_cost();
            nnf = nnf_iterate(nnf, &img, &mask, it, 0.5, &mut r);
            calls += 1;
            ensure!(nnf.total_cost() <= before, "seed {seed} iteration {it}: cost rose {before} -> {}", nnf.total_cost());
        }
        if seed == 0 {
            let best: f64 = exhaustive_nnf(&img, &mask, 7).iter().map(|e| e.2).sum();
            ratio = nnf.total_cost() / best;
            ensure!(ratio <= 1.25, "cost ratio {ratio:.3} vs exhaustive");
        }
    }

    let mut fractions = Vec::new();
    for seed in 0..3u64 {
        let tex = periodic_texture(64, 64, 8, seed);
        let hole = Mask::from_fn(64, 64, |x, y| (28..36).contains(&x) && (28..36).contains(&y));
        let out = inpaint_patchmatch(&tex, &hole, &PatchMatchParams::default()).map_err(|e| e.to_string())?;
        let good = (28..36)
            .flat_map(|y| (28..36).map(move |x| (x, y)))
            .filter(|&(x, y)| (0..3).all(|c| (out.get(x, y, c) - tex.get(x, y, c)).abs() <= 0.05))
            .count();
        let frac = good as f64 / 64.0;
        ensure!(frac >= 0.95, "texture {seed}: only {:.1}% within 0.05", frac * 100.0);
        fractions.push(frac);
    }

    let photo = random_image(&mut rng(5), 50, 40, 3);
    let hole = disk_mask(50, 40, 24.0, 20.0, 6.0);
    let p = PatchMatchParams {
        rng_seed: 99,
        ..Default::default()
    };
    let a = inpaint_patchmatch(&photo, &hole, &p).map_err(|e| e.to_string())?;
    let b = inpaint_patchmatch(&photo, &hole, &p).map_err(|e| e.to_string())?;
    ensure!(a == b, "seeded runs differ");

    let secs = start.elapsed().as_secs_f64();
    ensure!(secs < 60.0, "took {secs:.1} s (limit 60 s)");
    let min_frac = fractions.iter().cloned().fold(1.0, f64::min);
    Ok(format!(
        "{calls} monotone iterations, cost ratio {ratio:.3}, texture continuation >= {:.1}%, bit-identical, {secs:.2} s",
        min_frac * 100.0
    ))
}

// ---- 5: service replayability -----------------------------------------------------

fn toy_state(edit: impl FnOnce(&mut ServiceConfig)) -> AppState {
    let mut config = ServiceConfig::new(toy_model_path());
    edit(&mut config);
    let graph = ModelGraph::load_path(&config.model_path).expect("toy model loads");
    AppState::new(graph, config)
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Vec<u8>) {
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
    (status, resp.into_body().collect().await.unwrap().to_bytes().to_vec())
}

async fn call_json(app: &Router, method: &str, uri: &str, body: Option<Value>) -> Result<Value, String> {
    let (status, bytes) = call(app, method, uri, body).await;
    ensure!(status == StatusCode::OK, "{method} {uri}: {status} {}", String::from_utf8_lossy(&bytes));
    serde_json::from_slice(&bytes).map_err(|e| e.to_string())
}

fn b64(bytes: &[u8]) -> String {
    STANDARD.encode(bytes)
}

fn png_b64(img: &ImageBuffer) -> String {
    b64(&encode_image(img).unwrap())
}

fn fixture(name: &str) -> Vec<u8> {
    std::fs::read(fixtures_dir().join("toy").join(name)).expect("fixture present")
}

fn fixture_mask() -> Mask {
    mask_from_image(&decode_image(&fixture("mask.png")).unwrap(), DEFAULT_MASK_THRESHOLD).unwrap()
}

#[derive(Clone)]
enum Step {
    Inpaint(Mask, Algorithm, InpaintOptions),
    Undo,
}

fn script(i: usize, w: usize, h: usize) -> Vec<Step> {
    let a = disk_mask(w, h, 8.0 + i as f64, 10.0, 4.0);
    let b = Mask::from_fn(w, h, |x, y| (20..26).contains(&x) && (4 + i..9 + i).contains(&y));
    let c = disk_mask(w, h, 30.0 - i as f64, 22.0, 3.5);
    let seeded = InpaintOptions {
        seed: Some(i as u64),
        ..Default::default()
    };
    vec![
        Step::Inpaint(a, Algorithm::Telea, InpaintOptions::default()),
        Step::Inpaint(b, Algorithm::Patchmatch, seeded),
        Step::Undo,
        Step::Inpaint(c, Algorithm::Patchmatch, seeded),
        Step::Inpaint(Mask::new(w, h), Algorithm::Telea, InpaintOptions::default()),
    ]
}

async fn replayability() -> Outcome {
    // replay from a snapshot written by the service
    let dir = std::env::temp_dir().join(format!("whatif-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let state = toy_state(|c| c.snapshot_dir = Some(dir.clone()));
    let app = router(state.clone());
    let created = call_json(&app, "POST", "/api/session", Some(json!({"image": b64(&fixture("image.png"))}))).await?;
    let id = created["session_id"].as_str().unwrap().to_owned();
    let steps = script(0, 48, 40);
    for step in &steps {
        match step {
            Step::Inpaint(mask, algorithm, options) => {
                let body = json!({"mask": png_b64(&mask.to_image()), "algorithm": algorithm, "params": options});
                call_json(&app, "POST", &format!("/api/session/{id}/inpaint"), Some(body)).await?;
            }
            Step::Undo => {
                call_json(&app, "POST", &format!("/api/session/{id}/undo"), None).await?;
            }
        }
    }
    let snapshot = SessionSnapshot::read_from(&dir.join(format!("{id}.json"))).map_err(|e| e.to_string())?;
    let replayed = snapshot.replay().map_err(|e| e.to_string())?;
    let live = state.store.read(&id).await.map_err(|e| e.to_string())?.current().clone();
    ensure!(snapshot.edits.len() == 3, "snapshot holds {} edits, expected 3", snapshot.edits.len());
    ensure!(replayed == live, "replayed image differs from the live session");
    std::fs::remove_dir_all(&dir).ok();

    // eight sessions driven concurrently, each checked against a private
    // sequential run of the same script
    let state = toy_state(|_| {});
    let app = router(state.clone());
    let graph = ModelGraph::load_path(&toy_model_path()).unwrap();
    let mut tasks = Vec::new();
    for i in 0..8usize {
        let app = app.clone();
        let img = random_image(&mut rng(500 + i as u64), 40, 30, 3);
        let png = encode_image(&img).unwrap();
        tasks.push(tokio::spawn(async move {
            let created = call_json(&app, "POST", "/api/session", Some(json!({"image": b64(&png)}))).await?;
            let id = created["session_id"].as_str().unwrap().to_owned();
            let mut responses = Vec::new();
            for step in script(i, 40, 30) {
                tokio::task::yield_now().await;
                let v = match step {
                    Step::Inpaint(mask, algorithm, options) => {
                        let body = json!({"mask": png_b64(&mask.to_image()), "algorithm": algorithm, "params": options});
                        call_json(&app, "POST", &format!("/api/session/{id}/inpaint"), Some(body)).await?
                    }
                    Step::Undo => call_json(&app, "POST", &format!("/api/session/{id}/undo"), None).await?,
                };
                let scores: ClassScores = serde_json::from_value(v["scores"].clone()).map_err(|e| e.to_string())?;
                responses.push((v["image"].as_str().unwrap().to_owned(), scores));
            }
            Ok::<_, String>((i, id, png, responses))
        }));
    }
    for task in tasks {
        let (i, id, png, responses) = task.await.map_err(|e| e.to_string())??;
        let original = decode_image(&png).unwrap();
        let scores = classify(&graph, &original, DEFAULT_TOP_K).unwrap();
        let mut reference = Session::new(format!("ref-{i}"), original, scores, 20);
        for (k, step) in script(i, 40, 30).into_iter().enumerate() {
            match step {
                Step::Inpaint(mask, algorithm, options) => {
                    reference.apply_inpaint(&graph, mask, algorithm, options).map_err(|e| e.to_string())?;
                }
                Step::Undo => {
                    reference.undo();
                }
            }
            ensure!(responses[k].0 == png_b64(reference.current()), "session {i} step {k}: image differs from isolated run");
            ensure!(
                responses[k].1 == *reference.scores(),
                "session {i} step {k}: scores differ from isolated run"
            );
        }
        let live = state.store.read(&id).await.map_err(|e| e.to_string())?;
        ensure!(live.current() == reference.current(), "session {i}: final image differs");
    }

    // n inpaints then n undos
    let state = toy_state(|_| {});
    let app = router(state.clone());
    let created = call_json(&app, "POST", "/api/session", Some(json!({"image": b64(&fixture("image.png"))}))).await?;
    let id = created["session_id"].as_str().unwrap().to_owned();
    let original = state.store.read(&id).await.unwrap().original().clone();
    let n = 6;
    for k in 0..n {
        let mask = disk_mask(48, 40, 6.0 + 7.0 * k as f64, 20.0, 4.0);
        let algorithm = if k % 2 == 0 { "telea" } else { "patchmatch" };
        let body = json!({"mask": png_b64(&mask.to_image()), "algorithm": algorithm});
        call_json(&app, "POST", &format!("/api/session/{id}/inpaint"), Some(body)).await?;
    }
    for _ in 0..n {
        let v = call_json(&app, "POST", &format!("/api/session/{id}/undo"), None).await?;
        ensure!(v["history_empty"] == false, "undo stack ran out early");
    }
    ensure!(*state.store.read(&id).await.unwrap().current() == original, "undo x{n} did not restore the original");
    let v = call_json(&app, "POST", &format!("/api/session/{id}/undo"), None).await?;
    ensure!(v["history_empty"] == true, "extra undo not flagged");
    ensure!(v["image"] == created["image"], "extra undo changed the image");

    Ok(format!("snapshot replay bit-exact, 8 concurrent sessions isolated, undo x{n} restores original"))
}

// ---- 6: latency ------------------------------------------------------------------

fn latency() -> (bool, String) {
    let profile = if cfg!(debug_assertions) { "debug build" } else { "release build" };
    match bench::run(bench::Suite::All, 3, None) {
        Ok(reports) => {
            let ok = reports.iter().all(|r| r.within_budget());
            let parts: Vec<String> = reports
                .iter()
                .filter(|r| r.budget_ms.is_some())
                .map(|r| {
                    format!(
                        "{} {:.0} ms{}",
                        r.op,
                        r.median_ms,
                        if r.within_budget() { "" } else { " (over)" }
                    )
                })
                .collect();
            (ok, format!("{}; {profile}", parts.join(", ")))
        }
        Err(e) => (false, format!("benchmark failed: {e:#}")),
    }
}

// ---- 7: golden -------------------------------------------------------------------

fn golden_dir() -> PathBuf {
    fixtures_dir().join("golden")
}

async fn fixture_responses() -> Result<Vec<(&'static str, Vec<u8>)>, String> {
    let state = toy_state(|_| {});
    let app = router(state);
    let created = call_json(&app, "POST", "/api/session", Some(json!({"image": b64(&fixture("image.png"))}))).await?;
    let id = created["session_id"].as_str().unwrap().to_owned();
    let mask_b64 = b64(&fixture("mask.png"));
    let mut out = Vec::new();

    let body = json!({"mask": mask_b64, "algorithm": "telea"});
    let (status, telea) = call(&app, "POST", &format!("/api/session/{id}/inpaint"), Some(body)).await;
    ensure!(status == StatusCode::OK, "telea inpaint returned {status}");
    out.push(("inpaint_telea.json", telea));

    let (status, cam) = call(&app, "GET", &format!("/api/session/{id}/cam?class=1&mode=overlay"), None).await;
    ensure!(status == StatusCode::OK, "cam returned {status}");
    out.push(("cam_overlay_class1.json", cam));

    call_json(&app, "POST", &format!("/api/session/{id}/undo"), None).await?;
    let body = json!({"mask": mask_b64, "algorithm": "patchmatch", "params": {"seed": 7}});
    let (status, pm) = call(&app, "POST", &format!("/api/session/{id}/inpaint"), Some(body)).await;
    ensure!(status == StatusCode::OK, "patchmatch inpaint returned {status}");
    out.push(("inpaint_patchmatch_seed7.json", pm));
    Ok(out)
}

async fn golden() -> Outcome {
    let first = fixture_responses().await?;
    let second = fixture_responses().await?;
    ensure!(first == second, "two fresh services produced different bytes");

    // sanity of the telea response before it is compared or blessed
    let telea: Value = serde_json::from_slice(&first[0].1).map_err(|e| e.to_string())?;
    let filled = decode_image(&STANDARD.decode(telea["image"].as_str().unwrap()).unwrap()).unwrap();
    let original = decode_image(&fixture("image.png")).unwrap();
    let mask = fixture_mask();
    let direct = inpaint(&original, &mask, Algorithm::Telea, &InpaintOptions::default()).unwrap();
    ensure!(encode_image(&direct).unwrap() == encode_image(&filled).unwrap(), "service result differs from direct call");
    ensure!(telea["scores"]["topk"].as_array().unwrap().len() == 5, "top-5 table missing");

    let bless = std::env::var_os("WHATIF_BLESS").is_some();
    let dir = golden_dir();
    if bless {
        std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    }
    for (name, bytes) in &first {
        let path = dir.join(name);
        if bless {
            std::fs::write(&path, bytes).map_err(|e| e.to_string())?;
            continue;
        }
        let want = std::fs::read(&path).map_err(|e| format!("{}: {e} (run with WHATIF_BLESS=1 once)", path.display()))?;
        ensure!(&want == bytes, "{name} differs from golden");
    }
    Ok(format!(
        "{} responses {}",
        first.len(),
        if bless { "blessed" } else { "match golden bytes" }
    ))
}

// ---- driver ------------------------------------------------------------------------

fn run(n: usize, name: &str, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        Err(p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panicked".into()))
    });
    let secs = start.elapsed().as_secs_f64();
    match &outcome {
        Ok(detail) => println!("criterion {n} PASS  {name}: {detail} [{secs:.1} s]"),
        Err(detail) => println!("criterion {n} FAIL  {name}: {detail} [{secs:.1} s]"),
    }
    outcome.is_ok()
}

fn main() -> ExitCode {
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .worker_threads(4)
        .enable_all()
        .build()
        .unwrap();
    let timeout = Duration::from_secs(600);
    let block = |fut: std::pin::Pin<Box<dyn std::future::Future<Output = Outcome> + Send>>| {
        runtime.block_on(async {
            tokio::time::timeout(timeout, fut)
                .await
                .unwrap_or_else(|_| Err("timed out".into()))
        })
    };

    let mut ok = true;
    ok &= run(1, "operator oracles", operator_oracles);
    ok &= run(2, "CAM identity", cam_identity);
    ok &= run(3, "Telea suite", telea_suite);
    ok &= run(4, "PatchMatch suite", patchmatch_suite);
    ok &= run(5, "service replayability", || block(Box::pin(replayability())));
    let (fast, detail) = latency();
    println!("criterion 6 {}  latency budget: {detail}", if fast { "PASS" } else { "WARN" });
    ok &= run(7, "end-to-end golden", || block(Box::pin(golden())));

    if ok {
        println!("acceptance: all hard criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: FAILED");
        ExitCode::FAILURE
    }
}
