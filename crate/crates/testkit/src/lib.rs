//! Reference implementations used only by tests. Everything here is
//! written the slow, obvious way and shares no code paths with the engine
//! beyond its public data types.

use std::collections::HashMap;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use whatif_core::{ImageBuffer, Mask, TensorF32};

pub type TestRng = Xoshiro256PlusPlus;

pub fn rng(seed: u64) -> TestRng {
    TestRng::seed_from_u64(seed)
}

/// Workspace-level `fixtures/` directory.
pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn toy_model_path() -> PathBuf {
    fixtures_dir().join("toy/model.json")
}

pub fn random_tensor(rng: &mut TestRng, shape: &[usize], scale: f32) -> TensorF32 {
    let n = shape.iter().product();
    let data = (0..n).map(|_| (rng.random::<f32>() * 2.0 - 1.0) * scale).collect();
    TensorF32::new(shape.to_vec(), data).unwrap()
}

pub fn random_image(rng: &mut TestRng, w: usize, h: usize, channels: usize) -> ImageBuffer {
    ImageBuffer::from_fn(w, h, channels, |_, _, _| rng.random::<f32>())
}

/// Relative closeness with an absolute floor of `tol` near zero.
pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

// ---- operators -----------------------------------------------------------

/// Six nested loops, f64 throughout.
pub fn conv2d_naive(input: &TensorF32, w: &TensorF32, b: &TensorF32, stride: usize, pad: usize) -> Vec<f64> {
    let (n, cin, ih, iw) = dims4(input);
    let (cout, _, kh, kw) = dims4(w);
    let oh = (ih + 2 * pad - kh) / stride + 1;
    let ow = (iw + 2 * pad - kw) / stride + 1;
    let x = input.data();
    let wt = w.data();
    let mut out = Vec::with_capacity(n * cout * oh * ow);
    for bi in 0..n {
        for co in 0..cout {
            for oy in 0..oh {
                for ox in 0..ow {
                    let mut s = b.data()[co] as f64;
                    for ci in 0..cin {
                        for ky in 0..kh {
                            for kx in 0..kw {
                                let iy = (oy * stride + ky) as isize - pad as isize;
                                let ix = (ox * stride + kx) as isize - pad as isize;
                                if iy < 0 || ix < 0 || iy >= ih as isize || ix >= iw as isize {
                                    continue;
                                }
                                let xv = x[((bi * cin + ci) * ih + iy as usize) * iw + ix as usize] as f64;
                                let wv = wt[((co * cin + ci) * kh + ky) * kw + kx] as f64;
                                s += xv * wv;
                            }
                        }
                    }
                    out.push(s);
                }
            }
        }
    }
    out
}

pub fn maxpool_naive(input: &TensorF32, k: usize, s: usize) -> Vec<f64> {
    let (n, c, ih, iw) = dims4(input);
    let (oh, ow) = ((ih - k) / s + 1, (iw - k) / s + 1);
    let x = input.data();
    let mut out = Vec::new();
    for p in 0..n * c {
        for oy in 0..oh {
            for ox in 0..ow {
                let mut m = f64::NEG_INFINITY;
                for dy in 0..k {
                    for dx in 0..k {
                        m = m.max(x[(p * ih + oy * s + dy) * iw + ox * s + dx] as f64);
                    }
                }
                out.push(m);
            }
        }
    }
    out
}

pub fn gap_naive(input: &TensorF32) -> Vec<f64> {
    let (_, _, h, w) = dims4(input);
    input
        .data()
        .chunks(h * w)
        .map(|p| p.iter().map(|&v| v as f64).sum::<f64>() / (h * w) as f64)
        .collect()
}

/// Softmax by direct exponentiation (no max shift) in f64; fine for the
/// modest logits tests feed it.
pub fn softmax_naive(logits: &[f32]) -> Vec<f64> {
    let e: Vec<f64> = logits.iter().map(|&v| (v as f64).exp()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|v| v / s).collect()
}

fn dims4(t: &TensorF32) -> (usize, usize, usize, usize) {
    let s = t.shape();
    (s[0], s[1], s[2], s[3])
}

// ---- random CAM-compatible models ----------------------------------------

/// A random conv -> relu -> pool -> fire -> conv -> GAP -> softmax network,
/// returned as manifest bytes plus its blobs.
pub fn random_cam_model(seed: u64, classes: usize) -> (Vec<u8>, HashMap<String, Vec<u8>>) {
    let mut rng = rng(seed);
    let in_c = if rng.random::<bool>() { 3 } else { 1 };
    let size = 12 + rng.random_range(0..10u32) as usize;
    let c1 = 2 + rng.random_range(0..6u32) as usize;
    let sq = 2 + rng.random_range(0..3u32) as usize;
    let ex = 2 + rng.random_range(0..4u32) as usize;
    let final_k = if rng.random::<bool>() { 1 } else { 3 };
    let mut blobs = HashMap::new();
    let mut layers = Vec::new();

    let mut conv = |rng: &mut TestRng, name: &str, input: &str, cin: usize, cout: usize, k: usize, stride: usize, pad: usize, relu: bool| {
        let w = random_tensor(rng, &[cout, cin, k, k], 0.6);
        let b = random_tensor(rng, &[cout], 0.3);
        blobs.insert(format!("{name}.w"), le_bytes(w.data()));
        blobs.insert(format!("{name}.b"), le_bytes(b.data()));
        let mut l = serde_json::json!({
            "name": name, "op": "conv2d", "inputs": [input],
            "out_channels": cout, "kernel": k, "stride": stride, "padding": pad,
            "weight": {"blob": format!("{name}.w"), "shape": [cout, cin, k, k]},
            "bias": {"blob": format!("{name}.b"), "shape": [cout]},
        });
        if relu {
            l["activation"] = "relu".into();
        }
        layers.push(l);
    };
    conv(&mut rng, "c1", "input", in_c, c1, 3, 1, 1, false);
    conv(&mut rng, "sq", "pool", c1, sq, 1, 1, 0, true);
    conv(&mut rng, "e1", "sq", sq, ex, 1, 1, 0, true);
    conv(&mut rng, "e3", "sq", sq, ex, 3, 1, 1, true);
    conv(&mut rng, "final", "cat", 2 * ex, classes, final_k, 1, final_k / 2, false);
    let mut all = vec![layers[0].clone()];
    all.push(serde_json::json!({"name": "r1", "op": "relu", "inputs": ["c1"]}));
    all.push(serde_json::json!({"name": "pool", "op": "maxpool2d", "inputs": ["r1"], "kernel": 2, "stride": 2}));
    all.extend(layers[1..4].iter().cloned());
    all.push(serde_json::json!({"name": "cat", "op": "concat_channels", "inputs": ["e1", "e3"]}));
    all.push(layers[4].clone());
    all.push(serde_json::json!({"name": "gap", "op": "global_avg_pool", "inputs": ["final"]}));
    all.push(serde_json::json!({"name": "prob", "op": "softmax", "inputs": ["gap"]}));

    let labels: Vec<String> = (0..classes).map(|i| format!("class-{i}")).collect();
    blobs.insert("labels.txt".into(), labels.join("\n").into_bytes());
    let manifest = serde_json::json!({
        "format": "whatif-model/1",
        "name": format!("random-{seed}"),
        "input": {"name": "input", "channels": in_c, "height": size, "width": size,
                  "mean": vec![0.5; in_c], "scale": vec![2.0; in_c]},
        "labels": "labels.txt",
        "layers": all,
    });
    (serde_json::to_vec_pretty(&manifest).unwrap(), blobs)
}

pub fn le_bytes(v: &[f32]) -> Vec<u8> {
    v.iter().flat_map(|f| f.to_le_bytes()).collect()
}

// ---- fast marching / inpainting ---------------------------------------------

/// Euclidean distance from every masked pixel to the nearest unmasked pixel
/// that 4-touches the mask; zero outside the mask.
pub fn brute_force_boundary_distance(mask: &Mask) -> Vec<f64> {
    let (w, h) = mask.dims();
    let mut boundary = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if mask.get(x, y) {
                continue;
            }
            let touches = [(-1i64, 0i64), (1, 0), (0, -1), (0, 1)].iter().any(|&(dx, dy)| {
                let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                nx >= 0 && ny >= 0 && nx < w as i64 && ny < h as i64 && mask.get(nx as usize, ny as usize)
            });
            if touches {
                boundary.push((x as f64, y as f64));
            }
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            if mask.get(x, y) {
                out[y * w + x] = boundary
                    .iter()
                    .map(|&(bx, by)| ((bx - x as f64).powi(2) + (by - y as f64).powi(2)).sqrt())
                    .fold(f64::INFINITY, f64::min);
            }
        }
    }
    out
}

pub fn disk_mask(w: usize, h: usize, cx: f64, cy: f64, r: f64) -> Mask {
    Mask::from_fn(w, h, |x, y| (x as f64 - cx).powi(2) + (y as f64 - cy).powi(2) <= r * r)
}

/// Value the fast-marching fill assigns to an isolated one-pixel hole at
/// (px, py): every neighbor sits at arrival time 0, the hole at 1/sqrt(2),
/// the arrival-time gradient is zero so direction weights are 1, and the
/// weight of neighbor q is `1/|p-q|^2 * 1/(1 + 1/sqrt(2))`.
pub fn single_hole_fill(img: &ImageBuffer, px: usize, py: usize, radius: usize, channel: usize) -> f64 {
    let t_hole = 1.0 / 2f64.sqrt();
    let (mut num, mut den) = (0.0, 0.0);
    for qy in py.saturating_sub(radius)..=(py + radius).min(img.height() - 1) {
        for qx in px.saturating_sub(radius)..=(px + radius).min(img.width() - 1) {
            if (qx, qy) == (px, py) {
                continue;
            }
            let d2 = ((qx as f64 - px as f64).powi(2)) + ((qy as f64 - py as f64).powi(2));
            let w = (1.0 / d2) * (1.0 / (1.0 + t_hole));
            num += w * img.get(qx, qy, channel) as f64;
            den += w;
        }
    }
    num / den
}

// ---- patch search ------------------------------------------------------------

fn ssd_at(img: &ImageBuffer, half: i64, t: (i64, i64), s: (i64, i64)) -> f64 {
    let (w, h) = (img.width() as i64, img.height() as i64);
    let mut sum = 0.0;
    for dy in -half..=half {
        for dx in -half..=half {
            let (tx, ty) = (t.0 + dx, t.1 + dy);
            if tx < 0 || ty < 0 || tx >= w || ty >= h {
                continue;
            }
            for c in 0..img.channels() {
                let d = img.get(tx as usize, ty as usize, c) as f64
                    - img.get((s.0 + dx) as usize, (s.1 + dy) as usize, c) as f64;
                sum += d * d;
            }
        }
    }
    sum
}

/// For each patch center whose patch touches the hole, the best source
/// center found by trying every fully-known, in-bounds patch.
pub fn exhaustive_nnf(img: &ImageBuffer, mask: &Mask, patch_size: usize) -> Vec<((usize, usize), (usize, usize), f64)> {
    let (w, h) = mask.dims();
    let half = (patch_size / 2) as i64;
    let mut sources = Vec::new();
    for cy in half..h as i64 - half {
        for cx in half..w as i64 - half {
            let clean = (-half..=half).all(|dy| (-half..=half).all(|dx| !mask.get((cx + dx) as usize, (cy + dy) as usize)));
            if clean {
                sources.push((cx, cy));
            }
        }
    }
    let mut out = Vec::new();
    for ty in 0..h as i64 {
        for tx in 0..w as i64 {
            let touches = (-half..=half).any(|dy| {
                (-half..=half).any(|dx| {
                    let (x, y) = (tx + dx, ty + dy);
                    x >= 0 && y >= 0 && x < w as i64 && y < h as i64 && mask.get(x as usize, y as usize)
                })
            });
            if !touches {
                continue;
            }
            let mut best = (f64::INFINITY, (0, 0));
            for &s in &sources {
                let c = ssd_at(img, half, (tx, ty), s);
                if c < best.0 {
                    best = (c, s);
                }
            }
            out.push(((tx as usize, ty as usize), (best.1 .0 as usize, best.1 .1 as usize), best.0));
        }
    }
    out
}

/// Hole filling with exhaustive matching and uniform voting, repeated
/// `iterations` times from the given starting image.
pub fn exhaustive_fill(start: &ImageBuffer, mask: &Mask, patch_size: usize, iterations: usize) -> ImageBuffer {
    let (w, h) = start.dims();
    let ch = start.channels();
    let half = (patch_size / 2) as i64;
    let mut cur = start.clone();
    for _ in 0..iterations {
        let nnf = exhaustive_nnf(&cur, mask, patch_size);
        let mut acc = vec![0.0f64; w * h * ch];
        let mut cnt = vec![0usize; w * h];
        for &((tx, ty), (sx, sy), _) in &nnf {
            for dy in -half..=half {
                for dx in -half..=half {
                    let (x, y) = (tx as i64 + dx, ty as i64 + dy);
                    if x < 0 || y < 0 || x >= w as i64 || y >= h as i64 || !mask.get(x as usize, y as usize) {
                        continue;
                    }
                    let q = y as usize * w + x as usize;
                    for c in 0..ch {
                        acc[q * ch + c] += cur.get((sx as i64 + dx) as usize, (sy as i64 + dy) as usize, c) as f64;
                    }
                    cnt[q] += 1;
                }
            }
        }
        cur = ImageBuffer::from_fn(w, h, ch, |x, y, c| {
            let q = y * w + x;
            if cnt[q] > 0 {
                (acc[q * ch + c] / cnt[q] as f64) as f32
            } else {
                cur.get(x, y, c)
            }
        });
    }
    cur
}

/// An image tiled by a random `period` x `period` RGB tile.
pub fn periodic_texture(w: usize, h: usize, period: usize, seed: u64) -> ImageBuffer {
    let mut r = rng(seed);
    let tile: Vec<f32> = (0..period * period * 3).map(|_| r.random::<f32>()).collect();
    ImageBuffer::from_fn(w, h, 3, |x, y, c| tile[((y % period) * period + x % period) * 3 + c])
}
