//! WebAssembly bindings for the browser demo. Pixels cross the boundary as
//! canvas-style RGBA bytes; the small fixture classifier is compiled in.

use std::collections::HashMap;
use std::sync::OnceLock;

use wasm_bindgen::prelude::*;
use whatif_core::model::DEFAULT_TOP_K;
use whatif_core::{
    classify, compute_cam, inpaint, load_model, render_overlay, Algorithm, ClassScores, ImageBuffer, InpaintOptions,
    Mask, ModelGraph,
};

macro_rules! toy_blob {
    ($name:literal) => {
        ($name, include_bytes!(concat!("../../../fixtures/toy/", $name)).as_slice())
    };
}

const MANIFEST: &[u8] = include_bytes!("../../../fixtures/toy/model.json");
const BLOBS: &[(&str, &[u8])] = &[
    toy_blob!("conv1.weight.bin"),
    toy_blob!("conv1.bias.bin"),
    toy_blob!("fire2_squeeze.weight.bin"),
    toy_blob!("fire2_squeeze.bias.bin"),
    toy_blob!("fire2_expand1x1.weight.bin"),
    toy_blob!("fire2_expand1x1.bias.bin"),
    toy_blob!("fire2_expand3x3.weight.bin"),
    toy_blob!("fire2_expand3x3.bias.bin"),
    toy_blob!("conv10.weight.bin"),
    toy_blob!("conv10.bias.bin"),
    toy_blob!("labels.txt"),
];

pub fn model() -> &'static ModelGraph {
    static MODEL: OnceLock<ModelGraph> = OnceLock::new();
    MODEL.get_or_init(|| {
        let blobs: HashMap<String, Vec<u8>> = BLOBS.iter().map(|(k, v)| (k.to_string(), v.to_vec())).collect();
        load_model(MANIFEST, &blobs).expect("embedded model is valid")
    })
}

fn check_len(what: &str, bytes: &[u8], width: usize, height: usize) -> Result<(), String> {
    if bytes.len() != width * height * 4 {
        return Err(format!(
            "{what}: expected {} RGBA bytes for {width}x{height}, got {}",
            width * height * 4,
            bytes.len()
        ));
    }
    Ok(())
}

/// Opaque RGB view of RGBA bytes; alpha is ignored.
pub fn image_from_rgba(rgba: &[u8], width: usize, height: usize) -> Result<ImageBuffer, String> {
    check_len("image", rgba, width, height)?;
    let data = rgba
        .chunks_exact(4)
        .flat_map(|p| [p[0], p[1], p[2]])
        .map(|v| v as f32 / 255.0)
        .collect();
    ImageBuffer::new(width, height, 3, data).map_err(|e| e.to_string())
}

/// A pixel is part of the hole when its alpha is at least 128.
pub fn mask_from_rgba(rgba: &[u8], width: usize, height: usize) -> Result<Mask, String> {
    check_len("mask", rgba, width, height)?;
    let bits = rgba.chunks_exact(4).map(|p| p[3] >= 128).collect();
    Mask::from_bits(width, height, bits).map_err(|e| e.to_string())
}

pub fn rgba_from_image(img: &ImageBuffer) -> Vec<u8> {
    let rgb = img.to_rgb();
    rgb.data()
        .chunks_exact(3)
        .flat_map(|p| {
            let q = |v: f32| whatif_core::raster::quantize(v);
            [q(p[0]), q(p[1]), q(p[2]), 255]
        })
        .collect()
}

pub fn inpaint_rgba_impl(
    rgba: &[u8],
    mask_rgba: &[u8],
    width: usize,
    height: usize,
    algorithm: &str,
    seed: u64,
) -> Result<Vec<u8>, String> {
    let img = image_from_rgba(rgba, width, height)?;
    let mask = mask_from_rgba(mask_rgba, width, height)?;
    let algorithm: Algorithm = algorithm.parse()?;
    let options = InpaintOptions {
        seed: Some(seed),
        ..Default::default()
    };
    let out = inpaint(&img, &mask, algorithm, &options).map_err(|e| e.to_string())?;
    Ok(rgba_from_image(&out))
}

pub fn classify_rgba_impl(rgba: &[u8], width: usize, height: usize) -> Result<ClassScores, String> {
    let img = image_from_rgba(rgba, width, height)?;
    classify(model(), &img, DEFAULT_TOP_K).map_err(|e| e.to_string())
}

pub fn cam_overlay_rgba_impl(
    rgba: &[u8],
    width: usize,
    height: usize,
    class_id: usize,
    alpha: f32,
) -> Result<Vec<u8>, String> {
    let img = image_from_rgba(rgba, width, height)?;
    let heat = compute_cam(model(), &img, class_id).map_err(|e| e.to_string())?;
    let out = render_overlay(&heat, &img, alpha).map_err(|e| e.to_string())?;
    Ok(rgba_from_image(&out))
}

/// Fills the masked pixels. `algorithm` is `"telea"` or `"patchmatch"`;
/// `seed` only affects PatchMatch.
#[wasm_bindgen]
pub fn inpaint_rgba(
    rgba: &[u8],
    mask_rgba: &[u8],
    width: usize,
    height: usize,
    algorithm: &str,
    seed: u32,
) -> Result<Vec<u8>, JsError> {
    inpaint_rgba_impl(rgba, mask_rgba, width, height, algorithm, seed as u64).map_err(|e| JsError::new(&e))
}

/// Top-5 table as a JSON string.
#[wasm_bindgen]
pub fn classify_rgba(rgba: &[u8], width: usize, height: usize) -> Result<String, JsError> {
    let scores = classify_rgba_impl(rgba, width, height).map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&scores).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn cam_overlay_rgba(rgba: &[u8], width: usize, height: usize, class_id: usize, alpha: f32) -> Result<Vec<u8>, JsError> {
    cam_overlay_rgba_impl(rgba, width, height, class_id, alpha).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn labels() -> Vec<String> {
    model().labels().to_vec()
}
