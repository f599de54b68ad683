//! File-level wrappers over the engine. Each function reads its inputs,
//! makes one library call and writes or returns the result.

use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use whatif_core::raster::DEFAULT_MASK_THRESHOLD;
use whatif_core::{
    classify, compute_cam, decode_image, encode_image, inpaint, mask_from_image, render_overlay, Algorithm,
    ClassScores, ImageBuffer, InpaintOptions, Mask, ModelGraph,
};

pub fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).with_context(|| format!("reading {}", path.display()))
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

pub fn load_image(path: &Path) -> Result<ImageBuffer> {
    let bytes = read_file(path)?;
    decode_image(&bytes).with_context(|| format!("decoding {}", path.display()))
}

/// Color masks are reduced to intensity before thresholding.
pub fn load_mask(path: &Path) -> Result<Mask> {
    let img = load_image(path)?;
    let gray = if img.channels() == 1 { img } else { img.to_gray() };
    Ok(mask_from_image(&gray, DEFAULT_MASK_THRESHOLD)?)
}

pub fn load_model(path: &Path) -> Result<ModelGraph> {
    ModelGraph::load_path(path).with_context(|| format!("loading model {}", path.display()))
}

pub fn classify_file(model: &Path, image: &Path, k: usize) -> Result<ClassScores> {
    let graph = load_model(model)?;
    let img = load_image(image)?;
    Ok(classify(&graph, &img, k)?)
}

pub fn inpaint_file(
    image: &Path,
    mask: &Path,
    algorithm: Algorithm,
    options: &InpaintOptions,
    out: &Path,
) -> Result<()> {
    let img = load_image(image)?;
    let mask = load_mask(mask)?;
    let filled = inpaint(&img, &mask, algorithm, options)?;
    write_file(out, &encode_image(&filled)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum CamMode {
    Raw,
    Overlay,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CamSummary {
    pub class_id: usize,
    pub label: String,
    pub logit: f32,
    pub map_width: usize,
    pub map_height: usize,
}

pub fn cam_file(model: &Path, image: &Path, class_id: usize, mode: CamMode, alpha: f32, out: &Path) -> Result<CamSummary> {
    let graph = load_model(model)?;
    let img = load_image(image)?;
    let heat = compute_cam(&graph, &img, class_id)?;
    let rendered = match mode {
        CamMode::Raw => heat.upsampled.clone(),
        CamMode::Overlay => render_overlay(&heat, &img, alpha)?,
    };
    write_file(out, &encode_image(&rendered)?)?;
    Ok(CamSummary {
        class_id,
        label: graph.labels()[class_id].clone(),
        logit: heat.logit,
        map_width: heat.map_width,
        map_height: heat.map_height,
    })
}
