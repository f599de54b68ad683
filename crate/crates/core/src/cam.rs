//! Class activation maps.
//!
//! Models are required to end in `conv2d -> global_avg_pool -> softmax`, so
//! channel `c` of the final convolution is exactly the spatial evidence map
//! for class `c`: its mean is the class logit.

use crate::colormap;
use crate::error::CamError;
use crate::model::ModelGraph;
use crate::raster::{resize_bilinear, ImageBuffer};

pub const DEFAULT_OVERLAY_ALPHA: f32 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct CamHeatmap {
    pub class_id: usize,
    /// Pre-softmax score of `class_id` from the same forward pass.
    pub logit: f32,
    pub map_width: usize,
    pub map_height: usize,
    pub raw: Vec<f32>,
    /// `raw` rescaled to `[0, 1]`; all zeros when the map is flat.
    pub normalized: Vec<f32>,
    /// `normalized` resized to the source image resolution.
    pub upsampled: ImageBuffer,
}

/// Min-max scaling to `[0, 1]`; a flat map becomes all zeros.
pub fn normalize_map(raw: &[f32]) -> Vec<f32> {
    let (lo, hi) = raw.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v as f64), hi.max(v as f64))
    });
    if !(hi > lo) {
        return vec![0.0; raw.len()];
    }
    raw.iter()
        .map(|&v| ((v as f64 - lo) / (hi - lo)).clamp(0.0, 1.0) as f32)
        .collect()
}

impl CamHeatmap {
    /// Assembles a heatmap from a raw class map, upsampling to `image_dims`.
    pub fn from_raw(
        class_id: usize,
        logit: f32,
        map_width: usize,
        map_height: usize,
        raw: Vec<f32>,
        image_dims: (usize, usize),
    ) -> Self {
        let normalized = normalize_map(&raw);
        let small = ImageBuffer::new(map_width, map_height, 1, normalized.clone())
            .expect("normalized map lies in [0, 1]");
        let upsampled = resize_bilinear(&small, image_dims.0, image_dims.1);
        Self {
            class_id,
            logit,
            map_width,
            map_height,
            raw,
            normalized,
            upsampled,
        }
    }

    pub fn raw_mean(&self) -> f64 {
        self.raw.iter().map(|&v| v as f64).sum::<f64>() / self.raw.len() as f64
    }
}

/// Runs the model on `img` and extracts the activation map of `class_id`.
pub fn compute_cam(graph: &ModelGraph, img: &ImageBuffer, class_id: usize) -> Result<CamHeatmap, CamError> {
    let num_classes = graph.num_classes();
    if class_id >= num_classes {
        return Err(CamError::ClassOutOfRange {
            class_id,
            num_classes,
        });
    }
    let out = graph.forward_image(img)?;
    let shape = out.class_maps.shape();
    let (h, w) = (shape[2], shape[3]);
    let raw = out.class_maps.data()[class_id * h * w..(class_id + 1) * h * w].to_vec();
    Ok(CamHeatmap::from_raw(class_id, out.logits[class_id], w, h, raw, img.dims()))
}

/// Blends `img` with the colormapped heatmap:
/// `out = (1 - alpha) * img + alpha * jet(heat)`. Always 3 channels.
pub fn render_overlay(heatmap: &CamHeatmap, img: &ImageBuffer, alpha: f32) -> Result<ImageBuffer, CamError> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(CamError::Alpha(alpha));
    }
    if heatmap.upsampled.dims() != img.dims() {
        return Err(CamError::Dims {
            heat_w: heatmap.upsampled.width(),
            heat_h: heatmap.upsampled.height(),
            image_w: img.width(),
            image_h: img.height(),
        });
    }
    let base = img.to_rgb();
    let heat = heatmap.upsampled.data();
    let (w, h) = img.dims();
    Ok(ImageBuffer::from_fn(w, h, 3, |x, y, c| {
        let color = colormap::jet(heat[y * w + x])[c] as f32 / 255.0;
        (1.0 - alpha) * base.get(x, y, c) + alpha * color
    }))
}
