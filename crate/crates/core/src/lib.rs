//! Engine for interactive classifier exploration: remove image regions by
//! inpainting, re-run a small CNN, and inspect class activation maps.

pub mod cam;
pub mod colormap;
pub mod error;
pub mod model;
pub mod patchmatch;
pub mod raster;
pub mod telea;
pub mod tensor;
pub mod zoo;

pub use cam::{compute_cam, render_overlay, CamHeatmap};
pub use error::{CamError, ImageError, InpaintError, ModelError};
pub use model::{classify, load_model, ClassScores, ModelGraph, ScoredClass};
pub use patchmatch::{inpaint_patchmatch, nnf_iterate, NearestNeighborField, PatchMatchParams};
pub use raster::{decode_image, encode_image, mask_from_image, resize_bilinear, ImageBuffer, Mask};
pub use telea::{inpaint_telea, march_distance};
pub use tensor::TensorF32;

/// Which inpainting algorithm to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Telea,
    Patchmatch,
}

impl std::str::FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "telea" => Ok(Self::Telea),
            "patchmatch" => Ok(Self::Patchmatch),
            other => Err(format!("unknown algorithm `{other}` (expected telea or patchmatch)")),
        }
    }
}

/// Tunables for [`inpaint`]; unset fields fall back to each algorithm's default.
#[derive(Debug, Clone, Copy, Default, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InpaintOptions {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub patch_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pyramid_min: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub search_decay: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl InpaintOptions {
    pub fn patchmatch_params(&self) -> PatchMatchParams {
        let d = PatchMatchParams::default();
        PatchMatchParams {
            patch_size: self.patch_size.unwrap_or(d.patch_size),
            iterations: self.iterations.unwrap_or(d.iterations),
            pyramid_min: self.pyramid_min.unwrap_or(d.pyramid_min),
            search_decay: self.search_decay.unwrap_or(d.search_decay),
            rng_seed: self.seed.unwrap_or(d.rng_seed),
        }
    }
}

/// Dispatches to the selected inpainting algorithm.
pub fn inpaint(
    img: &ImageBuffer,
    mask: &Mask,
    algorithm: Algorithm,
    options: &InpaintOptions,
) -> Result<ImageBuffer, InpaintError> {
    match algorithm {
        Algorithm::Telea => inpaint_telea(img, mask, options.radius.unwrap_or(telea::DEFAULT_RADIUS)),
        Algorithm::Patchmatch => inpaint_patchmatch(img, mask, &options.patchmatch_params()),
    }
}
