use thiserror::Error;

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("decode error at byte {offset}: {message}")]
    Decode { offset: u64, message: String },
    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),
    #[error("expected {expected} channel(s), got {actual}")]
    WrongChannelCount { expected: usize, actual: usize },
    #[error("invalid image: {0}")]
    Invalid(String),
    #[error("encode error: {0}")]
    Encode(String),
}

#[derive(Debug, Error, PartialEq)]
pub enum InpaintError {
    #[error("dimension mismatch: image is {image_w}x{image_h}, mask is {mask_w}x{mask_h}")]
    Dims {
        image_w: usize,
        image_h: usize,
        mask_w: usize,
        mask_h: usize,
    },
    #[error("mask covers the entire image, nothing to fill from")]
    AllUnknown,
    #[error("no source patch of size {patch_size} lies fully outside the hole")]
    NoSource { patch_size: usize },
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("manifest parse error: {0}")]
    Manifest(String),
    #[error("graph error in layer `{layer}`: {message}")]
    Graph { layer: String, message: String },
    #[error("weight error for `{name}`: {message}")]
    Weight { name: String, message: String },
    #[error("graph is not CAM-compatible: {0}")]
    CamIncompatible(String),
    #[error("shape error: {0}")]
    Shape(String),
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error("io error reading `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Error)]
pub enum CamError {
    #[error("class {class_id} out of range (model has {num_classes} classes)")]
    ClassOutOfRange { class_id: usize, num_classes: usize },
    #[error("dimension mismatch: heatmap is {heat_w}x{heat_h}, image is {image_w}x{image_h}")]
    Dims {
        heat_w: usize,
        heat_h: usize,
        image_w: usize,
        image_h: usize,
    },
    #[error("alpha must be within [0, 1], got {0}")]
    Alpha(f32),
    #[error(transparent)]
    Model(#[from] ModelError),
}
