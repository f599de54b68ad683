//! Model manifests, graph validation and the forward pass.
//!
//! A model is a JSON manifest plus one raw little-endian `f32` blob per
//! weight tensor (row-major, OIHW for convolution weights) and a labels
//! file with one class name per line. See `docs/model-format.md`.

use std::borrow::Cow;
use std::collections::HashMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::raster::{resize_bilinear, ImageBuffer};
use crate::tensor::{self, TensorF32};

pub const MANIFEST_FORMAT: &str = "whatif-model/1";
pub const DEFAULT_TOP_K: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    #[serde(default)]
    pub name: String,
    pub input: InputSpec,
    /// Blob name of the labels file.
    pub labels: String,
    pub layers: Vec<LayerSpec>,
}

/// Required input geometry and per-channel normalization:
/// `x = (pixel - mean[c]) * scale[c]` with pixels in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputSpec {
    #[serde(default = "default_input_name")]
    pub name: String,
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub mean: Vec<f32>,
    pub scale: Vec<f32>,
}

fn default_input_name() -> String {
    "input".to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub name: String,
    pub inputs: Vec<String>,
    #[serde(flatten)]
    pub op: OpSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum OpSpec {
    Conv2d {
        out_channels: usize,
        kernel: usize,
        #[serde(default = "one")]
        stride: usize,
        #[serde(default)]
        padding: usize,
        weight: BlobRef,
        bias: BlobRef,
        /// Fused activation applied to the convolution output.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        activation: Option<Activation>,
    },
    Relu,
    Maxpool2d {
        kernel: usize,
        stride: usize,
    },
    GlobalAvgPool,
    ConcatChannels,
    Softmax,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlobRef {
    pub blob: String,
    pub shape: Vec<usize>,
}

/// Where weight blobs and the labels file come from.
pub trait BlobSource {
    fn blob(&self, name: &str) -> Option<Cow<'_, [u8]>>;
}

impl BlobSource for HashMap<String, Vec<u8>> {
    fn blob(&self, name: &str) -> Option<Cow<'_, [u8]>> {
        self.get(name).map(|b| Cow::Borrowed(b.as_slice()))
    }
}

/// Blobs stored as files next to the manifest.
#[derive(Debug, Clone)]
pub struct DirBlobs(pub PathBuf);

impl BlobSource for DirBlobs {
    fn blob(&self, name: &str) -> Option<Cow<'_, [u8]>> {
        // blob names are plain relative file names
        if Path::new(name).components().any(|c| !matches!(c, std::path::Component::Normal(_))) {
            return None;
        }
        std::fs::read(self.0.join(name)).ok().map(Cow::Owned)
    }
}

#[derive(Debug, Clone)]
enum Op {
    Conv2d {
        weight: TensorF32,
        bias: TensorF32,
        stride: usize,
        padding: usize,
        relu: bool,
    },
    Relu,
    Maxpool2d {
        kernel: usize,
        stride: usize,
    },
    GlobalAvgPool,
    ConcatChannels,
    Softmax,
}

#[derive(Debug, Clone)]
struct Layer {
    name: String,
    /// Slot indices: 0 is the graph input, layer `i` writes slot `i + 1`.
    inputs: Vec<usize>,
    op: Op,
}

/// A validated, immutable network: topologically ordered layers ending in
/// `conv2d -> global_avg_pool -> softmax`.
#[derive(Debug, Clone)]
pub struct ModelGraph {
    name: String,
    input: InputSpec,
    labels: Vec<String>,
    layers: Vec<Layer>,
    shapes: Vec<Vec<usize>>,
    class_map_layer: usize,
    logits_layer: usize,
}

/// Results of a forward pass that the classifier and CAM both need.
#[derive(Debug, Clone)]
pub struct ForwardOutput {
    /// Output of the final convolution, shape (1, K, h, w).
    pub class_maps: TensorF32,
    /// Spatial means of `class_maps`, one per class.
    pub logits: Vec<f32>,
    pub probabilities: Vec<f32>,
}

fn graph_err(layer: &str, message: impl Into<String>) -> ModelError {
    ModelError::Graph {
        layer: layer.to_string(),
        message: message.into(),
    }
}

fn load_tensor(blobs: &dyn BlobSource, r: &BlobRef) -> Result<TensorF32, ModelError> {
    let bytes = blobs.blob(&r.blob).ok_or_else(|| ModelError::Weight {
        name: r.blob.clone(),
        message: "blob not found".into(),
    })?;
    let expected: usize = r.shape.iter().product();
    if bytes.len() != expected * 4 {
        return Err(ModelError::Weight {
            name: r.blob.clone(),
            message: format!(
                "declared shape {:?} needs {} bytes, blob has {}",
                r.shape,
                expected * 4,
                bytes.len()
            ),
        });
    }
    let data = bytes
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect();
    TensorF32::new(r.shape.clone(), data).map_err(|e| ModelError::Weight {
        name: r.blob.clone(),
        message: e.to_string(),
    })
}

/// Parses and validates a manifest, resolving every weight through `blobs`.
pub fn load_model(manifest: &[u8], blobs: &dyn BlobSource) -> Result<ModelGraph, ModelError> {
    let manifest: Manifest =
        serde_json::from_slice(manifest).map_err(|e| ModelError::Manifest(e.to_string()))?;
    ModelGraph::from_manifest(manifest, blobs)
}

impl ModelGraph {
    /// Loads `manifest.json`-style files with blobs resolved next to it.
    pub fn load_path(manifest_path: &Path) -> Result<Self, ModelError> {
        let bytes = std::fs::read(manifest_path).map_err(|source| ModelError::Io {
            path: manifest_path.display().to_string(),
            source,
        })?;
        let dir = manifest_path.parent().unwrap_or(Path::new(".")).to_path_buf();
        load_model(&bytes, &DirBlobs(dir))
    }

    pub fn from_manifest(manifest: Manifest, blobs: &dyn BlobSource) -> Result<Self, ModelError> {
        if manifest.format != MANIFEST_FORMAT {
            return Err(ModelError::Manifest(format!(
                "unsupported format `{}`, expected `{MANIFEST_FORMAT}`",
                manifest.format
            )));
        }
        let input = manifest.input;
        if input.channels == 0 || input.height == 0 || input.width == 0 {
            return Err(graph_err(&input.name, "input dimensions must be positive"));
        }
        if input.channels != 1 && input.channels != 3 {
            return Err(graph_err(&input.name, "input must have 1 or 3 channels"));
        }
        if input.mean.len() != input.channels || input.scale.len() != input.channels {
            return Err(graph_err(
                &input.name,
                "mean and scale need one entry per input channel",
            ));
        }

        let mut slots: HashMap<String, usize> = HashMap::new();
        slots.insert(input.name.clone(), 0);
        let mut shapes = vec![vec![1, input.channels, input.height, input.width]];
        let mut layers = Vec::with_capacity(manifest.layers.len());

        for spec in manifest.layers {
            let name = spec.name.as_str();
            if slots.contains_key(name) {
                return Err(graph_err(name, "duplicate layer name"));
            }
            let inputs = spec
                .inputs
                .iter()
                .map(|i| {
                    slots
                        .get(i)
                        .copied()
                        .ok_or_else(|| graph_err(name, format!("input `{i}` is not produced earlier")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            let arity_one = |inputs: &[usize]| -> Result<Vec<usize>, ModelError> {
                if inputs.len() != 1 {
                    return Err(graph_err(name, format!("expects 1 input, got {}", inputs.len())));
                }
                Ok(shapes[inputs[0]].clone())
            };

            let (op, shape) = match spec.op {
                OpSpec::Conv2d {
                    out_channels,
                    kernel,
                    stride,
                    padding,
                    weight,
                    bias,
                    activation,
                } => {
                    let in_shape = arity_one(&inputs)?;
                    let expected_w = vec![out_channels, in_shape[1], kernel, kernel];
                    if weight.shape != expected_w {
                        return Err(graph_err(
                            name,
                            format!("weight shape {:?} != expected {expected_w:?}", weight.shape),
                        ));
                    }
                    if bias.shape != [out_channels] {
                        return Err(graph_err(
                            name,
                            format!("bias shape {:?} != [{out_channels}]", bias.shape),
                        ));
                    }
                    let oh = tensor::window_out(in_shape[2], kernel, stride, padding);
                    let ow = tensor::window_out(in_shape[3], kernel, stride, padding);
                    let (Some(oh), Some(ow)) = (oh, ow) else {
                        return Err(graph_err(
                            name,
                            format!("kernel {kernel} does not fit input {:?}", in_shape),
                        ));
                    };
                    let op = Op::Conv2d {
                        weight: load_tensor(blobs, &weight)?,
                        bias: load_tensor(blobs, &bias)?,
                        stride,
                        padding,
                        relu: activation == Some(Activation::Relu),
                    };
                    (op, vec![1, out_channels, oh, ow])
                }
                OpSpec::Relu => (Op::Relu, arity_one(&inputs)?),
                OpSpec::Maxpool2d { kernel, stride } => {
                    let s = arity_one(&inputs)?;
                    let oh = tensor::window_out(s[2], kernel, stride, 0);
                    let ow = tensor::window_out(s[3], kernel, stride, 0);
                    let (Some(oh), Some(ow)) = (oh, ow) else {
                        return Err(graph_err(name, format!("window {kernel} does not fit input {s:?}")));
                    };
                    (Op::Maxpool2d { kernel, stride }, vec![1, s[1], oh, ow])
                }
                OpSpec::GlobalAvgPool => {
                    let s = arity_one(&inputs)?;
                    (Op::GlobalAvgPool, vec![1, s[1], 1, 1])
                }
                OpSpec::ConcatChannels => {
                    if inputs.is_empty() {
                        return Err(graph_err(name, "expects at least 1 input"));
                    }
                    let first = &shapes[inputs[0]];
                    let mut c = 0;
                    for &i in &inputs {
                        let s = &shapes[i];
                        if s[2..] != first[2..] {
                            return Err(graph_err(
                                name,
                                format!("spatial sizes disagree: {first:?} vs {s:?}"),
                            ));
                        }
                        c += s[1];
                    }
                    (Op::ConcatChannels, vec![1, c, first[2], first[3]])
                }
                OpSpec::Softmax => (Op::Softmax, arity_one(&inputs)?),
            };
            slots.insert(spec.name.clone(), layers.len() + 1);
            shapes.push(shape);
            layers.push(Layer {
                name: spec.name,
                inputs,
                op,
            });
        }

        let (class_map_layer, logits_layer) = check_cam_structure(&layers)?;
        let num_classes = shapes[class_map_layer + 1][1];

        let label_bytes = blobs.blob(&manifest.labels).ok_or_else(|| ModelError::Weight {
            name: manifest.labels.clone(),
            message: "labels file not found".into(),
        })?;
        let text = std::str::from_utf8(&label_bytes).map_err(|e| ModelError::Weight {
            name: manifest.labels.clone(),
            message: format!("labels file is not UTF-8: {e}"),
        })?;
        let labels: Vec<String> = text.lines().map(|l| l.trim_end_matches('\r').to_string()).collect();
        if labels.len() != num_classes {
            return Err(ModelError::Weight {
                name: manifest.labels.clone(),
                message: format!("{} labels for {num_classes} classes", labels.len()),
            });
        }

        Ok(Self {
            name: manifest.name,
            input,
            labels,
            layers,
            shapes,
            class_map_layer,
            logits_layer,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn input_spec(&self) -> &InputSpec {
        &self.input
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn num_classes(&self) -> usize {
        self.labels.len()
    }

    /// Spatial size (h, w) of the class activation maps.
    pub fn class_map_dims(&self) -> (usize, usize) {
        let s = &self.shapes[self.class_map_layer + 1];
        (s[2], s[3])
    }

    /// Resizes to the input geometry, matches channel count and applies the
    /// manifest's normalization.
    pub fn preprocess(&self, img: &ImageBuffer) -> TensorF32 {
        let spec = &self.input;
        let resized = resize_bilinear(img, spec.width, spec.height);
        let resized = match (resized.channels(), spec.channels) {
            (1, 3) => resized.to_rgb(),
            (3, 1) => resized.to_gray(),
            _ => resized,
        };
        let plane = spec.width * spec.height;
        let mut data = vec![0.0f32; spec.channels * plane];
        for (p, px) in resized.data().chunks_exact(spec.channels).enumerate() {
            for (c, &v) in px.iter().enumerate() {
                data[c * plane + p] = (v - spec.mean[c]) * spec.scale[c];
            }
        }
        TensorF32::new(vec![1, spec.channels, spec.height, spec.width], data)
            .expect("preprocessed tensor matches input spec")
    }

    pub fn forward(&self, input: &TensorF32) -> Result<ForwardOutput, ModelError> {
        if input.shape() != self.shapes[0].as_slice() {
            return Err(ModelError::Shape(format!(
                "model expects input {:?}, got {:?}",
                self.shapes[0],
                input.shape()
            )));
        }
        let mut slots: Vec<Option<TensorF32>> = vec![None; self.layers.len() + 1];
        slots[0] = Some(input.clone());
        for (i, layer) in self.layers.iter().enumerate() {
            let arg = |k: usize| slots[layer.inputs[k]].as_ref().expect("topological order");
            let out = match &layer.op {
                Op::Conv2d {
                    weight,
                    bias,
                    stride,
                    padding,
                    relu,
                } => {
                    let mut t = tensor::conv2d(arg(0), weight, bias, *stride, *padding)?;
                    if *relu {
                        tensor::relu_in_place(&mut t);
                    }
                    t
                }
                Op::Relu => tensor::relu(arg(0)),
                Op::Maxpool2d { kernel, stride } => tensor::maxpool2d(arg(0), *kernel, *stride)?,
                Op::GlobalAvgPool => tensor::global_avg_pool(arg(0))?,
                Op::ConcatChannels => {
                    let args: Vec<&TensorF32> = (0..layer.inputs.len()).map(arg).collect();
                    tensor::concat_channels(&args)?
                }
                Op::Softmax => tensor::softmax(arg(0))?,
            };
            slots[i + 1] = Some(out);
        }
        let take = |slots: &mut Vec<Option<TensorF32>>, layer: usize| {
            slots[layer + 1].take().expect("layer output computed")
        };
        let probabilities = take(&mut slots, self.layers.len() - 1).into_data();
        let logits = take(&mut slots, self.logits_layer).into_data();
        let class_maps = take(&mut slots, self.class_map_layer);
        Ok(ForwardOutput {
            class_maps,
            logits,
            probabilities,
        })
    }

    pub fn forward_image(&self, img: &ImageBuffer) -> Result<ForwardOutput, ModelError> {
        self.forward(&self.preprocess(img))
    }

    pub fn layer_names(&self) -> impl Iterator<Item = &str> {
        self.layers.iter().map(|l| l.name.as_str())
    }
}

/// Requires exactly one softmax, as the last layer, fed by a global average
/// pool that is itself fed by a convolution. Returns (conv, pool) indices.
fn check_cam_structure(layers: &[Layer]) -> Result<(usize, usize), ModelError> {
    let softmaxes: Vec<usize> = layers
        .iter()
        .enumerate()
        .filter(|(_, l)| matches!(l.op, Op::Softmax))
        .map(|(i, _)| i)
        .collect();
    let &[softmax] = softmaxes.as_slice() else {
        let msg = format!("expected exactly one softmax layer, found {}", softmaxes.len());
        return Err(match layers.last() {
            Some(l) => graph_err(&l.name, msg),
            None => graph_err("<graph>", msg),
        });
    };
    if softmax != layers.len() - 1 {
        return Err(ModelError::CamIncompatible(format!(
            "softmax `{}` must be the final layer",
            layers[softmax].name
        )));
    }
    let pool = layers[softmax].inputs[0];
    let pool_layer = pool.checked_sub(1).map(|i| (i, &layers[i]));
    let Some((pool, pool_layer)) = pool_layer.filter(|(_, l)| matches!(l.op, Op::GlobalAvgPool)) else {
        return Err(ModelError::CamIncompatible(
            "softmax must be fed by a global_avg_pool layer".into(),
        ));
    };
    let conv = pool_layer.inputs[0];
    let conv_layer = conv.checked_sub(1).map(|i| (i, &layers[i]));
    let Some((conv, _)) = conv_layer.filter(|(_, l)| matches!(l.op, Op::Conv2d { .. })) else {
        return Err(ModelError::CamIncompatible(format!(
            "global_avg_pool `{}` must be fed by a conv2d layer",
            pool_layer.name
        )));
    };
    Ok((conv, pool))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredClass {
    pub class_id: usize,
    pub label: String,
    pub probability: f32,
}

/// Full class distribution plus the top-k table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub distribution: Vec<f32>,
    pub topk: Vec<ScoredClass>,
}

impl ClassScores {
    /// Ranks by descending probability, ascending class id on ties.
    pub fn from_distribution(distribution: Vec<f32>, labels: &[String], k: usize) -> Self {
        let mut order: Vec<usize> = (0..distribution.len()).collect();
        order.sort_by(|&a, &b| {
            distribution[b]
                .total_cmp(&distribution[a])
                .then_with(|| a.cmp(&b))
        });
        let topk = order
            .into_iter()
            .take(k)
            .map(|class_id| ScoredClass {
                class_id,
                label: labels.get(class_id).cloned().unwrap_or_default(),
                probability: distribution[class_id],
            })
            .collect();
        Self { distribution, topk }
    }

    pub fn top1(&self) -> Option<&ScoredClass> {
        self.topk.first()
    }
}

pub fn classify(graph: &ModelGraph, img: &ImageBuffer, k: usize) -> Result<ClassScores, ModelError> {
    if k == 0 {
        return Err(ModelError::Shape("k must be at least 1".into()));
    }
    let out = graph.forward_image(img)?;
    Ok(ClassScores::from_distribution(out.probabilities, graph.labels(), k))
}
