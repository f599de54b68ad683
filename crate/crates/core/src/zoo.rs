//! Reference architectures as manifests, plus synthetic weights for
//! benchmarking when no converted checkpoint is at hand.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::model::{Activation, BlobRef, InputSpec, LayerSpec, Manifest, OpSpec, MANIFEST_FORMAT};

/// ImageNet statistics, expressed as `(v - mean) * scale`.
pub const IMAGENET_MEAN: [f32; 3] = [0.485, 0.456, 0.406];
pub const IMAGENET_SCALE: [f32; 3] = [1.0 / 0.229, 1.0 / 0.224, 1.0 / 0.225];

struct Builder {
    layers: Vec<LayerSpec>,
}

impl Builder {
    fn conv(&mut self, name: &str, input: &str, cin: usize, cout: usize, kernel: usize, stride: usize, padding: usize) {
        self.layers.push(LayerSpec {
            name: name.into(),
            inputs: vec![input.into()],
            op: OpSpec::Conv2d {
                out_channels: cout,
                kernel,
                stride,
                padding,
                weight: BlobRef {
                    blob: format!("{name}.weight.bin"),
                    shape: vec![cout, cin, kernel, kernel],
                },
                bias: BlobRef {
                    blob: format!("{name}.bias.bin"),
                    shape: vec![cout],
                },
                activation: Some(Activation::Relu),
            },
        });
    }

    fn simple(&mut self, name: &str, inputs: &[&str], op: OpSpec) {
        self.layers.push(LayerSpec {
            name: name.into(),
            inputs: inputs.iter().map(|s| s.to_string()).collect(),
            op,
        });
    }

    /// Squeeze 1x1, then parallel 1x1 and 3x3 expands, concatenated.
    fn fire(&mut self, name: &str, input: &str, cin: usize, squeeze: usize, expand: usize) -> String {
        let sq = format!("{name}.squeeze");
        let e1 = format!("{name}.expand1x1");
        let e3 = format!("{name}.expand3x3");
        self.conv(&sq, input, cin, squeeze, 1, 1, 0);
        self.conv(&e1, &sq, squeeze, expand, 1, 1, 0);
        self.conv(&e3, &sq, squeeze, expand, 3, 1, 1);
        self.simple(name, &[&e1, &e3], OpSpec::ConcatChannels);
        name.to_string()
    }
}

/// SqueezeNet 1.1 at 224x224. Pooling uses floor sizing, which agrees with
/// the ceil-mode original at this resolution.
pub fn squeezenet1_1(num_classes: usize) -> Manifest {
    let mut b = Builder { layers: Vec::new() };
    b.conv("conv1", "data", 3, 64, 3, 2, 0);
    b.simple("pool1", &["conv1"], OpSpec::Maxpool2d { kernel: 3, stride: 2 });
    let x = b.fire("fire2", "pool1", 64, 16, 64);
    let x = b.fire("fire3", &x, 128, 16, 64);
    b.simple("pool3", &[&x], OpSpec::Maxpool2d { kernel: 3, stride: 2 });
    let x = b.fire("fire4", "pool3", 128, 32, 128);
    let x = b.fire("fire5", &x, 256, 32, 128);
    b.simple("pool5", &[&x], OpSpec::Maxpool2d { kernel: 3, stride: 2 });
    let x = b.fire("fire6", "pool5", 256, 48, 192);
    let x = b.fire("fire7", &x, 384, 48, 192);
    let x = b.fire("fire8", &x, 384, 64, 256);
    let x = b.fire("fire9", &x, 512, 64, 256);
    b.conv("conv10", &x, 512, num_classes, 1, 1, 0);
    b.simple("pool10", &["conv10"], OpSpec::GlobalAvgPool);
    b.simple("prob", &["pool10"], OpSpec::Softmax);

    Manifest {
        format: MANIFEST_FORMAT.into(),
        name: "squeezenet1_1".into(),
        input: InputSpec {
            name: "data".into(),
            channels: 3,
            height: 224,
            width: 224,
            mean: IMAGENET_MEAN.to_vec(),
            scale: IMAGENET_SCALE.to_vec(),
        },
        labels: "labels.txt".into(),
        layers: b.layers,
    }
}

/// Fills every blob the manifest references with seeded He-uniform weights
/// and small biases, and adds placeholder labels `class-0`, `class-1`, ...
pub fn random_weights(manifest: &Manifest, num_classes: usize, seed: u64) -> HashMap<String, Vec<u8>> {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let mut blobs = HashMap::new();
    for layer in &manifest.layers {
        if let OpSpec::Conv2d { weight, bias, .. } = &layer.op {
            let fan_in: usize = weight.shape[1..].iter().product();
            let bound = (6.0 / fan_in as f64).sqrt() as f32;
            let n: usize = weight.shape.iter().product();
            let w: Vec<u8> = (0..n)
                .flat_map(|_| rng.random_range(-bound..bound).to_le_bytes())
                .collect();
            let b: Vec<u8> = (0..bias.shape[0])
                .flat_map(|_| rng.random_range(-0.01f32..0.01).to_le_bytes())
                .collect();
            blobs.insert(weight.blob.clone(), w);
            blobs.insert(bias.blob.clone(), b);
        }
    }
    let labels: Vec<String> = (0..num_classes).map(|i| format!("class-{i}")).collect();
    blobs.insert(manifest.labels.clone(), labels.join("\n").into_bytes());
    blobs
}
