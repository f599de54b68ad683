//! Latency suite: fixed-size workloads timed over several runs.

use std::fmt;
use std::time::Instant;

use anyhow::Result;
use serde::Serialize;
use whatif_core::model::DEFAULT_TOP_K;
use whatif_core::{classify, compute_cam, inpaint_patchmatch, inpaint_telea, zoo, ImageBuffer, Mask, ModelGraph, PatchMatchParams};

pub const SCENE_SIZE: usize = 512;
pub const HOLE_FRACTION: f64 = 0.10;
pub const SQUEEZENET_CLASSES: usize = 1000;

/// Per-operation budgets in milliseconds.
pub const CLASSIFY_BUDGET_MS: f64 = 150.0;
pub const TELEA_BUDGET_MS: f64 = 200.0;
pub const PATCHMATCH_BUDGET_MS: f64 = 3000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    All,
    Classify,
    Telea,
    Patchmatch,
    Cam,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OpReport {
    pub op: String,
    pub size: String,
    pub runs: usize,
    pub median_ms: f64,
    pub p95_ms: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budget_ms: Option<f64>,
}

impl OpReport {
    pub fn within_budget(&self) -> bool {
        self.budget_ms.is_none_or(|b| self.median_ms <= b)
    }
}

impl fmt::Display for OpReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<28} {:>10} {:>5} {:>11.2} {:>11.2}",
            self.op, self.size, self.runs, self.median_ms, self.p95_ms
        )?;
        match self.budget_ms {
            Some(b) if self.within_budget() => write!(f, "  ok (budget {b} ms)"),
            Some(b) => write!(f, "  OVER (budget {b} ms)"),
            None => Ok(()),
        }
    }
}

/// Median and nearest-rank 95th percentile, in milliseconds.
pub fn time_runs(runs: usize, mut f: impl FnMut() -> Result<()>) -> Result<(f64, f64)> {
    let mut samples = Vec::with_capacity(runs);
    for _ in 0..runs.max(1) {
        let start = Instant::now();
        f()?;
        samples.push(start.elapsed().as_secs_f64() * 1e3);
    }
    samples.sort_by(f64::total_cmp);
    let n = samples.len();
    let median = if n % 2 == 1 {
        samples[n / 2]
    } else {
        (samples[n / 2 - 1] + samples[n / 2]) / 2.0
    };
    let rank = ((0.95 * n as f64).ceil() as usize).clamp(1, n);
    Ok((median, samples[rank - 1]))
}

/// A smooth synthetic photo stand-in with a centered disk hole covering
/// `hole_fraction` of the area.
pub fn scene(size: usize, hole_fraction: f64) -> (ImageBuffer, Mask) {
    let img = ImageBuffer::from_fn(size, size, 3, |x, y, c| {
        let (x, y) = (x as f32, y as f32);
        match c {
            0 => 0.5 + 0.4 * (x / 17.0).sin() * (y / 29.0).cos(),
            1 => 0.5 + 0.4 * ((x + y) / 23.0).sin(),
            _ => ((x * 0.37 + y * 0.11) % 64.0) / 64.0,
        }
    });
    let c = (size as f64 - 1.0) / 2.0;
    let r2 = hole_fraction * (size * size) as f64 / std::f64::consts::PI;
    let mask = Mask::from_fn(size, size, |x, y| {
        let (dx, dy) = (x as f64 - c, y as f64 - c);
        dx * dx + dy * dy <= r2
    });
    (img, mask)
}

pub fn synthetic_squeezenet() -> Result<ModelGraph> {
    let manifest = zoo::squeezenet1_1(SQUEEZENET_CLASSES);
    let blobs = zoo::random_weights(&manifest, SQUEEZENET_CLASSES, 0);
    Ok(ModelGraph::from_manifest(manifest, &blobs)?)
}

fn report(op: &str, size: String, runs: usize, budget: Option<f64>, f: impl FnMut() -> Result<()>) -> Result<OpReport> {
    let (median_ms, p95_ms) = time_runs(runs, f)?;
    Ok(OpReport {
        op: op.into(),
        size,
        runs,
        median_ms,
        p95_ms,
        budget_ms: budget,
    })
}

/// Runs the selected workloads. `extra_model` adds a classify row for a
/// user-supplied model at its own input size.
pub fn run(suite: Suite, runs: usize, extra_model: Option<&ModelGraph>) -> Result<Vec<OpReport>> {
    let wants = |s: Suite| suite == Suite::All || suite == s;
    let mut out = Vec::new();

    let needs_net = wants(Suite::Classify) || wants(Suite::Cam);
    let net = if needs_net { Some(synthetic_squeezenet()?) } else { None };
    let photo = ImageBuffer::from_fn(224, 224, 3, |x, y, c| ((x * 3 + y * 5 + c * 7) % 256) as f32 / 255.0);

    if wants(Suite::Classify) {
        let net = net.as_ref().expect("built above");
        out.push(report("classify/squeezenet1_1", "224x224".into(), runs, Some(CLASSIFY_BUDGET_MS), || {
            classify(net, &photo, DEFAULT_TOP_K)?;
            Ok(())
        })?);
        if let Some(model) = extra_model {
            let spec = model.input_spec();
            let img = ImageBuffer::filled(spec.width, spec.height, spec.channels, 0.5);
            out.push(report(
                &format!("classify/{}", model.name()),
                format!("{}x{}", spec.width, spec.height),
                runs,
                Some(CLASSIFY_BUDGET_MS),
                || {
                    classify(model, &img, DEFAULT_TOP_K)?;
                    Ok(())
                },
            )?);
        }
    }
    if wants(Suite::Cam) {
        let net = net.as_ref().expect("built above");
        out.push(report("cam/squeezenet1_1", "224x224".into(), runs, None, || {
            compute_cam(net, &photo, 0)?;
            Ok(())
        })?);
    }

    let size = format!("{SCENE_SIZE}x{SCENE_SIZE}");
    if wants(Suite::Telea) || wants(Suite::Patchmatch) {
        let (img, mask) = scene(SCENE_SIZE, HOLE_FRACTION);
        if wants(Suite::Telea) {
            out.push(report("inpaint/telea", size.clone(), runs, Some(TELEA_BUDGET_MS), || {
                inpaint_telea(&img, &mask, whatif_core::telea::DEFAULT_RADIUS)?;
                Ok(())
            })?);
        }
        if wants(Suite::Patchmatch) {
            let params = PatchMatchParams::default();
            out.push(report("inpaint/patchmatch", size, runs, Some(PATCHMATCH_BUDGET_MS), || {
                inpaint_patchmatch(&img, &mask, &params)?;
                Ok(())
            })?);
        }
    }
    Ok(out)
}
