//! Fast-marching inpainting.
//!
//! Unknown pixels are visited in increasing order of their arrival time `T`
//! (the solution of `|∇T| = 1` outward from the hole boundary) and each one
//! is filled with a weighted average of neighbors that already carry a
//! value. Weights combine a direction term (alignment with `∇T`), an
//! inverse-square distance term and a level-set term that favours
//! neighbors on a similar arrival time.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::InpaintError;
use crate::raster::{ImageBuffer, Mask};

pub const DEFAULT_RADIUS: usize = 5;

/// Lower bound on any single neighbor's weight.
const WEIGHT_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PixelState {
    Known,
    Band,
    Unknown,
}

#[derive(Debug, Clone, Copy)]
struct BandEntry {
    time: f64,
    index: usize,
}

impl PartialEq for BandEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for BandEntry {}

impl PartialOrd for BandEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for BandEntry {
    // BinaryHeap is a max-heap: invert so the smallest (time, index) pops first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.index.cmp(&self.index))
    }
}

/// Fast-marching front. The initial band is every non-masked pixel that
/// 4-touches the mask, at `T = 0`; masked pixels start `Unknown` at `+∞`.
#[derive(Debug, Clone)]
pub struct MarchState {
    width: usize,
    height: usize,
    time: Vec<f64>,
    state: Vec<PixelState>,
    band: BinaryHeap<BandEntry>,
}

impl MarchState {
    pub fn new(mask: &Mask) -> Result<Self, InpaintError> {
        if mask.is_full() {
            return Err(InpaintError::AllUnknown);
        }
        let (width, height) = mask.dims();
        let bits = mask.bits();
        let mut time = vec![0.0; bits.len()];
        let mut state = vec![PixelState::Known; bits.len()];
        let mut band = BinaryHeap::new();
        for (i, &b) in bits.iter().enumerate() {
            if b {
                time[i] = f64::INFINITY;
                state[i] = PixelState::Unknown;
            }
        }
        for y in 0..height {
            for x in 0..width {
                let i = y * width + x;
                if bits[i] {
                    continue;
                }
                let touches_hole = neighbors4(x, y, width, height).any(|(nx, ny)| bits[ny * width + nx]);
                if touches_hole {
                    state[i] = PixelState::Band;
                    band.push(BandEntry { time: 0.0, index: i });
                }
            }
        }
        Ok(Self {
            width,
            height,
            time,
            state,
            band,
        })
    }

    pub fn time(&self) -> &[f64] {
        &self.time
    }

    pub fn state(&self) -> &[PixelState] {
        &self.state
    }

    /// Finalizes the band pixel with the smallest arrival time (ties by
    /// row-major index), updates its neighbors, and returns its index.
    pub fn next(&mut self) -> Option<usize> {
        let index = loop {
            let entry = self.band.pop()?;
            // stale entries: already finalized or superseded by a smaller time
            if self.state[entry.index] == PixelState::Band && self.time[entry.index] == entry.time {
                break entry.index;
            }
        };
        self.state[index] = PixelState::Known;
        let (x, y) = (index % self.width, index / self.width);
        for (nx, ny) in neighbors4(x, y, self.width, self.height) {
            let n = ny * self.width + nx;
            if self.state[n] == PixelState::Known {
                continue;
            }
            let t = self.solve(nx, ny);
            if t < self.time[n] {
                self.time[n] = t;
                self.state[n] = PixelState::Band;
                self.band.push(BandEntry { time: t, index: n });
            }
        }
        Some(index)
    }

    /// Upwind quadratic update from finalized neighbors.
    fn solve(&self, x: usize, y: usize) -> f64 {
        let known_time = |nx: usize, ny: usize| {
            let n = ny * self.width + nx;
            if self.state[n] == PixelState::Known {
                self.time[n]
            } else {
                f64::INFINITY
            }
        };
        let mut a = f64::INFINITY;
        if x > 0 {
            a = a.min(known_time(x - 1, y));
        }
        if x + 1 < self.width {
            a = a.min(known_time(x + 1, y));
        }
        let mut b = f64::INFINITY;
        if y > 0 {
            b = b.min(known_time(x, y - 1));
        }
        if y + 1 < self.height {
            b = b.min(known_time(x, y + 1));
        }
        upwind_update(a, b)
    }

    /// Central difference of `T` where both neighbors are finalized,
    /// one-sided where only one is, zero otherwise.
    fn gradient(&self, x: usize, y: usize) -> (f64, f64) {
        let i = y * self.width + x;
        let known = |n: usize| self.state[n] == PixelState::Known;
        let axis = |prev: Option<usize>, next: Option<usize>| -> f64 {
            let prev = prev.filter(|&n| known(n));
            let next = next.filter(|&n| known(n));
            match (prev, next) {
                (Some(p), Some(n)) => (self.time[n] - self.time[p]) * 0.5,
                (None, Some(n)) => self.time[n] - self.time[i],
                (Some(p), None) => self.time[i] - self.time[p],
                (None, None) => 0.0,
            }
        };
        let gx = axis(
            (x > 0).then(|| i - 1),
            (x + 1 < self.width).then(|| i + 1),
        );
        let gy = axis(
            (y > 0).then(|| i - self.width),
            (y + 1 < self.height).then(|| i + self.width),
        );
        (gx, gy)
    }
}

/// Solves `(T - a)^2 + (T - b)^2 = 1` for the larger root, degrading to
/// `min(a, b) + 1` when only one direction contributes.
pub fn upwind_update(a: f64, b: f64) -> f64 {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    if !lo.is_finite() {
        return f64::INFINITY;
    }
    if !hi.is_finite() || hi - lo >= 1.0 {
        return lo + 1.0;
    }
    let d = hi - lo;
    (lo + hi + (2.0 - d * d).sqrt()) * 0.5
}

fn neighbors4(
    x: usize,
    y: usize,
    width: usize,
    height: usize,
) -> impl Iterator<Item = (usize, usize)> {
    let left = (x > 0).then(|| (x - 1, y));
    let up = (y > 0).then(|| (x, y - 1));
    let right = (x + 1 < width).then(|| (x + 1, y));
    let down = (y + 1 < height).then(|| (x, y + 1));
    [up, left, right, down].into_iter().flatten()
}

/// Arrival time of the marching front for every pixel (zero outside the mask).
pub fn march_distance(mask: &Mask) -> Result<Vec<f64>, InpaintError> {
    let mut state = MarchState::new(mask)?;
    while state.next().is_some() {}
    Ok(state.time)
}

fn check_dims(img: &ImageBuffer, mask: &Mask) -> Result<(), InpaintError> {
    if img.dims() != mask.dims() {
        return Err(InpaintError::Dims {
            image_w: img.width(),
            image_h: img.height(),
            mask_w: mask.width(),
            mask_h: mask.height(),
        });
    }
    Ok(())
}

pub(crate) fn validate_inputs(img: &ImageBuffer, mask: &Mask) -> Result<(), InpaintError> {
    check_dims(img, mask)?;
    if mask.is_full() {
        return Err(InpaintError::AllUnknown);
    }
    Ok(())
}

/// Fills the masked pixels of `img` in fast-marching order. Pixels outside
/// the mask are returned unchanged.
pub fn inpaint_telea(
    img: &ImageBuffer,
    mask: &Mask,
    radius: usize,
) -> Result<ImageBuffer, InpaintError> {
    validate_inputs(img, mask)?;
    if radius < 1 {
        return Err(InpaintError::InvalidParams("radius must be at least 1".into()));
    }
    let mut out = img.clone();
    if mask.is_empty() {
        return Ok(out);
    }

    let (width, height) = img.dims();
    let channels = img.channels();
    let r = radius as isize;
    let mut has_value: Vec<bool> = mask.bits().iter().map(|&b| !b).collect();
    let mut march = MarchState::new(mask)?;
    let mut acc = [0.0f64; 3];

    while let Some(index) = march.next() {
        if has_value[index] {
            continue;
        }
        let (px, py) = ((index % width) as isize, (index / width) as isize);
        let (gx, gy) = march.gradient(px as usize, py as usize);
        let grad_norm = (gx * gx + gy * gy).sqrt();
        let t_p = march.time[index];

        acc[..channels].fill(0.0);
        let mut weight_sum = 0.0;
        let y_range = (py - r).max(0)..=(py + r).min(height as isize - 1);
        for qy in y_range {
            for qx in (px - r).max(0)..=(px + r).min(width as isize - 1) {
                let q = qy as usize * width + qx as usize;
                if !has_value[q] || q == index {
                    continue;
                }
                let (rx, ry) = ((px - qx) as f64, (py - qy) as f64);
                let dist_sq = rx * rx + ry * ry;
                let direction = if grad_norm > 0.0 {
                    (rx * gx + ry * gy).abs() / (dist_sq.sqrt() * grad_norm)
                } else {
                    1.0
                };
                let distance = 1.0 / dist_sq;
                let level = 1.0 / (1.0 + (march.time[q] - t_p).abs());
                let w = (direction * distance * level).max(WEIGHT_FLOOR);
                let src = out.pixel(qx as usize, qy as usize);
                for c in 0..channels {
                    acc[c] += w * src[c] as f64;
                }
                weight_sum += w;
            }
        }
        // a finalized neighbor within distance 1 always exists
        debug_assert!(weight_sum > 0.0);
        let dst = out.pixel_mut(px as usize, py as usize);
        for c in 0..channels {
            dst[c] = ((acc[c] / weight_sum) as f32).clamp(0.0, 1.0);
        }
        has_value[index] = true;
    }
    Ok(out)
}
