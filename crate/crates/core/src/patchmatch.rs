//! PatchMatch hole filling.
//!
//! A nearest-neighbor field maps every target patch (a patch overlapping
//! the hole) to a source patch lying fully in the known region. The field
//! is improved by propagation and random search, then hole pixels are
//! re-synthesized by voting: each takes the mean of the source pixels that
//! all overlapping matched patches place on it. This runs coarse-to-fine
//! over an image pyramid, with the coarsest hole seeded by a Telea fill.

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::error::InpaintError;
use crate::raster::{resize_bilinear, ImageBuffer, Mask};
use crate::telea::{self, inpaint_telea};

/// The generator behind every random decision in this module. Seeded with
/// [`SeedableRng::seed_from_u64`], so a given seed reproduces bit-exactly.
pub type PatchRng = Xoshiro256PlusPlus;

pub fn seeded_rng(seed: u64) -> PatchRng {
    PatchRng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct PatchMatchParams {
    pub patch_size: usize,
    pub iterations: usize,
    pub pyramid_min: usize,
    pub search_decay: f64,
    pub rng_seed: u64,
}

impl Default for PatchMatchParams {
    fn default() -> Self {
        Self {
            patch_size: 7,
            iterations: 5,
            pyramid_min: 32,
            search_decay: 0.5,
            rng_seed: 0,
        }
    }
}

impl PatchMatchParams {
    pub fn validate(&self) -> Result<(), InpaintError> {
        if self.patch_size < 3 || self.patch_size.is_multiple_of(2) {
            return Err(InpaintError::InvalidParams(format!(
                "patch_size must be odd and >= 3, got {}",
                self.patch_size
            )));
        }
        if self.iterations < 1 {
            return Err(InpaintError::InvalidParams("iterations must be >= 1".into()));
        }
        if !(self.search_decay > 0.0 && self.search_decay < 1.0) {
            return Err(InpaintError::InvalidParams(format!(
                "search_decay must be in (0, 1), got {}",
                self.search_decay
            )));
        }
        if self.pyramid_min < 1 {
            return Err(InpaintError::InvalidParams("pyramid_min must be >= 1".into()));
        }
        Ok(())
    }
}

/// Which patch centers may serve as sources: the whole patch inside the
/// image and free of hole pixels.
#[derive(Debug, Clone)]
pub struct SourceDomain {
    width: usize,
    height: usize,
    valid: Vec<bool>,
    centers: Vec<usize>,
}

impl SourceDomain {
    pub fn new(mask: &Mask, patch_size: usize) -> Self {
        let (width, height) = mask.dims();
        let half = patch_size / 2;
        let mut valid = vec![false; width * height];
        let mut centers = Vec::new();
        if width >= patch_size && height >= patch_size {
            // summed-area table of hole pixels
            let stride = width + 1;
            let mut sat = vec![0u32; stride * (height + 1)];
            for y in 0..height {
                let mut row = 0u32;
                for x in 0..width {
                    row += mask.get(x, y) as u32;
                    sat[(y + 1) * stride + x + 1] = sat[y * stride + x + 1] + row;
                }
            }
            for cy in half..height - half {
                for cx in half..width - half {
                    let (x0, y0, x1, y1) = (cx - half, cy - half, cx + half + 1, cy + half + 1);
                    let holes = sat[y1 * stride + x1] + sat[y0 * stride + x0]
                        - sat[y0 * stride + x1]
                        - sat[y1 * stride + x0];
                    if holes == 0 {
                        let i = cy * width + cx;
                        valid[i] = true;
                        centers.push(i);
                    }
                }
            }
        }
        Self {
            width,
            height,
            valid,
            centers,
        }
    }

    #[inline]
    pub fn is_valid(&self, x: isize, y: isize) -> bool {
        x >= 0
            && y >= 0
            && (x as usize) < self.width
            && (y as usize) < self.height
            && self.valid[y as usize * self.width + x as usize]
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// Every valid center, row-major.
    pub fn centers(&self) -> &[usize] {
        &self.centers
    }

    fn random_center(&self, rng: &mut PatchRng) -> (isize, isize) {
        let i = self.centers[rng.random_range(0..self.centers.len() as u64) as usize];
        ((i % self.width) as isize, (i / self.width) as isize)
    }
}

/// Sum of squared differences between the patch centered at `t` in
/// `target` and the patch centered at `s` in `source`, over the part of
/// the target patch inside the image. Stops early once `bound` is exceeded.
#[inline]
fn patch_ssd(img: &ImageBuffer, half: usize, t: (isize, isize), s: (isize, isize), bound: f64) -> f64 {
    let (w, h) = (img.width() as isize, img.height() as isize);
    let ch = img.channels();
    let data = img.data();
    let half = half as isize;
    let mut total = 0.0f64;
    for dy in -half..=half {
        let ty = t.1 + dy;
        if ty < 0 || ty >= h {
            continue;
        }
        let sy = s.1 + dy;
        let dx0 = (-half).max(-t.0);
        let dx1 = half.min(w - 1 - t.0);
        if dx0 > dx1 {
            continue;
        }
        let n = (dx1 - dx0 + 1) as usize * ch;
        let ti = ((ty * w + t.0 + dx0) as usize) * ch;
        let si = ((sy * w + s.0 + dx0) as usize) * ch;
        let mut row = 0.0f32;
        for (a, b) in data[ti..ti + n].iter().zip(&data[si..si + n]) {
            let d = a - b;
            row += d * d;
        }
        total += row as f64;
        if total > bound {
            return total;
        }
    }
    total
}

/// Per-pixel patch correspondences. Only target pixels carry meaningful
/// offsets and costs; the rest hold `(0, 0)` and `0`.
#[derive(Debug, Clone, PartialEq)]
pub struct NearestNeighborField {
    width: usize,
    height: usize,
    patch_size: usize,
    targets: Vec<bool>,
    offsets: Vec<(i32, i32)>,
    costs: Vec<f64>,
}

/// Centers whose patch touches at least one hole pixel.
pub fn hole_targets(mask: &Mask, patch_size: usize) -> Mask {
    let (w, h) = mask.dims();
    let half = patch_size / 2;
    let mut out = Mask::new(w, h);
    for y in 0..h {
        for x in 0..w {
            if !mask.get(x, y) {
                continue;
            }
            for ty in y.saturating_sub(half)..(y + half + 1).min(h) {
                for tx in x.saturating_sub(half)..(x + half + 1).min(w) {
                    out.set(tx, ty, true);
                }
            }
        }
    }
    out
}

impl NearestNeighborField {
    /// Field over the patches touching the hole, each pointing at a
    /// uniformly random valid source.
    pub fn random(
        img: &ImageBuffer,
        mask: &Mask,
        patch_size: usize,
        rng: &mut PatchRng,
    ) -> Result<Self, InpaintError> {
        let domain = SourceDomain::new(mask, patch_size);
        if domain.is_empty() {
            return Err(InpaintError::NoSource { patch_size });
        }
        let targets = hole_targets(mask, patch_size);
        let (w, h) = mask.dims();
        let mut offsets = vec![(0, 0); w * h];
        for (i, _) in targets.bits().iter().enumerate().filter(|(_, &t)| t) {
            let (sx, sy) = domain.random_center(rng);
            offsets[i] = (
                (sx - (i % w) as isize) as i32,
                (sy - (i / w) as isize) as i32,
            );
        }
        Self::from_parts(img, mask, patch_size, targets, offsets)
    }

    /// Builds a field from explicit offsets, computing costs against `img`.
    pub fn from_parts(
        img: &ImageBuffer,
        mask: &Mask,
        patch_size: usize,
        targets: Mask,
        offsets: Vec<(i32, i32)>,
    ) -> Result<Self, InpaintError> {
        let (w, h) = img.dims();
        if mask.dims() != (w, h) || targets.dims() != (w, h) || offsets.len() != w * h {
            return Err(InpaintError::Dims {
                image_w: w,
                image_h: h,
                mask_w: mask.width(),
                mask_h: mask.height(),
            });
        }
        let mut nnf = Self {
            width: w,
            height: h,
            patch_size,
            targets: targets.bits().to_vec(),
            offsets,
            costs: vec![0.0; w * h],
        };
        if !nnf.offsets_valid(mask) {
            return Err(InpaintError::InvalidParams(
                "offset points at a patch that is out of bounds or overlaps the hole".into(),
            ));
        }
        nnf.recompute_costs(img);
        Ok(nnf)
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn patch_size(&self) -> usize {
        self.patch_size
    }

    pub fn is_target(&self, x: usize, y: usize) -> bool {
        self.targets[y * self.width + x]
    }

    pub fn offset(&self, x: usize, y: usize) -> (i32, i32) {
        self.offsets[y * self.width + x]
    }

    pub fn cost(&self, x: usize, y: usize) -> f64 {
        self.costs[y * self.width + x]
    }

    pub fn target_count(&self) -> usize {
        self.targets.iter().filter(|&&t| t).count()
    }

    pub fn total_cost(&self) -> f64 {
        self.costs.iter().sum()
    }

    /// Whether every target's source patch is in bounds and hole-free.
    pub fn offsets_valid(&self, mask: &Mask) -> bool {
        let domain = SourceDomain::new(mask, self.patch_size);
        self.targets.iter().enumerate().filter(|(_, &t)| t).all(|(i, _)| {
            let (x, y) = ((i % self.width) as isize, (i / self.width) as isize);
            let (dx, dy) = self.offsets[i];
            domain.is_valid(x + dx as isize, y + dy as isize)
        })
    }

    /// Recomputes every target's SSD against the current pixel values.
    pub fn recompute_costs(&mut self, img: &ImageBuffer) {
        let half = self.patch_size / 2;
        for i in 0..self.targets.len() {
            if !self.targets[i] {
                continue;
            }
            let t = ((i % self.width) as isize, (i / self.width) as isize);
            let (dx, dy) = self.offsets[i];
            self.costs[i] = patch_ssd(img, half, t, (t.0 + dx as isize, t.1 + dy as isize), f64::INFINITY);
        }
    }

    fn try_candidate(
        &mut self,
        img: &ImageBuffer,
        domain: &SourceDomain,
        i: usize,
        t: (isize, isize),
        s: (isize, isize),
    ) {
        if !domain.is_valid(s.0, s.1) {
            return;
        }
        let offset = ((s.0 - t.0) as i32, (s.1 - t.1) as i32);
        if offset == self.offsets[i] {
            return;
        }
        let cost = patch_ssd(img, self.patch_size / 2, t, s, self.costs[i]);
        if cost < self.costs[i] {
            self.costs[i] = cost;
            self.offsets[i] = offset;
        }
    }
}

/// One propagation + random-search sweep. Even iterations scan row-major
/// from the top-left, odd iterations in reverse. Costs in `nnf` must be
/// current with respect to `img`; a candidate is adopted only if strictly
/// better, so the total cost never increases.
pub fn nnf_iterate(
    mut nnf: NearestNeighborField,
    img: &ImageBuffer,
    mask: &Mask,
    iteration: usize,
    search_decay: f64,
    rng: &mut PatchRng,
) -> NearestNeighborField {
    let domain = SourceDomain::new(mask, nnf.patch_size);
    let (w, h) = (nnf.width, nnf.height);
    let max_radius = w.max(h) as f64;
    let forward = iteration.is_multiple_of(2);
    let step: isize = if forward { 1 } else { -1 };

    for k in 0..w * h {
        let i = if forward { k } else { w * h - 1 - k };
        if !nnf.targets[i] {
            continue;
        }
        let t = ((i % w) as isize, (i / w) as isize);

        // propagation: the predecessor's match, shifted one pixel along
        for (px, py) in [(t.0 - step, t.1), (t.0, t.1 - step)] {
            if px < 0 || py < 0 || px >= w as isize || py >= h as isize {
                continue;
            }
            let p = py as usize * w + px as usize;
            if !nnf.targets[p] {
                continue;
            }
            let (dx, dy) = nnf.offsets[p];
            nnf.try_candidate(img, &domain, i, t, (t.0 + dx as isize, t.1 + dy as isize));
        }

        // random search around the current best, shrinking geometrically
        let mut radius = max_radius;
        while radius >= 1.0 {
            let r = radius as i64;
            let (dx, dy) = nnf.offsets[i];
            let best = (t.0 + dx as isize, t.1 + dy as isize);
            let cx = best.0 + rng.random_range(-r..=r) as isize;
            let cy = best.1 + rng.random_range(-r..=r) as isize;
            nnf.try_candidate(img, &domain, i, t, (cx, cy));
            radius *= search_decay;
        }
    }
    nnf
}

/// Overwrites hole pixels with the uniform mean of every matched source
/// pixel that overlapping target patches map onto them.
pub fn vote(nnf: &NearestNeighborField, img: &mut ImageBuffer, mask: &Mask) {
    let (w, h) = img.dims();
    let ch = img.channels();
    let half = (nnf.patch_size / 2) as isize;
    let mut acc = vec![0.0f64; w * h * ch];
    let mut count = vec![0u32; w * h];
    let src = img.data();
    for i in 0..w * h {
        if !nnf.targets[i] {
            continue;
        }
        let (tx, ty) = ((i % w) as isize, (i / w) as isize);
        let (dx, dy) = nnf.offsets[i];
        for py in (ty - half).max(0)..=(ty + half).min(h as isize - 1) {
            for px in (tx - half).max(0)..=(tx + half).min(w as isize - 1) {
                let q = py as usize * w + px as usize;
                if !mask.bits()[q] {
                    continue;
                }
                let s = ((py + dy as isize) as usize * w + (px + dx as isize) as usize) * ch;
                for c in 0..ch {
                    acc[q * ch + c] += src[s + c] as f64;
                }
                count[q] += 1;
            }
        }
    }
    let data = img.data_mut();
    for q in 0..w * h {
        if count[q] == 0 {
            continue;
        }
        for c in 0..ch {
            data[q * ch + c] = ((acc[q * ch + c] / count[q] as f64) as f32).clamp(0.0, 1.0);
        }
    }
}

fn downsample(img: &ImageBuffer, mask: &Mask) -> (ImageBuffer, Mask) {
    let (w, h) = img.dims();
    let (cw, ch_) = (w.div_ceil(2), h.div_ceil(2));
    let channels = img.channels();
    let mut data = Vec::with_capacity(cw * ch_ * channels);
    let mut bits = Vec::with_capacity(cw * ch_);
    for y in 0..ch_ {
        for x in 0..cw {
            let xs = 2 * x..(2 * x + 2).min(w);
            let ys = 2 * y..(2 * y + 2).min(h);
            let n = (xs.len() * ys.len()) as f64;
            let mut hole = false;
            for c in 0..channels {
                let mut sum = 0.0f64;
                for sy in ys.clone() {
                    for sx in xs.clone() {
                        sum += img.get(sx, sy, c) as f64;
                        hole |= mask.get(sx, sy);
                    }
                }
                data.push((sum / n) as f32);
            }
            bits.push(hole);
        }
    }
    (
        ImageBuffer::new(cw, ch_, channels, data).expect("downsampled dims are valid"),
        Mask::from_bits(cw, ch_, bits).expect("downsampled mask dims are valid"),
    )
}

/// Seeds a finer field from a coarser one; targets without a usable
/// coarse match get a random valid source.
fn upsample_nnf(
    coarse: &NearestNeighborField,
    img: &ImageBuffer,
    mask: &Mask,
    patch_size: usize,
    rng: &mut PatchRng,
) -> Result<NearestNeighborField, InpaintError> {
    let domain = SourceDomain::new(mask, patch_size);
    if domain.is_empty() {
        return Err(InpaintError::NoSource { patch_size });
    }
    let targets = hole_targets(mask, patch_size);
    let (w, h) = mask.dims();
    let mut offsets = vec![(0, 0); w * h];
    for i in (0..w * h).filter(|&i| targets.bits()[i]) {
        let (x, y) = (i % w, i / w);
        let (cx, cy) = ((x / 2).min(coarse.width - 1), (y / 2).min(coarse.height - 1));
        let mut source = None;
        if coarse.is_target(cx, cy) {
            let (dx, dy) = coarse.offset(cx, cy);
            let sx = 2 * (cx as isize + dx as isize) + (x % 2) as isize;
            let sy = 2 * (cy as isize + dy as isize) + (y % 2) as isize;
            if domain.is_valid(sx, sy) {
                source = Some((sx, sy));
            }
        }
        let (sx, sy) = source.unwrap_or_else(|| domain.random_center(rng));
        offsets[i] = ((sx - x as isize) as i32, (sy - y as isize) as i32);
    }
    NearestNeighborField::from_parts(img, mask, patch_size, targets, offsets)
}

fn em_level(
    img: &mut ImageBuffer,
    mask: &Mask,
    mut nnf: NearestNeighborField,
    params: &PatchMatchParams,
    rng: &mut PatchRng,
) -> NearestNeighborField {
    for iteration in 0..params.iterations {
        nnf = nnf_iterate(nnf, img, mask, iteration, params.search_decay, rng);
        vote(&nnf, img, mask);
        nnf.recompute_costs(img);
    }
    nnf
}

/// Fills the masked region by coarse-to-fine PatchMatch synthesis.
pub fn inpaint_patchmatch(
    img: &ImageBuffer,
    mask: &Mask,
    params: &PatchMatchParams,
) -> Result<ImageBuffer, InpaintError> {
    telea::validate_inputs(img, mask)?;
    params.validate()?;
    if mask.is_empty() {
        return Ok(img.clone());
    }
    if SourceDomain::new(mask, params.patch_size).is_empty() {
        return Err(InpaintError::NoSource {
            patch_size: params.patch_size,
        });
    }

    let mut levels = vec![(img.clone(), mask.clone())];
    loop {
        let (last_img, last_mask) = levels.last().expect("at least one level");
        let (w, h) = last_img.dims();
        if w.div_ceil(2).min(h.div_ceil(2)) < params.pyramid_min {
            break;
        }
        let (ci, cm) = downsample(last_img, last_mask);
        if cm.is_full() || SourceDomain::new(&cm, params.patch_size).is_empty() {
            break;
        }
        levels.push((ci, cm));
    }

    let mut rng = seeded_rng(params.rng_seed);
    let (coarse_img, coarse_mask) = levels.pop().expect("at least one level");
    let mut current = inpaint_telea(&coarse_img, &coarse_mask, telea::DEFAULT_RADIUS)?;
    let nnf = NearestNeighborField::random(&current, &coarse_mask, params.patch_size, &mut rng)?;
    let mut nnf = em_level(&mut current, &coarse_mask, nnf, params, &mut rng);

    while let Some((level_img, level_mask)) = levels.pop() {
        let (w, h) = level_img.dims();
        let seeded = resize_bilinear(&current, w, h);
        let mut next = level_img;
        for (i, _) in level_mask.bits().iter().enumerate().filter(|(_, &b)| b) {
            let (x, y) = (i % w, i / w);
            next.pixel_mut(x, y).copy_from_slice(seeded.pixel(x, y));
        }
        let init = upsample_nnf(&nnf, &next, &level_mask, params.patch_size, &mut rng)?;
        nnf = em_level(&mut next, &level_mask, init, params, &mut rng);
        current = next;
    }

    // copy back only hole pixels so the rest stays bit-identical
    let mut out = img.clone();
    for (i, _) in mask.bits().iter().enumerate().filter(|(_, &b)| b) {
        let (x, y) = (i % img.width(), i / img.width());
        out.pixel_mut(x, y).copy_from_slice(current.pixel(x, y));
    }
    Ok(out)
}
