//! Raster images and masks, PNG/JPEG codecs, and bilinear resizing.
//!
//! Pixels are stored as `f32` intensities in `[0, 1]`, row-major with
//! interleaved channels. Quantization to 8 bits happens only in
//! [`encode_image`] and [`decode_image`].

use std::cell::Cell;
use std::io::{self, BufRead, Cursor, Read, Seek, SeekFrom};
use std::rc::Rc;

use image::{DynamicImage, ImageFormat, ImageReader};

use crate::error::ImageError;

/// A decoded raster with 1 (gray) or 3 (RGB) channels.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageBuffer {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f32>,
}

impl ImageBuffer {
    pub fn new(
        width: usize,
        height: usize,
        channels: usize,
        data: Vec<f32>,
    ) -> Result<Self, ImageError> {
        if width == 0 || height == 0 {
            return Err(ImageError::Invalid(format!(
                "dimensions must be positive, got {width}x{height}"
            )));
        }
        if channels != 1 && channels != 3 {
            return Err(ImageError::Invalid(format!(
                "channel count must be 1 or 3, got {channels}"
            )));
        }
        if data.len() != width * height * channels {
            return Err(ImageError::Invalid(format!(
                "data length {} != {width}x{height}x{channels}",
                data.len()
            )));
        }
        if let Some(v) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(ImageError::Invalid(format!(
                "intensity {v} outside [0, 1]"
            )));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    /// An image where every sample equals `value`.
    pub fn filled(width: usize, height: usize, channels: usize, value: f32) -> Self {
        Self::new(width, height, channels, vec![value; width * height * channels])
            .expect("filled image with valid arguments")
    }

    /// Builds an image by evaluating `f(x, y, channel)` for every sample.
    /// Results are clamped to `[0, 1]`.
    pub fn from_fn(
        width: usize,
        height: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f32,
    ) -> Self {
        let mut data = Vec::with_capacity(width * height * channels);
        for y in 0..height {
            for x in 0..width {
                for c in 0..channels {
                    data.push(f(x, y, c).clamp(0.0, 1.0));
                }
            }
        }
        Self::new(width, height, channels, data).expect("from_fn with valid arguments")
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    /// Callers must keep every sample inside `[0, 1]`.
    pub(crate) fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f32 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> &[f32] {
        let i = (y * self.width + x) * self.channels;
        &self.data[i..i + self.channels]
    }

    pub(crate) fn pixel_mut(&mut self, x: usize, y: usize) -> &mut [f32] {
        let i = (y * self.width + x) * self.channels;
        &mut self.data[i..i + self.channels]
    }

    /// Returns a 3-channel copy; gray images are replicated.
    pub fn to_rgb(&self) -> ImageBuffer {
        if self.channels == 3 {
            return self.clone();
        }
        let data = self.data.iter().flat_map(|&v| [v, v, v]).collect();
        ImageBuffer {
            width: self.width,
            height: self.height,
            channels: 3,
            data,
        }
    }

    /// Returns a 1-channel copy using the unweighted channel mean.
    pub fn to_gray(&self) -> ImageBuffer {
        if self.channels == 1 {
            return self.clone();
        }
        let data = self
            .data
            .chunks_exact(3)
            .map(|p| ((p[0] as f64 + p[1] as f64 + p[2] as f64) / 3.0) as f32)
            .collect();
        ImageBuffer {
            width: self.width,
            height: self.height,
            channels: 1,
            data,
        }
    }
}

/// Per-pixel selection; `true` marks a pixel to be inpainted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl Mask {
    /// An empty mask.
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn from_bits(width: usize, height: usize, bits: Vec<bool>) -> Result<Self, ImageError> {
        if bits.len() != width * height {
            return Err(ImageError::Invalid(format!(
                "mask length {} != {width}x{height}",
                bits.len()
            )));
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut bits = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            bits,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.bits[y * self.width + x] = value;
    }

    /// Number of selected pixels.
    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    pub fn is_full(&self) -> bool {
        self.bits.iter().all(|&b| b)
    }

    /// Single-channel image with 1.0 for selected pixels.
    pub fn to_image(&self) -> ImageBuffer {
        let data = self.bits.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
        ImageBuffer::new(self.width, self.height, 1, data).expect("mask dims are valid")
    }
}

/// Byte source for the decoder that remembers the furthest offset read,
/// so failures can be reported with a position.
struct TrackedCursor<'a> {
    inner: Cursor<&'a [u8]>,
    furthest: Rc<Cell<u64>>,
}

impl TrackedCursor<'_> {
    fn note(&self) {
        let pos = self.inner.position();
        if pos > self.furthest.get() {
            self.furthest.set(pos);
        }
    }
}

impl Read for TrackedCursor<'_> {
    fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        let n = self.inner.read(buf)?;
        self.note();
        Ok(n)
    }
}

impl BufRead for TrackedCursor<'_> {
    fn fill_buf(&mut self) -> io::Result<&[u8]> {
        self.inner.fill_buf()
    }

    fn consume(&mut self, amt: usize) {
        self.inner.consume(amt);
        self.note();
    }
}

impl Seek for TrackedCursor<'_> {
    fn seek(&mut self, pos: SeekFrom) -> io::Result<u64> {
        self.inner.seek(pos)
    }
}

fn composite_over_white(c: u8, a: u8) -> f32 {
    let c = c as f64 / 255.0;
    let a = a as f64 / 255.0;
    (c * a + (1.0 - a)) as f32
}

/// Decodes a PNG or JPEG stream. 8-bit samples map to `v / 255`; alpha is
/// composited over white. Gray sources yield 1 channel, color sources 3.
pub fn decode_image(bytes: &[u8]) -> Result<ImageBuffer, ImageError> {
    let format = image::guess_format(bytes).map_err(|_| ImageError::Decode {
        offset: 0,
        message: "unrecognized image signature".into(),
    })?;
    if format != ImageFormat::Png && format != ImageFormat::Jpeg {
        return Err(ImageError::UnsupportedFormat(format!("{format:?}")));
    }

    let furthest = Rc::new(Cell::new(0));
    let cursor = TrackedCursor {
        inner: Cursor::new(bytes),
        furthest: Rc::clone(&furthest),
    };
    let decoded = ImageReader::with_format(cursor, format)
        .decode()
        .map_err(|e| match e {
            image::ImageError::Unsupported(u) => ImageError::UnsupportedFormat(u.to_string()),
            other => ImageError::Decode {
                offset: furthest.get(),
                message: other.to_string(),
            },
        })?;

    let (w, h) = (decoded.width() as usize, decoded.height() as usize);
    let (channels, data): (usize, Vec<f32>) = match decoded {
        DynamicImage::ImageLuma8(buf) => {
            (1, buf.into_raw().into_iter().map(|v| v as f32 / 255.0).collect())
        }
        DynamicImage::ImageLumaA8(buf) => (
            1,
            buf.into_raw()
                .chunks_exact(2)
                .map(|p| composite_over_white(p[0], p[1]))
                .collect(),
        ),
        DynamicImage::ImageRgb8(buf) => {
            (3, buf.into_raw().into_iter().map(|v| v as f32 / 255.0).collect())
        }
        DynamicImage::ImageRgba8(buf) => (
            3,
            buf.into_raw()
                .chunks_exact(4)
                .flat_map(|p| {
                    [
                        composite_over_white(p[0], p[3]),
                        composite_over_white(p[1], p[3]),
                        composite_over_white(p[2], p[3]),
                    ]
                })
                .collect(),
        ),
        other => {
            return Err(ImageError::UnsupportedFormat(format!(
                "bit depth of {:?} (only 8-bit samples are supported)",
                other.color()
            )))
        }
    };
    ImageBuffer::new(w, h, channels, data)
}

/// Reads width and height from the stream header without decoding pixels.
pub fn image_dimensions(bytes: &[u8]) -> Result<(usize, usize), ImageError> {
    let format = image::guess_format(bytes).map_err(|_| ImageError::Decode {
        offset: 0,
        message: "unrecognized image signature".into(),
    })?;
    if format != ImageFormat::Png && format != ImageFormat::Jpeg {
        return Err(ImageError::UnsupportedFormat(format!("{format:?}")));
    }
    let (w, h) = ImageReader::with_format(Cursor::new(bytes), format)
        .into_dimensions()
        .map_err(|e| ImageError::Decode {
            offset: 0,
            message: e.to_string(),
        })?;
    Ok((w as usize, h as usize))
}

/// Round-half-up quantization to 8 bits.
#[inline]
pub fn quantize(v: f32) -> u8 {
    (v * 255.0 + 0.5).floor().clamp(0.0, 255.0) as u8
}

/// Encodes as 8-bit PNG, gray or RGB according to the channel count.
pub fn encode_image(img: &ImageBuffer) -> Result<Vec<u8>, ImageError> {
    let raw: Vec<u8> = img.data.iter().map(|&v| quantize(v)).collect();
    let (w, h) = (img.width as u32, img.height as u32);
    let dynamic = if img.channels == 1 {
        DynamicImage::ImageLuma8(
            image::GrayImage::from_raw(w, h, raw).expect("buffer length matches dims"),
        )
    } else {
        DynamicImage::ImageRgb8(
            image::RgbImage::from_raw(w, h, raw).expect("buffer length matches dims"),
        )
    };
    let mut out = Cursor::new(Vec::new());
    dynamic
        .write_to(&mut out, ImageFormat::Png)
        .map_err(|e| ImageError::Encode(e.to_string()))?;
    Ok(out.into_inner())
}

/// Bilinear resampling with half-pixel centers: the source coordinate of
/// output index `i` is `(i + 0.5) * in / out - 0.5`, clamped to the border.
pub fn resize_bilinear(img: &ImageBuffer, out_w: usize, out_h: usize) -> ImageBuffer {
    assert!(out_w >= 1 && out_h >= 1, "output dimensions must be positive");
    if (out_w, out_h) == img.dims() {
        return img.clone();
    }
    let taps = |n_in: usize, n_out: usize| -> Vec<(usize, usize, f64)> {
        let scale = n_in as f64 / n_out as f64;
        (0..n_out)
            .map(|i| {
                let s = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, (n_in - 1) as f64);
                let i0 = s.floor() as usize;
                let i1 = (i0 + 1).min(n_in - 1);
                (i0, i1, s - i0 as f64)
            })
            .collect()
    };
    let xs = taps(img.width, out_w);
    let ys = taps(img.height, out_h);
    let ch = img.channels;
    let mut data = Vec::with_capacity(out_w * out_h * ch);
    for &(y0, y1, fy) in &ys {
        for &(x0, x1, fx) in &xs {
            for c in 0..ch {
                let p00 = img.get(x0, y0, c) as f64;
                let p10 = img.get(x1, y0, c) as f64;
                let p01 = img.get(x0, y1, c) as f64;
                let p11 = img.get(x1, y1, c) as f64;
                let top = p00 + (p10 - p00) * fx;
                let bottom = p01 + (p11 - p01) * fx;
                data.push((top + (bottom - top) * fy).clamp(0.0, 1.0) as f32);
            }
        }
    }
    ImageBuffer {
        width: out_w,
        height: out_h,
        channels: ch,
        data,
    }
}

pub const DEFAULT_MASK_THRESHOLD: f32 = 0.5;

/// Thresholds a single-channel image: a pixel is selected when its
/// intensity is strictly greater than `threshold`.
pub fn mask_from_image(img: &ImageBuffer, threshold: f32) -> Result<Mask, ImageError> {
    if img.channels != 1 {
        return Err(ImageError::WrongChannelCount {
            expected: 1,
            actual: img.channels,
        });
    }
    Ok(Mask {
        width: img.width,
        height: img.height,
        bits: img.data.iter().map(|&v| v > threshold).collect(),
    })
}
