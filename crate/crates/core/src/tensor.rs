//! Dense NCHW tensors and the operator set the classifier runtime needs.

use crate::error::ModelError;

#[derive(Debug, Clone, PartialEq)]
pub struct TensorF32 {
    shape: Vec<usize>,
    data: Vec<f32>,
}

impl TensorF32 {
    pub fn new(shape: Vec<usize>, data: Vec<f32>) -> Result<Self, ModelError> {
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(ModelError::Shape(format!(
                "shape {shape:?} holds {n} values, got {}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::Shape("tensor contains non-finite values".into()));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Self {
            shape,
            data: vec![0.0; n],
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    fn nchw(&self, what: &str) -> Result<[usize; 4], ModelError> {
        match self.shape[..] {
            [n, c, h, w] => Ok([n, c, h, w]),
            _ => Err(ModelError::Shape(format!(
                "{what} expects a 4-d NCHW tensor, got shape {:?}",
                self.shape
            ))),
        }
    }
}

/// Output extent of a sliding window with floor sizing.
pub fn window_out(input: usize, kernel: usize, stride: usize, padding: usize) -> Option<usize> {
    let padded = input + 2 * padding;
    if stride == 0 || kernel == 0 || padded < kernel {
        return None;
    }
    Some((padded - kernel) / stride + 1)
}

/// 2-d cross-correlation with zero padding. `weights` is OIHW, `bias` has
/// one entry per output channel. Lowered to an `f64` matrix product, so
/// sums accumulate in double precision.
pub fn conv2d(
    input: &TensorF32,
    weights: &TensorF32,
    bias: &TensorF32,
    stride: usize,
    padding: usize,
) -> Result<TensorF32, ModelError> {
    let [n, cin, ih, iw] = input.nchw("conv2d input")?;
    let [cout, wcin, kh, kw] = weights.nchw("conv2d weights")?;
    if wcin != cin {
        return Err(ModelError::Shape(format!(
            "conv2d weights expect {wcin} input channels, input has {cin}"
        )));
    }
    if bias.data.len() != cout {
        return Err(ModelError::Shape(format!(
            "conv2d bias has {} entries, expected {cout}",
            bias.data.len()
        )));
    }
    let (Some(oh), Some(ow)) = (window_out(ih, kh, stride, padding), window_out(iw, kw, stride, padding)) else {
        return Err(ModelError::Shape(format!(
            "conv2d kernel {kh}x{kw} (stride {stride}, padding {padding}) does not fit input {ih}x{iw}"
        )));
    };

    let plane_in = ih * iw;
    let plane_out = oh * ow;
    let taps = cin * kh * kw;
    let w64: Vec<f64> = weights.data.iter().map(|&v| v as f64).collect();
    let mut out = vec![0.0f32; n * cout * plane_out];
    for b in 0..n {
        let src = &input.data[b * cin * plane_in..(b + 1) * cin * plane_in];
        let cols = im2col(src, cin, ColGeometry { ih, iw, kh, kw, oh, ow, stride, padding });
        let dst = &mut out[b * cout * plane_out..(b + 1) * cout * plane_out];
        // one GEMM per block of output channels: acc = W[rows] * cols + bias
        let block = |co0: usize, planes: &mut [f32]| {
            let rows = planes.len() / plane_out;
            let mut acc: Vec<f64> = (co0..co0 + rows)
                .flat_map(|co| std::iter::repeat_n(bias.data[co] as f64, plane_out))
                .collect();
            // SAFETY: row-major operands with the strides given; `acc` is
            // rows x plane_out, `w64[co0 * taps..]` is rows x taps and
            // `cols` is taps x plane_out.
            unsafe {
                matrixmultiply::dgemm(
                    rows,
                    taps,
                    plane_out,
                    1.0,
                    w64[co0 * taps..].as_ptr(),
                    taps as isize,
                    1,
                    cols.as_ptr(),
                    plane_out as isize,
                    1,
                    1.0,
                    acc.as_mut_ptr(),
                    plane_out as isize,
                    1,
                );
            }
            for (o, a) in planes.iter_mut().zip(&acc) {
                *o = *a as f32;
            }
        };
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            let rows = cout.div_ceil(rayon::current_num_threads()).max(1);
            dst.par_chunks_mut(rows * plane_out)
                .enumerate()
                .for_each(|(i, planes)| block(i * rows, planes));
        }
        #[cfg(not(feature = "parallel"))]
        block(0, dst);
    }
    TensorF32::new(vec![n, cout, oh, ow], out)
}

#[derive(Clone, Copy)]
struct ColGeometry {
    ih: usize,
    iw: usize,
    kh: usize,
    kw: usize,
    oh: usize,
    ow: usize,
    stride: usize,
    padding: usize,
}

/// Unfolds a CHW plane stack into a `(cin*kh*kw) x (oh*ow)` matrix in
/// `f64`; taps that fall in the zero padding stay 0.
fn im2col(src: &[f32], cin: usize, g: ColGeometry) -> Vec<f64> {
    let plane_out = g.oh * g.ow;
    if g.kh == 1 && g.kw == 1 && g.stride == 1 && g.padding == 0 {
        return src.iter().map(|&v| v as f64).collect();
    }
    let mut cols = vec![0.0f64; cin * g.kh * g.kw * plane_out];
    for ci in 0..cin {
        let plane = &src[ci * g.ih * g.iw..(ci + 1) * g.ih * g.iw];
        for ky in 0..g.kh {
            for kx in 0..g.kw {
                let row = ((ci * g.kh + ky) * g.kw + kx) * plane_out;
                let dst = &mut cols[row..row + plane_out];
                for oy in 0..g.oh {
                    let Some(iy) = (oy * g.stride + ky).checked_sub(g.padding).filter(|&y| y < g.ih) else {
                        continue;
                    };
                    let line = &plane[iy * g.iw..(iy + 1) * g.iw];
                    for ox in 0..g.ow {
                        if let Some(ix) = (ox * g.stride + kx).checked_sub(g.padding).filter(|&x| x < g.iw) {
                            dst[oy * g.ow + ox] = line[ix] as f64;
                        }
                    }
                }
            }
        }
    }
    cols
}

pub fn relu(input: &TensorF32) -> TensorF32 {
    TensorF32 {
        shape: input.shape.clone(),
        data: input.data.iter().map(|&v| v.max(0.0)).collect(),
    }
}

pub(crate) fn relu_in_place(t: &mut TensorF32) {
    for v in &mut t.data {
        *v = v.max(0.0);
    }
}

/// Max pooling with a square window and floor output sizing; no padding.
pub fn maxpool2d(input: &TensorF32, kernel: usize, stride: usize) -> Result<TensorF32, ModelError> {
    let [n, c, ih, iw] = input.nchw("maxpool2d")?;
    let (Some(oh), Some(ow)) = (window_out(ih, kernel, stride, 0), window_out(iw, kernel, stride, 0)) else {
        return Err(ModelError::Shape(format!(
            "maxpool2d window {kernel} (stride {stride}) does not fit input {ih}x{iw}"
        )));
    };
    let mut out = Vec::with_capacity(n * c * oh * ow);
    for plane in input.data.chunks_exact(ih * iw) {
        for oy in 0..oh {
            for ox in 0..ow {
                let mut m = f32::NEG_INFINITY;
                for ky in 0..kernel {
                    let row = (oy * stride + ky) * iw;
                    for kx in 0..kernel {
                        m = m.max(plane[row + ox * stride + kx]);
                    }
                }
                out.push(m);
            }
        }
    }
    TensorF32::new(vec![n, c, oh, ow], out)
}

/// Spatial mean: (N,C,H,W) -> (N,C,1,1).
pub fn global_avg_pool(input: &TensorF32) -> Result<TensorF32, ModelError> {
    let [n, c, h, w] = input.nchw("global_avg_pool")?;
    let out = input
        .data
        .chunks_exact(h * w)
        .map(|plane| (plane.iter().map(|&v| v as f64).sum::<f64>() / (h * w) as f64) as f32)
        .collect();
    TensorF32::new(vec![n, c, 1, 1], out)
}

/// Concatenates along the channel axis; spatial sizes must agree.
pub fn concat_channels(inputs: &[&TensorF32]) -> Result<TensorF32, ModelError> {
    let first = inputs
        .first()
        .ok_or_else(|| ModelError::Shape("concat_channels needs at least one input".into()))?;
    let [n, _, h, w] = first.nchw("concat_channels")?;
    let mut total_c = 0;
    for t in inputs {
        let [tn, tc, th, tw] = t.nchw("concat_channels")?;
        if (tn, th, tw) != (n, h, w) {
            return Err(ModelError::Shape(format!(
                "concat_channels inputs disagree: {:?} vs {:?}",
                first.shape, t.shape
            )));
        }
        total_c += tc;
    }
    let mut out = Vec::with_capacity(n * total_c * h * w);
    for b in 0..n {
        for t in inputs {
            let per = t.shape[1] * h * w;
            out.extend_from_slice(&t.data[b * per..(b + 1) * per]);
        }
    }
    TensorF32::new(vec![n, total_c, h, w], out)
}

/// Softmax across channels at every (n, h, w) position, with the maximum
/// subtracted first.
pub fn softmax(input: &TensorF32) -> Result<TensorF32, ModelError> {
    let [n, c, h, w] = input.nchw("softmax")?;
    let plane = h * w;
    let mut out = vec![0.0f32; input.data.len()];
    let mut exps = vec![0.0f64; c];
    for b in 0..n {
        for p in 0..plane {
            let at = |ci: usize| b * c * plane + ci * plane + p;
            let max = (0..c).map(|ci| input.data[at(ci)] as f64).fold(f64::NEG_INFINITY, f64::max);
            let mut sum = 0.0;
            for ci in 0..c {
                exps[ci] = (input.data[at(ci)] as f64 - max).exp();
                sum += exps[ci];
            }
            for ci in 0..c {
                out[at(ci)] = (exps[ci] / sum) as f32;
            }
        }
    }
    TensorF32::new(vec![n, c, h, w], out)
}
