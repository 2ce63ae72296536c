//! Dense row-major tensors and the numeric kernels everything else is
//! built on: matmul, 2-D convolution, pooling, softmax, reductions.
//!
//! Every kernel accumulates left-to-right over its contraction dimension,
//! so outputs are bit-identical to a naive loop implementation and across
//! repeated runs of one build. Parallelism lives above this module.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense n-dimensional array of `f64` with explicit shape metadata.
///
/// Data is flat row-major; `product(shape) == data.len()` always holds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(Error::Dimension(format!(
                "shape {:?} implies {} elements, data has {}",
                shape,
                expected,
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        let n = shape.iter().product();
        Self {
            shape: shape.to_vec(),
            data: vec![0.0; n],
        }
    }

    pub fn filled(shape: &[usize], value: f64) -> Self {
        let n = shape.iter().product();
        Self {
            shape: shape.to_vec(),
            data: vec![value; n],
        }
    }

    /// 1-D tensor from a flat vector.
    pub fn from_vec(data: Vec<f64>) -> Self {
        Self {
            shape: vec![data.len()],
            data,
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Reinterpret the flat data under a new shape of equal element count.
    pub fn reshape(mut self, shape: Vec<usize>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if expected != self.data.len() {
            return Err(Error::Dimension(format!(
                "cannot reshape {} elements to {:?}",
                self.data.len(),
                shape
            )));
        }
        self.shape = shape;
        Ok(self)
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Elementwise map into a new tensor.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }
}

/// Padding convention for [`conv2d`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Padding {
    /// No padding; the kernel must fit inside the input.
    Valid,
    /// Zero-pad so the output covers ceil(dim / stride) positions.
    Same,
}

/// Matrix product of `a` `[m,k]` and `b` `[k,n]`.
///
/// Accumulation over `k` is left-to-right for every output element, so the
/// result equals the naive triple loop bit-for-bit.
pub fn matmul(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    let (m, ka) = dims2(a, "matmul")?;
    let (kb, n) = dims2(b, "matmul")?;
    if ka != kb {
        return Err(Error::ShapeMismatch {
            op: "matmul",
            lhs: a.shape.clone(),
            rhs: b.shape.clone(),
        });
    }
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        let arow = &a.data[i * ka..(i + 1) * ka];
        let orow = &mut out[i * n..(i + 1) * n];
        for (k, &aik) in arow.iter().enumerate() {
            let brow = &b.data[k * n..(k + 1) * n];
            for (o, &bkj) in orow.iter_mut().zip(brow) {
                *o += aik * bkj;
            }
        }
    }
    Tensor::new(vec![m, n], out)
}

/// Transpose of a 2-D tensor.
pub fn transpose(a: &Tensor) -> Result<Tensor> {
    let (m, n) = dims2(a, "transpose")?;
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        for j in 0..n {
            out[j * m + i] = a.data[i * n + j];
        }
    }
    Tensor::new(vec![n, m], out)
}

/// Resolved geometry for one 2-D convolution.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ConvGeometry {
    pub out_h: usize,
    pub out_w: usize,
    pub pad_top: usize,
    pub pad_left: usize,
}

pub(crate) fn conv_geometry(
    h: usize,
    w: usize,
    kh: usize,
    kw: usize,
    stride: usize,
    padding: Padding,
) -> Result<ConvGeometry> {
    if stride == 0 {
        return Err(Error::Dimension("conv2d stride must be positive".into()));
    }
    match padding {
        Padding::Valid => {
            if kh > h || kw > w {
                return Err(Error::Dimension(format!(
                    "kernel {}x{} larger than input {}x{} (valid padding)",
                    kh, kw, h, w
                )));
            }
            Ok(ConvGeometry {
                out_h: (h - kh) / stride + 1,
                out_w: (w - kw) / stride + 1,
                pad_top: 0,
                pad_left: 0,
            })
        }
        Padding::Same => {
            let out_h = h.div_ceil(stride);
            let out_w = w.div_ceil(stride);
            let pad_h = ((out_h - 1) * stride + kh).saturating_sub(h);
            let pad_w = ((out_w - 1) * stride + kw).saturating_sub(w);
            Ok(ConvGeometry {
                out_h,
                out_w,
                pad_top: pad_h / 2,
                pad_left: pad_w / 2,
            })
        }
    }
}

/// Unfold `input` `[C,H,W]` into a patch matrix `[C*kh*kw, out_h*out_w]`.
///
/// Row `q = (c*kh + r)*kw + s` holds the input value under kernel tap
/// `(c,r,s)` for every output position; out-of-range taps are zero.
pub(crate) fn im2col(
    input: &Tensor,
    kh: usize,
    kw: usize,
    stride: usize,
    geom: ConvGeometry,
) -> Tensor {
    let (c_in, h, w) = (input.shape[0], input.shape[1], input.shape[2]);
    let (oh, ow) = (geom.out_h, geom.out_w);
    let n_pos = oh * ow;
    let mut patches = vec![0.0; c_in * kh * kw * n_pos];
    for c in 0..c_in {
        let plane = &input.data[c * h * w..(c + 1) * h * w];
        for r in 0..kh {
            for s in 0..kw {
                let row = &mut patches[((c * kh + r) * kw + s) * n_pos..][..n_pos];
                for oy in 0..oh {
                    let iy = (oy * stride + r) as isize - geom.pad_top as isize;
                    if iy < 0 || iy >= h as isize {
                        continue;
                    }
                    let src = &plane[iy as usize * w..(iy as usize + 1) * w];
                    let dst = &mut row[oy * ow..(oy + 1) * ow];
                    for ox in 0..ow {
                        let ix = (ox * stride + s) as isize - geom.pad_left as isize;
                        if ix >= 0 && ix < w as isize {
                            dst[ox] = src[ix as usize];
                        }
                    }
                }
            }
        }
    }
    Tensor {
        shape: vec![c_in * kh * kw, n_pos],
        data: patches,
    }
}

/// Fold a patch-matrix gradient `[C*kh*kw, out_h*out_w]` back onto an input
/// gradient `[C,H,W]`; the scatter-add inverse of [`im2col`].
pub(crate) fn col2im(
    patches: &Tensor,
    c_in: usize,
    h: usize,
    w: usize,
    kh: usize,
    kw: usize,
    stride: usize,
    geom: ConvGeometry,
) -> Tensor {
    let (oh, ow) = (geom.out_h, geom.out_w);
    let n_pos = oh * ow;
    let mut out = vec![0.0; c_in * h * w];
    for c in 0..c_in {
        let plane = &mut out[c * h * w..(c + 1) * h * w];
        for r in 0..kh {
            for s in 0..kw {
                let row = &patches.data[((c * kh + r) * kw + s) * n_pos..][..n_pos];
                for oy in 0..oh {
                    let iy = (oy * stride + r) as isize - geom.pad_top as isize;
                    if iy < 0 || iy >= h as isize {
                        continue;
                    }
                    let dst = &mut plane[iy as usize * w..(iy as usize + 1) * w];
                    let src = &row[oy * ow..(oy + 1) * ow];
                    for ox in 0..ow {
                        let ix = (ox * stride + s) as isize - geom.pad_left as isize;
                        if ix >= 0 && ix < w as isize {
                            dst[ix as usize] += src[ox];
                        }
                    }
                }
            }
        }
    }
    Tensor {
        shape: vec![c_in, h, w],
        data: out,
    }
}

/// 2-D cross-correlation (no kernel flip) of `input` `[C_in,H,W]` with
/// `kernels` `[C_out,C_in,kh,kw]`.
///
/// Output is `[C_out,H',W']` with `H' = floor((H + pad_total - kh)/stride) + 1`.
/// Tap accumulation runs channel-major then row then column, matching the
/// naive quadruple loop bit-for-bit.
pub fn conv2d(input: &Tensor, kernels: &Tensor, stride: usize, padding: Padding) -> Result<Tensor> {
    if input.shape.len() != 3 || kernels.shape.len() != 4 {
        return Err(Error::ShapeMismatch {
            op: "conv2d",
            lhs: input.shape.clone(),
            rhs: kernels.shape.clone(),
        });
    }
    let (c_in, h, w) = (input.shape[0], input.shape[1], input.shape[2]);
    let (c_out, kc, kh, kw) = (
        kernels.shape[0],
        kernels.shape[1],
        kernels.shape[2],
        kernels.shape[3],
    );
    if kc != c_in {
        return Err(Error::ShapeMismatch {
            op: "conv2d",
            lhs: input.shape.clone(),
            rhs: kernels.shape.clone(),
        });
    }
    let geom = conv_geometry(h, w, kh, kw, stride, padding)?;
    let patches = im2col(input, kh, kw, stride, geom);
    let k2 = Tensor {
        shape: vec![c_out, c_in * kh * kw],
        data: kernels.data.clone(),
    };
    let out = matmul(&k2, &patches)?;
    out.reshape(vec![c_out, geom.out_h, geom.out_w])
}

/// 2x2 max-pool with stride 2 over `[C,H,W]` (H, W even).
///
/// Returns the pooled tensor and, per output element, the flat index of the
/// winning input element (ties go to the lowest index) for backprop routing.
pub fn maxpool2d(input: &Tensor) -> Result<(Tensor, Vec<usize>)> {
    if input.shape.len() != 3 {
        return Err(Error::Dimension(format!(
            "maxpool2d expects [C,H,W], got {:?}",
            input.shape
        )));
    }
    let (c, h, w) = (input.shape[0], input.shape[1], input.shape[2]);
    if h % 2 != 0 || w % 2 != 0 {
        return Err(Error::Dimension(format!(
            "maxpool2d requires even spatial dims, got {}x{}",
            h, w
        )));
    }
    let (oh, ow) = (h / 2, w / 2);
    let mut out = vec![0.0; c * oh * ow];
    let mut argmax = vec![0usize; c * oh * ow];
    for ch in 0..c {
        for oy in 0..oh {
            for ox in 0..ow {
                let base = ch * h * w + (oy * 2) * w + ox * 2;
                let mut best = input.data[base];
                let mut best_idx = base;
                for (dy, dx) in [(0usize, 1usize), (1, 0), (1, 1)] {
                    let idx = base + dy * w + dx;
                    if input.data[idx] > best {
                        best = input.data[idx];
                        best_idx = idx;
                    }
                }
                let o = ch * oh * ow + oy * ow + ox;
                out[o] = best;
                argmax[o] = best_idx;
            }
        }
    }
    Ok((Tensor::new(vec![c, oh, ow], out)?, argmax))
}

/// Numerically stable softmax (max-subtraction) of a nonempty slice.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    assert!(!logits.is_empty(), "softmax of empty slice");
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// [`softmax`] over a 1-D tensor.
pub fn softmax_tensor(logits: &Tensor) -> Result<Tensor> {
    if logits.shape.len() != 1 || logits.is_empty() {
        return Err(Error::Dimension(format!(
            "softmax expects a nonempty 1-D tensor, got {:?}",
            logits.shape
        )));
    }
    Tensor::new(logits.shape.clone(), softmax(&logits.data))
}

/// Rectifier, elementwise.
pub fn relu(x: &Tensor) -> Tensor {
    x.map(|v| if v > 0.0 { v } else { 0.0 })
}

/// Left-to-right sum of all elements.
pub fn sum(x: &Tensor) -> f64 {
    x.data.iter().sum()
}

/// Index of the maximum element; ties break toward the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    assert!(!values.is_empty(), "argmax of empty slice");
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

fn dims2(t: &Tensor, op: &'static str) -> Result<(usize, usize)> {
    if t.shape.len() == 2 {
        Ok((t.shape[0], t.shape[1]))
    } else {
        Err(Error::Dimension(format!(
            "{op} expects a 2-D tensor, got {:?}",
            t.shape
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    // Independent oracles, deliberately written as plain nested loops.

    fn naive_matmul(a: &Tensor, b: &Tensor) -> Tensor {
        let (m, k) = (a.shape()[0], a.shape()[1]);
        let n = b.shape()[1];
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            for j in 0..n {
                let mut acc = 0.0;
                for p in 0..k {
                    acc += a.data()[i * k + p] * b.data()[p * n + j];
                }
                out[i * n + j] = acc;
            }
        }
        Tensor::new(vec![m, n], out).unwrap()
    }

    fn naive_conv2d(input: &Tensor, kernels: &Tensor, stride: usize, padding: Padding) -> Tensor {
        let (c_in, h, w) = (input.shape()[0], input.shape()[1], input.shape()[2]);
        let (c_out, _, kh, kw) = (
            kernels.shape()[0],
            kernels.shape()[1],
            kernels.shape()[2],
            kernels.shape()[3],
        );
        let geom = conv_geometry(h, w, kh, kw, stride, padding).unwrap();
        let mut out = vec![0.0; c_out * geom.out_h * geom.out_w];
        for co in 0..c_out {
            for oy in 0..geom.out_h {
                for ox in 0..geom.out_w {
                    let mut acc = 0.0;
                    for ci in 0..c_in {
                        for r in 0..kh {
                            for s in 0..kw {
                                let iy = (oy * stride + r) as isize - geom.pad_top as isize;
                                let ix = (ox * stride + s) as isize - geom.pad_left as isize;
                                let v = if iy >= 0 && iy < h as isize && ix >= 0 && ix < w as isize
                                {
                                    input.data()[ci * h * w + iy as usize * w + ix as usize]
                                } else {
                                    0.0
                                };
                                acc += kernels.data()[((co * c_in + ci) * kh + r) * kw + s] * v;
                            }
                        }
                    }
                    out[(co * geom.out_h + oy) * geom.out_w + ox] = acc;
                }
            }
        }
        Tensor::new(vec![c_out, geom.out_h, geom.out_w], out).unwrap()
    }

    /// Softmax with compensated (Neumaier) summation for the normalizer.
    fn softmax_oracle(logits: &[f64]) -> Vec<f64> {
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = logits.iter().map(|&v| (v - max).exp()).collect();
        let mut sum = 0.0;
        let mut comp = 0.0;
        for &e in &exps {
            let t = sum + e;
            comp += if sum.abs() >= e.abs() {
                (sum - t) + e
            } else {
                (e - t) + sum
            };
            sum = t;
        }
        let total = sum + comp;
        exps.iter().map(|&e| e / total).collect()
    }

    fn random_tensor(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor {
        let n = shape.iter().product();
        let data = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        Tensor::new(shape.to_vec(), data).unwrap()
    }

    fn identity(n: usize) -> Tensor {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Tensor::new(vec![n, n], data).unwrap()
    }

    #[test]
    fn matmul_identity_is_noop() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = random_tensor(&mut rng, &[3, 3]);
        assert_eq!(matmul(&identity(3), &x).unwrap(), x);
        assert_eq!(matmul(&x, &identity(3)).unwrap(), x);
    }

    #[test]
    fn matmul_hand_checked_2x2() {
        let a = Tensor::new(vec![2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let b = Tensor::new(vec![2, 1], vec![1.0, 1.0]).unwrap();
        let c = matmul(&a, &b).unwrap();
        assert_eq!(c.shape(), &[2, 1]);
        assert_eq!(c.data(), &[3.0, 7.0]);
    }

    #[test]
    fn matmul_matches_naive_oracle_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random_tensor(&mut rng, &[5, 4]);
        let b = random_tensor(&mut rng, &[4, 3]);
        let got = matmul(&a, &b).unwrap();
        let want = naive_matmul(&a, &b);
        assert_eq!(got.data(), want.data(), "bitwise mismatch vs naive oracle");
    }

    #[test]
    fn matmul_shape_mismatch_names_both_shapes() {
        let a = Tensor::zeros(&[2, 3]);
        let b = Tensor::zeros(&[4, 2]);
        let err = matmul(&a, &b).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("[2, 3]") && msg.contains("[4, 2]"), "{msg}");
    }

    #[test]
    fn conv2d_unit_kernel_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random_tensor(&mut rng, &[1, 5, 7]);
        let k = Tensor::new(vec![1, 1, 1, 1], vec![1.0]).unwrap();
        let y = conv2d(&x, &k, 1, Padding::Valid).unwrap();
        assert_eq!(y.data(), x.data());
    }

    #[test]
    fn conv2d_all_ones_2x2() {
        let x = Tensor::filled(&[1, 2, 2], 1.0);
        let k = Tensor::filled(&[1, 1, 2, 2], 1.0);
        let y = conv2d(&x, &k, 1, Padding::Valid).unwrap();
        assert_eq!(y.shape(), &[1, 1, 1]);
        assert_eq!(y.data(), &[4.0]);
    }

    #[test]
    fn conv2d_matches_naive_oracle_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = random_tensor(&mut rng, &[1, 6, 6]);
        let k = random_tensor(&mut rng, &[2, 1, 3, 3]);
        for (stride, padding) in [
            (1, Padding::Valid),
            (2, Padding::Valid),
            (1, Padding::Same),
            (2, Padding::Same),
        ] {
            let got = conv2d(&x, &k, stride, padding).unwrap();
            let want = naive_conv2d(&x, &k, stride, padding);
            assert_eq!(got.shape(), want.shape());
            assert_eq!(got.data(), want.data(), "stride {stride} {padding:?}");
        }
    }

    #[test]
    fn conv2d_multi_channel_matches_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = random_tensor(&mut rng, &[3, 8, 8]);
        let k = random_tensor(&mut rng, &[4, 3, 3, 3]);
        let got = conv2d(&x, &k, 2, Padding::Valid).unwrap();
        let want = naive_conv2d(&x, &k, 2, Padding::Valid);
        assert_eq!(got.data(), want.data());
    }

    #[test]
    fn conv2d_kernel_too_large_errors() {
        let x = Tensor::zeros(&[1, 2, 2]);
        let k = Tensor::zeros(&[1, 1, 3, 3]);
        assert!(conv2d(&x, &k, 1, Padding::Valid).is_err());
    }

    #[test]
    fn maxpool_constant_input() {
        let x = Tensor::filled(&[2, 4, 4], 0.7);
        let (y, _) = maxpool2d(&x).unwrap();
        assert_eq!(y.shape(), &[2, 2, 2]);
        assert!(y.data().iter().all(|&v| v == 0.7));
    }

    #[test]
    fn maxpool_single_window() {
        let x = Tensor::new(vec![1, 2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let (y, idx) = maxpool2d(&x).unwrap();
        assert_eq!(y.data(), &[4.0]);
        assert_eq!(idx, vec![3]); // flat index of (1,1)
    }

    #[test]
    fn maxpool_matches_window_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let x = random_tensor(&mut rng, &[1, 8, 8]);
        let (y, idx) = maxpool2d(&x).unwrap();
        for oy in 0..4 {
            for ox in 0..4 {
                let mut best = f64::NEG_INFINITY;
                for dy in 0..2 {
                    for dx in 0..2 {
                        best = best.max(x.data()[(oy * 2 + dy) * 8 + ox * 2 + dx]);
                    }
                }
                let o = oy * 4 + ox;
                assert_eq!(y.data()[o], best);
                assert_eq!(x.data()[idx[o]], best);
            }
        }
    }

    #[test]
    fn maxpool_odd_dims_error() {
        let x = Tensor::zeros(&[1, 3, 4]);
        assert!(maxpool2d(&x).is_err());
    }

    #[test]
    fn softmax_uniform_logits() {
        let p = softmax(&[2.5; 10]);
        for &v in &p {
            assert!((v - 0.1).abs() < 1e-15);
        }
    }

    #[test]
    fn softmax_extreme_logits_stable() {
        let p = softmax(&[1000.0, 0.0]);
        assert!(p[0] > 1.0 - 1e-12 && p[1] < 1e-12);
        assert!(p.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn softmax_matches_compensated_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let logits: Vec<f64> = (0..7).map(|_| rng.gen_range(-10.0..10.0)).collect();
            let got = softmax(&logits);
            let want = softmax_oracle(&logits);
            for (g, w) in got.iter().zip(&want) {
                assert!((g - w).abs() < 1e-12, "{g} vs {w}");
            }
        }
    }

    #[test]
    fn argmax_ties_break_low() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0, 2.0]), 1);
        assert_eq!(argmax(&[5.0]), 0);
    }

    #[test]
    fn kernels_are_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let a = random_tensor(&mut rng, &[7, 9]);
        let b = random_tensor(&mut rng, &[9, 5]);
        let x = random_tensor(&mut rng, &[2, 6, 6]);
        let k = random_tensor(&mut rng, &[3, 2, 3, 3]);
        assert_eq!(
            matmul(&a, &b).unwrap().data(),
            matmul(&a, &b).unwrap().data()
        );
        assert_eq!(
            conv2d(&x, &k, 1, Padding::Same).unwrap().data(),
            conv2d(&x, &k, 1, Padding::Same).unwrap().data()
        );
    }

    proptest! {
        #[test]
        fn softmax_sums_to_one_and_shift_invariant(
            logits in proptest::collection::vec(-50.0f64..50.0, 1..20),
            shift in -30.0f64..30.0,
        ) {
            let p = softmax(&logits);
            let total: f64 = p.iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-9);
            prop_assert!(p.iter().all(|&v| v > 0.0));

            let shifted: Vec<f64> = logits.iter().map(|&v| v + shift).collect();
            let q = softmax(&shifted);
            for (a, b) in p.iter().zip(&q) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }

        #[test]
        fn matmul_identity_property(n in 1usize..6, seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = random_tensor(&mut rng, &[n, n]);
            prop_assert_eq!(matmul(&identity(n), &x).unwrap(), x.clone());
            prop_assert_eq!(matmul(&x, &identity(n)).unwrap(), x);
        }

        #[test]
        fn conv_unit_kernel_identity_property(
            c in 1usize..3, h in 1usize..6, w in 1usize..6, seed in 0u64..1000,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = random_tensor(&mut rng, &[c, h, w]);
            // One 1x1 kernel per input channel, weight 1 on its own channel.
            let mut kdata = vec![0.0; c * c];
            for i in 0..c {
                kdata[i * c + i] = 1.0;
            }
            let k = Tensor::new(vec![c, c, 1, 1], kdata).unwrap();
            let y = conv2d(&x, &k, 1, Padding::Valid).unwrap();
            prop_assert_eq!(y.data(), x.data());
        }
    }
}
