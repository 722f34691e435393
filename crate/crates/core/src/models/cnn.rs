//! The small convolutional mask classifier.
//!
//! Two conv blocks (same-padded convolution, leaky ReLU, max pool) feed two
//! fully connected layers; the first is followed by leaky ReLU, the second
//! emits one logit per class. Parameters live in one flat `f32` buffer so
//! the optimizer and the model file treat them uniformly.

use ndarray::linalg::general_mat_mul;
use ndarray::{ArrayView1, ArrayView2, ArrayViewMut2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ClassifierBackend;
use crate::data::{MaskClass, Normalization, CLASSIFIER_INPUT_SIDE};
use crate::error::{Error, Result};
use crate::image::{Image, CHANNELS};

pub const NUM_CLASSES: usize = MaskClass::COUNT;

pub type Logits = [f32; NUM_CLASSES];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvBlock {
    pub out_channels: usize,
    pub kernel: usize,
    pub pool: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CnnSpec {
    pub conv_blocks: Vec<ConvBlock>,
    pub leaky_slope: f32,
    /// Widths of the fully connected layers; the last one is the class count.
    pub linear_layers: Vec<usize>,
    pub input_side: usize,
}

impl Default for CnnSpec {
    fn default() -> Self {
        Self {
            conv_blocks: vec![
                ConvBlock {
                    out_channels: 16,
                    kernel: 3,
                    pool: 2,
                },
                ConvBlock {
                    out_channels: 32,
                    kernel: 3,
                    pool: 2,
                },
            ],
            leaky_slope: 0.01,
            linear_layers: vec![128, NUM_CLASSES],
            input_side: CLASSIFIER_INPUT_SIDE,
        }
    }
}

impl CnnSpec {
    /// A narrower network with the same structure.
    pub fn compact(c1: usize, c2: usize, hidden: usize) -> Self {
        let mut spec = Self::default();
        spec.conv_blocks[0].out_channels = c1;
        spec.conv_blocks[1].out_channels = c2;
        spec.linear_layers[0] = hidden;
        spec
    }

    pub fn with_input_side(mut self, side: usize) -> Self {
        self.input_side = side;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.conv_blocks.len() != 2 {
            return Err(Error::config(format!(
                "expected exactly 2 conv blocks, got {}",
                self.conv_blocks.len()
            )));
        }
        if self.linear_layers.len() != 2 {
            return Err(Error::config(format!(
                "expected exactly 2 linear layers, got {}",
                self.linear_layers.len()
            )));
        }
        if self.linear_layers[1] != NUM_CLASSES {
            return Err(Error::config(format!(
                "final linear width must be {NUM_CLASSES}, got {}",
                self.linear_layers[1]
            )));
        }
        if self.linear_layers[0] == 0 {
            return Err(Error::config("hidden linear width must be positive"));
        }
        if !(self.leaky_slope.is_finite() && self.leaky_slope >= 0.0 && self.leaky_slope < 1.0) {
            return Err(Error::config(format!("leaky slope {} outside [0, 1)", self.leaky_slope)));
        }
        let mut side = self.input_side;
        if side == 0 {
            return Err(Error::config("input side must be positive"));
        }
        for (i, b) in self.conv_blocks.iter().enumerate() {
            if b.out_channels == 0 || b.kernel == 0 || b.kernel % 2 == 0 || b.pool == 0 {
                return Err(Error::config(format!(
                    "conv block {i}: channels and pool must be positive and kernel odd, got {b:?}"
                )));
            }
            if side % b.pool != 0 {
                return Err(Error::config(format!(
                    "conv block {i}: feature side {side} not divisible by pool {}",
                    b.pool
                )));
            }
            side /= b.pool;
        }
        Ok(())
    }

    fn geometry(&self) -> Vec<BlockGeom> {
        let mut side = self.input_side;
        let mut in_c = CHANNELS;
        self.conv_blocks
            .iter()
            .map(|b| {
                let g = BlockGeom {
                    in_c,
                    out_c: b.out_channels,
                    k: b.kernel,
                    pool: b.pool,
                    side,
                };
                side /= b.pool;
                in_c = b.out_channels;
                g
            })
            .collect()
    }

    fn flat_dim(&self) -> usize {
        let g = self.geometry();
        let last = g.last().expect("validated spec");
        last.out_c * last.pooled_side() * last.pooled_side()
    }

    /// Number of trainable parameters (weights and biases).
    pub fn parameter_count(&self) -> usize {
        Layout::new(self).total
    }
}

#[derive(Debug, Clone, Copy)]
struct BlockGeom {
    in_c: usize,
    out_c: usize,
    k: usize,
    pool: usize,
    side: usize,
}

impl BlockGeom {
    fn patch(&self) -> usize {
        self.in_c * self.k * self.k
    }

    fn pooled_side(&self) -> usize {
        self.side / self.pool
    }
}

/// Offsets of each tensor inside the flat parameter buffer.
#[derive(Debug, Clone)]
struct Layout {
    conv: Vec<(usize, usize)>,
    fc: Vec<(usize, usize)>,
    total: usize,
}

impl Layout {
    fn new(spec: &CnnSpec) -> Self {
        let mut offset = 0;
        let mut take = |n: usize| {
            let start = offset;
            offset += n;
            start
        };
        let conv = spec
            .geometry()
            .iter()
            .map(|g| {
                let w = take(g.out_c * g.patch());
                let b = take(g.out_c);
                (w, b)
            })
            .collect();
        let mut fan_in = spec.flat_dim();
        let fc = spec
            .linear_layers
            .iter()
            .map(|&width| {
                let w = take(width * fan_in);
                let b = take(width);
                fan_in = width;
                (w, b)
            })
            .collect();
        Self {
            conv,
            fc,
            total: offset,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cnn {
    spec: CnnSpec,
    normalization: Normalization,
    params: Vec<f32>,
}

struct BlockCache {
    cols: Vec<f32>,
    pre: Vec<f32>,
    argmax: Vec<usize>,
}

struct ForwardCache {
    blocks: Vec<BlockCache>,
    flat: Vec<f32>,
    hidden_pre: Vec<f32>,
    hidden: Vec<f32>,
}

/// Builds the network with seeded uniform fan-in initialization.
pub fn build_cnn(spec: &CnnSpec, seed: u64) -> Result<Cnn> {
    spec.validate()?;
    let layout = Layout::new(spec);
    let mut params = vec![0.0f32; layout.total];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fill = |start: usize, len: usize, fan_in: usize| {
        let bound = 1.0 / (fan_in as f32).sqrt();
        for p in &mut params[start..start + len] {
            *p = rng.gen_range(-bound..bound);
        }
    };
    for (g, &(w, b)) in spec.geometry().iter().zip(&layout.conv) {
        fill(w, g.out_c * g.patch(), g.patch());
        fill(b, g.out_c, g.patch());
    }
    let mut fan_in = spec.flat_dim();
    for (&width, &(w, b)) in spec.linear_layers.iter().zip(&layout.fc) {
        fill(w, width * fan_in, fan_in);
        fill(b, width, fan_in);
        fan_in = width;
    }
    Ok(Cnn {
        spec: spec.clone(),
        normalization: Normalization::default(),
        params,
    })
}

impl Cnn {
    pub(crate) fn from_parts(spec: CnnSpec, normalization: Normalization, params: Vec<f32>) -> Result<Self> {
        spec.validate()?;
        normalization.validate()?;
        let expected = spec.parameter_count();
        if params.len() != expected {
            return Err(Error::Format(format!(
                "parameter buffer has {} values, spec needs {expected}",
                params.len()
            )));
        }
        Ok(Self {
            spec,
            normalization,
            params,
        })
    }

    pub fn spec(&self) -> &CnnSpec {
        &self.spec
    }

    pub fn normalization(&self) -> &Normalization {
        &self.normalization
    }

    pub fn set_normalization(&mut self, normalization: Normalization) {
        self.normalization = normalization;
    }

    pub fn params(&self) -> &[f32] {
        &self.params
    }

    pub(crate) fn params_mut(&mut self) -> &mut [f32] {
        &mut self.params
    }

    fn leaky(&self, v: f32) -> f32 {
        if v > 0.0 {
            v
        } else {
            v * self.spec.leaky_slope
        }
    }

    fn leaky_grad(&self, v: f32) -> f32 {
        if v > 0.0 {
            1.0
        } else {
            self.spec.leaky_slope
        }
    }

    /// Converts a normalized HWC image to CHW.
    fn to_chw(&self, image: &Image) -> Result<Vec<f32>> {
        let side = self.spec.input_side;
        if image.width() != side || image.height() != side {
            return Err(Error::invalid(format!(
                "classifier expects {side}x{side} input, got {}x{}",
                image.width(),
                image.height()
            )));
        }
        let plane = side * side;
        let mut chw = vec![0.0; CHANNELS * plane];
        for (i, px) in image.data().chunks_exact(CHANNELS).enumerate() {
            for c in 0..CHANNELS {
                chw[c * plane + i] = px[c];
            }
        }
        Ok(chw)
    }

    /// Logits for an already-normalized image, with the activations needed
    /// for backpropagation.
    fn forward_cached(&self, normalized: &Image) -> Result<(Logits, ForwardCache)> {
        let layout = Layout::new(&self.spec);
        let mut x = self.to_chw(normalized)?;
        let mut blocks = Vec::with_capacity(2);
        for (g, &(w_off, b_off)) in self.spec.geometry().iter().zip(&layout.conv) {
            let plane = g.side * g.side;
            let cols = im2col(&x, g);
            let w = ArrayView2::from_shape((g.out_c, g.patch()), &self.params[w_off..w_off + g.out_c * g.patch()])
                .expect("layout");
            let cols_view = ArrayView2::from_shape((g.patch(), plane), &cols).expect("im2col shape");
            let mut pre = vec![0.0f32; g.out_c * plane];
            {
                let mut out = ArrayViewMut2::from_shape((g.out_c, plane), &mut pre).expect("shape");
                general_mat_mul(1.0, &w, &cols_view, 0.0, &mut out);
            }
            for (oc, row) in pre.chunks_exact_mut(plane).enumerate() {
                let bias = self.params[b_off + oc];
                row.iter_mut().for_each(|v| *v += bias);
            }
            let (pooled, argmax) = self.pool_forward(&pre, g);
            blocks.push(BlockCache { cols, pre, argmax });
            x = pooled;
        }
        let flat = x;

        let (w1, b1) = layout.fc[0];
        let hidden_w = self.spec.linear_layers[0];
        let w = ArrayView2::from_shape((hidden_w, flat.len()), &self.params[w1..w1 + hidden_w * flat.len()])
            .expect("layout");
        let hidden_pre: Vec<f32> = w
            .dot(&ArrayView1::from(&flat))
            .iter()
            .zip(&self.params[b1..b1 + hidden_w])
            .map(|(v, b)| v + b)
            .collect();
        let hidden: Vec<f32> = hidden_pre.iter().map(|&v| self.leaky(v)).collect();

        let (w2, b2) = layout.fc[1];
        let mut logits = [0.0f32; NUM_CLASSES];
        for (k, logit) in logits.iter_mut().enumerate() {
            let row = &self.params[w2 + k * hidden_w..w2 + (k + 1) * hidden_w];
            *logit = row.iter().zip(&hidden).map(|(a, b)| a * b).sum::<f32>() + self.params[b2 + k];
        }
        Ok((
            logits,
            ForwardCache {
                blocks,
                flat,
                hidden_pre,
                hidden,
            },
        ))
    }

    fn pool_forward(&self, pre: &[f32], g: &BlockGeom) -> (Vec<f32>, Vec<usize>) {
        let (side, p, ps) = (g.side, g.pool, g.pooled_side());
        let mut pooled = Vec::with_capacity(g.out_c * ps * ps);
        let mut argmax = Vec::with_capacity(g.out_c * ps * ps);
        for c in 0..g.out_c {
            let base = c * side * side;
            for py in 0..ps {
                for px in 0..ps {
                    let mut best = base + py * p * side + px * p;
                    for dy in 0..p {
                        for dx in 0..p {
                            let idx = base + (py * p + dy) * side + px * p + dx;
                            if pre[idx] > pre[best] {
                                best = idx;
                            }
                        }
                    }
                    argmax.push(best);
                    pooled.push(self.leaky(pre[best]));
                }
            }
        }
        (pooled, argmax)
    }

    /// Adds the parameter gradient for one example to `grad`, given the
    /// gradient of the loss with respect to its logits.
    fn backward(&self, cache: &ForwardCache, dlogits: &Logits, grad: &mut [f32]) {
        let layout = Layout::new(&self.spec);
        let hidden_w = self.spec.linear_layers[0];

        let (w2, b2) = layout.fc[1];
        let mut dhidden = vec![0.0f32; hidden_w];
        for (k, &dz) in dlogits.iter().enumerate() {
            grad[b2 + k] += dz;
            let row = w2 + k * hidden_w;
            for j in 0..hidden_w {
                grad[row + j] += dz * cache.hidden[j];
                dhidden[j] += dz * self.params[row + j];
            }
        }
        for (d, &pre) in dhidden.iter_mut().zip(&cache.hidden_pre) {
            *d *= self.leaky_grad(pre);
        }

        let (w1, b1) = layout.fc[0];
        let flat_len = cache.flat.len();
        {
            let dh = ArrayView2::from_shape((hidden_w, 1), &dhidden).expect("shape");
            let x = ArrayView2::from_shape((1, flat_len), &cache.flat).expect("shape");
            let mut gw = ArrayViewMut2::from_shape((hidden_w, flat_len), &mut grad[w1..w1 + hidden_w * flat_len])
                .expect("layout");
            general_mat_mul(1.0, &dh, &x, 1.0, &mut gw);
        }
        for (g, d) in grad[b1..b1 + hidden_w].iter_mut().zip(&dhidden) {
            *g += d;
        }
        let w = ArrayView2::from_shape((hidden_w, flat_len), &self.params[w1..w1 + hidden_w * flat_len]).expect("layout");
        let mut dx: Vec<f32> = w.t().dot(&ArrayView1::from(&dhidden)).to_vec();

        let geometry = self.spec.geometry();
        for (bi, (g, &(w_off, b_off))) in geometry.iter().zip(&layout.conv).enumerate().rev() {
            let cache_b = &cache.blocks[bi];
            let plane = g.side * g.side;
            let mut dpre = vec![0.0f32; g.out_c * plane];
            for (&idx, &d) in cache_b.argmax.iter().zip(&dx) {
                dpre[idx] += d * self.leaky_grad(cache_b.pre[idx]);
            }
            for (oc, row) in dpre.chunks_exact(plane).enumerate() {
                grad[b_off + oc] += row.iter().sum::<f32>();
            }
            let dy = ArrayView2::from_shape((g.out_c, plane), &dpre).expect("shape");
            let cols = ArrayView2::from_shape((g.patch(), plane), &cache_b.cols).expect("shape");
            {
                let mut gw = ArrayViewMut2::from_shape((g.out_c, g.patch()), &mut grad[w_off..w_off + g.out_c * g.patch()])
                    .expect("layout");
                general_mat_mul(1.0, &dy, &cols.t(), 1.0, &mut gw);
            }
            if bi > 0 {
                let w = ArrayView2::from_shape((g.out_c, g.patch()), &self.params[w_off..w_off + g.out_c * g.patch()])
                    .expect("layout");
                let dcols = w.t().dot(&dy);
                dx = col2im(dcols.as_slice().expect("standard layout"), g);
            }
        }
    }

    /// Forward and backward pass for one normalized example.
    ///
    /// `loss_fn` maps the logits to `(loss, dloss/dlogits)`. The parameter
    /// gradient is accumulated into `grad`.
    pub(crate) fn accumulate_gradient(
        &self,
        normalized: &Image,
        grad: &mut [f32],
        loss_fn: impl FnOnce(&Logits) -> (f64, [f64; NUM_CLASSES]),
    ) -> Result<(f64, Logits)> {
        let (logits, cache) = self.forward_cached(normalized)?;
        let (loss, dlogits) = loss_fn(&logits);
        self.backward(&cache, &dlogits.map(|v| v as f32), grad);
        Ok((loss, logits))
    }

    /// Logits for one already-normalized image.
    pub fn forward_normalized(&self, normalized: &Image) -> Result<Logits> {
        Ok(self.forward_cached(normalized)?.0)
    }
}

fn im2col(x: &[f32], g: &BlockGeom) -> Vec<f32> {
    let side = g.side as isize;
    let pad = (g.k / 2) as isize;
    let plane = g.side * g.side;
    let mut cols = vec![0.0f32; g.patch() * plane];
    for ci in 0..g.in_c {
        let src = &x[ci * plane..(ci + 1) * plane];
        for ky in 0..g.k {
            for kx in 0..g.k {
                let row = (ci * g.k + ky) * g.k + kx;
                let dst = &mut cols[row * plane..(row + 1) * plane];
                let (oy, ox) = (ky as isize - pad, kx as isize - pad);
                for y in 0..side {
                    let sy = y + oy;
                    if sy < 0 || sy >= side {
                        continue;
                    }
                    let x_lo = (-ox).max(0);
                    let x_hi = (side - ox).min(side);
                    if x_lo >= x_hi {
                        continue;
                    }
                    let d0 = (y * side + x_lo) as usize;
                    let s0 = (sy * side + x_lo + ox) as usize;
                    let n = (x_hi - x_lo) as usize;
                    dst[d0..d0 + n].copy_from_slice(&src[s0..s0 + n]);
                }
            }
        }
    }
    cols
}

fn col2im(dcols: &[f32], g: &BlockGeom) -> Vec<f32> {
    let side = g.side as isize;
    let pad = (g.k / 2) as isize;
    let plane = g.side * g.side;
    let mut dx = vec![0.0f32; g.in_c * plane];
    for ci in 0..g.in_c {
        for ky in 0..g.k {
            for kx in 0..g.k {
                let row = (ci * g.k + ky) * g.k + kx;
                let src = &dcols[row * plane..(row + 1) * plane];
                let (oy, ox) = (ky as isize - pad, kx as isize - pad);
                for y in 0..side {
                    let sy = y + oy;
                    if sy < 0 || sy >= side {
                        continue;
                    }
                    let x_lo = (-ox).max(0);
                    let x_hi = (side - ox).min(side);
                    for x in x_lo..x_hi {
                        dx[ci * plane + (sy * side + x + ox) as usize] += src[(y * side + x) as usize];
                    }
                }
            }
        }
    }
    dx
}

impl ClassifierBackend for Cnn {
    fn name(&self) -> &str {
        "cnn"
    }

    fn input_side(&self) -> usize {
        self.spec.input_side
    }

    fn predict_logits(&self, batch: &[Image]) -> Result<Vec<Logits>> {
        let run = |img: &Image| self.forward_normalized(&self.normalization.normalize(img));
        #[cfg(feature = "native")]
        {
            use rayon::prelude::*;
            batch.par_iter().map(run).collect()
        }
        #[cfg(not(feature = "native"))]
        {
            batch.iter().map(run).collect()
        }
    }

    fn parameter_count(&self) -> usize {
        self.params.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::softmax_f32;

    fn tiny_spec() -> CnnSpec {
        CnnSpec {
            conv_blocks: vec![
                ConvBlock {
                    out_channels: 2,
                    kernel: 3,
                    pool: 2,
                },
                ConvBlock {
                    out_channels: 3,
                    kernel: 3,
                    pool: 2,
                },
            ],
            leaky_slope: 0.1,
            linear_layers: vec![4, 3],
            input_side: 8,
        }
    }

    #[test]
    fn default_parameter_count_by_hand() {
        // conv1: 16*3*3*3 + 16 = 448
        // conv2: 32*16*3*3 + 32 = 4640
        // fc1: (32*32*32)*128 + 128 = 4194432
        // fc2: 128*3 + 3 = 387
        assert_eq!(CnnSpec::default().parameter_count(), 448 + 4640 + 4_194_432 + 387);
        assert_eq!(build_cnn(&CnnSpec::default(), 0).unwrap().parameter_count(), 4_199_907);
    }

    #[test]
    fn zero_image_gives_finite_logits() {
        let cnn = build_cnn(&CnnSpec::default(), 5).unwrap();
        let logits = cnn.predict_logits(&[Image::filled(128, 128, [0.0; 3])]).unwrap();
        assert_eq!(logits.len(), 1);
        assert!(logits[0].iter().all(|v| v.is_finite()));
        let p = softmax_f32(&logits[0]);
        assert!((p.iter().sum::<f32>() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn same_seed_same_logits() {
        let img = Image::from_fn(128, 128, |x, y| [x as f32, y as f32, 100.0]);
        let a = build_cnn(&CnnSpec::default(), 9).unwrap();
        let b = build_cnn(&CnnSpec::default(), 9).unwrap();
        let c = build_cnn(&CnnSpec::default(), 10).unwrap();
        let la = a.predict_logits(&[img.clone()]).unwrap();
        assert_eq!(la, b.predict_logits(&[img.clone()]).unwrap());
        assert_ne!(la, c.predict_logits(&[img]).unwrap());
    }

    #[test]
    fn structure_is_enforced() {
        let mut s = CnnSpec::default();
        s.conv_blocks.pop();
        assert!(matches!(build_cnn(&s, 0), Err(Error::Config(_))));
        let mut s = CnnSpec::default();
        s.linear_layers = vec![64, 32, 3];
        assert!(build_cnn(&s, 0).is_err());
        let mut s = CnnSpec::default();
        s.linear_layers[1] = 2;
        assert!(build_cnn(&s, 0).is_err());
        let mut s = CnnSpec::default();
        s.conv_blocks[0].kernel = 4;
        assert!(build_cnn(&s, 0).is_err());
        let mut s = CnnSpec::default();
        s.input_side = 126;
        assert!(build_cnn(&s, 0).is_err());
    }

    #[test]
    fn wrong_input_side_is_rejected() {
        let cnn = build_cnn(&tiny_spec(), 0).unwrap();
        assert!(matches!(
            cnn.predict_logits(&[Image::filled(9, 8, [0.0; 3])]),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn backprop_matches_finite_differences() {
        let spec = tiny_spec();
        let cnn = build_cnn(&spec, 21).unwrap();
        let img = Image::from_fn(8, 8, |x, y| {
            [
                ((x * 7 + y * 3) % 11) as f32 / 5.0 - 1.0,
                ((x * 2 + y * 5) % 7) as f32 / 3.0 - 1.0,
                ((x + y) % 4) as f32 / 2.0 - 0.7,
            ]
        });
        let target = [0.3f64, -1.1, 0.7];
        // Loss = sum_k target_k * logit_k, so dloss/dlogits = target.
        let loss_of = |m: &Cnn| -> f64 {
            let z = m.forward_normalized(&img).unwrap();
            z.iter().zip(&target).map(|(a, b)| *a as f64 * b).sum()
        };
        let mut grad = vec![0.0f32; cnn.parameter_count()];
        cnn.accumulate_gradient(&img, &mut grad, |_| (0.0, target)).unwrap();

        let h = 1e-3f32;
        let mut checked = 0;
        for i in (0..cnn.parameter_count()).step_by(7) {
            let mut plus = cnn.clone();
            plus.params_mut()[i] += h;
            let mut minus = cnn.clone();
            minus.params_mut()[i] -= h;
            let numeric = (loss_of(&plus) - loss_of(&minus)) / (2.0 * h as f64);
            let analytic = grad[i] as f64;
            let scale = numeric.abs().max(analytic.abs()).max(1e-2);
            assert!(
                (numeric - analytic).abs() / scale < 2e-2,
                "param {i}: numeric {numeric} vs analytic {analytic}"
            );
            checked += 1;
        }
        assert!(checked > 20);
    }
}
