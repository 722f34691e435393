//! Training-time augmentation.
//!
//! Images are normalized first, then run through color jitter, rotation,
//! random resized crop, Gaussian blur and random erasing, in that order.
//! Each stage can be disabled by setting it to `None`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{lerp, resize_image, Image, CHANNELS};

pub const CLASSIFIER_INPUT_SIDE: usize = 128;

/// Per-channel normalization applied to `[0, 255]` pixels: `(x / 255 - mean) / std`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub mean: [f32; 3],
    pub std: [f32; 3],
}

impl Default for Normalization {
    fn default() -> Self {
        Self {
            mean: [0.5; 3],
            std: [0.5; 3],
        }
    }
}

impl Normalization {
    pub fn validate(&self) -> Result<()> {
        if self.std.iter().any(|s| !(s.is_finite() && *s > 0.0)) || self.mean.iter().any(|m| !m.is_finite()) {
            return Err(Error::config(format!("invalid normalization {self:?}")));
        }
        Ok(())
    }

    pub fn normalize(&self, image: &Image) -> Image {
        let mut out = image.clone();
        for px in out.data_mut().chunks_exact_mut(CHANNELS) {
            for c in 0..CHANNELS {
                px[c] = (px[c] / 255.0 - self.mean[c]) / self.std[c];
            }
        }
        out
    }

    /// Maps normalized values back to the unit range `[0, 1]` (not `[0, 255]`).
    fn to_unit(&self, image: &mut Image) {
        for px in image.data_mut().chunks_exact_mut(CHANNELS) {
            for c in 0..CHANNELS {
                px[c] = px[c] * self.std[c] + self.mean[c];
            }
        }
    }

    fn from_unit(&self, image: &mut Image) {
        for px in image.data_mut().chunks_exact_mut(CHANNELS) {
            for c in 0..CHANNELS {
                px[c] = (px[c] - self.mean[c]) / self.std[c];
            }
        }
    }
}

/// Brightness, contrast and saturation factors are drawn from
/// `[max(0, 1 - x), 1 + x]`; the hue shift from `[-hue, hue]` (fraction of a turn).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColorJitter {
    pub brightness: f32,
    pub contrast: f32,
    pub saturation: f32,
    pub hue: f32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rotation {
    pub min_degrees: f32,
    pub max_degrees: f32,
}

impl Rotation {
    pub fn symmetric(max_abs_degrees: f32) -> Self {
        Self {
            min_degrees: -max_abs_degrees,
            max_degrees: max_abs_degrees,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResizedCrop {
    /// Fraction of the image area kept by the crop.
    pub scale: (f32, f32),
    /// Crop aspect ratio (width / height) range, sampled log-uniformly.
    pub ratio: (f32, f32),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianBlur {
    pub kernel_size: usize,
    pub sigma: (f32, f32),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomErasing {
    pub p: f32,
    /// Fraction of the image area erased.
    pub scale: (f32, f32),
    pub ratio: (f32, f32),
    pub value: f32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentationSpec {
    pub output_side: usize,
    pub color_jitter: Option<ColorJitter>,
    pub rotation: Option<Rotation>,
    pub resized_crop: Option<ResizedCrop>,
    pub gaussian_blur: Option<GaussianBlur>,
    pub random_erasing: Option<RandomErasing>,
    pub normalization: Normalization,
}

impl Default for AugmentationSpec {
    fn default() -> Self {
        Self {
            output_side: CLASSIFIER_INPUT_SIDE,
            color_jitter: Some(ColorJitter {
                brightness: 0.2,
                contrast: 0.2,
                saturation: 0.2,
                hue: 0.2,
            }),
            rotation: Some(Rotation::symmetric(15.0)),
            resized_crop: Some(ResizedCrop {
                scale: (0.8, 1.0),
                ratio: (3.0 / 4.0, 4.0 / 3.0),
            }),
            gaussian_blur: Some(GaussianBlur {
                kernel_size: 5,
                sigma: (0.1, 2.0),
            }),
            random_erasing: Some(RandomErasing {
                p: 0.25,
                scale: (0.02, 0.2),
                ratio: (0.3, 3.3),
                value: 0.0,
            }),
            normalization: Normalization::default(),
        }
    }
}

impl AugmentationSpec {
    /// Normalization only.
    pub fn disabled() -> Self {
        Self {
            output_side: CLASSIFIER_INPUT_SIDE,
            color_jitter: None,
            rotation: None,
            resized_crop: None,
            gaussian_blur: None,
            random_erasing: None,
            normalization: Normalization::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.output_side == 0 {
            return Err(Error::config("augmentation output side must be positive"));
        }
        self.normalization.validate()?;
        let range_ok = |(lo, hi): (f32, f32)| lo.is_finite() && hi.is_finite() && lo <= hi;
        if let Some(j) = &self.color_jitter {
            let factors = [j.brightness, j.contrast, j.saturation];
            if factors.iter().any(|f| !(f.is_finite() && *f >= 0.0)) || !(0.0..=0.5).contains(&j.hue) {
                return Err(Error::config(format!("invalid color jitter {j:?}")));
            }
        }
        if let Some(r) = &self.rotation {
            if !range_ok((r.min_degrees, r.max_degrees)) {
                return Err(Error::config(format!("invalid rotation range {r:?}")));
            }
        }
        if let Some(c) = &self.resized_crop {
            if !range_ok(c.scale) || c.scale.0 <= 0.0 || c.scale.1 > 1.0 || !range_ok(c.ratio) || c.ratio.0 <= 0.0 {
                return Err(Error::config(format!("invalid resized crop {c:?}")));
            }
        }
        if let Some(b) = &self.gaussian_blur {
            if b.kernel_size == 0 || b.kernel_size % 2 == 0 || !range_ok(b.sigma) || b.sigma.0 <= 0.0 {
                return Err(Error::config(format!("invalid gaussian blur {b:?}")));
            }
        }
        if let Some(e) = &self.random_erasing {
            if !(0.0..=1.0).contains(&e.p)
                || !range_ok(e.scale)
                || e.scale.0 <= 0.0
                || e.scale.1 > 1.0
                || !range_ok(e.ratio)
                || e.ratio.0 <= 0.0
            {
                return Err(Error::config(format!("invalid random erasing {e:?}")));
            }
        }
        Ok(())
    }
}

/// Normalizes a raw `[0, 255]` image and applies the enabled transforms.
/// Deterministic for a given `seed`.
pub fn augment(image: &Image, spec: &AugmentationSpec, seed: u64) -> Result<Image> {
    augment_with_rng(image, spec, &mut ChaCha8Rng::seed_from_u64(seed))
}

pub fn augment_with_rng<R: Rng + ?Sized>(image: &Image, spec: &AugmentationSpec, rng: &mut R) -> Result<Image> {
    spec.validate()?;
    if image.width() != spec.output_side || image.height() != spec.output_side {
        return Err(Error::invalid(format!(
            "augmentation expects {0}x{0} input, got {1}x{2}",
            spec.output_side,
            image.width(),
            image.height()
        )));
    }
    let norm = &spec.normalization;
    let mut img = norm.normalize(image);

    if let Some(j) = &spec.color_jitter {
        norm.to_unit(&mut img);
        color_jitter(&mut img, j, rng);
        norm.from_unit(&mut img);
    }
    if let Some(r) = &spec.rotation {
        let angle = uniform(rng, r.min_degrees, r.max_degrees);
        img = rotate(&img, angle, 0.0);
    }
    if let Some(c) = &spec.resized_crop {
        let (x, y, w, h) = crop_params(img.width(), img.height(), c, rng);
        img = resize_image(&img.crop(x, y, w, h)?, spec.output_side)?;
    }
    if let Some(b) = &spec.gaussian_blur {
        let sigma = uniform(rng, b.sigma.0, b.sigma.1);
        img = gaussian_blur(&img, b.kernel_size, sigma);
    }
    if let Some(e) = &spec.random_erasing {
        random_erase(&mut img, e, rng);
    }
    Ok(img)
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, lo: f32, hi: f32) -> f32 {
    if lo >= hi {
        lo
    } else {
        rng.gen_range(lo..hi)
    }
}

fn log_uniform<R: Rng + ?Sized>(rng: &mut R, lo: f32, hi: f32) -> f32 {
    uniform(rng, lo.ln(), hi.ln()).exp()
}

/// Jitter on unit-range pixels; results are clamped to `[0, 1]`.
fn color_jitter<R: Rng + ?Sized>(img: &mut Image, j: &ColorJitter, rng: &mut R) {
    let factor = |rng: &mut R, x: f32| uniform(rng, (1.0 - x).max(0.0), 1.0 + x);
    let brightness = factor(rng, j.brightness);
    let contrast = factor(rng, j.contrast);
    let saturation = factor(rng, j.saturation);
    let hue = uniform(rng, -j.hue, j.hue);

    let blend = |a: f32, b: f32, t: f32| (t * a + (1.0 - t) * b).clamp(0.0, 1.0);
    for px in img.data_mut().chunks_exact_mut(CHANNELS) {
        for v in px.iter_mut() {
            *v = (*v * brightness).clamp(0.0, 1.0);
        }
    }
    let mean_gray = img.data().chunks_exact(CHANNELS).map(gray).sum::<f32>() / (img.width() * img.height()) as f32;
    for px in img.data_mut().chunks_exact_mut(CHANNELS) {
        for v in px.iter_mut() {
            *v = blend(*v, mean_gray, contrast);
        }
        let g = gray(px);
        for v in px.iter_mut() {
            *v = blend(*v, g, saturation);
        }
        if hue != 0.0 {
            let (h, s, v) = rgb_to_hsv([px[0], px[1], px[2]]);
            let rgb = hsv_to_rgb((h + hue).rem_euclid(1.0), s, v);
            px.copy_from_slice(&rgb);
        }
    }
}

fn gray(px: &[f32]) -> f32 {
    0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2]
}

fn rgb_to_hsv([r, g, b]: [f32; 3]) -> (f32, f32, f32) {
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let s = if max > 0.0 { delta / max } else { 0.0 };
    let h = if delta == 0.0 {
        0.0
    } else if max == r {
        ((g - b) / delta).rem_euclid(6.0) / 6.0
    } else if max == g {
        ((b - r) / delta + 2.0) / 6.0
    } else {
        ((r - g) / delta + 4.0) / 6.0
    };
    (h, s, max)
}

fn hsv_to_rgb(h: f32, s: f32, v: f32) -> [f32; 3] {
    let h6 = h * 6.0;
    let sector = h6.floor();
    let f = h6 - sector;
    let p = v * (1.0 - s);
    let q = v * (1.0 - s * f);
    let t = v * (1.0 - s * (1.0 - f));
    match sector as i32 % 6 {
        0 => [v, t, p],
        1 => [q, v, p],
        2 => [p, v, t],
        3 => [p, q, v],
        4 => [t, p, v],
        _ => [v, p, q],
    }
}

/// Rotates counter-clockwise by `degrees` about the image center with
/// bilinear sampling; uncovered pixels take `fill`.
pub fn rotate(img: &Image, degrees: f32, fill: f32) -> Image {
    if degrees == 0.0 {
        return img.clone();
    }
    let (w, h) = (img.width(), img.height());
    let theta = (degrees as f64).to_radians();
    let (sin, cos) = theta.sin_cos();
    let cx = (w as f64 - 1.0) / 2.0;
    let cy = (h as f64 - 1.0) / 2.0;
    let tap = |x: i64, y: i64, c: usize| -> f32 {
        if x < 0 || y < 0 || x >= w as i64 || y >= h as i64 {
            fill
        } else {
            img.get(x as usize, y as usize, c)
        }
    };
    Image::from_fn(w, h, |x, y| {
        let dx = x as f64 - cx;
        let dy = y as f64 - cy;
        let sx = dx * cos - dy * sin + cx;
        let sy = dx * sin + dy * cos + cy;
        if sx <= -1.0 || sy <= -1.0 || sx >= w as f64 || sy >= h as f64 {
            return [fill; 3];
        }
        let x0 = sx.floor();
        let y0 = sy.floor();
        let fx = (sx - x0) as f32;
        let fy = (sy - y0) as f32;
        let (x0, y0) = (x0 as i64, y0 as i64);
        let mut out = [0.0; 3];
        for (c, o) in out.iter_mut().enumerate() {
            let top = lerp(tap(x0, y0, c), tap(x0 + 1, y0, c), fx);
            let bottom = lerp(tap(x0, y0 + 1, c), tap(x0 + 1, y0 + 1, c), fx);
            *o = lerp(top, bottom, fy);
        }
        out
    })
}

/// Picks a crop rectangle `(x, y, w, h)`; falls back to the largest
/// centered crop within the ratio range after ten rejected draws.
fn crop_params<R: Rng + ?Sized>(width: usize, height: usize, c: &ResizedCrop, rng: &mut R) -> (usize, usize, usize, usize) {
    let area = (width * height) as f32;
    for _ in 0..10 {
        let target = area * uniform(rng, c.scale.0, c.scale.1);
        let aspect = log_uniform(rng, c.ratio.0, c.ratio.1);
        let w = (target * aspect).sqrt().round() as usize;
        let h = (target / aspect).sqrt().round() as usize;
        if w > 0 && h > 0 && w <= width && h <= height {
            let y = rng.gen_range(0..=height - h);
            let x = rng.gen_range(0..=width - w);
            return (x, y, w, h);
        }
    }
    let in_ratio = width as f32 / height as f32;
    let (w, h) = if in_ratio < c.ratio.0 {
        (width, ((width as f32 / c.ratio.0).round() as usize).clamp(1, height))
    } else if in_ratio > c.ratio.1 {
        (((height as f32 * c.ratio.1).round() as usize).clamp(1, width), height)
    } else {
        (width, height)
    };
    ((width - w) / 2, (height - h) / 2, w, h)
}

/// Separable Gaussian blur with reflect padding.
pub fn gaussian_blur(img: &Image, kernel_size: usize, sigma: f32) -> Image {
    if kernel_size <= 1 {
        return img.clone();
    }
    let half = (kernel_size / 2) as i64;
    let mut kernel: Vec<f32> = (-half..=half)
        .map(|i| (-0.5 * (i as f32 / sigma).powi(2)).exp())
        .collect();
    let total: f32 = kernel.iter().sum();
    kernel.iter_mut().for_each(|k| *k /= total);

    let reflect = |i: i64, n: usize| -> usize {
        let n = n as i64;
        if n == 1 {
            return 0;
        }
        let period = 2 * (n - 1);
        let m = i.rem_euclid(period);
        (if m < n { m } else { period - m }) as usize
    };
    let (w, h) = (img.width(), img.height());
    let horizontal = Image::from_fn(w, h, |x, y| {
        let mut acc = [0.0f32; 3];
        for (k, weight) in kernel.iter().enumerate() {
            let sx = reflect(x as i64 + k as i64 - half, w);
            for (c, a) in acc.iter_mut().enumerate() {
                *a += weight * img.get(sx, y, c);
            }
        }
        acc
    });
    Image::from_fn(w, h, |x, y| {
        let mut acc = [0.0f32; 3];
        for (k, weight) in kernel.iter().enumerate() {
            let sy = reflect(y as i64 + k as i64 - half, h);
            for (c, a) in acc.iter_mut().enumerate() {
                *a += weight * horizontal.get(x, sy, c);
            }
        }
        acc
    })
}

fn random_erase<R: Rng + ?Sized>(img: &mut Image, e: &RandomErasing, rng: &mut R) {
    if e.p <= 0.0 || rng.gen::<f32>() >= e.p {
        return;
    }
    let (width, height) = (img.width(), img.height());
    let area = (width * height) as f32;
    for _ in 0..10 {
        let target = area * uniform(rng, e.scale.0, e.scale.1);
        let aspect = log_uniform(rng, e.ratio.0, e.ratio.1);
        let h = (target * aspect).sqrt().round() as usize;
        let w = (target / aspect).sqrt().round() as usize;
        if w == 0 || h == 0 || w >= width || h >= height {
            continue;
        }
        let y0 = rng.gen_range(0..=height - h);
        let x0 = rng.gen_range(0..=width - w);
        for y in y0..y0 + h {
            for x in x0..x0 + w {
                img.set_pixel(x, y, [e.value; 3]);
            }
        }
        return;
    }
}
