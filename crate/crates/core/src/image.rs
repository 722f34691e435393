//! Minimal RGB raster used throughout the crate.
//!
//! Pixels are stored row-major, interleaved `HxWx3`, as `f32`. Raw images
//! carry values in `[0, 255]`; normalized images carry whatever the active
//! [`Normalization`](crate::data::Normalization) produces.

use crate::error::{Error, Result};

pub const CHANNELS: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl Image {
    pub fn new(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != width * height * CHANNELS {
            return Err(Error::invalid(format!(
                "pixel buffer has {} values, expected {}x{}x{} = {}",
                data.len(),
                height,
                width,
                CHANNELS,
                width * height * CHANNELS
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, rgb: [f32; 3]) -> Self {
        let mut data = Vec::with_capacity(width * height * CHANNELS);
        for _ in 0..width * height {
            data.extend_from_slice(&rgb);
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> [f32; 3]) -> Self {
        let mut data = Vec::with_capacity(width * height * CHANNELS);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    /// Grayscale rows replicated across the three channels.
    pub fn from_gray_rows(rows: &[&[f32]]) -> Result<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != width) {
            return Err(Error::invalid("ragged grayscale rows"));
        }
        Ok(Self::from_fn(width, height, |x, y| {
            let v = rows[y][x];
            [v, v, v]
        }))
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn is_empty(&self) -> bool {
        self.width == 0 || self.height == 0
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f32 {
        self.data[(y * self.width + x) * CHANNELS + c]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, c: usize, v: f32) {
        self.data[(y * self.width + x) * CHANNELS + c] = v;
    }

    pub fn pixel(&self, x: usize, y: usize) -> [f32; 3] {
        let i = (y * self.width + x) * CHANNELS;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn set_pixel(&mut self, x: usize, y: usize, rgb: [f32; 3]) {
        let i = (y * self.width + x) * CHANNELS;
        self.data[i..i + CHANNELS].copy_from_slice(&rgb);
    }

    /// Copies the pixel rectangle `[x0, x0+w) x [y0, y0+h)`.
    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> Result<Image> {
        if w == 0 || h == 0 || x0 + w > self.width || y0 + h > self.height {
            return Err(Error::invalid(format!(
                "crop {w}x{h}+{x0}+{y0} outside {}x{} image",
                self.width, self.height
            )));
        }
        let mut data = Vec::with_capacity(w * h * CHANNELS);
        for y in y0..y0 + h {
            let start = (y * self.width + x0) * CHANNELS;
            data.extend_from_slice(&self.data[start..start + w * CHANNELS]);
        }
        Ok(Image {
            width: w,
            height: h,
            data,
        })
    }

    pub fn max_abs_diff(&self, other: &Image) -> f32 {
        assert_eq!((self.width, self.height), (other.width, other.height));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f32::max)
    }
}

/// Resizes to a `side x side` square with bilinear interpolation.
///
/// Aspect ratio is not preserved: non-square inputs are stretched.
pub fn resize_image(image: &Image, side: usize) -> Result<Image> {
    resize_to(image, side, side)
}

/// Bilinear resize with half-pixel centers and edge clamping.
pub fn resize_to(image: &Image, width: usize, height: usize) -> Result<Image> {
    if image.is_empty() {
        return Err(Error::invalid("cannot resize an empty image"));
    }
    if width == 0 || height == 0 {
        return Err(Error::invalid("resize target must be at least 1x1"));
    }
    if width == image.width && height == image.height {
        return Ok(image.clone());
    }
    let xs = sample_axis(image.width, width);
    let ys = sample_axis(image.height, height);
    let mut out = Vec::with_capacity(width * height * CHANNELS);
    for &(y0, y1, fy) in &ys {
        for &(x0, x1, fx) in &xs {
            for c in 0..CHANNELS {
                let top = lerp(image.get(x0, y0, c), image.get(x1, y0, c), fx);
                let bottom = lerp(image.get(x0, y1, c), image.get(x1, y1, c), fx);
                out.push(lerp(top, bottom, fy));
            }
        }
    }
    Image::new(width, height, out)
}

#[inline]
pub(crate) fn lerp(a: f32, b: f32, t: f32) -> f32 {
    a + (b - a) * t
}

fn sample_axis(src: usize, dst: usize) -> Vec<(usize, usize, f32)> {
    let scale = src as f64 / dst as f64;
    (0..dst)
        .map(|i| {
            let s = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, (src - 1) as f64);
            let i0 = s.floor() as usize;
            let i1 = (i0 + 1).min(src - 1);
            (i0, i1, (s - i0 as f64) as f32)
        })
        .collect()
}

#[cfg(feature = "native")]
pub fn load_image(path: &std::path::Path) -> Result<Image> {
    if !path.exists() {
        return Err(Error::NotFound(path.to_path_buf()));
    }
    let img = image::open(path)
        .map_err(|e| Error::Decode(format!("{}: {e}", path.display())))?
        .to_rgb8();
    let (w, h) = img.dimensions();
    let data = img.into_raw().into_iter().map(f32::from).collect();
    Image::new(w as usize, h as usize, data)
}

#[cfg(feature = "native")]
pub fn save_image(img: &Image, path: &std::path::Path) -> Result<()> {
    let raw: Vec<u8> = img
        .data
        .iter()
        .map(|v| v.round().clamp(0.0, 255.0) as u8)
        .collect();
    let buf = image::RgbImage::from_raw(img.width as u32, img.height as u32, raw)
        .ok_or_else(|| Error::invalid("pixel buffer size mismatch"))?;
    buf.save(path)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}
