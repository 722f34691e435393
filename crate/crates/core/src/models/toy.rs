//! Seeded synthetic classification data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::LabeledImage;
use crate::data::MaskClass;
use crate::image::Image;

/// Base color per class, indexed by class id.
pub const TOY_COLORS: [[f32; 3]; 3] = [[200.0, 50.0, 50.0], [50.0, 200.0, 50.0], [50.0, 50.0, 200.0]];

/// `n` solid-color images of side `side`, classes assigned round-robin and
/// each channel jittered by up to `±jitter` around the class color.
pub fn solid_color_set(n: usize, side: usize, jitter: f32, seed: u64) -> Vec<LabeledImage> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let class = MaskClass::ALL[i % MaskClass::COUNT];
            let base = TOY_COLORS[class.id() as usize];
            let color = base.map(|c| {
                let d = if jitter > 0.0 { rng.gen_range(-jitter..=jitter) } else { 0.0 };
                (c + d).clamp(0.0, 255.0)
            });
            LabeledImage::new(Image::filled(side, side, color), class)
        })
        .collect()
}
