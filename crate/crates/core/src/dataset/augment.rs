use rand::Rng;

use crate::error::{Error, Result};
use crate::raster::{sample_bilinear, RgbImage};

pub const ROTATION_RANGE_DEG: f64 = 20.0;
pub const SHIFT_RANGE_FRAC: f64 = 0.2;
pub const ZOOM_RANGE_FRAC: f64 = 0.2;

/// Geometric augmentation: zoom and rotation about the image centre, then a
/// shift expressed as a fraction of the image side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AugmentParams {
    pub rotation_deg: f64,
    pub shift_x_frac: f64,
    pub shift_y_frac: f64,
    pub zoom_frac: f64,
}

impl AugmentParams {
    pub const IDENTITY: AugmentParams = AugmentParams {
        rotation_deg: 0.0,
        shift_x_frac: 0.0,
        shift_y_frac: 0.0,
        zoom_frac: 0.0,
    };

    pub fn new(rotation_deg: f64, shift_x_frac: f64, shift_y_frac: f64, zoom_frac: f64) -> Result<Self> {
        let p = Self {
            rotation_deg,
            shift_x_frac,
            shift_y_frac,
            zoom_frac,
        };
        if p.in_range() {
            Ok(p)
        } else {
            Err(Error::InvalidArgument(format!(
                "augmentation parameters out of range: {p:?}"
            )))
        }
    }

    pub fn in_range(&self) -> bool {
        let within = |v: f64, r: f64| (-r..=r).contains(&v);
        within(self.rotation_deg, ROTATION_RANGE_DEG)
            && within(self.shift_x_frac, SHIFT_RANGE_FRAC)
            && within(self.shift_y_frac, SHIFT_RANGE_FRAC)
            && within(self.zoom_frac, ZOOM_RANGE_FRAC)
    }

    /// Independent uniform draws over each closed range.
    pub fn sample<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self {
            rotation_deg: rng.random_range(-ROTATION_RANGE_DEG..=ROTATION_RANGE_DEG),
            shift_x_frac: rng.random_range(-SHIFT_RANGE_FRAC..=SHIFT_RANGE_FRAC),
            shift_y_frac: rng.random_range(-SHIFT_RANGE_FRAC..=SHIFT_RANGE_FRAC),
            zoom_frac: rng.random_range(-ZOOM_RANGE_FRAC..=ZOOM_RANGE_FRAC),
        }
    }
}

/// Applies the affine map by inverse bilinear sampling; samples falling
/// outside the frame take the nearest edge pixel.
///
/// Rotation angles are not clamped here, so callers may compose arbitrary
/// rotations.
pub fn augment(img: &RgbImage, p: &AugmentParams) -> RgbImage {
    let (w, h) = (img.width(), img.height());
    let cx = (w as f64 - 1.0) / 2.0;
    let cy = (h as f64 - 1.0) / 2.0;
    let scale = 1.0 + p.zoom_frac;
    let (sin, cos) = p.rotation_deg.to_radians().sin_cos();
    let tx = p.shift_x_frac * w as f64;
    let ty = p.shift_y_frac * h as f64;

    let src = img.pixels();
    let mut out = Vec::with_capacity(src.len());
    let mut rgb = [0.0f64; 3];
    for y in 0..h {
        for x in 0..w {
            // forward: dst = c + t + scale * R * (src - c); invert it
            let dx = x as f64 - cx - tx;
            let dy = y as f64 - cy - ty;
            let sx = cx + (cos * dx + sin * dy) / scale;
            let sy = cy + (-sin * dx + cos * dy) / scale;
            sample_bilinear(src, w, h, 3, sx, sy, &mut rgb);
            out.extend(rgb.iter().map(|v| v.round().clamp(0.0, 255.0) as u8));
        }
    }
    RgbImage::new(w, h, out).expect("augment preserves dimensions")
}
