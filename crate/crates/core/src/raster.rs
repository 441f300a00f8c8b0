//! Raster images and the spatial-contrast transform.
//!
//! Intensities are kept as `f64` in `[0, 1]` between the I/O boundaries; only
//! [`RgbImage`] stores 8-bit samples. The spatial contrast of a pixel is its
//! grayscale intensity minus the mean of its in-bounds 8-neighbourhood.

use crate::error::{Error, Result};

/// ITU-R BT.601 luma weights.
pub const LUMA_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

/// Interleaved 8-bit RGB raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        check_dims(width, height)?;
        if pixels.len() != width * height * 3 {
            return Err(Error::InvalidImage(format!(
                "expected {} RGB bytes for {width}x{height}, got {}",
                width * height * 3,
                pixels.len()
            )));
        }
        Ok(Self { width, height, pixels })
    }

    /// Image filled with a single colour.
    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Result<Self> {
        check_dims(width, height)?;
        let pixels = rgb.iter().copied().cycle().take(width * height * 3).collect();
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    /// Crops to `roi`, which must lie inside the image.
    pub fn crop(&self, roi: Roi) -> Result<RgbImage> {
        roi.check_within(self.width, self.height)?;
        let (w, h) = (roi.width(), roi.height());
        let mut pixels = Vec::with_capacity(w * h * 3);
        for y in roi.y1..roi.y2 {
            let start = (y * self.width + roi.x1) * 3;
            pixels.extend_from_slice(&self.pixels[start..start + w * 3]);
        }
        RgbImage::new(w, h, pixels)
    }
}

/// Single-channel raster with intensities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        check_dims(width, height)?;
        if pixels.len() != width * height {
            return Err(Error::InvalidImage(format!(
                "expected {} intensities for {width}x{height}, got {}",
                width * height,
                pixels.len()
            )));
        }
        if let Some(bad) = pixels.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidImage(format!("intensity {bad} outside [0, 1]")));
        }
        Ok(Self { width, height, pixels })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        check_dims(width, height)?;
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        check_dims(width, height)?;
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * self.width + x]
    }

    /// Quantizes to 8 bits with `round(v * 255)`.
    pub fn to_u8(&self) -> Vec<u8> {
        self.pixels
            .iter()
            .map(|&v| (v * 255.0).round().clamp(0.0, 255.0) as u8)
            .collect()
    }
}

/// Signed spatial contrast, each value in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContrastImage {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl ContrastImage {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        check_dims(width, height)?;
        if values.len() != width * height {
            return Err(Error::InvalidImage(format!(
                "expected {} contrast values for {width}x{height}, got {}",
                width * height,
                values.len()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !(-1.0..=1.0).contains(*v)) {
            return Err(Error::InvalidImage(format!("contrast {bad} outside [-1, 1]")));
        }
        Ok(Self { width, height, values })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }
}

/// Axis-aligned pixel rectangle `[x1, x2) x [y1, y2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Roi {
    pub x1: usize,
    pub y1: usize,
    pub x2: usize,
    pub y2: usize,
}

impl Roi {
    pub fn new(x1: usize, y1: usize, x2: usize, y2: usize) -> Self {
        Self { x1, y1, x2, y2 }
    }

    pub fn width(&self) -> usize {
        self.x2.saturating_sub(self.x1)
    }

    pub fn height(&self) -> usize {
        self.y2.saturating_sub(self.y1)
    }

    pub fn check_within(&self, width: usize, height: usize) -> Result<()> {
        if self.x1 < self.x2 && self.x2 <= width && self.y1 < self.y2 && self.y2 <= height {
            Ok(())
        } else {
            Err(Error::InvalidImage(format!(
                "roi ({}, {}, {}, {}) not inside {width}x{height}",
                self.x1, self.y1, self.x2, self.y2
            )))
        }
    }
}

fn check_dims(width: usize, height: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidImage(format!(
            "dimensions must be positive, got {width}x{height}"
        )));
    }
    Ok(())
}

pub fn to_grayscale(img: &RgbImage) -> GrayImage {
    let pixels = img
        .pixels
        .chunks_exact(3)
        .map(|p| {
            let luma = LUMA_WEIGHTS[0] * f64::from(p[0])
                + LUMA_WEIGHTS[1] * f64::from(p[1])
                + LUMA_WEIGHTS[2] * f64::from(p[2]);
            (luma / 255.0).clamp(0.0, 1.0)
        })
        .collect();
    GrayImage {
        width: img.width,
        height: img.height,
        pixels,
    }
}

/// Visits the in-bounds 8-neighbours of every pixel, centre excluded, and
/// stores `f(centre, neighbours)` per pixel.
fn map_neighborhoods(img: &GrayImage, mut f: impl FnMut(f64, &[f64]) -> f64) -> Vec<f64> {
    let (w, h) = (img.width, img.height);
    let src = &img.pixels;
    let mut out = Vec::with_capacity(w * h);
    let mut neighbors = Vec::with_capacity(8);
    for y in 0..h {
        let y0 = y.saturating_sub(1);
        let y1 = (y + 1).min(h - 1);
        for x in 0..w {
            let x0 = x.saturating_sub(1);
            let x1 = (x + 1).min(w - 1);
            neighbors.clear();
            for ny in y0..=y1 {
                for nx in x0..=x1 {
                    if nx != x || ny != y {
                        neighbors.push(src[ny * w + nx]);
                    }
                }
            }
            out.push(f(src[y * w + x], &neighbors));
        }
    }
    out
}

/// Mean of the in-bounds 8-neighbours of each pixel, centre excluded.
///
/// Corners average 3 neighbours, edges 5, interior pixels 8. A 1x1 image has
/// no neighbours and averages to 0.
pub fn neighbor_average(img: &GrayImage) -> GrayImage {
    let pixels = map_neighborhoods(img, |_, n| {
        if n.is_empty() {
            0.0
        } else {
            (n.iter().sum::<f64>() / n.len() as f64).clamp(0.0, 1.0)
        }
    });
    GrayImage {
        width: img.width,
        height: img.height,
        pixels,
    }
}

/// Grayscale intensity minus the neighbour average.
///
/// Evaluated as the mean of the centre-minus-neighbour differences, which is
/// algebraically the same quantity but exactly zero on flat regions and free
/// of the rounding in a separately computed mean.
pub fn spatial_contrast(img: &GrayImage) -> ContrastImage {
    let values = map_neighborhoods(img, |c, n| {
        if n.is_empty() {
            c
        } else {
            (n.iter().map(|v| c - v).sum::<f64>() / n.len() as f64).clamp(-1.0, 1.0)
        }
    });
    ContrastImage {
        width: img.width,
        height: img.height,
        values,
    }
}

/// Bilinear resample to `side x side`, sampling at pixel centres with edge
/// clamping. Same-size resizes return the input unchanged.
pub fn resize(img: &GrayImage, side: usize) -> Result<GrayImage> {
    if side == 0 {
        return Err(Error::InvalidArgument("resize side must be >= 1".into()));
    }
    if img.width == side && img.height == side {
        return Ok(img.clone());
    }
    let sx = img.width as f64 / side as f64;
    let sy = img.height as f64 / side as f64;
    let mut pixels = Vec::with_capacity(side * side);
    for y in 0..side {
        let src_y = (y as f64 + 0.5) * sy - 0.5;
        for x in 0..side {
            let src_x = (x as f64 + 0.5) * sx - 0.5;
            let mut v = [0.0];
            sample_bilinear(&img.pixels, img.width, img.height, 1, src_x, src_y, &mut v);
            pixels.push(v[0].clamp(0.0, 1.0));
        }
    }
    GrayImage::new(side, side, pixels)
}

/// Samples an interleaved raster at a real-valued coordinate. Coordinates
/// outside the frame are clamped to the nearest edge pixel.
pub(crate) fn sample_bilinear<T: Copy + Into<f64>>(
    data: &[T],
    width: usize,
    height: usize,
    channels: usize,
    x: f64,
    y: f64,
    out: &mut [f64],
) {
    let x = x.clamp(0.0, (width - 1) as f64);
    let y = y.clamp(0.0, (height - 1) as f64);
    let x0 = x.floor() as usize;
    let y0 = y.floor() as usize;
    let x1 = (x0 + 1).min(width - 1);
    let y1 = (y0 + 1).min(height - 1);
    let fx = x - x0 as f64;
    let fy = y - y0 as f64;
    let at = |xx: usize, yy: usize, c: usize| -> f64 { data[(yy * width + xx) * channels + c].into() };
    for (c, slot) in out.iter_mut().enumerate().take(channels) {
        let top = at(x0, y0, c) * (1.0 - fx) + at(x1, y0, c) * fx;
        let bottom = at(x0, y1, c) * (1.0 - fx) + at(x1, y1, c) * fx;
        *slot = top * (1.0 - fy) + bottom * fy;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn center_peak() -> GrayImage {
        GrayImage::from_fn(3, 3, |x, y| if x == 1 && y == 1 { 1.0 } else { 0.5 }).unwrap()
    }

    /// Nested-loop reference, written independently of the windowed loop.
    fn reference_average(img: &GrayImage) -> Vec<f64> {
        let (w, h) = (img.width() as i64, img.height() as i64);
        let mut out = Vec::new();
        for y in 0..h {
            for x in 0..w {
                let mut vals = Vec::new();
                for dy in -1i64..=1 {
                    for dx in -1i64..=1 {
                        let (nx, ny) = (x + dx, y + dy);
                        if (dx, dy) != (0, 0) && nx >= 0 && ny >= 0 && nx < w && ny < h {
                            vals.push(img.get(nx as usize, ny as usize));
                        }
                    }
                }
                out.push(if vals.is_empty() {
                    0.0
                } else {
                    vals.iter().sum::<f64>() / vals.len() as f64
                });
            }
        }
        out
    }

    #[test]
    fn grayscale_extremes() {
        let white = RgbImage::filled(1, 1, [255, 255, 255]).unwrap();
        assert_eq!(to_grayscale(&white).get(0, 0), 1.0);
        let black = RgbImage::filled(1, 1, [0, 0, 0]).unwrap();
        assert_eq!(to_grayscale(&black).get(0, 0), 0.0);
        let red = RgbImage::filled(1, 1, [255, 0, 0]).unwrap();
        assert!((to_grayscale(&red).get(0, 0) - 0.299).abs() < 1e-15);
    }

    #[test]
    fn average_of_uniform_image() {
        let img = GrayImage::filled(3, 3, 0.5).unwrap();
        assert!(neighbor_average(&img).pixels().iter().all(|&v| v == 0.5));
    }

    #[test]
    fn average_center_peak() {
        let avg = neighbor_average(&center_peak());
        let reference = reference_average(&center_peak());
        for (a, r) in avg.pixels().iter().zip(&reference) {
            assert!((a - r).abs() < 1e-15);
        }
        assert!((avg.get(1, 1) - 0.5).abs() < 1e-15);
        assert!((avg.get(0, 0) - 2.0 / 3.0).abs() < 1e-15);
        // (x=1, y=0) and (x=0, y=1) are edge pixels with 5 neighbours
        assert!((avg.get(1, 0) - 0.6).abs() < 1e-15);
        assert!((avg.get(0, 1) - 0.6).abs() < 1e-15);
    }

    #[test]
    fn single_pixel_average_is_zero() {
        let img = GrayImage::filled(1, 1, 0.7).unwrap();
        assert_eq!(neighbor_average(&img).get(0, 0), 0.0);
        assert_eq!(spatial_contrast(&img).get(0, 0), 0.7);
    }

    #[test]
    fn contrast_center_peak() {
        let sc = spatial_contrast(&center_peak());
        assert!((sc.get(1, 1) - 0.5).abs() < 1e-15);
        for (x, y) in [(0, 0), (2, 0), (0, 2), (2, 2)] {
            assert!((sc.get(x, y) + 1.0 / 6.0).abs() < 1e-15);
        }
        for (x, y) in [(1, 0), (0, 1), (2, 1), (1, 2)] {
            assert!((sc.get(x, y) + 0.1).abs() < 1e-15);
        }
    }

    #[test]
    fn contrast_of_constant_is_zero() {
        for v in [0.0, 0.3, 1.0] {
            let img = GrayImage::filled(5, 4, v).unwrap();
            assert!(spatial_contrast(&img).values().iter().all(|&c| c == 0.0));
        }
    }

    #[test]
    fn rejects_bad_images() {
        assert!(RgbImage::new(0, 1, vec![]).is_err());
        assert!(RgbImage::new(1, 1, vec![0, 0]).is_err());
        assert!(GrayImage::new(1, 1, vec![1.5]).is_err());
        assert!(GrayImage::new(1, 1, vec![f64::NAN]).is_err());
        assert!(GrayImage::new(2, 1, vec![0.1]).is_err());
    }

    #[test]
    fn resize_identity_and_ramp() {
        let img = GrayImage::from_fn(32, 32, |x, y| ((x * 7 + y * 3) % 11) as f64 / 10.0).unwrap();
        assert_eq!(resize(&img, 32).unwrap(), img);

        let ramp = GrayImage::new(2, 2, vec![0.0, 1.0, 0.0, 1.0]).unwrap();
        let up = resize(&ramp, 4).unwrap();
        let expected = [0.0, 0.25, 0.75, 1.0];
        for y in 0..4 {
            for (x, e) in expected.iter().enumerate() {
                assert!((up.get(x, y) - e).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn resize_constant() {
        let img = GrayImage::filled(7, 5, 0.25).unwrap();
        for side in [1, 3, 48] {
            assert!(resize(&img, side)
                .unwrap()
                .pixels()
                .iter()
                .all(|&v| (v - 0.25).abs() < 1e-15));
        }
    }

    #[test]
    fn crop_extracts_roi() {
        let px: Vec<u8> = (0..4 * 3 * 3).map(|v| v as u8).collect();
        let img = RgbImage::new(4, 3, px).unwrap();
        let c = img.crop(Roi::new(1, 1, 3, 3)).unwrap();
        assert_eq!((c.width(), c.height()), (2, 2));
        assert_eq!(c.get(0, 0), img.get(1, 1));
        assert_eq!(c.get(1, 1), img.get(2, 2));
        assert!(img.crop(Roi::new(1, 1, 5, 3)).is_err());
        assert!(img.crop(Roi::new(2, 1, 2, 3)).is_err());
    }
}
