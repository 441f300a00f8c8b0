//! Image file I/O: PNG and binary PPM in, 8-bit PGM out.

use std::fs;
use std::path::Path;

use image::{ColorType, ImageReader};

use crate::error::{Error, Result};
use crate::raster::{GrayImage, RgbImage};

/// File extensions recognised as input images.
pub const IMAGE_EXTENSIONS: &[&str] = &["png", "ppm", "pnm"];

pub fn is_image_path(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .map(|e| IMAGE_EXTENSIONS.iter().any(|x| e.eq_ignore_ascii_case(x)))
        .unwrap_or(false)
}

fn unreadable(path: &Path, reason: impl ToString) -> Error {
    Error::UnreadableImage {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    }
}

/// Reads an 8-bit PNG or PPM file as RGB. 16-bit and float inputs are rejected.
pub fn read_rgb(path: &Path) -> Result<RgbImage> {
    let bytes = fs::read(path).map_err(|e| unreadable(path, e))?;
    decode_rgb(&bytes).map_err(|e| match e {
        Error::InvalidImage(reason) => unreadable(path, reason),
        other => other,
    })
}

/// Decodes PNG or PPM bytes; the format is sniffed from the content.
pub fn decode_rgb(bytes: &[u8]) -> Result<RgbImage> {
    let reader = ImageReader::new(std::io::Cursor::new(bytes))
        .with_guessed_format()
        .map_err(|e| Error::InvalidImage(e.to_string()))?;
    let img = reader.decode().map_err(|e| Error::InvalidImage(e.to_string()))?;
    match img.color() {
        ColorType::L8 | ColorType::La8 | ColorType::Rgb8 | ColorType::Rgba8 => {}
        other => {
            return Err(Error::InvalidImage(format!(
                "unsupported sample format {other:?}; only 8-bit images are accepted"
            )))
        }
    }
    let rgb = img.to_rgb8();
    let (w, h) = (rgb.width() as usize, rgb.height() as usize);
    RgbImage::new(w, h, rgb.into_raw())
}

/// Reads only the image dimensions.
pub fn image_dimensions(path: &Path) -> Result<(usize, usize)> {
    let reader = ImageReader::open(path)
        .map_err(|e| unreadable(path, e))?
        .with_guessed_format()
        .map_err(|e| unreadable(path, e))?;
    let (w, h) = reader.into_dimensions().map_err(|e| unreadable(path, e))?;
    Ok((w as usize, h as usize))
}

/// Encodes a binary PGM (P5) with maxval 255.
pub fn encode_pgm(width: usize, height: usize, samples: &[u8]) -> Vec<u8> {
    debug_assert_eq!(samples.len(), width * height);
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(samples);
    out
}

pub fn write_pgm(path: &Path, width: usize, height: usize, samples: &[u8]) -> Result<()> {
    fs::write(path, encode_pgm(width, height, samples)).map_err(|e| Error::io(path, e))
}

pub fn write_gray_pgm(path: &Path, img: &GrayImage) -> Result<()> {
    write_pgm(path, img.width(), img.height(), &img.to_u8())
}

/// Encodes a binary PPM (P6).
pub fn encode_ppm(img: &RgbImage) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend_from_slice(img.pixels());
    out
}

pub fn write_ppm(path: &Path, img: &RgbImage) -> Result<()> {
    fs::write(path, encode_ppm(img)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ppm_round_trip() {
        let img = RgbImage::new(2, 1, vec![1, 2, 3, 250, 251, 252]).unwrap();
        let back = decode_rgb(&encode_ppm(&img)).unwrap();
        assert_eq!(back, img);
    }

    #[test]
    fn png_round_trip_and_16_bit_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p8 = dir.path().join("a.png");
        image::RgbImage::from_raw(2, 2, (0..12).collect())
            .unwrap()
            .save(&p8)
            .unwrap();
        let img = read_rgb(&p8).unwrap();
        assert_eq!(img.get(1, 1), [9, 10, 11]);
        assert_eq!(image_dimensions(&p8).unwrap(), (2, 2));

        let p16 = dir.path().join("b.png");
        image::ImageBuffer::<image::Rgb<u16>, _>::from_raw(1, 1, vec![1u16, 2, 3])
            .unwrap()
            .save(&p16)
            .unwrap();
        assert!(matches!(read_rgb(&p16), Err(Error::UnreadableImage { .. })));
    }

    #[test]
    fn pgm_header() {
        let bytes = encode_pgm(2, 1, &[0, 255]);
        assert_eq!(&bytes[..], b"P5\n2 1\n255\n\x00\xff");
    }
}
