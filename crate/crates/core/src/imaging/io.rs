//! PNG/JPEG input and PNG output.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use image::codecs::png::{CompressionType, FilterType, PngEncoder};
use image::{ExtendedColorType, ImageEncoder};

use super::raster::{BinaryImage, GrayImage, RgbImage};
use crate::error::Result;

pub fn load_rgb(path: impl AsRef<Path>) -> Result<RgbImage> {
    let img = image::open(path)?.into_rgb8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    RgbImage::from_vec(w, h, img.into_raw())
}

/// Loads any image as a binary plane: non-zero luma is 1.
pub fn load_binary(path: impl AsRef<Path>) -> Result<BinaryImage> {
    let img = image::open(path)?.into_luma8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    BinaryImage::from_vec(w, h, img.into_raw())
}

fn write_png(path: &Path, data: &[u8], width: usize, height: usize, color: ExtendedColorType) -> Result<()> {
    let out = BufWriter::new(File::create(path)?);
    PngEncoder::new_with_quality(out, CompressionType::Fast, FilterType::Adaptive)
        .write_image(data, width as u32, height as u32, color)?;
    Ok(())
}

pub fn save_rgb(path: impl AsRef<Path>, img: &RgbImage) -> Result<()> {
    write_png(path.as_ref(), img.data(), img.width(), img.height(), ExtendedColorType::Rgb8)
}

pub fn save_gray(path: impl AsRef<Path>, img: &GrayImage) -> Result<()> {
    write_png(path.as_ref(), img.data(), img.width(), img.height(), ExtendedColorType::L8)
}

/// Writes a binary plane as an 8-bit PNG with values {0, 255}.
pub fn save_binary(path: impl AsRef<Path>, img: &BinaryImage) -> Result<()> {
    save_gray(path, &img.to_gray())
}
