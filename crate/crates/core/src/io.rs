//! 8-bit PNG reading and writing.
//!
//! Samples are mapped `v / 255` on input and `round(clamp(v, 0, 1) * 255)` on
//! output, so a save/load round trip of a quantized image is exact.

use std::path::Path;

use image::{DynamicImage, GrayImage, ImageBuffer, Luma, Rgb, RgbImage};

use crate::error::{FusionError, Result};
use crate::raster::{ColorImage, Plane};

#[inline]
pub fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

#[inline]
pub fn dequantize(v: u8) -> f64 {
    f64::from(v) / 255.0
}

fn open(path: &Path) -> Result<DynamicImage> {
    image::open(path).map_err(|source| FusionError::ImageRead {
        path: path.to_path_buf(),
        source,
    })
}

/// Loads a visible color image. Alpha is dropped; gray input is replicated.
pub fn load_color(path: impl AsRef<Path>) -> Result<ColorImage> {
    let img = open(path.as_ref())?;
    Ok(color_from_rgb8(&img.to_rgb8()))
}

/// Loads a near-infrared gray image. Color input is reduced by channel average.
pub fn load_gray(path: impl AsRef<Path>) -> Result<Plane> {
    let img = open(path.as_ref())?;
    match img {
        DynamicImage::ImageLuma8(g) => Ok(gray_from_luma8(&g)),
        DynamicImage::ImageLumaA8(_) => Ok(gray_from_luma8(&img.to_luma8())),
        other => Ok(color_from_rgb8(&other.to_rgb8()).channel_mean()),
    }
}

pub fn save_color(img: &ColorImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    color_to_rgb8(img)
        .save(path)
        .map_err(|source| FusionError::ImageWrite {
            path: path.to_path_buf(),
            source,
        })
}

pub fn save_gray(plane: &Plane, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    gray_to_luma8(plane)
        .save(path)
        .map_err(|source| FusionError::ImageWrite {
            path: path.to_path_buf(),
            source,
        })
}

pub fn color_from_rgb8(img: &RgbImage) -> ColorImage {
    let (w, h) = (img.width() as usize, img.height() as usize);
    let mut chans = [
        Vec::with_capacity(w * h),
        Vec::with_capacity(w * h),
        Vec::with_capacity(w * h),
    ];
    for px in img.pixels() {
        for (ch, &v) in chans.iter_mut().zip(px.0.iter()) {
            ch.push(dequantize(v));
        }
    }
    let [r, g, b] = chans;
    ColorImage::new(
        Plane::from_raw(w, h, r),
        Plane::from_raw(w, h, g),
        Plane::from_raw(w, h, b),
    )
    .expect("channels share dimensions")
}

pub fn gray_from_luma8(img: &GrayImage) -> Plane {
    let (w, h) = (img.width() as usize, img.height() as usize);
    Plane::from_raw(w, h, img.as_raw().iter().map(|&v| dequantize(v)).collect())
}

pub fn color_to_rgb8(img: &ColorImage) -> RgbImage {
    let [r, g, b] = img.planes();
    let (w, h) = (img.width() as u32, img.height() as u32);
    ImageBuffer::from_fn(w, h, |x, y| {
        let i = y as usize * img.width() + x as usize;
        Rgb([
            quantize(r.data()[i]),
            quantize(g.data()[i]),
            quantize(b.data()[i]),
        ])
    })
}

pub fn gray_to_luma8(plane: &Plane) -> GrayImage {
    let (w, h) = (plane.width() as u32, plane.height() as u32);
    ImageBuffer::from_fn(w, h, |x, y| {
        Luma([quantize(plane.get(y as usize, x as usize))])
    })
}
