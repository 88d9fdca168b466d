//! Mesh and image file formats.
//!
//! Images are stored as PNG. Color channels are quantized to 8 bits with
//! round-to-nearest; position maps and depth maps use 16 bits.

use std::io::Cursor;
use std::path::Path;

use image::{DynamicImage, GrayImage, ImageBuffer, ImageFormat, Luma, Rgb};
use uvforge_core::{parse_obj, write_obj, DepthMap, Grid, Mask, Mesh, RgbImage};

use crate::error::{Error, Result};

pub fn load_mesh(path: impl AsRef<Path>) -> Result<Mesh> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_obj(&text).map_err(|source| Error::Mesh {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_mesh(path: impl AsRef<Path>, mesh: &Mesh) -> Result<()> {
    write_file(path.as_ref(), write_obj(mesh).as_bytes())
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn quantize(c: f32, max: f32) -> f32 {
    (c.clamp(0.0, 1.0) * max).round()
}

pub fn to_rgb8(image: &RgbImage) -> image::RgbImage {
    let (w, h) = image.dims();
    ImageBuffer::from_fn(w as u32, h as u32, |x, y| {
        let c = image.get(x as usize, y as usize);
        Rgb(c.map(|v| quantize(v, 255.0) as u8))
    })
}

pub fn from_rgb8(image: &image::RgbImage) -> RgbImage {
    Grid::from_fn(image.width() as usize, image.height() as usize, |x, y| {
        image
            .get_pixel(x as u32, y as u32)
            .0
            .map(|v| v as f32 / 255.0)
    })
}

pub fn to_mask8(mask: &Mask) -> GrayImage {
    let (w, h) = mask.dims();
    ImageBuffer::from_fn(w as u32, h as u32, |x, y| {
        Luma([if *mask.get(x as usize, y as usize) {
            255
        } else {
            0
        }])
    })
}

pub fn from_mask8(image: &GrayImage) -> Mask {
    Grid::from_fn(image.width() as usize, image.height() as usize, |x, y| {
        image.get_pixel(x as u32, y as u32).0[0] >= 128
    })
}

pub fn to_rgb16(image: &RgbImage) -> ImageBuffer<Rgb<u16>, Vec<u16>> {
    let (w, h) = image.dims();
    ImageBuffer::from_fn(w as u32, h as u32, |x, y| {
        let c = image.get(x as usize, y as usize);
        Rgb(c.map(|v| quantize(v, 65535.0) as u16))
    })
}

/// Normalized depth (near = bright) as 16-bit grayscale.
pub fn depth_to_gray16(depth: &DepthMap) -> ImageBuffer<Luma<u16>, Vec<u16>> {
    let norm = uvforge_core::normalize_depth_for_conditioning(depth);
    let (w, h) = norm.dims();
    ImageBuffer::from_fn(w as u32, h as u32, |x, y| {
        Luma([quantize(norm.get(x as usize, y as usize)[0], 65535.0) as u16])
    })
}

pub fn encode_png(image: impl Into<DynamicImage>) -> Result<Vec<u8>> {
    let mut out = Cursor::new(Vec::new());
    image.into().write_to(&mut out, ImageFormat::Png)?;
    Ok(out.into_inner())
}

pub fn decode_png(bytes: &[u8]) -> Result<DynamicImage> {
    Ok(image::load_from_memory_with_format(
        bytes,
        ImageFormat::Png,
    )?)
}

pub fn encode_rgb_png(image: &RgbImage) -> Result<Vec<u8>> {
    encode_png(to_rgb8(image))
}

pub fn decode_rgb_png(bytes: &[u8]) -> Result<RgbImage> {
    Ok(from_rgb8(&decode_png(bytes)?.to_rgb8()))
}

pub fn encode_mask_png(mask: &Mask) -> Result<Vec<u8>> {
    encode_png(to_mask8(mask))
}

pub fn decode_mask_png(bytes: &[u8]) -> Result<Mask> {
    Ok(from_mask8(&decode_png(bytes)?.to_luma8()))
}

pub fn write_rgb_png(path: impl AsRef<Path>, image: &RgbImage) -> Result<()> {
    write_file(path.as_ref(), &encode_rgb_png(image)?)
}

pub fn write_mask_png(path: impl AsRef<Path>, mask: &Mask) -> Result<()> {
    write_file(path.as_ref(), &encode_mask_png(mask)?)
}

pub fn write_rgb16_png(path: impl AsRef<Path>, image: &RgbImage) -> Result<()> {
    write_file(path.as_ref(), &encode_png(to_rgb16(image))?)
}

pub fn write_depth_png(path: impl AsRef<Path>, depth: &DepthMap) -> Result<()> {
    write_file(path.as_ref(), &encode_png(depth_to_gray16(depth))?)
}

pub fn write_text(path: impl AsRef<Path>, text: &str) -> Result<()> {
    write_file(path.as_ref(), text.as_bytes())
}

pub fn read_rgb_png(path: impl AsRef<Path>) -> Result<RgbImage> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_rgb_png(&bytes)
}
