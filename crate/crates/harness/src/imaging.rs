//! Mask and depth images.
//!
//! Depth images hold 16-bit millimeters with 0 marking invalid pixels.

use crate::error::{HarnessError, Result};
use getgrasp::geometry2d::{BinaryMask, DepthStats, GeometryError};
use image::{GrayImage, ImageBuffer, Luma};
use std::path::Path;

pub type DepthImage = ImageBuffer<Luma<u16>, Vec<u16>>;

fn unreadable(path: &Path, e: impl std::fmt::Display) -> HarnessError {
    HarnessError::UnreadableImage { path: path.to_path_buf(), message: e.to_string() }
}

fn open(path: &Path) -> Result<image::DynamicImage> {
    if !path.exists() {
        return Err(HarnessError::io(path, std::io::Error::from(std::io::ErrorKind::NotFound)));
    }
    image::ImageReader::open(path)
        .map_err(|e| HarnessError::io(path, e))?
        .with_guessed_format()
        .map_err(|e| HarnessError::io(path, e))?
        .decode()
        .map_err(|e| unreadable(path, e))
}

/// Loads any supported image as 8-bit luminance.
pub fn load_gray(path: &Path) -> Result<GrayImage> {
    Ok(open(path)?.into_luma8())
}

pub fn load_depth(path: &Path) -> Result<DepthImage> {
    Ok(open(path)?.into_luma16())
}

/// Pixels brighter than `threshold`.
pub fn threshold_mask(image: &GrayImage, threshold: u8) -> BinaryMask {
    BinaryMask::from_fn(image.width() as usize, image.height() as usize, |x, y| {
        image.get_pixel(x as u32, y as u32)[0] > threshold
    })
}

pub fn mask_to_image(mask: &BinaryMask) -> GrayImage {
    GrayImage::from_fn(mask.width() as u32, mask.height() as u32, |x, y| {
        Luma([if mask.get(x as usize, y as usize) { 255 } else { 0 }])
    })
}

/// Nearest-rank percentile of ascending `sorted` values.
pub fn nearest_rank(sorted: &[f64], percent: usize) -> f64 {
    let rank = (percent * sorted.len()).div_ceil(100).max(1);
    sorted[rank - 1]
}

/// Object distance and height from the depth pixels under the mask.
pub fn depth_stats(depth: &DepthImage, mask: &BinaryMask, z_table: f64) -> Result<DepthStats> {
    if depth.width() as usize != mask.width() || depth.height() as usize != mask.height() {
        return Err(HarnessError::InvalidInput(format!(
            "depth image is {}x{} but the mask is {}x{}",
            depth.width(),
            depth.height(),
            mask.width(),
            mask.height()
        )));
    }
    if mask.count() == 0 {
        return Err(GeometryError::EmptyMask.into());
    }
    let mut d: Vec<f64> = depth
        .pixels()
        .zip(mask.values())
        .filter(|(p, &m)| m && p[0] > 0)
        .map(|(p, _)| p[0] as f64 / 1000.0)
        .collect();
    if d.is_empty() {
        return Err(HarnessError::NoValidDepth);
    }
    d.sort_by(f64::total_cmp);
    let z_obj = nearest_rank(&d, 20);
    let mut heights: Vec<f64> = d.iter().map(|v| z_table - v).collect();
    heights.sort_by(f64::total_cmp);
    let stats = DepthStats { z_table, z_obj, h80: nearest_rank(&heights, 80) };
    stats.validate()?;
    Ok(stats)
}

pub fn save_image<P: image::Pixel<Subpixel = S> + image::PixelWithColorType, S: image::Primitive>(
    img: &ImageBuffer<P, Vec<S>>,
    path: &Path,
) -> Result<()>
where
    [S]: image::EncodableLayout,
{
    img.save(path).map_err(|e| match e {
        image::ImageError::IoError(io) => HarnessError::io(path, io),
        other => HarnessError::InvalidInput(format!("{}: {other}", path.display())),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square_mask(w: usize, lo: usize, hi: usize) -> BinaryMask {
        BinaryMask::from_fn(w, w, |x, y| (lo..hi).contains(&x) && (lo..hi).contains(&y))
    }

    #[test]
    fn white_square_threshold() {
        let img = GrayImage::from_fn(80, 80, |x, y| Luma([if (10..60).contains(&x) && (10..60).contains(&y) { 255 } else { 0 }]));
        assert_eq!(threshold_mask(&img, 128).count(), 2500);
    }

    #[test]
    fn gradient_threshold_matches_histogram_tail() {
        let img = GrayImage::from_fn(256, 7, |x, y| Luma([((x * 3 + y * 11) % 256) as u8]));
        let mut histogram = [0usize; 256];
        for p in img.pixels() {
            histogram[p[0] as usize] += 1;
        }
        for t in [0u8, 1, 100, 128, 254, 255] {
            let tail: usize = histogram[t as usize + 1..].iter().sum();
            assert_eq!(threshold_mask(&img, t).count(), tail);
        }
    }

    #[test]
    fn black_image_has_empty_mask() {
        let mask = threshold_mask(&GrayImage::new(20, 20), 128);
        assert_eq!(mask.count(), 0);
        assert_eq!(getgrasp::geometry2d::extract_contours(&mask), Err(GeometryError::EmptyMask));
    }

    #[test]
    fn uniform_depth() {
        let mask = square_mask(30, 5, 20);
        let depth = DepthImage::from_fn(30, 30, |x, y| Luma([if mask.get(x as usize, y as usize) { 500 } else { 600 }]));
        let s = depth_stats(&depth, &mask, 0.6).unwrap();
        assert_eq!(s.z_obj, 0.5);
        assert!((s.h80 - 0.1).abs() < 1e-12);
    }

    #[test]
    fn two_level_depth_uses_nearest_rank() {
        // 100 masked pixels, the first 80 at 0.50 m and the rest at 0.55 m.
        let mask = BinaryMask::from_fn(10, 10, |_, _| true);
        let depth = DepthImage::from_fn(10, 10, |_, y| Luma([if y < 8 { 500 } else { 550 }]));
        let s = depth_stats(&depth, &mask, 0.6).unwrap();
        assert_eq!(s.z_obj, 0.5);
        assert!((s.h80 - 0.1).abs() < 1e-12);
    }

    #[test]
    fn invalid_depth_is_rejected() {
        let mask = square_mask(10, 2, 6);
        let depth = DepthImage::from_fn(10, 10, |x, _| Luma([if x < 2 { 600 } else { 0 }]));
        assert!(matches!(depth_stats(&depth, &mask, 0.6), Err(HarnessError::NoValidDepth)));
    }

    #[test]
    fn nearest_rank_convention() {
        let v: Vec<f64> = (1..=5).map(f64::from).collect();
        assert_eq!(nearest_rank(&v, 20), 1.0);
        assert_eq!(nearest_rank(&v, 21), 2.0);
        assert_eq!(nearest_rank(&v, 80), 4.0);
        assert_eq!(nearest_rank(&v, 100), 5.0);
        assert_eq!(nearest_rank(&[7.0], 0), 7.0);
    }

    #[test]
    fn depth_survives_png_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.png");
        let depth = DepthImage::from_fn(9, 4, |x, y| Luma([(x * 1000 + y * 7) as u16]));
        save_image(&depth, &path).unwrap();
        assert_eq!(load_depth(&path).unwrap(), depth);
        let pgm = dir.path().join("d.pgm");
        save_image(&depth, &pgm).unwrap();
        assert_eq!(load_depth(&pgm).unwrap(), depth);
    }

    #[test]
    fn missing_and_corrupt_files() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(load_gray(&dir.path().join("none.png")), Err(HarnessError::Io { .. })));
        let bad = dir.path().join("bad.png");
        std::fs::write(&bad, b"not an image").unwrap();
        assert!(matches!(load_gray(&bad), Err(HarnessError::UnreadableImage { .. })));
    }
}
