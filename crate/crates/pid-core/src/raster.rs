//! Grayscale / binary raster types, PNG IO, resizing and binarization.

use image::codecs::png::{CompressionType, FilterType, PngEncoder};
use image::{DynamicImage, ExtendedColorType, ImageEncoder};

use crate::error::{Error, Result};
use crate::geometry::Rect;

/// Row-major 8-bit grayscale raster. Ink is dark (0), paper is white (255).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayRaster {
    pub width: u32,
    pub height: u32,
    pub data: Vec<u8>,
}

impl GrayRaster {
    pub fn new(width: u32, height: u32, fill: u8) -> Self {
        assert!(width >= 1 && height >= 1);
        GrayRaster {
            width,
            height,
            data: vec![fill; (width * height) as usize],
        }
    }

    pub fn from_data(width: u32, height: u32, data: Vec<u8>) -> Self {
        assert_eq!(data.len(), (width * height) as usize);
        GrayRaster {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.data[(y * self.width + x) as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, v: u8) {
        self.data[(y * self.width + x) as usize] = v;
    }

    /// Decode an image file (PNG required, any format the backend knows is
    /// accepted); color input is converted to luminance.
    pub fn load(bytes: &[u8]) -> Result<Self> {
        let img = image::load_from_memory(bytes)?;
        Ok(Self::from_dynamic(img))
    }

    pub fn load_path(path: &std::path::Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::load(&bytes)
    }

    fn from_dynamic(img: DynamicImage) -> Self {
        let gray = img.into_luma8();
        GrayRaster {
            width: gray.width(),
            height: gray.height(),
            data: gray.into_raw(),
        }
    }

    /// Encode as PNG with fast compression (sheets are large and mostly
    /// white, so the fast profile compresses well).
    pub fn to_png(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        let enc = PngEncoder::new_with_quality(&mut out, CompressionType::Fast, FilterType::Up);
        enc.write_image(&self.data, self.width, self.height, ExtendedColorType::L8)?;
        Ok(out)
    }

    /// Resize so that the output width equals `target_width`, preserving the
    /// aspect ratio (height rounded to nearest, min 1). Bilinear sampling.
    pub fn resize_to_width(&self, target_width: u32) -> GrayRaster {
        assert!(target_width >= 1);
        if target_width == self.width {
            return self.clone();
        }
        let scale = target_width as f64 / self.width as f64;
        let target_height = ((self.height as f64 * scale).round() as u32).max(1);
        let mut out = GrayRaster::new(target_width, target_height, 0);
        let sx = self.width as f64 / target_width as f64;
        let sy = self.height as f64 / target_height as f64;
        for y in 0..target_height {
            let fy = ((y as f64 + 0.5) * sy - 0.5).clamp(0.0, (self.height - 1) as f64);
            let y0 = fy.floor() as u32;
            let y1 = (y0 + 1).min(self.height - 1);
            let wy = fy - y0 as f64;
            for x in 0..target_width {
                let fx = ((x as f64 + 0.5) * sx - 0.5).clamp(0.0, (self.width - 1) as f64);
                let x0 = fx.floor() as u32;
                let x1 = (x0 + 1).min(self.width - 1);
                let wx = fx - x0 as f64;
                let v = self.get(x0, y0) as f64 * (1.0 - wx) * (1.0 - wy)
                    + self.get(x1, y0) as f64 * wx * (1.0 - wy)
                    + self.get(x0, y1) as f64 * (1.0 - wx) * wy
                    + self.get(x1, y1) as f64 * wx * wy;
                out.set(x, y, v.round().clamp(0.0, 255.0) as u8);
            }
        }
        out
    }

    /// Rotate 90° clockwise: (x, y) -> (h - 1 - y, x).
    pub fn rotate90_cw(&self) -> GrayRaster {
        let mut out = GrayRaster::new(self.height, self.width, 0);
        for y in 0..self.height {
            for x in 0..self.width {
                out.set(self.height - 1 - y, x, self.get(x, y));
            }
        }
        out
    }

    pub fn crop(&self, r: Rect) -> GrayRaster {
        let r = r.clamp_to(self.width, self.height);
        assert!(r.w >= 1 && r.h >= 1, "empty crop {r:?}");
        let mut out = GrayRaster::new(r.w as u32, r.h as u32, 255);
        for y in 0..r.h as u32 {
            let src = ((r.y as u32 + y) * self.width + r.x as u32) as usize;
            let dst = (y * out.width) as usize;
            out.data[dst..dst + r.w as usize]
                .copy_from_slice(&self.data[src..src + r.w as usize]);
        }
        out
    }

    pub fn binarize(&self, policy: BinarizePolicy) -> BinaryRaster {
        let t = match policy {
            BinarizePolicy::Fixed(t) => t,
            BinarizePolicy::Otsu => otsu_threshold(&self.data),
        };
        let bits = self.data.iter().map(|&v| v < t).collect();
        BinaryRaster {
            width: self.width,
            height: self.height,
            bits,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BinarizePolicy {
    /// Foreground = intensity < t.
    Fixed(u8),
    /// Threshold from the histogram; falls back to 128 on constant images.
    Otsu,
}

/// Otsu split maximizing between-class variance; returns `t` such that
/// foreground is `v < t`.
fn otsu_threshold(data: &[u8]) -> u8 {
    let mut hist = [0u64; 256];
    for &v in data {
        hist[v as usize] += 1;
    }
    let total = data.len() as f64;
    let sum_all: f64 = hist
        .iter()
        .enumerate()
        .map(|(v, &c)| v as f64 * c as f64)
        .sum();
    let mut best_t = 128u8;
    let mut best_var = -1.0f64;
    let mut w0 = 0.0f64;
    let mut sum0 = 0.0f64;
    for t in 0..255usize {
        w0 += hist[t] as f64;
        sum0 += t as f64 * hist[t] as f64;
        let w1 = total - w0;
        if w0 == 0.0 || w1 == 0.0 {
            continue;
        }
        let m0 = sum0 / w0;
        let m1 = (sum_all - sum0) / w1;
        let var = w0 * w1 * (m0 - m1) * (m0 - m1);
        if var > best_var {
            best_var = var;
            best_t = (t + 1) as u8;
        }
    }
    if best_var < 0.0 {
        128
    } else {
        best_t
    }
}

/// Row-major boolean grid; `true` = ink / foreground.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryRaster {
    pub width: u32,
    pub height: u32,
    pub bits: Vec<bool>,
}

impl BinaryRaster {
    pub fn new(width: u32, height: u32) -> Self {
        BinaryRaster {
            width,
            height,
            bits: vec![false; (width * height) as usize],
        }
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> bool {
        self.bits[(y * self.width + x) as usize]
    }

    #[inline]
    pub fn at(&self, x: i32, y: i32) -> bool {
        if x < 0 || y < 0 || x >= self.width as i32 || y >= self.height as i32 {
            false
        } else {
            self.get(x as u32, y as u32)
        }
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, v: bool) {
        self.bits[(y * self.width + x) as usize] = v;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn and(&self, other: &BinaryRaster) -> BinaryRaster {
        assert_eq!((self.width, self.height), (other.width, other.height));
        BinaryRaster {
            width: self.width,
            height: self.height,
            bits: self
                .bits
                .iter()
                .zip(&other.bits)
                .map(|(&a, &b)| a && b)
                .collect(),
        }
    }

    pub fn erase_rect(&mut self, r: Rect) {
        let r = r.clamp_to(self.width, self.height);
        for y in r.y..r.bottom() {
            for x in r.x..r.right() {
                self.set(x as u32, y as u32, false);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn png_round_trip_1x1_white() {
        let r = GrayRaster::new(1, 1, 255);
        let png = r.to_png().unwrap();
        let back = GrayRaster::load(&png).unwrap();
        assert_eq!(back.width, 1);
        assert_eq!(back.height, 1);
        assert_eq!(back.data, vec![255]);
    }

    #[test]
    fn png_round_trip_2x2_black() {
        let r = GrayRaster::new(2, 2, 0);
        let back = GrayRaster::load(&r.to_png().unwrap()).unwrap();
        assert_eq!(back.data, vec![0; 4]);
    }

    #[test]
    fn resize_identity() {
        let r = GrayRaster::new(7168, 10, 200);
        let out = r.resize_to_width(7168);
        assert_eq!((out.width, out.height), (7168, 10));
        assert_eq!(out.data, r.data);
    }

    #[test]
    fn resize_exact_double() {
        let r = GrayRaster::new(3584, 2000, 128);
        let out = r.resize_to_width(7168);
        assert_eq!((out.width, out.height), (7168, 4000));
    }

    #[test]
    fn resize_rounds_height_to_nearest() {
        // 777 * 7168 / 1000 = 5569.536 -> 5570
        let r = GrayRaster::new(1000, 777, 255);
        let out = r.resize_to_width(7168);
        assert_eq!((out.width, out.height), (7168, 5570));
    }

    #[test]
    fn resize_preserves_aspect_within_rounding() {
        for (w, h, t) in [(640u32, 480u32, 1000u32), (333, 217, 81), (50, 1, 500)] {
            let out = GrayRaster::new(w, h, 0).resize_to_width(t);
            let expect = (h as f64 * t as f64 / w as f64).round().max(1.0);
            assert!((out.height as f64 - expect).abs() <= 1.0);
        }
    }

    #[test]
    fn binarize_fixed_all_white_and_black() {
        let white = GrayRaster::new(3, 3, 255).binarize(BinarizePolicy::Fixed(128));
        assert_eq!(white.count(), 0);
        let black = GrayRaster::new(3, 3, 0).binarize(BinarizePolicy::Fixed(128));
        assert_eq!(black.count(), 9);
    }

    #[test]
    fn otsu_constant_image_falls_back() {
        let r = GrayRaster::new(4, 4, 77);
        // must not panic; fallback threshold 128 -> 77 < 128 -> all foreground
        let b = r.binarize(BinarizePolicy::Otsu);
        assert_eq!(b.count(), 16);
    }

    #[test]
    fn otsu_bimodal_threshold_between_modes() {
        // two clusters around 30 and 220; oracle = exhaustive sweep
        let mut data = Vec::new();
        for i in 0..500u32 {
            data.push((30 + (i % 11) as i32 - 5) as u8);
            data.push((220 + (i % 9) as i32 - 4) as u8);
        }
        let t = otsu_threshold(&data);
        assert!(t as i32 > 30 && (t as i32) < 220, "t={t}");
        // exhaustive oracle: maximize between-class variance
        let mut best = (0usize, -1.0f64);
        for cand in 1..=255usize {
            let (lo, hi): (Vec<f64>, Vec<f64>) =
                data.iter().map(|&v| v as f64).partition(|&v| v < cand as f64);
            if lo.is_empty() || hi.is_empty() {
                continue;
            }
            let (w0, w1) = (lo.len() as f64, hi.len() as f64);
            let m0 = lo.iter().sum::<f64>() / w0;
            let m1 = hi.iter().sum::<f64>() / w1;
            let var = w0 * w1 * (m0 - m1) * (m0 - m1);
            if var > best.1 {
                best = (cand, var);
            }
        }
        assert_eq!(t as usize, best.0);
    }

    #[test]
    fn rotate_cw_mapping() {
        let mut r = GrayRaster::new(3, 2, 0);
        r.set(0, 0, 10);
        r.set(2, 1, 20);
        let rot = r.rotate90_cw();
        assert_eq!((rot.width, rot.height), (2, 3));
        assert_eq!(rot.get(1, 0), 10);
        assert_eq!(rot.get(0, 2), 20);
    }
}
