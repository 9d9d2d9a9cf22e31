//! Text extraction: sheet patching, pluggable detection and recognition,
//! IOU box merging and the rotated pass for vertical labels.

pub mod detector;
pub mod glyph;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::{Orientation, Rect};
use crate::raster::GrayRaster;

pub use detector::InkDensityDetector;
pub use glyph::GlyphAtlas;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextBox {
    pub bbox: Rect,
    pub text: String,
    pub orientation: Orientation,
    pub confidence: f64,
}

/// Box detector over a single patch. Implementations must be safe to call
/// from multiple threads or wrap themselves in a lock.
pub trait TextDetector {
    fn detect(&self, patch: &GrayRaster) -> Result<Vec<(Rect, f64)>>;
}

/// Single-line string recognizer for a crop.
pub trait TextRecognizer {
    fn recognize(&self, crop: &GrayRaster) -> Result<(String, f64)>;
}

impl TextRecognizer for GlyphAtlas {
    fn recognize(&self, crop: &GrayRaster) -> Result<(String, f64)> {
        Ok(GlyphAtlas::recognize(self, crop))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct TextConfig {
    pub patch_size: u32,
    pub overlap: f64,
    pub iou_min: f64,
}

impl Default for TextConfig {
    fn default() -> Self {
        TextConfig {
            patch_size: 800,
            overlap: 0.5,
            iou_min: 0.3,
        }
    }
}

/// Patch offsets tiling a sheet; the last row/column is clamped to the
/// border so every pixel is covered.
pub fn split_patches(width: u32, height: u32, size: u32, overlap: f64) -> Vec<Rect> {
    assert!(size >= 1 && (0.0..1.0).contains(&overlap));
    let stride = ((size as f64 * (1.0 - overlap)).round() as u32).max(1);
    let positions = |dim: u32| -> Vec<i32> {
        if dim <= size {
            return vec![0];
        }
        let mut xs = Vec::new();
        let mut x = 0u32;
        while x + size < dim {
            xs.push(x as i32);
            x += stride;
        }
        xs.push((dim - size) as i32);
        xs.dedup();
        xs
    };
    let mut out = Vec::new();
    for &y in &positions(height) {
        for &x in &positions(width) {
            out.push(Rect::new(
                x,
                y,
                size.min(width) as i32,
                size.min(height) as i32,
            ));
        }
    }
    out
}

/// Transitively merge boxes with pairwise IOU >= `iou_min` into union
/// boxes, repeated to fixpoint. Confidence of a merged box is the max.
pub fn merge_boxes_iou(boxes: &[(Rect, f64)], iou_min: f64) -> Vec<(Rect, f64)> {
    let mut cur: Vec<(Rect, f64)> = boxes.to_vec();
    loop {
        let mut merged: Vec<(Rect, f64)> = Vec::new();
        let mut changed = false;
        'outer: for &(r, c) in &cur {
            for m in merged.iter_mut() {
                if m.0.iou(&r) >= iou_min {
                    m.0 = m.0.union(&r);
                    m.1 = m.1.max(c);
                    changed = true;
                    continue 'outer;
                }
            }
            merged.push((r, c));
        }
        merged.sort_by_key(|(r, _)| (r.y, r.x, r.w, r.h));
        if !changed {
            return merged;
        }
        cur = merged;
    }
}

/// Map a box from rotate90-cw coordinates back onto the original sheet.
/// rotate_cw sends sheet (x, y) to (sheet_h - 1 - y, x).
pub fn unrotate_box(r: Rect, sheet_h: u32) -> Rect {
    Rect::new(r.y, sheet_h as i32 - (r.x + r.w), r.h, r.w)
}

/// Full two-pass extraction: horizontal pass over patches, then a second
/// pass on the 90°-rotated sheet for vertical text. Vertical boxes
/// subsumed by a horizontal detection (IOU >= 0.5) are dropped. Detector
/// or recognizer failures on a patch skip that patch with a warning.
pub fn extract_text(
    sheet: &GrayRaster,
    det: &dyn TextDetector,
    rec: &dyn TextRecognizer,
    cfg: &TextConfig,
) -> Vec<TextBox> {
    let horizontal = detect_pass(sheet, det, cfg);
    let rotated = sheet.rotate90_cw();
    let vertical_rot = detect_pass(&rotated, det, cfg);

    let mut out: Vec<TextBox> = Vec::new();
    for (bbox, confidence) in &horizontal {
        let (text, rconf) = recognize_box(sheet, rec, *bbox);
        out.push(TextBox {
            bbox: *bbox,
            text,
            orientation: Orientation::Horizontal,
            confidence: rconf.max(*confidence).clamp(0.0, 1.0),
        });
    }
    for (rbox, confidence) in &vertical_rot {
        let bbox = unrotate_box(*rbox, sheet.height);
        if horizontal.iter().any(|(h, _)| h.iou(&bbox) >= 0.5) {
            continue;
        }
        let (text, rconf) = recognize_box(&rotated, rec, *rbox);
        out.push(TextBox {
            bbox,
            text,
            orientation: Orientation::Vertical,
            confidence: rconf.max(*confidence).clamp(0.0, 1.0),
        });
    }
    out.sort_by_key(|t| (t.bbox.y, t.bbox.x));
    out
}

fn detect_pass(sheet: &GrayRaster, det: &dyn TextDetector, cfg: &TextConfig) -> Vec<(Rect, f64)> {
    let patches = split_patches(sheet.width, sheet.height, cfg.patch_size, cfg.overlap);
    let mut boxes = Vec::new();
    for patch_rect in patches {
        let patch = sheet.crop(patch_rect);
        let found = match det.detect(&patch) {
            Ok(f) => f,
            Err(e) => {
                log::warn!("text detector failed on patch {patch_rect:?}: {e}");
                continue;
            }
        };
        for (r, c) in found {
            // drop boxes cut by an interior patch edge; the overlapping
            // neighbour patch sees them whole
            let cut_left = r.x == 0 && patch_rect.x > 0;
            let cut_top = r.y == 0 && patch_rect.y > 0;
            let cut_right =
                r.right() == patch.width as i32 && patch_rect.right() < sheet.width as i32;
            let cut_bottom =
                r.bottom() == patch.height as i32 && patch_rect.bottom() < sheet.height as i32;
            if cut_left || cut_top || cut_right || cut_bottom {
                continue;
            }
            boxes.push((
                Rect::new(r.x + patch_rect.x, r.y + patch_rect.y, r.w, r.h),
                c,
            ));
        }
    }
    merge_boxes_iou(&boxes, cfg.iou_min)
}

fn recognize_box(sheet: &GrayRaster, rec: &dyn TextRecognizer, bbox: Rect) -> (String, f64) {
    let crop_rect = bbox.inflate(1).clamp_to(sheet.width, sheet.height);
    if crop_rect.w < 1 || crop_rect.h < 1 {
        return (String::new(), 0.0);
    }
    let crop = sheet.crop(crop_rect);
    match rec.recognize(&crop) {
        Ok(r) => r,
        Err(e) => {
            log::warn!("text recognizer failed on {bbox:?}: {e}");
            (String::new(), 0.0)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn patches_single_when_sheet_equals_patch() {
        let p = split_patches(800, 800, 800, 0.5);
        assert_eq!(p, vec![Rect::new(0, 0, 800, 800)]);
    }

    #[test]
    fn patches_stride_and_clamp() {
        let p = split_patches(1600, 800, 800, 0.5);
        let xs: Vec<i32> = p.iter().map(|r| r.x).collect();
        assert_eq!(xs, vec![0, 400, 800]);
    }

    #[test]
    fn patches_count_full_sheet() {
        let p = split_patches(7168, 4000, 800, 0.5);
        assert_eq!(p.len(), 17 * 9);
    }

    #[test]
    fn patch_union_covers_sheet() {
        for (w, h) in [(1000u32, 900u32), (801, 800), (2450, 1333)] {
            let patches = split_patches(w, h, 800, 0.5);
            let mut covered = vec![false; (w * h) as usize];
            for r in patches {
                for y in r.y..r.bottom() {
                    for x in r.x..r.right() {
                        covered[(y as u32 * w + x as u32) as usize] = true;
                    }
                }
            }
            assert!(covered.iter().all(|&c| c));
        }
    }

    #[test]
    fn merge_disjoint_unchanged() {
        let boxes = vec![
            (Rect::new(0, 0, 10, 10), 0.5),
            (Rect::new(100, 100, 10, 10), 0.6),
        ];
        assert_eq!(merge_boxes_iou(&boxes, 0.3), boxes);
    }

    #[test]
    fn merge_duplicates_collapse() {
        let boxes = vec![(Rect::new(5, 5, 20, 10), 0.5), (Rect::new(5, 5, 20, 10), 0.9)];
        let out = merge_boxes_iou(&boxes, 0.3);
        assert_eq!(out, vec![(Rect::new(5, 5, 20, 10), 0.9)]);
    }

    #[test]
    fn merge_overlapping_pair_unions() {
        let boxes = vec![
            (Rect::new(0, 0, 100, 20), 0.5),
            (Rect::new(50, 0, 100, 20), 0.7),
        ];
        // IOU = 50*20 / (150*20) ~ 0.333 >= 0.3
        let out = merge_boxes_iou(&boxes, 0.3);
        assert_eq!(out, vec![(Rect::new(0, 0, 150, 20), 0.7)]);
    }

    #[test]
    fn merge_order_independent() {
        let a = vec![
            (Rect::new(0, 0, 100, 20), 0.5),
            (Rect::new(50, 0, 100, 20), 0.7),
            (Rect::new(120, 0, 100, 20), 0.6),
        ];
        let mut b = a.clone();
        b.reverse();
        assert_eq!(merge_boxes_iou(&a, 0.3), merge_boxes_iou(&b, 0.3));
    }

    #[test]
    fn rotation_round_trip_exact() {
        let sheet_w = 300u32;
        let sheet_h = 200u32;
        let b = Rect::new(40, 60, 30, 12);
        // forward map of the box corners under rotate_cw
        let rot = Rect::new(sheet_h as i32 - (b.y + b.h), b.x, b.h, b.w);
        assert_eq!(unrotate_box(rot, sheet_h), b);
        let _ = sheet_w;
    }
}
