//! Default text detector: ink-density box proposal. Long straight runs are
//! removed with a line opening, the remaining ink is dilated to join glyphs
//! of a word, and components whose height/aspect fit a text band become
//! boxes. A neural detector can replace this behind the same trait.

use crate::geometry::{Orientation, Rect};
use crate::morph::{contours, dilate, open, LineKernel};
use crate::raster::{BinarizePolicy, GrayRaster};

use super::TextDetector;

#[derive(Debug, Clone)]
pub struct InkDensityDetector {
    /// Runs at least this long are treated as drawing lines and erased.
    pub line_kernel: u32,
    /// Acceptable component heights for a text band.
    pub min_height: u32,
    pub max_height: u32,
    /// Max width/height before a component stops looking like a label.
    pub max_aspect: f64,
    /// Boxes on the same row closer than this are stitched into one label.
    pub merge_gap: i32,
}

impl Default for InkDensityDetector {
    fn default() -> Self {
        InkDensityDetector {
            line_kernel: 25,
            min_height: 8,
            max_height: 26,
            max_aspect: 20.0,
            merge_gap: 14,
        }
    }
}

impl TextDetector for InkDensityDetector {
    fn detect(&self, patch: &GrayRaster) -> crate::error::Result<Vec<(Rect, f64)>> {
        let bin = patch.binarize(BinarizePolicy::Fixed(128));
        // erase long straight runs (pipes, symbol edges)
        let long_h = open(&bin, LineKernel::new(Orientation::Horizontal, self.line_kernel));
        let long_v = open(&bin, LineKernel::new(Orientation::Vertical, self.line_kernel));
        let mut ink = bin.clone();
        for i in 0..ink.bits.len() {
            if long_h.bits[i] || long_v.bits[i] {
                ink.bits[i] = false;
            }
        }
        // bridge intra-word gaps
        let joined = dilate(
            &dilate(&ink, LineKernel::new(Orientation::Horizontal, 7)),
            LineKernel::new(Orientation::Vertical, 3),
        );
        let mut out = Vec::new();
        for comp in contours(&joined) {
            // tight bbox over the pre-dilation ink
            let (mut x0, mut y0, mut x1, mut y1) = (i32::MAX, i32::MAX, i32::MIN, i32::MIN);
            let mut ink_px = 0u32;
            for p in &comp {
                if ink.at(p.x, p.y) {
                    ink_px += 1;
                    x0 = x0.min(p.x);
                    y0 = y0.min(p.y);
                    x1 = x1.max(p.x + 1);
                    y1 = y1.max(p.y + 1);
                }
            }
            if ink_px < 6 || x1 <= x0 || y1 <= y0 {
                continue;
            }
            let r = Rect::new(x0, y0, x1 - x0, y1 - y0);
            let h = r.h as u32;
            if h < self.min_height || h > self.max_height {
                continue;
            }
            let aspect = r.w as f64 / r.h as f64;
            if aspect > self.max_aspect || aspect < 0.3 {
                continue;
            }
            let density = ink_px as f64 / r.area() as f64;
            if density < 0.1 {
                continue;
            }
            out.push((r, density.min(1.0)));
        }
        // words can still split at narrow glyphs ('-', '1'); stitch boxes
        // sharing a text row across small horizontal gaps
        let mut merged = true;
        while merged {
            merged = false;
            'outer: for i in 0..out.len() {
                for j in i + 1..out.len() {
                    let (a, b) = (out[i].0, out[j].0);
                    let v_overlap = a.bottom().min(b.bottom()) - a.y.max(b.y);
                    let gap = if a.right() <= b.x {
                        b.x - a.right()
                    } else if b.right() <= a.x {
                        a.x - b.right()
                    } else {
                        0
                    };
                    if v_overlap * 2 >= a.h.min(b.h) && gap <= self.merge_gap {
                        let conf = out[i].1.max(out[j].1);
                        out[i] = (a.union(&b), conf);
                        out.remove(j);
                        merged = true;
                        break 'outer;
                    }
                }
            }
        }
        out.sort_by_key(|(r, _)| (r.y, r.x));
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::glyph::GlyphAtlas;

    #[test]
    fn detects_rendered_label_not_lines() {
        let mut patch = GrayRaster::new(300, 200, 255);
        // a pipe through the patch
        for x in 0..300u32 {
            for dy in 0..3u32 {
                patch.set(x, 150 + dy, 0);
            }
        }
        let atlas = GlyphAtlas::builtin();
        atlas.draw_text(&mut patch, "PV-104", 40, 60);
        let det = InkDensityDetector::default();
        let boxes = det.detect(&patch).unwrap();
        assert_eq!(boxes.len(), 1, "{boxes:?}");
        let (w, h) = crate::text::glyph::text_extent("PV-104");
        let truth = Rect::new(40, 60, w as i32, h as i32);
        assert!(boxes[0].0.iou(&truth) >= 0.8, "{:?}", boxes[0]);
    }

    #[test]
    fn blank_patch_empty() {
        let det = InkDensityDetector::default();
        assert!(det.detect(&GrayRaster::new(100, 100, 255)).unwrap().is_empty());
    }
}
