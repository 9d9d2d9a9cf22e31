//! Built-in 5x7 glyph atlas: renders label strings onto sheets and
//! recognizes single-line crops by per-cell normalized cross-correlation.
//!
//! The atlas can round-trip through a PNG sprite sheet plus a JSON index
//! mapping each character to its cell, so an external atlas can be swapped
//! in for a different font.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Rect;
use crate::raster::GrayRaster;

/// 5x7 bitmaps, low 5 bits per row, MSB = leftmost column.
const FONT: &[(char, [u8; 7])] = &[
    ('A', [0x0E, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11]),
    ('B', [0x1E, 0x11, 0x11, 0x1E, 0x11, 0x11, 0x1E]),
    ('C', [0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E]),
    ('D', [0x1E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x1E]),
    ('E', [0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F]),
    ('F', [0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x10]),
    ('G', [0x0E, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0F]),
    ('H', [0x11, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11]),
    ('I', [0x0E, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E]),
    ('J', [0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0C]),
    ('K', [0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11]),
    ('L', [0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F]),
    ('M', [0x11, 0x1B, 0x15, 0x15, 0x11, 0x11, 0x11]),
    ('N', [0x11, 0x19, 0x15, 0x13, 0x11, 0x11, 0x11]),
    ('O', [0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E]),
    ('P', [0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10]),
    ('Q', [0x0E, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0D]),
    ('R', [0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11]),
    ('S', [0x0F, 0x10, 0x10, 0x0E, 0x01, 0x01, 0x1E]),
    ('T', [0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04]),
    ('U', [0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E]),
    ('V', [0x11, 0x11, 0x11, 0x11, 0x11, 0x0A, 0x04]),
    ('W', [0x11, 0x11, 0x11, 0x15, 0x15, 0x1B, 0x11]),
    ('X', [0x11, 0x11, 0x0A, 0x04, 0x0A, 0x11, 0x11]),
    ('Y', [0x11, 0x11, 0x0A, 0x04, 0x04, 0x04, 0x04]),
    ('Z', [0x1F, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1F]),
    ('0', [0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E]),
    ('1', [0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E]),
    ('2', [0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F]),
    ('3', [0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E]),
    ('4', [0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02]),
    ('5', [0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E]),
    ('6', [0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E]),
    ('7', [0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08]),
    ('8', [0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E]),
    ('9', [0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C]),
    ('-', [0x00, 0x00, 0x00, 0x0E, 0x00, 0x00, 0x00]),
    ('/', [0x01, 0x01, 0x02, 0x04, 0x08, 0x10, 0x10]),
    ('"', [0x0A, 0x0A, 0x0A, 0x00, 0x00, 0x00, 0x00]),
];

pub const GLYPH_COLS: u32 = 5;
pub const GLYPH_ROWS: u32 = 7;
/// Integer scale applied when rendering; glyph cell is 10x14 at scale 2.
pub const GLYPH_SCALE: u32 = 2;
/// Horizontal white space between glyph cells. Must stay wider than any
/// internal glyph gap (the quote glyph has a 1-column hole) so projection
/// segmentation splits between glyphs only.
pub const GLYPH_SPACING: u32 = 4;

pub fn cell_size() -> (u32, u32) {
    (GLYPH_COLS * GLYPH_SCALE, GLYPH_ROWS * GLYPH_SCALE)
}

pub fn text_extent(s: &str) -> (u32, u32) {
    let (cw, ch) = cell_size();
    let n = s.chars().count() as u32;
    if n == 0 {
        return (0, ch);
    }
    (n * cw + (n - 1) * GLYPH_SPACING, ch)
}

#[derive(Debug, Clone)]
pub struct GlyphAtlas {
    /// Per character: cell bitmap, row-major bools at cell resolution.
    glyphs: BTreeMap<char, Vec<bool>>,
    cell_w: u32,
    cell_h: u32,
}

#[derive(Serialize, Deserialize)]
struct AtlasIndex {
    cell_w: u32,
    cell_h: u32,
    cells: BTreeMap<char, Rect>,
}

impl GlyphAtlas {
    pub fn builtin() -> Self {
        let (cw, ch) = cell_size();
        let mut glyphs = BTreeMap::new();
        for &(c, rows) in FONT {
            let mut cell = vec![false; (cw * ch) as usize];
            for (ry, &bits) in rows.iter().enumerate() {
                for rx in 0..GLYPH_COLS {
                    if bits & (1 << (GLYPH_COLS - 1 - rx)) != 0 {
                        for sy in 0..GLYPH_SCALE {
                            for sx in 0..GLYPH_SCALE {
                                let x = rx * GLYPH_SCALE + sx;
                                let y = ry as u32 * GLYPH_SCALE + sy;
                                cell[(y * cw + x) as usize] = true;
                            }
                        }
                    }
                }
            }
            glyphs.insert(c, cell);
        }
        GlyphAtlas {
            glyphs,
            cell_w: cw,
            cell_h: ch,
        }
    }

    pub fn chars(&self) -> impl Iterator<Item = char> + '_ {
        self.glyphs.keys().copied()
    }

    /// Render a string as dark ink on white.
    pub fn render_text(&self, s: &str) -> GrayRaster {
        let (w, h) = text_extent(s);
        let mut out = GrayRaster::new(w.max(1), h, 255);
        let mut x0 = 0u32;
        for c in s.chars() {
            if let Some(cell) = self.glyphs.get(&c) {
                for y in 0..self.cell_h {
                    for x in 0..self.cell_w {
                        if cell[(y * self.cell_w + x) as usize] {
                            out.set(x0 + x, y, 0);
                        }
                    }
                }
            }
            x0 += self.cell_w + GLYPH_SPACING;
        }
        out
    }

    /// Blit rendered text into a sheet at (x, y), min-blending ink.
    pub fn draw_text(&self, sheet: &mut GrayRaster, s: &str, x: i32, y: i32) {
        let txt = self.render_text(s);
        blit_min(sheet, &txt, x, y);
    }

    /// Split a single-line crop into glyph cells at vertical projection
    /// valleys and classify each cell by max NCC against the atlas.
    /// Returns the string and the mean per-glyph correlation.
    pub fn recognize(&self, crop: &GrayRaster) -> (String, f64) {
        // ink profiles; a single dark pixel in a column or row is treated
        // as noise (rendered glyph strokes are at least 2 px in both axes)
        let mut col_raw = vec![0u32; crop.width as usize];
        let mut row_raw = vec![0u32; crop.height as usize];
        for y in 0..crop.height {
            for x in 0..crop.width {
                if crop.get(x, y) < 128 {
                    col_raw[x as usize] += 1;
                    row_raw[y as usize] += 1;
                }
            }
        }
        let col_ink: Vec<u32> = col_raw.iter().map(|&c| if c >= 2 { c } else { 0 }).collect();
        let row_lo = row_raw.iter().position(|&c| c >= 2).unwrap_or(0) as u32;
        let row_hi = row_raw.iter().rposition(|&c| c >= 2).map(|i| i as u32 + 1).unwrap_or(0);
        if row_hi <= row_lo {
            return (String::new(), 0.0);
        }
        // split on valleys at least 3 px wide (inter-glyph spacing is 4,
        // the widest internal glyph gap is 2)
        let mut cells: Vec<(u32, u32)> = Vec::new();
        let mut start: Option<u32> = None;
        let mut blank = 0u32;
        for x in 0..crop.width {
            if col_ink[x as usize] > 0 {
                if start.is_none() {
                    start = Some(x);
                }
                blank = 0;
            } else if let Some(s0) = start {
                blank += 1;
                if blank >= 3 {
                    cells.push((s0, x + 1 - blank));
                    start = None;
                    blank = 0;
                }
            }
        }
        if let Some(s0) = start {
            let mut end = crop.width;
            while end > s0 && col_ink[end as usize - 1] == 0 {
                end -= 1;
            }
            cells.push((s0, end));
        }
        if cells.is_empty() {
            return (String::new(), 0.0);
        }

        let mut text = String::new();
        let mut score_sum = 0.0;
        for &(x0, x1) in &cells {
            let (c, score) = self.classify_cell(crop, x0, x1, row_lo, row_hi);
            text.push(c);
            score_sum += score;
        }
        (text, score_sum / cells.len() as f64)
    }

    fn classify_cell(&self, crop: &GrayRaster, x0: u32, x1: u32, row_lo: u32, row_hi: u32) -> (char, f64) {
        // sample the cell onto the atlas cell grid; rows are anchored to the
        // text band (tall glyphs define it), columns centered on the cell
        let v_scale = (row_hi - row_lo) as f64 / self.cell_h as f64;
        let cell_w = x1 - x0;
        let h_scale = v_scale; // same rendering scale both axes
        let pad = (self.cell_w as f64 * h_scale - cell_w as f64) / 2.0;
        // search a one-pixel alignment window in both axes; segmentation
        // boundaries wobble under noise
        let mut best = ('?', -1.0);
        for dy in [0.0f64, -1.0, 1.0] {
            for dx in [0.0f64, -1.0, 1.0] {
                let mut window = vec![0.0f64; (self.cell_w * self.cell_h) as usize];
                for cy in 0..self.cell_h {
                    for cx in 0..self.cell_w {
                        let sy = row_lo as f64 + dy + (cy as f64 + 0.5) * v_scale;
                        let sx = x0 as f64 - pad + dx + (cx as f64 + 0.5) * h_scale;
                        let xi = sx.floor() as i32;
                        let yi = sy.floor() as i32;
                        let ink = xi >= 0
                            && yi >= 0
                            && (xi as u32) < crop.width
                            && (yi as u32) < crop.height
                            && crop.get(xi as u32, yi as u32) < 128;
                        window[(cy * self.cell_w + cx) as usize] = if ink { 1.0 } else { 0.0 };
                    }
                }
                for (&c, cell) in &self.glyphs {
                    let r = ncc_bool(&window, cell);
                    if r > best.1 {
                        best = (c, r);
                    }
                }
            }
        }
        (best.0, best.1.max(0.0))
    }

    pub fn save(&self, png_path: &Path, json_path: &Path) -> Result<()> {
        let n = self.glyphs.len() as u32;
        let mut sprite = GrayRaster::new(n * self.cell_w, self.cell_h, 255);
        let mut cells = BTreeMap::new();
        for (i, (&c, cell)) in self.glyphs.iter().enumerate() {
            let x0 = i as u32 * self.cell_w;
            for y in 0..self.cell_h {
                for x in 0..self.cell_w {
                    if cell[(y * self.cell_w + x) as usize] {
                        sprite.set(x0 + x, y, 0);
                    }
                }
            }
            cells.insert(
                c,
                Rect::new(x0 as i32, 0, self.cell_w as i32, self.cell_h as i32),
            );
        }
        std::fs::write(png_path, sprite.to_png()?).map_err(|e| Error::io(png_path, e))?;
        let index = AtlasIndex {
            cell_w: self.cell_w,
            cell_h: self.cell_h,
            cells,
        };
        std::fs::write(json_path, serde_json::to_vec_pretty(&index)?)
            .map_err(|e| Error::io(json_path, e))?;
        Ok(())
    }

    pub fn load(png_path: &Path, json_path: &Path) -> Result<Self> {
        let sprite = GrayRaster::load_path(png_path)?;
        let bytes = std::fs::read(json_path).map_err(|e| Error::io(json_path, e))?;
        let index: AtlasIndex = serde_json::from_slice(&bytes)?;
        let mut glyphs = BTreeMap::new();
        for (c, r) in index.cells {
            let mut cell = vec![false; (index.cell_w * index.cell_h) as usize];
            for y in 0..index.cell_h {
                for x in 0..index.cell_w {
                    cell[(y * index.cell_w + x) as usize] =
                        sprite.get((r.x as u32) + x, (r.y as u32) + y) < 128;
                }
            }
            glyphs.insert(c, cell);
        }
        Ok(GlyphAtlas {
            glyphs,
            cell_w: index.cell_w,
            cell_h: index.cell_h,
        })
    }
}

/// NCC between two equal-length {0,1} images.
fn ncc_bool(a: &[f64], b: &[bool]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().filter(|&&v| v).count() as f64 / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        let dx = x - ma;
        let dy = (y as u8 as f64) - mb;
        cov += dx * dy;
        va += dx * dx;
        vb += dy * dy;
    }
    if va == 0.0 || vb == 0.0 {
        return if va == vb { 1.0 } else { 0.0 };
    }
    cov / (va.sqrt() * vb.sqrt())
}

/// Min-blend a raster onto a sheet (ink wins over paper).
pub fn blit_min(sheet: &mut GrayRaster, src: &GrayRaster, x0: i32, y0: i32) {
    for y in 0..src.height {
        let ty = y0 + y as i32;
        if ty < 0 || ty >= sheet.height as i32 {
            continue;
        }
        for x in 0..src.width {
            let tx = x0 + x as i32;
            if tx < 0 || tx >= sheet.width as i32 {
                continue;
            }
            let v = sheet.get(tx as u32, ty as u32).min(src.get(x, y));
            sheet.set(tx as u32, ty as u32, v);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn self_render_round_trip() {
        let atlas = GlyphAtlas::builtin();
        let crop = atlas.render_text("A1");
        let (s, conf) = atlas.recognize(&crop);
        assert_eq!(s, "A1");
        assert!(conf >= 0.99, "conf={conf}");
    }

    #[test]
    fn full_charset_round_trip() {
        let atlas = GlyphAtlas::builtin();
        let all: String = atlas.chars().collect();
        let crop = atlas.render_text(&all);
        let (s, _) = atlas.recognize(&crop);
        assert_eq!(s, all);
    }

    #[test]
    fn blank_crop_empty() {
        let atlas = GlyphAtlas::builtin();
        let crop = GrayRaster::new(30, 14, 255);
        let (s, conf) = atlas.recognize(&crop);
        assert_eq!(s, "");
        assert_eq!(conf, 0.0);
    }

    #[test]
    fn noisy_round_trip() {
        let atlas = GlyphAtlas::builtin();
        let mut crop = atlas.render_text("PV-123");
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = crop.data.len();
        for _ in 0..n / 100 {
            let i = rng.gen_range(0..n);
            crop.data[i] = if rng.gen_bool(0.5) { 0 } else { 255 };
        }
        let (s, conf) = atlas.recognize(&crop);
        assert_eq!(s, "PV-123");
        assert!(conf >= 0.8, "conf={conf}");
    }

    #[test]
    fn atlas_file_round_trip() {
        let atlas = GlyphAtlas::builtin();
        let dir = tempfile::tempdir().unwrap();
        let png = dir.path().join("atlas.png");
        let json = dir.path().join("atlas.json");
        atlas.save(&png, &json).unwrap();
        let loaded = GlyphAtlas::load(&png, &json).unwrap();
        let crop = loaded.render_text("XK-9/2\"");
        let (s, _) = loaded.recognize(&crop);
        assert_eq!(s, "XK-9/2\"");
    }
}
