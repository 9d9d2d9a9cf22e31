//! Synthetic sheet generator: orthogonal pipe networks with symbols, labels,
//! and controlled raster noise, plus the ground-truth annotations used by the
//! evaluation harness. `render_symbol` is the single source of truth for the
//! 32-class symbol bank; the template matcher renders its masks from it.

use std::path::{Path, PathBuf};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Orientation, Point, Rect};
use crate::lines::LineStyle;
use crate::raster::GrayRaster;
use crate::text::glyph::{blit_min, text_extent, GlyphAtlas};

pub const SYMBOL_SIZE: u32 = 64;

// ---------------------------------------------------------------------------
// drawing primitives

pub fn fill_rect(img: &mut GrayRaster, r: Rect, v: u8) {
    let r = r.clamp_to(img.width, img.height);
    for y in r.y..r.bottom() {
        for x in r.x..r.right() {
            img.set(x as u32, y as u32, v);
        }
    }
}

/// Axis-aligned line of the given stroke width, centered on the axis.
pub fn draw_line(img: &mut GrayRaster, p1: Point, p2: Point, stroke: i32) {
    let half = (stroke - 1) / 2;
    let r = if p1.y == p2.y {
        let (x0, x1) = (p1.x.min(p2.x), p1.x.max(p2.x));
        Rect::new(x0, p1.y - half, x1 - x0 + 1, stroke)
    } else {
        let (y0, y1) = (p1.y.min(p2.y), p1.y.max(p2.y));
        Rect::new(p1.x - half, y0, stroke, y1 - y0 + 1)
    };
    fill_rect(img, r, 0);
}

/// Dashed axis-aligned line: `dash` pixels on, `gap` pixels off.
pub fn draw_dashed_line(img: &mut GrayRaster, p1: Point, p2: Point, stroke: i32, dash: i32, gap: i32) {
    let horizontal = p1.y == p2.y;
    let (a0, a1) = if horizontal {
        (p1.x.min(p2.x), p1.x.max(p2.x))
    } else {
        (p1.y.min(p2.y), p1.y.max(p2.y))
    };
    let mut a = a0;
    while a <= a1 {
        let end = (a + dash - 1).min(a1);
        if horizontal {
            draw_line(img, Point::new(a, p1.y), Point::new(end, p1.y), stroke);
        } else {
            draw_line(img, Point::new(p1.x, a), Point::new(p1.x, end), stroke);
        }
        a += dash + gap;
    }
}

fn draw_rect_outline(img: &mut GrayRaster, r: Rect, stroke: i32) {
    fill_rect(img, Rect::new(r.x, r.y, r.w, stroke), 0);
    fill_rect(img, Rect::new(r.x, r.bottom() - stroke, r.w, stroke), 0);
    fill_rect(img, Rect::new(r.x, r.y, stroke, r.h), 0);
    fill_rect(img, Rect::new(r.right() - stroke, r.y, stroke, r.h), 0);
}

fn draw_circle_outline(img: &mut GrayRaster, cx: f64, cy: f64, r: f64, stroke: f64) {
    let lo = (r - stroke / 2.0).max(0.0);
    let hi = r + stroke / 2.0;
    let x0 = ((cx - hi).floor() as i32).max(0);
    let x1 = ((cx + hi).ceil() as i32).min(img.width as i32 - 1);
    let y0 = ((cy - hi).floor() as i32).max(0);
    let y1 = ((cy + hi).ceil() as i32).min(img.height as i32 - 1);
    for y in y0..=y1 {
        for x in x0..=x1 {
            let d = ((x as f64 - cx).powi(2) + (y as f64 - cy).powi(2)).sqrt();
            if d >= lo && d <= hi {
                img.set(x as u32, y as u32, 0);
            }
        }
    }
}

fn draw_diagonal(img: &mut GrayRaster, p1: Point, p2: Point, stroke: i32) {
    let steps = (p2.x - p1.x).abs().max((p2.y - p1.y).abs());
    let half = (stroke - 1) / 2;
    for i in 0..=steps {
        let t = i as f64 / steps.max(1) as f64;
        let x = p1.x + ((p2.x - p1.x) as f64 * t).round() as i32;
        let y = p1.y + ((p2.y - p1.y) as f64 * t).round() as i32;
        fill_rect(img, Rect::new(x - half, y - half, stroke, stroke), 0);
    }
}

// ---------------------------------------------------------------------------
// symbol renderer

/// Render class `class` (1..=32) onto a white `size` x `size` canvas at one
/// of the four axis rotations (degrees, multiples of 90).
///
/// Classes 1..=25 share a bowtie silhouette (two vertical bars joined by an
/// X) and differ only by small filled blocks along the middle band encoding
/// the bits of `class - 1` -- the "fine-grained, visually close" regime.
/// Classes 26..=32 are compositions of circles, rectangles, and chords.
pub fn render_symbol(class: u8, size: u32, rotation_deg: u32) -> Result<GrayRaster> {
    if !(1..=32).contains(&(class as u32)) {
        return Err(Error::InvalidClass(class as u32));
    }
    let mut img = GrayRaster::new(64, 64, 255);
    let s = 3; // stroke
    match class {
        1..=25 => {
            draw_line(&mut img, Point::new(3, 3), Point::new(3, 60), s);
            draw_line(&mut img, Point::new(60, 3), Point::new(60, 60), s);
            draw_diagonal(&mut img, Point::new(4, 4), Point::new(59, 59), s);
            draw_diagonal(&mut img, Point::new(4, 59), Point::new(59, 4), s);
            let bits = (class - 1) as u32;
            for i in 0..5 {
                if bits & (1 << i) != 0 {
                    fill_rect(&mut img, Rect::new(8 + 10 * i as i32, 10, 8, 8), 0);
                }
            }
        }
        26 => draw_circle_outline(&mut img, 31.5, 31.5, 24.0, s as f64),
        27 => {
            draw_circle_outline(&mut img, 31.5, 31.5, 20.0, s as f64);
            draw_line(&mut img, Point::new(13, 31), Point::new(50, 31), s);
        }
        28 => draw_rect_outline(&mut img, Rect::new(0, 16, 64, 32), s),
        29 => draw_rect_outline(&mut img, Rect::new(8, 8, 48, 48), s),
        30 => {
            draw_rect_outline(&mut img, Rect::new(8, 40, 48, 22), s);
            draw_circle_outline(&mut img, 31.5, 28.0, 12.0, s as f64);
        }
        31 => draw_circle_outline(&mut img, 31.5, 31.5, 18.0, s as f64),
        32 => {
            draw_circle_outline(&mut img, 31.5, 31.5, 24.0, s as f64);
            draw_circle_outline(&mut img, 31.5, 31.5, 12.0, s as f64);
        }
        _ => unreachable!(),
    }
    for _ in 0..(rotation_deg / 90) % 4 {
        img = img.rotate90_cw();
    }
    if size != 64 {
        img = resize_nearest(&img, size, size);
    }
    Ok(img)
}

fn resize_nearest(img: &GrayRaster, w: u32, h: u32) -> GrayRaster {
    let mut out = GrayRaster::new(w, h, 255);
    for y in 0..h {
        for x in 0..w {
            let sx = (x as f64 * img.width as f64 / w as f64).floor() as u32;
            let sy = (y as f64 * img.height as f64 / h as f64).floor() as u32;
            out.set(x, y, img.get(sx.min(img.width - 1), sy.min(img.height - 1)));
        }
    }
    out
}

/// Tight bounding box of the ink in a rendered mask.
pub fn ink_bbox(mask: &GrayRaster) -> Rect {
    let (mut x0, mut y0, mut x1, mut y1) = (i32::MAX, i32::MAX, i32::MIN, i32::MIN);
    for y in 0..mask.height as i32 {
        for x in 0..mask.width as i32 {
            if mask.get(x as u32, y as u32) < 128 {
                x0 = x0.min(x);
                y0 = y0.min(y);
                x1 = x1.max(x);
                y1 = y1.max(y);
            }
        }
    }
    if x1 < x0 {
        Rect::new(0, 0, 0, 0)
    } else {
        Rect::new(x0, y0, x1 - x0 + 1, y1 - y0 + 1)
    }
}

/// True when the class carries its tag text inside the shape rather than as
/// a nearby label.
pub fn class_has_embedded_text(class: u8) -> bool {
    matches!(class, 26 | 28)
}

// ---------------------------------------------------------------------------
// configuration and annotations

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseConfig {
    /// Block size for pixelation; 1 disables.
    pub pixelation: u32,
    /// Gaussian blur sigma; 0 disables.
    pub blur_sigma: f64,
    /// Per-pixel flip probability for salt-and-pepper; 0 disables.
    pub salt_pepper: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            pixelation: 1,
            blur_sigma: 0.0,
            salt_pepper: 0.0,
        }
    }
}

impl NoiseConfig {
    pub fn moderate() -> Self {
        NoiseConfig {
            pixelation: 2,
            blur_sigma: 0.6,
            salt_pepper: 0.01,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct GenConfig {
    pub width: u32,
    pub height: u32,
    pub seed: u64,
    pub min_buses: usize,
    pub max_buses: usize,
    pub max_connectors_per_gap: usize,
    pub symbols_per_sheet: usize,
    pub dashed_fraction: f64,
    pub noise: NoiseConfig,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            width: 1792,
            height: 1152,
            seed: 7,
            min_buses: 3,
            max_buses: 5,
            max_connectors_per_gap: 2,
            symbols_per_sheet: 6,
            dashed_fraction: 0.25,
            noise: NoiseConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SymbolAnnotation {
    pub class_id: u8,
    pub bbox: Rect,
    pub label: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LineAnnotation {
    pub p1: Point,
    pub p2: Point,
    pub orientation: Orientation,
    pub style: LineStyle,
    pub label: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TextAnnotation {
    pub bbox: Rect,
    pub text: String,
    pub orientation: Orientation,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SheetAnnotation {
    pub width: u32,
    pub height: u32,
    pub seed: u64,
    pub symbols: Vec<SymbolAnnotation>,
    pub lines: Vec<LineAnnotation>,
    pub texts: Vec<TextAnnotation>,
}

pub struct Sheet {
    pub image: GrayRaster,
    pub annotation: SheetAnnotation,
}

// ---------------------------------------------------------------------------
// generation

fn random_pipe_label(rng: &mut ChaCha8Rng) -> String {
    let n = rng.gen_range(1..=12u32);
    let service: String = (0..2).map(|_| (b'A' + rng.gen_range(0..26u8)) as char).collect();
    let num = rng.gen_range(1000..10000u32);
    format!("{n}\"-{service}-{num}")
}

fn random_instrument_label(rng: &mut ChaCha8Rng) -> String {
    let prefix: String = (0..2).map(|_| (b'A' + rng.gen_range(0..26u8)) as char).collect();
    format!("{prefix}-{}", rng.gen_range(100..1000u32))
}

fn random_embedded_text(class: u8, rng: &mut ChaCha8Rng) -> String {
    match class {
        26 => format!(
            "{}{}",
            (b'A' + rng.gen_range(0..26u8)) as char,
            rng.gen_range(0..10u32)
        ),
        28 => format!(
            "{}{}{}",
            (b'A' + rng.gen_range(0..26u8)) as char,
            (b'A' + rng.gen_range(0..26u8)) as char,
            rng.gen_range(10..100u32)
        ),
        _ => String::new(),
    }
}

fn text_box(text: &str, x: i32, y: i32) -> Rect {
    let (w, h) = text_extent(text);
    Rect::new(x, y, w as i32, h as i32)
}

fn collides(occupied: &[Rect], candidate: Rect) -> bool {
    occupied.iter().any(|r| r.intersection_area(&candidate) > 0)
}

struct Builder<'a> {
    img: GrayRaster,
    ann: SheetAnnotation,
    occupied: Vec<Rect>,
    atlas: &'a GlyphAtlas,
}

impl Builder<'_> {
    fn place_text(&mut self, text: &str, x: i32, y: i32, orientation: Orientation) -> bool {
        let rendered = self.atlas.render_text(text);
        let rendered = match orientation {
            Orientation::Horizontal => rendered,
            // three clockwise quarter turns = one counter-clockwise turn,
            // so the text reads bottom-to-top
            Orientation::Vertical => rendered.rotate90_cw().rotate90_cw().rotate90_cw(),
        };
        let bbox = Rect::new(x, y, rendered.width as i32, rendered.height as i32);
        if bbox.x < 0
            || bbox.y < 0
            || bbox.right() > self.img.width as i32
            || bbox.bottom() > self.img.height as i32
            || collides(&self.occupied, bbox.inflate(6))
        {
            return false;
        }
        blit_min(&mut self.img, &rendered, x, y);
        self.occupied.push(bbox);
        self.ann.texts.push(TextAnnotation {
            bbox,
            text: text.to_string(),
            orientation,
        });
        true
    }
}

/// Deterministically generate one sheet: horizontal buses, vertical
/// connectors forming T junctions, inline symbols, labels, then noise.
pub fn generate_sheet(cfg: &GenConfig, index: u64) -> Result<Sheet> {
    let seed = cfg
        .seed
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(index.wrapping_mul(0x2545_F491_4F6C_DD1D));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let atlas = GlyphAtlas::builtin();
    let w = cfg.width as i32;
    let h = cfg.height as i32;
    let margin = 80;
    let stroke = 3;

    let mut b = Builder {
        img: GrayRaster::new(cfg.width, cfg.height, 255),
        ann: SheetAnnotation {
            width: cfg.width,
            height: cfg.height,
            seed,
            symbols: Vec::new(),
            lines: Vec::new(),
            texts: Vec::new(),
        },
        occupied: Vec::new(),
        atlas: &atlas,
    };

    // horizontal buses at evenly spaced rows with jitter
    let n_buses = rng.gen_range(cfg.min_buses..=cfg.max_buses.max(cfg.min_buses));
    let span = (h - 2 * margin) / n_buses.max(1) as i32;
    let mut bus_ys = Vec::new();
    for i in 0..n_buses {
        let base = margin + span / 2 + span * i as i32;
        bus_ys.push(base + rng.gen_range(-(span / 6).max(1)..=(span / 6).max(1)));
    }
    let mut bus_styles = Vec::new();
    for &y in &bus_ys {
        let dashed = rng.gen_bool(cfg.dashed_fraction);
        let style = if dashed { LineStyle::Dashed } else { LineStyle::Solid };
        let (p1, p2) = (Point::new(margin, y), Point::new(w - margin, y));
        if dashed {
            draw_dashed_line(&mut b.img, p1, p2, stroke, 12, 6);
        } else {
            draw_line(&mut b.img, p1, p2, stroke);
        }
        let label = random_pipe_label(&mut rng);
        b.ann.lines.push(LineAnnotation {
            p1,
            p2,
            orientation: Orientation::Horizontal,
            style,
            label: label.clone(),
        });
        bus_styles.push(style);
        b.place_text(&label, margin + 10, y - 24, Orientation::Horizontal);
    }

    // vertical connectors between adjacent buses; solid, some labeled
    for gap in 0..n_buses.saturating_sub(1) {
        let (y0, y1) = (bus_ys[gap], bus_ys[gap + 1]);
        let n_conn = rng.gen_range(1..=cfg.max_connectors_per_gap.max(1));
        let mut used_x: Vec<i32> = Vec::new();
        for _ in 0..n_conn {
            let x = rng.gen_range(margin + 150..w - margin - 150);
            if used_x.iter().any(|&u| (u - x).abs() < 150) {
                continue;
            }
            used_x.push(x);
            let (p1, p2) = (Point::new(x, y0), Point::new(x, y1));
            draw_line(&mut b.img, p1, p2, stroke);
            let labeled = rng.gen_bool(0.5);
            let label = if labeled { random_pipe_label(&mut rng) } else { String::new() };
            b.ann.lines.push(LineAnnotation {
                p1,
                p2,
                orientation: Orientation::Vertical,
                style: LineStyle::Solid,
                label: label.clone(),
            });
            if labeled {
                let th = text_extent(&label).0 as i32;
                if y1 - y0 > th + 60 {
                    b.place_text(&label, x + 6, (y0 + y1) / 2 - th / 2, Orientation::Vertical);
                }
            }
            // junction exclusion zones so symbols do not land on the T
            b.occupied.push(Rect::new(x - 50, y0 - 8, 100, 16));
            b.occupied.push(Rect::new(x - 50, y1 - 8, 100, 16));
        }
    }

    // inline symbols on buses: clear a window, draw the symbol centered
    let sz = SYMBOL_SIZE as i32;
    let mut placed = 0;
    let mut attempts = 0;
    while placed < cfg.symbols_per_sheet && attempts < cfg.symbols_per_sheet * 30 {
        attempts += 1;
        let bus = rng.gen_range(0..n_buses);
        let y = bus_ys[bus];
        let x = rng.gen_range(margin + 140..w - margin - 140 - sz);
        let bbox = Rect::new(x, y - sz / 2, sz, sz);
        // reserve room for the external label under the symbol too
        if collides(&b.occupied, bbox.inflate(10)) {
            continue;
        }
        let class = rng.gen_range(1..=32u8);
        fill_rect(&mut b.img, bbox.inflate(6), 255);
        let sym = render_symbol(class, SYMBOL_SIZE, 0)?;
        blit_min(&mut b.img, &sym, bbox.x, bbox.y);
        b.occupied.push(bbox.inflate(6));
        let tight = ink_bbox(&sym);
        let tight = Rect::new(bbox.x + tight.x, bbox.y + tight.y, tight.w, tight.h);
        let label;
        if class_has_embedded_text(class) {
            label = random_embedded_text(class, &mut rng);
            let tb = text_box(&label, 0, 0);
            let tx = bbox.x + (sz - tb.w) / 2;
            let ty = bbox.y + (sz - tb.h) / 2 + if class == 30 { 12 } else { 0 };
            let rendered = atlas.render_text(&label);
            blit_min(&mut b.img, &rendered, tx, ty);
            b.ann.texts.push(TextAnnotation {
                bbox: Rect::new(tx, ty, tb.w, tb.h),
                text: label.clone(),
                orientation: Orientation::Horizontal,
            });
        } else {
            label = random_instrument_label(&mut rng);
            let tb = text_box(&label, 0, 0);
            if !b.place_text(&label, bbox.x + (sz - tb.w) / 2, bbox.bottom() + 10, Orientation::Horizontal) {
                // keep the symbol but without a tag; evaluation treats the
                // empty label as ground truth
            }
        }
        b.ann.symbols.push(SymbolAnnotation {
            class_id: class,
            bbox: tight,
            label: if class_has_embedded_text(class) || b.ann.texts.last().map(|t| t.text == label).unwrap_or(false) {
                label
            } else {
                String::new()
            },
        });
        placed += 1;
    }

    let mut img = b.img;
    apply_noise(&mut img, &cfg.noise, &mut rng);
    Ok(Sheet {
        image: img,
        annotation: b.ann,
    })
}

// ---------------------------------------------------------------------------
// noise

pub fn apply_noise(img: &mut GrayRaster, noise: &NoiseConfig, rng: &mut ChaCha8Rng) {
    if noise.pixelation > 1 {
        pixelate(img, noise.pixelation);
    }
    if noise.blur_sigma > 0.0 {
        gaussian_blur(img, noise.blur_sigma);
    }
    if noise.salt_pepper > 0.0 {
        for v in img.data.iter_mut() {
            if rng.gen_bool(noise.salt_pepper) {
                *v = if rng.gen_bool(0.5) { 0 } else { 255 };
            }
        }
    }
}

fn pixelate(img: &mut GrayRaster, block: u32) {
    let (w, h) = (img.width, img.height);
    let mut by = 0;
    while by < h {
        let mut bx = 0;
        let bh = block.min(h - by);
        while bx < w {
            let bw = block.min(w - bx);
            let mut sum = 0u32;
            for y in by..by + bh {
                for x in bx..bx + bw {
                    sum += img.get(x, y) as u32;
                }
            }
            let avg = (sum / (bw * bh)) as u8;
            for y in by..by + bh {
                for x in bx..bx + bw {
                    img.set(x, y, avg);
                }
            }
            bx += block;
        }
        by += block;
    }
}

fn gaussian_blur(img: &mut GrayRaster, sigma: f64) {
    let radius = (sigma * 3.0).ceil() as i32;
    let mut kernel = Vec::with_capacity((2 * radius + 1) as usize);
    let mut total = 0.0;
    for i in -radius..=radius {
        let v = (-(i as f64 * i as f64) / (2.0 * sigma * sigma)).exp();
        kernel.push(v);
        total += v;
    }
    for v in kernel.iter_mut() {
        *v /= total;
    }
    let (w, h) = (img.width as i32, img.height as i32);
    let mut tmp = vec![0f64; (w * h) as usize];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (ki, kv) in kernel.iter().enumerate() {
                let sx = (x + ki as i32 - radius).clamp(0, w - 1);
                acc += kv * img.get(sx as u32, y as u32) as f64;
            }
            tmp[(y * w + x) as usize] = acc;
        }
    }
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (ki, kv) in kernel.iter().enumerate() {
                let sy = (y + ki as i32 - radius).clamp(0, h - 1);
                acc += kv * tmp[(sy * w + x) as usize];
            }
            img.set(x as u32, y as u32, acc.round().clamp(0.0, 255.0) as u8);
        }
    }
}

// ---------------------------------------------------------------------------
// dataset files

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub train: usize,
    pub test: usize,
    pub sheets: Vec<PathBuf>,
}

/// Train/test sizes under the fixed 4:1 split (every fifth sheet to test).
pub fn split_counts(n: usize) -> (usize, usize) {
    (n - n / 5, n / 5)
}

/// Generate `n` sheets under `out_dir/train` and `out_dir/test` as PNG plus
/// a JSON annotation next to each image.
pub fn write_dataset(cfg: &GenConfig, n: usize, out_dir: &Path) -> Result<DatasetSummary> {
    let train_dir = out_dir.join("train");
    let test_dir = out_dir.join("test");
    std::fs::create_dir_all(&train_dir).map_err(|e| Error::io(&train_dir, e))?;
    std::fs::create_dir_all(&test_dir).map_err(|e| Error::io(&test_dir, e))?;
    let mut summary = DatasetSummary {
        train: 0,
        test: 0,
        sheets: Vec::new(),
    };
    for i in 0..n {
        let sheet = generate_sheet(cfg, i as u64)?;
        let dir = if i % 5 == 4 {
            summary.test += 1;
            &test_dir
        } else {
            summary.train += 1;
            &train_dir
        };
        let png_path = dir.join(format!("sheet_{i:04}.png"));
        std::fs::write(&png_path, sheet.image.to_png()?).map_err(|e| Error::io(&png_path, e))?;
        let json_path = dir.join(format!("sheet_{i:04}.json"));
        std::fs::write(&json_path, serde_json::to_vec_pretty(&sheet.annotation)?)
            .map_err(|e| Error::io(&json_path, e))?;
        summary.sheets.push(png_path);
    }
    Ok(summary)
}

/// Load an annotation written by `write_dataset`.
pub fn load_annotation(path: &Path) -> Result<SheetAnnotation> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_slice(&bytes)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_all_classes_distinct() {
        let masks: Vec<GrayRaster> = (1..=32)
            .map(|c| render_symbol(c, 64, 0).unwrap())
            .collect();
        for i in 0..masks.len() {
            assert!(masks[i].data.iter().any(|&v| v < 128), "class {} blank", i + 1);
            for j in i + 1..masks.len() {
                assert_ne!(masks[i].data, masks[j].data, "classes {} and {}", i + 1, j + 1);
            }
        }
    }

    #[test]
    fn render_rotation_role() {
        let base = render_symbol(2, 64, 0).unwrap();
        let quarter = render_symbol(2, 64, 90).unwrap();
        assert_ne!(base.data, quarter.data);
        let full = render_symbol(2, 64, 360).unwrap();
        assert_eq!(base.data, full.data);
    }

    #[test]
    fn render_rejects_bad_class() {
        assert!(render_symbol(0, 64, 0).is_err());
        assert!(render_symbol(33, 64, 0).is_err());
    }

    #[test]
    fn generate_is_deterministic() {
        let cfg = GenConfig::default();
        let a = generate_sheet(&cfg, 3).unwrap();
        let b = generate_sheet(&cfg, 3).unwrap();
        assert_eq!(a.image.data, b.image.data);
        assert_eq!(
            serde_json::to_string(&a.annotation).unwrap(),
            serde_json::to_string(&b.annotation).unwrap()
        );
        let c = generate_sheet(&cfg, 4).unwrap();
        assert_ne!(a.image.data, c.image.data);
    }

    #[test]
    fn annotations_inside_bounds_and_well_formed() {
        let cfg = GenConfig::default();
        let pipe_re = regex::Regex::new("^\\d+\"-[A-Z]{2}-\\d{4}$").unwrap();
        for index in 0..3 {
            let sheet = generate_sheet(&cfg, index).unwrap();
            let ann = &sheet.annotation;
            assert!(!ann.lines.is_empty());
            assert!(!ann.symbols.is_empty());
            for s in &ann.symbols {
                assert!(s.bbox.x >= 0 && s.bbox.y >= 0);
                assert!(s.bbox.right() <= ann.width as i32);
                assert!(s.bbox.bottom() <= ann.height as i32);
                assert!((1..=32).contains(&s.class_id));
            }
            for l in &ann.lines {
                if l.orientation == Orientation::Horizontal && !l.label.is_empty() {
                    assert!(pipe_re.is_match(&l.label), "{}", l.label);
                }
            }
            for t in &ann.texts {
                assert!(t.bbox.x >= 0 && t.bbox.y >= 0);
                assert!(t.bbox.right() <= ann.width as i32);
                assert!(t.bbox.bottom() <= ann.height as i32);
            }
        }
    }

    #[test]
    fn split_counts_ratios() {
        assert_eq!(split_counts(100), (80, 20));
        assert_eq!(split_counts(500), (400, 100));
        assert_eq!(split_counts(7), (6, 1));
    }

    #[test]
    fn write_dataset_layout() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = GenConfig {
            width: 700,
            height: 500,
            symbols_per_sheet: 2,
            min_buses: 2,
            max_buses: 3,
            ..GenConfig::default()
        };
        let summary = write_dataset(&cfg, 5, dir.path()).unwrap();
        assert_eq!((summary.train, summary.test), (4, 1));
        assert!(dir.path().join("train/sheet_0000.png").exists());
        assert!(dir.path().join("test/sheet_0004.json").exists());
        let ann = load_annotation(&dir.path().join("test/sheet_0004.json")).unwrap();
        assert_eq!(ann.width, 700);
    }

    #[test]
    fn noise_changes_pixels_but_is_seeded() {
        let cfg = GenConfig {
            noise: NoiseConfig::moderate(),
            ..GenConfig::default()
        };
        let clean_cfg = GenConfig::default();
        let noisy = generate_sheet(&cfg, 0).unwrap();
        let clean = generate_sheet(&clean_cfg, 0).unwrap();
        assert_ne!(noisy.image.data, clean.image.data);
        let noisy2 = generate_sheet(&cfg, 0).unwrap();
        assert_eq!(noisy.image.data, noisy2.image.data);
    }
}
