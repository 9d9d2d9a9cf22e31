//! Geometric primitive detection for the basic symbol classes: circles via a
//! patch-wise three-parameter Hough transform, rectangles via corner sampling
//! plus edge-support verification, and a rule table composing primitives into
//! symbol instances (classes 26..=32).

use serde::{Deserialize, Serialize};

use crate::geometry::Rect;
use crate::lines::LineSegment;
use crate::raster::BinaryRaster;
use crate::symbols::{SymbolClass, SymbolInstance};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Circle {
    pub cx: f64,
    pub cy: f64,
    pub r: f64,
    pub support: f64,
}

impl Circle {
    pub fn bbox(&self) -> Rect {
        let pad = 2.0;
        Rect::new(
            (self.cx - self.r - pad).floor() as i32,
            (self.cy - self.r - pad).floor() as i32,
            (2.0 * (self.r + pad)).ceil() as i32 + 1,
            (2.0 * (self.r + pad)).ceil() as i32 + 1,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RectShape {
    pub bbox: Rect,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ShapeConfig {
    pub r_min: u32,
    pub r_max: u32,
    /// Fraction of the circumference that must carry ink.
    pub circle_support_min: f64,
    pub rect_min_side: i32,
    pub rect_max_side: i32,
    /// Fraction of each rectangle side that must carry ink.
    pub rect_edge_support_min: f64,
}

impl Default for ShapeConfig {
    fn default() -> Self {
        ShapeConfig {
            r_min: 8,
            r_max: 30,
            circle_support_min: 0.7,
            rect_min_side: 16,
            rect_max_side: 100,
            rect_edge_support_min: 0.85,
        }
    }
}

fn near_ink(bin: &BinaryRaster, x: f64, y: f64) -> bool {
    let xi = x.round() as i32;
    let yi = y.round() as i32;
    for dy in -1..=1 {
        for dx in -1..=1 {
            if bin.at(xi + dx, yi + dy) {
                return true;
            }
        }
    }
    false
}

/// Fraction of evenly sampled circumference points lying on (or within one
/// pixel of) ink.
pub fn circle_support(bin: &BinaryRaster, cx: f64, cy: f64, r: f64) -> f64 {
    let n = ((2.0 * std::f64::consts::PI * r).ceil() as usize).max(16);
    let mut hit = 0;
    for i in 0..n {
        let a = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
        if near_ink(bin, cx + r * a.cos(), cy + r * a.sin()) {
            hit += 1;
        }
    }
    hit as f64 / n as f64
}

/// Patch-wise circle Hough: each ink pixel votes for candidate centers at
/// every radius; peaks are refined over (cx, cy, r) +-2 maximizing measured
/// circumference support, then deduplicated across the overlapping patches
/// (centers within 3 px and radii within 2 collapse to the best-supported).
pub fn detect_circles(bin: &BinaryRaster, cfg: &ShapeConfig) -> Vec<Circle> {
    let patch = 4 * cfg.r_max;
    let stride = (patch / 2).max(1);
    let mut found: Vec<Circle> = Vec::new();
    let mut py = 0u32;
    loop {
        let y0 = py.min(bin.height.saturating_sub(patch));
        let mut px = 0u32;
        loop {
            let x0 = px.min(bin.width.saturating_sub(patch));
            let pw = patch.min(bin.width - x0);
            let ph = patch.min(bin.height - y0);
            hough_patch(bin, x0, y0, pw, ph, cfg, &mut found);
            if x0 + pw >= bin.width {
                break;
            }
            px += stride;
        }
        if y0 + ph_of(bin.height, y0, patch) >= bin.height {
            break;
        }
        py += stride;
    }
    dedup_circles(found)
}

fn ph_of(height: u32, y0: u32, patch: u32) -> u32 {
    patch.min(height - y0)
}

fn hough_patch(
    bin: &BinaryRaster,
    x0: u32,
    y0: u32,
    pw: u32,
    ph: u32,
    cfg: &ShapeConfig,
    out: &mut Vec<Circle>,
) {
    let radii: Vec<u32> = (cfg.r_min..=cfg.r_max).step_by(2).collect();
    let nr = radii.len();
    if nr == 0 || pw < 4 || ph < 4 {
        return;
    }
    let mut acc = vec![0u16; (pw * ph) as usize * nr];
    let mut any_ink = false;
    for y in 0..ph {
        for x in 0..pw {
            if !bin.get(x0 + x, y0 + y) {
                continue;
            }
            any_ink = true;
            for (ri, &r) in radii.iter().enumerate() {
                let steps = (2.0 * std::f64::consts::PI * r as f64).ceil() as usize;
                for i in 0..steps {
                    let a = 2.0 * std::f64::consts::PI * i as f64 / steps as f64;
                    let cx = x as f64 - r as f64 * a.cos();
                    let cy = y as f64 - r as f64 * a.sin();
                    let (cxi, cyi) = (cx.round() as i32, cy.round() as i32);
                    if cxi >= 0 && cyi >= 0 && (cxi as u32) < pw && (cyi as u32) < ph {
                        acc[ri * (pw * ph) as usize + (cyi as u32 * pw + cxi as u32) as usize] += 1;
                    }
                }
            }
        }
    }
    if !any_ink {
        return;
    }
    for (ri, &r) in radii.iter().enumerate() {
        let plane = &acc[ri * (pw * ph) as usize..(ri + 1) * (pw * ph) as usize];
        let need = (2.0 * std::f64::consts::PI * r as f64 * 0.55) as u16;
        for y in 0..ph {
            for x in 0..pw {
                let v = plane[(y * pw + x) as usize];
                if v < need.max(8) {
                    continue;
                }
                // local maximum over the 3x3 neighborhood in this plane
                let mut is_max = true;
                for dy in -1i32..=1 {
                    for dx in -1i32..=1 {
                        let (nx, ny) = (x as i32 + dx, y as i32 + dy);
                        if nx < 0 || ny < 0 || nx as u32 >= pw || ny as u32 >= ph {
                            continue;
                        }
                        let nv = plane[(ny as u32 * pw + nx as u32) as usize];
                        if nv > v || (nv == v && (dy, dx) < (0, 0)) {
                            is_max = false;
                        }
                    }
                }
                if !is_max {
                    continue;
                }
                if let Some(c) = refine_circle(
                    bin,
                    (x0 + x) as f64,
                    (y0 + y) as f64,
                    r as f64,
                    cfg.circle_support_min,
                ) {
                    out.push(c);
                }
            }
        }
    }
}

/// Search (cx, cy, r) +-2 around a Hough peak for the best-supported circle.
fn refine_circle(bin: &BinaryRaster, cx: f64, cy: f64, r: f64, support_min: f64) -> Option<Circle> {
    let mut best: Option<Circle> = None;
    for dr in -2i32..=2 {
        for dy in -2i32..=2 {
            for dx in -2i32..=2 {
                let (ncx, ncy, nr) = (cx + dx as f64, cy + dy as f64, r + dr as f64);
                if nr < 3.0 {
                    continue;
                }
                let s = circle_support(bin, ncx, ncy, nr);
                if s >= support_min && best.map(|b| s > b.support).unwrap_or(true) {
                    best = Some(Circle {
                        cx: ncx,
                        cy: ncy,
                        r: nr,
                        support: s,
                    });
                }
            }
        }
    }
    best
}

fn dedup_circles(mut circles: Vec<Circle>) -> Vec<Circle> {
    circles.sort_by(|a, b| {
        b.support
            .partial_cmp(&a.support)
            .unwrap()
            .then_with(|| a.cy.partial_cmp(&b.cy).unwrap())
            .then_with(|| a.cx.partial_cmp(&b.cx).unwrap())
    });
    let mut kept: Vec<Circle> = Vec::new();
    for c in circles {
        let dup = kept.iter().any(|k| {
            let same = ((k.cx - c.cx).powi(2) + (k.cy - c.cy).powi(2)).sqrt() <= 3.0
                && (k.r - c.r).abs() <= 2.0;
            // ghost rings riding on a better-supported circle share most of
            // their bounding box with it; concentric pairs do not
            let ghost = k.bbox().iou(&c.bbox()) >= 0.5;
            same || ghost
        });
        if !dup {
            kept.push(c);
        }
    }
    kept.sort_by(|a, b| {
        (a.cy, a.cx, a.r)
            .partial_cmp(&(b.cy, b.cx, b.r))
            .unwrap()
    });
    kept
}

/// Corner candidates: pixels where a horizontal and a vertical ink run meet.
/// Runs shorter than `min_run` on either side do not qualify.
pub fn sample_rect_vertices(bin: &BinaryRaster, min_run: i32) -> Vec<(i32, i32)> {
    let mut out = Vec::new();
    for y in 0..bin.height as i32 {
        for x in 0..bin.width as i32 {
            if !bin.at(x, y) {
                continue;
            }
            let run = |dx: i32, dy: i32| -> i32 {
                let mut n = 0;
                while bin.at(x + dx * (n + 1), y + dy * (n + 1)) {
                    n += 1;
                }
                n
            };
            let h = run(-1, 0).max(run(1, 0));
            let v = run(0, -1).max(run(0, 1));
            if h >= min_run && v >= min_run {
                out.push((x, y));
            }
        }
    }
    out
}

fn cluster_1d(mut vals: Vec<i32>, tol: i32) -> Vec<i32> {
    vals.sort_unstable();
    let mut out: Vec<i32> = Vec::new();
    let mut group: Vec<i32> = Vec::new();
    for v in vals {
        if let Some(&last) = group.last() {
            if v - last > tol {
                out.push(group.iter().sum::<i32>() / group.len() as i32);
                group.clear();
            }
        }
        group.push(v);
    }
    if !group.is_empty() {
        out.push(group.iter().sum::<i32>() / group.len() as i32);
    }
    out
}

fn edge_support_h(bin: &BinaryRaster, x0: i32, x1: i32, y: i32) -> f64 {
    let mut hit = 0;
    for x in x0..=x1 {
        if bin.at(x, y) || bin.at(x, y - 1) || bin.at(x, y + 1) {
            hit += 1;
        }
    }
    hit as f64 / (x1 - x0 + 1).max(1) as f64
}

fn edge_support_v(bin: &BinaryRaster, y0: i32, y1: i32, x: i32) -> f64 {
    let mut hit = 0;
    for y in y0..=y1 {
        if bin.at(x, y) || bin.at(x - 1, y) || bin.at(x + 1, y) {
            hit += 1;
        }
    }
    hit as f64 / (y1 - y0 + 1).max(1) as f64
}

/// Snap corner candidates to a coordinate grid, then keep every axis-aligned
/// quad whose four sides all carry enough ink.
pub fn verify_rectangles(bin: &BinaryRaster, vertices: &[(i32, i32)], cfg: &ShapeConfig) -> Vec<RectShape> {
    let xs = cluster_1d(vertices.iter().map(|v| v.0).collect(), 3);
    let ys = cluster_1d(vertices.iter().map(|v| v.1).collect(), 3);
    let near = |gx: i32, gy: i32| vertices.iter().any(|&(x, y)| (x - gx).abs() <= 3 && (y - gy).abs() <= 3);
    let mut out = Vec::new();
    for (i, &x0) in xs.iter().enumerate() {
        for &x1 in &xs[i + 1..] {
            let w = x1 - x0;
            if w < cfg.rect_min_side || w > cfg.rect_max_side {
                continue;
            }
            for (j, &y0) in ys.iter().enumerate() {
                for &y1 in &ys[j + 1..] {
                    let h = y1 - y0;
                    if h < cfg.rect_min_side || h > cfg.rect_max_side {
                        continue;
                    }
                    if !(near(x0, y0) && near(x1, y0) && near(x0, y1) && near(x1, y1)) {
                        continue;
                    }
                    let m = cfg.rect_edge_support_min;
                    if edge_support_h(bin, x0, x1, y0) >= m
                        && edge_support_h(bin, x0, x1, y1) >= m
                        && edge_support_v(bin, y0, y1, x0) >= m
                        && edge_support_v(bin, y0, y1, x1) >= m
                    {
                        out.push(RectShape {
                            bbox: Rect::new(x0, y0, w + 1, h + 1),
                        });
                    }
                }
            }
        }
    }
    // nested quads produced by a thick outline collapse to the outermost
    let mut kept: Vec<RectShape> = Vec::new();
    out.sort_by_key(|r| std::cmp::Reverse(r.bbox.area()));
    for r in out {
        if !kept.iter().any(|k| k.bbox.intersection_area(&r.bbox) as f64 >= 0.8 * r.bbox.area() as f64) {
            kept.push(r);
        }
    }
    kept.sort_by_key(|r| (r.bbox.y, r.bbox.x));
    kept
}

/// Composition rules turning primitives into basic symbol classes.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct BasicRules {
    /// Outer/inner radius ratio above which two concentric circles are one
    /// symbol (class 32).
    pub concentric_ratio_min: f64,
    pub concentric_center_tol: f64,
    /// Distance tolerance for a circle resting on a rectangle top (class 30).
    pub tangent_tol: f64,
    /// Fraction of the diameter a chord must span (class 27).
    pub chord_cover_min: f64,
    /// Lone circles at or above this radius are class 26, below are 31.
    pub circle_radius_split: f64,
    /// Lone rectangles at or above this aspect ratio are class 28, below 29.
    pub rect_aspect_split: f64,
}

impl Default for BasicRules {
    fn default() -> Self {
        BasicRules {
            concentric_ratio_min: 1.5,
            concentric_center_tol: 3.0,
            tangent_tol: 6.0,
            chord_cover_min: 0.6,
            circle_radius_split: 21.0,
            rect_aspect_split: 1.5,
        }
    }
}

/// Apply the rule table: pair up concentric circles, attach circles tangent
/// to rectangle tops, mark chorded circles, then classify the leftovers by
/// size and aspect.
pub fn assemble_basic_symbols(
    circles: &[Circle],
    rects: &[RectShape],
    solid_segments: &[LineSegment],
    rules: &BasicRules,
) -> Vec<SymbolInstance> {
    let mut out = Vec::new();
    let mut circle_used = vec![false; circles.len()];
    let mut rect_used = vec![false; rects.len()];

    // class 32: concentric pairs, outer circle drives the box
    for i in 0..circles.len() {
        for j in 0..circles.len() {
            if i == j || circle_used[i] || circle_used[j] {
                continue;
            }
            let (a, b) = (&circles[i], &circles[j]);
            if a.r <= b.r {
                continue;
            }
            let d = ((a.cx - b.cx).powi(2) + (a.cy - b.cy).powi(2)).sqrt();
            if d <= rules.concentric_center_tol && a.r / b.r >= rules.concentric_ratio_min {
                circle_used[i] = true;
                circle_used[j] = true;
                out.push(instance(32, a.bbox(), a.support.min(b.support)));
            }
        }
    }

    // class 30: circle tangent on a rectangle top
    for (ci, c) in circles.iter().enumerate() {
        if circle_used[ci] {
            continue;
        }
        for (ri, r) in rects.iter().enumerate() {
            if rect_used[ri] {
                continue;
            }
            let touches = ((c.cy + c.r) - r.bbox.y as f64).abs() <= rules.tangent_tol;
            let over = c.cx >= r.bbox.x as f64 && c.cx <= r.bbox.right() as f64;
            if touches && over {
                circle_used[ci] = true;
                rect_used[ri] = true;
                let bbox = c.bbox().union(&r.bbox);
                out.push(instance(30, bbox, c.support));
            }
        }
    }

    // class 27: circle with a horizontal chord through it
    for (ci, c) in circles.iter().enumerate() {
        if circle_used[ci] {
            continue;
        }
        let chord = solid_segments.iter().any(|s| {
            let m = s.midpoint();
            let inside = ((m.x as f64 - c.cx).powi(2) + (m.y as f64 - c.cy).powi(2)).sqrt() < c.r;
            inside && s.length() >= rules.chord_cover_min * 2.0 * c.r && s.length() < 2.0 * c.r + 8.0
        });
        if chord {
            circle_used[ci] = true;
            out.push(instance(27, c.bbox(), c.support));
        }
    }

    // lone circles: 26 vs 31 by radius
    for (ci, c) in circles.iter().enumerate() {
        if circle_used[ci] {
            continue;
        }
        let class = if c.r >= rules.circle_radius_split { 26 } else { 31 };
        out.push(instance(class, c.bbox(), c.support));
    }

    // lone rectangles: 28 vs 29 by aspect
    for (ri, r) in rects.iter().enumerate() {
        if rect_used[ri] {
            continue;
        }
        let aspect = r.bbox.w as f64 / r.bbox.h.max(1) as f64;
        let class = if aspect >= rules.rect_aspect_split { 28 } else { 29 };
        out.push(instance(class, r.bbox, 1.0));
    }

    out.sort_by_key(|s| (s.bbox.y, s.bbox.x));
    out
}

fn instance(class: u8, bbox: Rect, score: f64) -> SymbolInstance {
    SymbolInstance {
        class_id: SymbolClass::Id(class),
        bbox,
        score,
        label: String::new(),
        edge_ids: Vec::new(),
        ambiguous: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::render_symbol;
    use crate::raster::BinarizePolicy;

    fn binarize_render(class: u8, pad: u32) -> BinaryRaster {
        let sym = render_symbol(class, 64, 0).unwrap();
        let mut canvas = crate::raster::GrayRaster::new(64 + 2 * pad, 64 + 2 * pad, 255);
        crate::text::glyph::blit_min(&mut canvas, &sym, pad as i32, pad as i32);
        canvas.binarize(BinarizePolicy::Fixed(128))
    }

    #[test]
    fn circle_support_oracle() {
        let mut img = crate::raster::GrayRaster::new(80, 80, 255);
        // hand-rasterized circle of radius 20
        for i in 0..360 {
            let a = (i as f64).to_radians();
            let x = (40.0 + 20.0 * a.cos()).round() as u32;
            let y = (40.0 + 20.0 * a.sin()).round() as u32;
            img.set(x, y, 0);
        }
        let bin = img.binarize(BinarizePolicy::Fixed(128));
        assert!(circle_support(&bin, 40.0, 40.0, 20.0) > 0.95);
        assert!(circle_support(&bin, 40.0, 40.0, 10.0) < 0.2);
    }

    #[test]
    fn detect_single_circle() {
        let bin = binarize_render(31, 20); // plain circle r=18 at center (51.5, 51.5)
        let circles = detect_circles(&bin, &ShapeConfig::default());
        assert_eq!(circles.len(), 1, "{circles:?}");
        let c = circles[0];
        assert!((c.cx - 51.5).abs() <= 2.0, "{c:?}");
        assert!((c.cy - 51.5).abs() <= 2.0, "{c:?}");
        assert!((c.r - 18.0).abs() <= 2.0, "{c:?}");
    }

    #[test]
    fn detect_concentric_pair() {
        let bin = binarize_render(32, 20);
        let circles = detect_circles(&bin, &ShapeConfig::default());
        assert_eq!(circles.len(), 2, "{circles:?}");
        let mut radii: Vec<f64> = circles.iter().map(|c| c.r).collect();
        radii.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((radii[0] - 12.0).abs() <= 2.0);
        assert!((radii[1] - 24.0).abs() <= 2.0);
    }

    #[test]
    fn no_circles_on_blank() {
        let bin = crate::raster::GrayRaster::new(150, 150, 255).binarize(BinarizePolicy::Fixed(128));
        assert!(detect_circles(&bin, &ShapeConfig::default()).is_empty());
    }

    #[test]
    fn rect_detection_exact() {
        let bin = binarize_render(29, 20); // 48x48 outline at offset (28, 28)
        let verts = sample_rect_vertices(&bin, 8);
        assert!(!verts.is_empty());
        let rects = verify_rectangles(&bin, &verts, &ShapeConfig::default());
        assert_eq!(rects.len(), 1, "{rects:?}");
        let truth = Rect::new(28, 28, 48, 48);
        assert!(rects[0].bbox.iou(&truth) > 0.85, "{rects:?}");
    }

    #[test]
    fn rect_max_side_excludes_pipe_loops() {
        // a big rectangle made of pipes must not be reported as a symbol
        let mut img = crate::raster::GrayRaster::new(400, 300, 255);
        use crate::dataset::draw_line;
        use crate::geometry::Point;
        draw_line(&mut img, Point::new(50, 50), Point::new(350, 50), 3);
        draw_line(&mut img, Point::new(50, 250), Point::new(350, 250), 3);
        draw_line(&mut img, Point::new(50, 50), Point::new(50, 250), 3);
        draw_line(&mut img, Point::new(350, 50), Point::new(350, 250), 3);
        let bin = img.binarize(BinarizePolicy::Fixed(128));
        let verts = sample_rect_vertices(&bin, 8);
        let rects = verify_rectangles(&bin, &verts, &ShapeConfig::default());
        assert!(rects.is_empty(), "{rects:?}");
    }

    #[test]
    fn assemble_rule_table() {
        let rules = BasicRules::default();
        let c_big = Circle { cx: 100.0, cy: 100.0, r: 24.0, support: 0.9 };
        let c_small = Circle { cx: 100.0, cy: 100.0, r: 12.0, support: 0.9 };
        let out = assemble_basic_symbols(&[c_big, c_small], &[], &[], &rules);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].class_id, SymbolClass::Id(32));

        let lone_small = Circle { cx: 50.0, cy: 50.0, r: 18.0, support: 0.9 };
        let out = assemble_basic_symbols(&[lone_small], &[], &[], &rules);
        assert_eq!(out[0].class_id, SymbolClass::Id(31));

        let lone_big = Circle { cx: 50.0, cy: 50.0, r: 24.0, support: 0.9 };
        let out = assemble_basic_symbols(&[lone_big], &[], &[], &rules);
        assert_eq!(out[0].class_id, SymbolClass::Id(26));

        let wide = RectShape { bbox: Rect::new(0, 0, 64, 32) };
        let square = RectShape { bbox: Rect::new(100, 0, 48, 48) };
        let out = assemble_basic_symbols(&[], &[wide, square], &[], &rules);
        assert_eq!(out.len(), 2);
        let classes: Vec<_> = out.iter().map(|s| s.class_id).collect();
        assert!(classes.contains(&SymbolClass::Id(28)));
        assert!(classes.contains(&SymbolClass::Id(29)));
    }

    #[test]
    fn assemble_tangent_circle_on_rect() {
        let rules = BasicRules::default();
        let c = Circle { cx: 31.5, cy: 28.0, r: 12.0, support: 0.9 };
        let r = RectShape { bbox: Rect::new(8, 40, 48, 22) };
        let out = assemble_basic_symbols(&[c], &[r], &[], &rules);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].class_id, SymbolClass::Id(30));
    }

    #[test]
    fn assemble_chorded_circle() {
        use crate::geometry::Point;
        use crate::lines::{LineSegment, LineStyle};
        use crate::geometry::Orientation;
        let rules = BasicRules::default();
        let c = Circle { cx: 31.5, cy: 31.5, r: 20.0, support: 0.9 };
        let chord = LineSegment {
            p1: Point::new(13, 31),
            p2: Point::new(50, 31),
            orientation: Orientation::Horizontal,
            style: LineStyle::Solid,
        };
        let out = assemble_basic_symbols(&[c], &[], &[chord], &rules);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].class_id, SymbolClass::Id(27));
    }

    #[test]
    fn rules_serialize_round_trip() {
        let rules = BasicRules::default();
        let json = serde_json::to_string(&rules).unwrap();
        let back: BasicRules = serde_json::from_str(&json).unwrap();
        assert_eq!(back.circle_radius_split, rules.circle_radius_split);
    }
}
