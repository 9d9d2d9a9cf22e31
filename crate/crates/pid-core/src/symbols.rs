//! Complex-symbol detection: a two-step localize-then-classify pipeline
//! behind pluggable traits, with template-matching defaults. The template
//! bank is rendered from the same vector definitions the sheet generator
//! uses, so trained models can be dropped in without touching the contract.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::render_symbol;
use crate::error::{Error, Result};
use crate::geometry::Rect;
use crate::raster::GrayRaster;
use crate::text::split_patches;

pub const CANONICAL_SIZE: u32 = 64;
pub const COMPLEX_CLASSES: std::ops::RangeInclusive<u8> = 1..=25;

/// Symbol class: 1..=32, or the catch-all "others" bucket for crops the
/// classifier is not confident about.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SymbolClass {
    Id(u8),
    Others,
}

impl SymbolClass {
    pub fn id(self) -> Option<u8> {
        match self {
            SymbolClass::Id(c) => Some(c),
            SymbolClass::Others => None,
        }
    }
}

impl fmt::Display for SymbolClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SymbolClass::Id(c) => write!(f, "{c}"),
            SymbolClass::Others => write!(f, "others"),
        }
    }
}

impl std::str::FromStr for SymbolClass {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("others") {
            return Ok(SymbolClass::Others);
        }
        let n: u32 = s
            .parse()
            .map_err(|_| Error::Symbol(format!("bad class '{s}'")))?;
        if (1..=32).contains(&n) {
            Ok(SymbolClass::Id(n as u8))
        } else {
            Err(Error::InvalidClass(n))
        }
    }
}

impl Serialize for SymbolClass {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for SymbolClass {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolInstance {
    pub class_id: SymbolClass,
    pub bbox: Rect,
    pub score: f64,
    #[serde(default)]
    pub label: String,
    #[serde(default)]
    pub edge_ids: Vec<usize>,
    #[serde(default)]
    pub ambiguous: bool,
}

/// Region proposer over a patch; the paper uses a segmentation network
/// here, the default is template matching.
pub trait SymbolLocalizer {
    fn propose(&self, patch: &GrayRaster) -> Result<Vec<(Rect, f64)>>;
}

/// Fine-grained classifier over a localized crop.
pub trait FineGrainedClassifier {
    fn classify(&self, crop: &GrayRaster) -> Result<(SymbolClass, f64)>;
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SymbolDetectConfig {
    pub patch_size: u32,
    pub localizer_min: f64,
    pub classifier_min: f64,
}

impl Default for SymbolDetectConfig {
    fn default() -> Self {
        SymbolDetectConfig {
            patch_size: 400,
            localizer_min: 0.8,
            classifier_min: 0.9,
        }
    }
}

// ---------------------------------------------------------------------------
// template bank

#[derive(Serialize, Deserialize)]
struct BankManifestEntry {
    class_id: u8,
    name: String,
    file: String,
}

#[derive(Serialize, Deserialize)]
struct BankManifest {
    canonical_size: u32,
    templates: Vec<BankManifestEntry>,
}

/// One binary mask per class at canonical scale.
#[derive(Debug, Clone)]
pub struct TemplateBank {
    pub size: u32,
    masks: BTreeMap<u8, GrayRaster>,
}

impl TemplateBank {
    /// Render all 32 classes from the shared vector definitions.
    pub fn builtin() -> Self {
        let mut masks = BTreeMap::new();
        for class in 1..=32u8 {
            masks.insert(class, render_symbol(class, CANONICAL_SIZE, 0).unwrap());
        }
        TemplateBank {
            size: CANONICAL_SIZE,
            masks,
        }
    }

    pub fn mask(&self, class: u8) -> Option<&GrayRaster> {
        self.masks.get(&class)
    }

    pub fn classes(&self) -> impl Iterator<Item = u8> + '_ {
        self.masks.keys().copied()
    }

    /// Shared structure of the complex classes: pixelwise AND of their
    /// masks (the per-class deltas vanish, the common silhouette stays).
    pub fn complex_base_mask(&self) -> GrayRaster {
        let mut base = GrayRaster::new(self.size, self.size, 0);
        for i in 0..base.data.len() {
            let all_ink = COMPLEX_CLASSES
                .clone()
                .all(|c| self.masks[&c].data[i] < 128);
            base.data[i] = if all_ink { 0 } else { 255 };
        }
        base
    }

    pub fn save_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut entries = Vec::new();
        for (&class, mask) in &self.masks {
            let file = format!("class_{class:02}.png");
            let path = dir.join(&file);
            std::fs::write(&path, mask.to_png()?).map_err(|e| Error::io(&path, e))?;
            entries.push(BankManifestEntry {
                class_id: class,
                name: format!("Symbol_{class}"),
                file,
            });
        }
        let manifest = BankManifest {
            canonical_size: self.size,
            templates: entries,
        };
        let mpath = dir.join("manifest.json");
        std::fs::write(&mpath, serde_json::to_vec_pretty(&manifest)?)
            .map_err(|e| Error::io(&mpath, e))?;
        Ok(())
    }

    pub fn load_dir(dir: &Path) -> Result<Self> {
        let mpath = dir.join("manifest.json");
        let bytes = std::fs::read(&mpath).map_err(|e| Error::io(&mpath, e))?;
        let manifest: BankManifest = serde_json::from_slice(&bytes)?;
        let mut masks = BTreeMap::new();
        for e in manifest.templates {
            masks.insert(e.class_id, GrayRaster::load_path(&dir.join(&e.file))?);
        }
        Ok(TemplateBank {
            size: manifest.canonical_size,
            masks,
        })
    }
}

// ---------------------------------------------------------------------------
// NCC machinery

/// Integral images of darkness (255 - v) and its square.
struct Integral {
    w: usize,
    sum: Vec<f64>,
    sum2: Vec<f64>,
}

impl Integral {
    fn build(img: &GrayRaster) -> Self {
        let w = img.width as usize + 1;
        let h = img.height as usize + 1;
        let mut sum = vec![0.0; w * h];
        let mut sum2 = vec![0.0; w * h];
        for y in 1..h {
            for x in 1..w {
                let v = (255 - img.get((x - 1) as u32, (y - 1) as u32)) as f64 / 255.0;
                sum[y * w + x] = v + sum[y * w + x - 1] + sum[(y - 1) * w + x]
                    - sum[(y - 1) * w + x - 1];
                sum2[y * w + x] = v * v + sum2[y * w + x - 1] + sum2[(y - 1) * w + x]
                    - sum2[(y - 1) * w + x - 1];
            }
        }
        Integral { w, sum, sum2 }
    }

    fn window(&self, x: usize, y: usize, win: usize) -> (f64, f64) {
        let w = self.w;
        let (x1, y1) = (x + win, y + win);
        let s = self.sum[y1 * w + x1] - self.sum[y * w + x1] - self.sum[y1 * w + x]
            + self.sum[y * w + x];
        let s2 = self.sum2[y1 * w + x1] - self.sum2[y * w + x1] - self.sum2[y1 * w + x]
            + self.sum2[y * w + x];
        (s, s2)
    }
}

/// Template prepared for fast NCC: list of ink offsets plus moments.
struct PreparedMask {
    size: u32,
    ink: Vec<(u32, u32)>,
}

impl PreparedMask {
    fn new(mask: &GrayRaster) -> Self {
        let mut ink = Vec::new();
        for y in 0..mask.height {
            for x in 0..mask.width {
                if mask.get(x, y) < 128 {
                    ink.push((x, y));
                }
            }
        }
        PreparedMask {
            size: mask.width,
            ink,
        }
    }

    /// NCC of the binary template against the darkness image at (x, y).
    fn ncc_at(&self, img: &GrayRaster, integral: &Integral, x: u32, y: u32) -> f64 {
        let n = (self.size * self.size) as f64;
        let n_ink = self.ink.len() as f64;
        let (sw, sw2) = integral.window(x as usize, y as usize, self.size as usize);
        let mean_w = sw / n;
        let var_w = sw2 / n - mean_w * mean_w;
        if var_w <= 1e-9 {
            return 0.0;
        }
        let mut s_ink = 0.0;
        for &(dx, dy) in &self.ink {
            s_ink += (255 - img.get(x + dx, y + dy)) as f64 / 255.0;
        }
        let mean_t = n_ink / n;
        let var_t = mean_t - mean_t * mean_t;
        let cov = s_ink / n - mean_t * mean_w;
        cov / (var_t.sqrt() * var_w.sqrt())
    }

    /// Quick upper-bound filter: a window without enough dark mass cannot
    /// correlate strongly with the template.
    fn plausible(&self, integral: &Integral, x: u32, y: u32, frac: f64) -> bool {
        let (sw, _) = integral.window(x as usize, y as usize, self.size as usize);
        sw >= self.ink.len() as f64 * frac
    }
}

fn rotate_mask(mask: &GrayRaster, quarter_turns: u32) -> GrayRaster {
    let mut m = mask.clone();
    for _ in 0..quarter_turns % 4 {
        m = m.rotate90_cw();
    }
    m
}

fn scale_mask(mask: &GrayRaster, scale: f64) -> GrayRaster {
    let size = ((mask.width as f64 * scale).round() as u32).max(2);
    let mut out = GrayRaster::new(size, size, 255);
    for y in 0..size {
        for x in 0..size {
            let sx = ((x as f64 + 0.5) / scale - 0.5).round() as i32;
            let sy = ((y as f64 + 0.5) / scale - 0.5).round() as i32;
            let sx = sx.clamp(0, mask.width as i32 - 1) as u32;
            let sy = sy.clamp(0, mask.height as i32 - 1) as u32;
            out.set(x, y, mask.get(sx, sy));
        }
    }
    out
}

/// Sliding-window NCC of the class-agnostic shared mask over a patch at
/// scales {0.75, 1.0, 1.25} (and both axis rotations); coarse stride with
/// local refinement, local maxima above 0.5 returned with their score.
pub fn template_localize(patch: &GrayRaster, bank: &TemplateBank) -> Vec<(Rect, f64)> {
    let base = bank.complex_base_mask();
    let integral = Integral::build(patch);
    let mut raw: Vec<(Rect, f64)> = Vec::new();
    for rot in [0u32, 1] {
        let rotated = rotate_mask(&base, rot);
        for scale in [0.75f64, 1.0, 1.25] {
            let mask = scale_mask(&rotated, scale);
            let size = mask.width;
            if size > patch.width || size > patch.height {
                continue;
            }
            let prepared = PreparedMask::new(&mask);
            let stride = 4u32;
            let mut best_here: Vec<(u32, u32, f64)> = Vec::new();
            let mut y = 0;
            while y + size <= patch.height {
                let mut x = 0;
                while x + size <= patch.width {
                    if prepared.plausible(&integral, x, y, 0.35) {
                        let r = prepared.ncc_at(patch, &integral, x, y);
                        if r > 0.45 {
                            best_here.push((x, y, r));
                        }
                    }
                    x += stride;
                }
                y += stride;
            }
            // refine each coarse hit at stride 1 in a +-3 window
            for (cx, cy, _) in best_here {
                let mut best = (cx, cy, -1.0f64);
                for dy in -3i32..=3 {
                    for dx in -3i32..=3 {
                        let x = cx as i32 + dx;
                        let y = cy as i32 + dy;
                        if x < 0
                            || y < 0
                            || x as u32 + size > patch.width
                            || y as u32 + size > patch.height
                        {
                            continue;
                        }
                        let r = prepared.ncc_at(patch, &integral, x as u32, y as u32);
                        if r > best.2 {
                            best = (x as u32, y as u32, r);
                        }
                    }
                }
                if best.2 > 0.5 {
                    raw.push((
                        Rect::new(best.0 as i32, best.1 as i32, size as i32, size as i32),
                        best.2,
                    ));
                }
            }
        }
    }
    nms(raw, 0.3)
}

/// Greedy non-maximum suppression keeping the higher score.
pub fn nms(mut boxes: Vec<(Rect, f64)>, iou_max: f64) -> Vec<(Rect, f64)> {
    boxes.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap()
            .then_with(|| (a.0.y, a.0.x).cmp(&(b.0.y, b.0.x)))
    });
    let mut kept: Vec<(Rect, f64)> = Vec::new();
    for (r, s) in boxes {
        if kept.iter().all(|(k, _)| k.iou(&r) < iou_max) {
            kept.push((r, s));
        }
    }
    kept.sort_by(|a, b| (a.0.y, a.0.x).cmp(&(b.0.y, b.0.x)));
    kept
}

/// Classify a crop by max NCC over the bank at rotations {0°,90°,180°,270°};
/// ties within 0.02 are re-scored on the central 25% region where the
/// fine-grained deltas live. Degenerate crops return (others, 0).
pub fn template_classify(crop: &GrayRaster, bank: &TemplateBank) -> (SymbolClass, f64) {
    let first = crop.data.first().copied().unwrap_or(255);
    if crop.data.iter().all(|&v| v == first) {
        return (SymbolClass::Others, 0.0);
    }
    let canon = resize_square(crop, bank.size);
    let cvals: Vec<f64> = canon.data.iter().map(|&v| (255 - v) as f64 / 255.0).collect();
    let mut scores: Vec<(u8, u32, f64)> = Vec::new();
    for class in bank.classes() {
        let mask = bank.mask(class).unwrap();
        for rot in 0..4u32 {
            let m = rotate_mask(mask, rot);
            let r = ncc_gray(&cvals, &m);
            scores.push((class, rot, r));
        }
    }
    scores.sort_by(|a, b| b.2.partial_cmp(&a.2).unwrap().then(a.0.cmp(&b.0)));
    let (mut best_class, best_rot, best_score) = scores[0];
    // fine-grained tie-break on the central region
    let contenders: Vec<&(u8, u32, f64)> = scores
        .iter()
        .filter(|(_, _, r)| best_score - r <= 0.02)
        .collect();
    if contenders.len() > 1 {
        let lo = bank.size * 3 / 8;
        let hi = bank.size * 5 / 8;
        let mut best_center = -2.0;
        let mut winner = (best_class, best_rot);
        for &&(class, rot, _) in &contenders {
            let m = rotate_mask(bank.mask(class).unwrap(), rot);
            let r = ncc_gray_region(&cvals, &m, lo, hi);
            if r > best_center {
                best_center = r;
                winner = (class, rot);
            }
        }
        best_class = winner.0;
    }
    (SymbolClass::Id(best_class), best_score.clamp(0.0, 1.0))
}

/// Resize to a size x size square preserving aspect, padded with paper.
fn resize_square(crop: &GrayRaster, size: u32) -> GrayRaster {
    if crop.width == size && crop.height == size {
        return crop.clone();
    }
    let scale = size as f64 / crop.width.max(crop.height) as f64;
    let rw = ((crop.width as f64 * scale).round() as u32).clamp(1, size);
    let rh = ((crop.height as f64 * scale).round() as u32).clamp(1, size);
    let mut out = GrayRaster::new(size, size, 255);
    let x0 = (size - rw) / 2;
    let y0 = (size - rh) / 2;
    for y in 0..rh {
        for x in 0..rw {
            let sx = ((x as f64 + 0.5) / scale - 0.5)
                .round()
                .clamp(0.0, crop.width as f64 - 1.0) as u32;
            let sy = ((y as f64 + 0.5) / scale - 0.5)
                .round()
                .clamp(0.0, crop.height as f64 - 1.0) as u32;
            out.set(x0 + x, y0 + y, crop.get(sx, sy));
        }
    }
    out
}

fn ncc_gray(cvals: &[f64], mask: &GrayRaster) -> f64 {
    ncc_gray_region(cvals, mask, 0, mask.width)
}

fn ncc_gray_region(cvals: &[f64], mask: &GrayRaster, lo: u32, hi: u32) -> f64 {
    let mut n = 0.0;
    let (mut sa, mut sb, mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for y in lo..hi {
        for x in lo..hi {
            let a = cvals[(y * mask.width + x) as usize];
            let b = if mask.get(x, y) < 128 { 1.0 } else { 0.0 };
            n += 1.0;
            sa += a;
            sb += b;
            saa += a * a;
            sbb += b * b;
            sab += a * b;
        }
    }
    let va = saa / n - (sa / n) * (sa / n);
    let vb = sbb / n - (sb / n) * (sb / n);
    if va <= 1e-12 || vb <= 1e-12 {
        return 0.0;
    }
    (sab / n - sa * sb / (n * n)) / (va.sqrt() * vb.sqrt())
}

/// Template-matching default for the localizer trait.
pub struct TemplateLocalizer<'a> {
    pub bank: &'a TemplateBank,
}

impl SymbolLocalizer for TemplateLocalizer<'_> {
    fn propose(&self, patch: &GrayRaster) -> Result<Vec<(Rect, f64)>> {
        Ok(template_localize(patch, self.bank))
    }
}

/// Template-matching default for the classifier trait.
pub struct TemplateClassifier<'a> {
    pub bank: &'a TemplateBank,
}

impl FineGrainedClassifier for TemplateClassifier<'_> {
    fn classify(&self, crop: &GrayRaster) -> Result<(SymbolClass, f64)> {
        Ok(template_classify(crop, self.bank))
    }
}

/// Two-step detection over 50%-overlap patches: proposals above
/// `localizer_min`, NMS at IOU 0.5, then per-crop classification; crops
/// below `classifier_min` keep their box but fall into the others class.
pub fn detect_complex_symbols(
    sheet: &GrayRaster,
    localizer: &dyn SymbolLocalizer,
    classifier: &dyn FineGrainedClassifier,
    cfg: &SymbolDetectConfig,
) -> Vec<SymbolInstance> {
    let mut proposals: Vec<(Rect, f64)> = Vec::new();
    for patch_rect in split_patches(sheet.width, sheet.height, cfg.patch_size, 0.5) {
        let patch = sheet.crop(patch_rect);
        let found = match localizer.propose(&patch) {
            Ok(f) => f,
            Err(e) => {
                log::warn!("localizer failed on patch {patch_rect:?}: {e}");
                continue;
            }
        };
        for (r, s) in found {
            if s >= cfg.localizer_min {
                proposals.push((Rect::new(r.x + patch_rect.x, r.y + patch_rect.y, r.w, r.h), s));
            }
        }
    }
    let kept = nms(proposals, 0.5);
    let mut out = Vec::new();
    for (bbox, _loc_score) in kept {
        let crop_rect = bbox.clamp_to(sheet.width, sheet.height);
        if crop_rect.w < 2 || crop_rect.h < 2 {
            continue;
        }
        let crop = sheet.crop(crop_rect);
        let (class, score) = match classifier.classify(&crop) {
            Ok(c) => c,
            Err(e) => {
                log::warn!("classifier failed on {bbox:?}: {e}");
                continue;
            }
        };
        let class = match class {
            SymbolClass::Id(_) if score >= cfg.classifier_min => class,
            _ => SymbolClass::Others,
        };
        out.push(SymbolInstance {
            class_id: class,
            bbox,
            score,
            label: String::new(),
            edge_ids: Vec::new(),
            ambiguous: false,
        });
    }
    out.sort_by_key(|s| (s.bbox.y, s.bbox.x));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::glyph::blit_min;

    #[test]
    fn bank_has_all_classes_distinct() {
        let bank = TemplateBank::builtin();
        assert_eq!(bank.classes().count(), 32);
    }

    #[test]
    fn classify_self_match_every_class() {
        let bank = TemplateBank::builtin();
        for class in COMPLEX_CLASSES {
            let crop = render_symbol(class, CANONICAL_SIZE, 0).unwrap();
            let (got, score) = template_classify(&crop, &bank);
            assert_eq!(got, SymbolClass::Id(class), "class {class}");
            assert!(score >= 0.99, "class {class} score {score}");
        }
    }

    #[test]
    fn classify_rotated_render() {
        let bank = TemplateBank::builtin();
        let crop = render_symbol(3, CANONICAL_SIZE, 90).unwrap();
        let (got, score) = template_classify(&crop, &bank);
        assert_eq!(got, SymbolClass::Id(3));
        assert!(score >= 0.95, "score {score}");
    }

    #[test]
    fn classify_degenerate_crop() {
        let bank = TemplateBank::builtin();
        let crop = GrayRaster::new(40, 40, 255);
        assert_eq!(template_classify(&crop, &bank), (SymbolClass::Others, 0.0));
    }

    #[test]
    fn localize_exact_render() {
        let bank = TemplateBank::builtin();
        let mut patch = GrayRaster::new(300, 300, 255);
        let sym = render_symbol(7, CANONICAL_SIZE, 0).unwrap();
        blit_min(&mut patch, &sym, 120, 90);
        let props = template_localize(&patch, &bank);
        assert!(!props.is_empty());
        let best = props
            .iter()
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap();
        assert!(best.1 >= 0.8, "score {}", best.1);
        let truth = Rect::new(120, 90, 64, 64);
        assert!(best.0.iou(&truth) >= 0.8, "{best:?}");
    }

    #[test]
    fn localize_blank_patch_empty() {
        let bank = TemplateBank::builtin();
        assert!(template_localize(&GrayRaster::new(200, 200, 255), &bank).is_empty());
    }

    #[test]
    fn nms_no_high_iou_pairs() {
        let boxes = vec![
            (Rect::new(0, 0, 60, 60), 0.9),
            (Rect::new(4, 4, 60, 60), 0.8),
            (Rect::new(200, 0, 60, 60), 0.7),
        ];
        let kept = nms(boxes, 0.5);
        assert_eq!(kept.len(), 2);
        for i in 0..kept.len() {
            for j in i + 1..kept.len() {
                assert!(kept[i].0.iou(&kept[j].0) < 0.5);
            }
        }
    }

    #[test]
    fn threshold_keeps_low_score_as_others() {
        struct FakeLoc;
        impl SymbolLocalizer for FakeLoc {
            fn propose(&self, _p: &GrayRaster) -> Result<Vec<(Rect, f64)>> {
                Ok(vec![(Rect::new(10, 10, 64, 64), 0.95)])
            }
        }
        struct FakeCls;
        impl FineGrainedClassifier for FakeCls {
            fn classify(&self, _c: &GrayRaster) -> Result<(SymbolClass, f64)> {
                Ok((SymbolClass::Id(5), 0.85))
            }
        }
        let sheet = GrayRaster::new(200, 200, 128);
        let out = detect_complex_symbols(&sheet, &FakeLoc, &FakeCls, &SymbolDetectConfig::default());
        // one proposal per overlapping patch collapses to one box under NMS
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].class_id, SymbolClass::Others);
        assert!((out[0].score - 0.85).abs() < 1e-9);
    }

    #[test]
    fn bank_dir_round_trip() {
        let bank = TemplateBank::builtin();
        let dir = tempfile::tempdir().unwrap();
        bank.save_dir(dir.path()).unwrap();
        let loaded = TemplateBank::load_dir(dir.path()).unwrap();
        assert_eq!(loaded.size, bank.size);
        assert_eq!(loaded.mask(17).unwrap().data, bank.mask(17).unwrap().data);
    }
}
