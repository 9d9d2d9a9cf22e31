//! End-to-end digitization: raster in, structured symbol table plus labeled
//! connectivity graph out.
//!
//! Stage order matters. Text is extracted first and erased from the binary
//! working raster so glyph strokes cannot masquerade as dash chains; long
//! line segments are erased before shape detection so pipes cannot vote in
//! the circle Hough space or close phantom rectangles.

use crate::aggregate::{
    map_symbols_to_graph, map_symbols_to_text, reconcile, DigitizationResult,
};
use crate::config::PipelineConfig;
use crate::dataset::class_has_embedded_text;
use crate::error::Result;
use crate::graph::{assign_edge_labels, build_graph, filter_lines, propagate_labels};
use crate::lines::{detect_dashed_lines, detect_solid_lines, LineSegment, LineStyle};
use crate::raster::{BinarizePolicy, GrayRaster};
use crate::shapes::{assemble_basic_symbols, detect_circles, sample_rect_vertices, verify_rectangles};
use crate::symbols::{
    detect_complex_symbols, SymbolClass, SymbolInstance, TemplateBank, TemplateClassifier,
    TemplateLocalizer,
};
use crate::text::detector::InkDensityDetector;
use crate::text::glyph::GlyphAtlas;
use crate::text::{extract_text, TextBox};

/// Everything a caller might want back: the aggregated result plus the raw
/// line segments and the kernel the stages derived from the sheet size.
pub struct Digitization {
    pub result: DigitizationResult,
    pub segments: Vec<LineSegment>,
    pub kernel_len: u32,
}

/// Segments longer than this are treated as pipework when preparing the
/// shape-detection raster; every basic symbol primitive is shorter.
const PIPE_LENGTH: f64 = 120.0;

pub fn digitize(sheet: &GrayRaster, bank: &TemplateBank, cfg: &PipelineConfig) -> Result<Digitization> {
    let img;
    let sheet = if cfg.resize_width > 0 && cfg.resize_width != sheet.width {
        img = sheet.resize_to_width(cfg.resize_width);
        &img
    } else {
        sheet
    };
    let mut bin = sheet.binarize(BinarizePolicy::Otsu);

    // 1. text, then scrub it from the working raster
    let atlas = GlyphAtlas::builtin();
    let detector = InkDensityDetector::default();
    let texts = extract_text(sheet, &detector, &atlas, &cfg.text);
    for t in &texts {
        bin.erase_rect(t.bbox.inflate(1));
    }

    // 2. line extraction
    let solid = detect_solid_lines(&bin, &cfg.lines);
    let kernel_len = solid.kernel_len;

    // 3. complex symbols on the original grayscale
    let localizer = TemplateLocalizer { bank };
    let classifier = TemplateClassifier { bank };
    let mut complex = detect_complex_symbols(sheet, &localizer, &classifier, &cfg.symbols);

    // 4. dashed chains, excluding strokes inside complex symbol boxes
    let keep: Vec<usize> = (0..solid.segments.len())
        .filter(|&i| {
            let m = solid.segments[i].midpoint();
            !complex.iter().any(|s| s.bbox.inflate(2).contains(m))
        })
        .collect();
    let dash_input: Vec<LineSegment> = keep.iter().map(|&i| solid.segments[i]).collect();
    let dashed = detect_dashed_lines(&dash_input, kernel_len, &cfg.lines);
    let consumed: std::collections::HashSet<usize> =
        dashed.consumed.iter().map(|&i| keep[i]).collect();
    let mut segments: Vec<LineSegment> = (0..solid.segments.len())
        .filter(|i| !consumed.contains(i))
        .map(|i| solid.segments[i])
        .collect();
    segments.extend(dashed.dashed.iter().copied());

    // 5. shapes on a raster with pipework and complex symbols removed
    let mut shape_bin = bin.clone();
    for seg in &segments {
        if seg.length() > PIPE_LENGTH {
            shape_bin.erase_rect(segment_band(seg, 2));
        }
    }
    for s in &complex {
        shape_bin.erase_rect(s.bbox.inflate(2));
    }
    let circles = detect_circles(&shape_bin, &cfg.shapes);
    let vertices = sample_rect_vertices(&shape_bin, 8);
    let rects = verify_rectangles(&shape_bin, &vertices, &cfg.shapes);
    let solid_short: Vec<LineSegment> = segments
        .iter()
        .filter(|s| s.style == LineStyle::Solid && s.length() <= PIPE_LENGTH)
        .copied()
        .collect();
    let basic = assemble_basic_symbols(&circles, &rects, &solid_short, &cfg.basic_rules);

    // 6. merge the two symbol populations: where a basic symbol explains an
    // unclassified complex proposal, the basic one wins
    complex.retain(|c| {
        !(c.class_id == SymbolClass::Others
            && basic.iter().any(|b| b.bbox.iou(&c.bbox) >= 0.5))
    });
    let mut symbols: Vec<SymbolInstance> = basic
        .into_iter()
        .filter(|b| {
            !complex
                .iter()
                .any(|c| c.class_id != SymbolClass::Others && c.bbox.iou(&b.bbox) >= 0.5)
        })
        .collect();
    symbols.extend(complex);
    symbols.sort_by_key(|s| (s.bbox.y, s.bbox.x));

    // 7. connectivity graph
    let symbol_boxes: Vec<_> = symbols.iter().map(|s| s.bbox.inflate(8)).collect();
    let alpha = cfg.graph.effective_alpha(kernel_len);
    let filtered = filter_lines(&segments, &symbol_boxes, alpha);
    let mut graph = build_graph(&filtered, &cfg.graph, kernel_len);
    let pipe_re = cfg.rules.pipe_regex()?;
    assign_edge_labels(&mut graph, &texts, &pipe_re, &cfg.graph);
    propagate_labels(&mut graph);

    // 8. aggregation
    map_symbols_to_graph(&mut symbols, &graph);
    assign_embedded_labels(&mut symbols, &texts, cfg)?;
    map_symbols_to_text(&mut symbols, &texts, &cfg.rules, cfg.k_text_neighbors, cfg.text_max_dist)?;
    reconcile(&mut symbols, &cfg.rules)?;

    Ok(Digitization {
        result: DigitizationResult {
            symbols,
            graph,
            texts,
        },
        segments,
        kernel_len,
    })
}

fn segment_band(seg: &LineSegment, half_width: i32) -> crate::geometry::Rect {
    let (a0, a1) = seg.axis_span();
    let p = seg.perp_mid().round() as i32;
    match seg.orientation {
        crate::geometry::Orientation::Horizontal => {
            crate::geometry::Rect::new(a0, p - half_width, a1 - a0 + 1, 2 * half_width + 1)
        }
        crate::geometry::Orientation::Vertical => {
            crate::geometry::Rect::new(p - half_width, a0, 2 * half_width + 1, a1 - a0 + 1)
        }
    }
}

/// Classes that carry their tag inside the shape take the text box whose
/// center falls within their own bounds.
fn assign_embedded_labels(
    symbols: &mut [SymbolInstance],
    texts: &[TextBox],
    cfg: &PipelineConfig,
) -> Result<()> {
    for s in symbols.iter_mut() {
        let Some(class) = s.class_id.id() else { continue };
        if !class_has_embedded_text(class) || !s.label.is_empty() {
            continue;
        }
        let re = cfg
            .rules
            .rule_for(s.class_id)
            .and_then(|r| r.label_regex.as_deref())
            .map(regex::Regex::new)
            .transpose()?;
        for t in texts {
            let c = t.bbox.centerf();
            if s.bbox.contains(crate::geometry::Point::new(c.0.round() as i32, c.1.round() as i32))
                && re.as_ref().map(|re| re.is_match(&t.text)).unwrap_or(true)
            {
                s.label = t.text.clone();
                break;
            }
        }
    }
    Ok(())
}
