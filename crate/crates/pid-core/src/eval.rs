//! Evaluation harness: every detector output compared against generator
//! ground truth with greedy IOU matching and the usual precision/recall
//! bookkeeping.

use serde::{Deserialize, Serialize};

use crate::dataset::{LineAnnotation, TextAnnotation};
use crate::geometry::{Orientation, Rect};
use crate::graph::PidGraph;
use crate::lines::{LineSegment, LineStyle};
use crate::symbols::{SymbolClass, SymbolInstance};
use crate::text::TextBox;

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct PrMetrics {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

pub fn prf(tp: usize, fp: usize, fn_: usize) -> PrMetrics {
    let precision = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
    let recall = if tp + fn_ == 0 { 0.0 } else { tp as f64 / (tp + fn_) as f64 };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    PrMetrics { tp, fp, fn_, precision, recall, f1 }
}

/// Greedy one-to-one box matching by descending IOU above `iou_min`.
/// Returns (truth_idx, pred_idx, iou) triples.
pub fn match_boxes(truth: &[Rect], pred: &[Rect], iou_min: f64) -> Vec<(usize, usize, f64)> {
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (ti, t) in truth.iter().enumerate() {
        for (pi, p) in pred.iter().enumerate() {
            let iou = t.iou(p);
            if iou > iou_min {
                pairs.push((iou, ti, pi));
            }
        }
    }
    pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then((a.1, a.2).cmp(&(b.1, b.2))));
    let mut t_used = vec![false; truth.len()];
    let mut p_used = vec![false; pred.len()];
    let mut out = Vec::new();
    for (iou, ti, pi) in pairs {
        if !t_used[ti] && !p_used[pi] {
            t_used[ti] = true;
            p_used[pi] = true;
            out.push((ti, pi, iou));
        }
    }
    out
}

/// Symbol-level scoring: a matched pair is a true positive only when the
/// box overlaps above `iou_min`, the class agrees, and (optionally) the
/// associated label is exactly right. Everything else breaks into a false
/// positive and a false negative.
pub fn match_symbols(
    truth: &[(u8, Rect, String)],
    pred: &[SymbolInstance],
    iou_min: f64,
    check_label: bool,
) -> PrMetrics {
    let t_boxes: Vec<Rect> = truth.iter().map(|t| t.1).collect();
    let p_boxes: Vec<Rect> = pred.iter().map(|p| p.bbox).collect();
    let matched = match_boxes(&t_boxes, &p_boxes, iou_min);
    let mut tp = 0;
    for &(ti, pi, _) in &matched {
        let class_ok = pred[pi].class_id == SymbolClass::Id(truth[ti].0);
        let label_ok = !check_label || pred[pi].label == truth[ti].2;
        if class_ok && label_ok {
            tp += 1;
        }
    }
    prf(tp, pred.len() - tp, truth.len() - tp)
}

/// 33x33 confusion counts: rows are truth, columns prediction; indices 0..32
/// are classes 1..=32 and index 32 is the catch-all (predicted others, or a
/// miss on the truth side).
pub fn confusion_matrix(
    truth: &[(u8, Rect)],
    pred: &[SymbolInstance],
    iou_min: f64,
) -> Vec<Vec<usize>> {
    let mut conf = vec![vec![0usize; 33]; 33];
    let t_boxes: Vec<Rect> = truth.iter().map(|t| t.1).collect();
    let p_boxes: Vec<Rect> = pred.iter().map(|p| p.bbox).collect();
    let matched = match_boxes(&t_boxes, &p_boxes, iou_min);
    let mut t_seen = vec![false; truth.len()];
    for &(ti, pi, _) in &matched {
        t_seen[ti] = true;
        let row = (truth[ti].0 - 1) as usize;
        let col = match pred[pi].class_id {
            SymbolClass::Id(c) => (c - 1) as usize,
            SymbolClass::Others => 32,
        };
        conf[row][col] += 1;
    }
    for (ti, seen) in t_seen.iter().enumerate() {
        if !seen {
            conf[(truth[ti].0 - 1) as usize][32] += 1;
        }
    }
    conf
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct LineEval {
    pub solid_total: usize,
    pub solid_correct: usize,
    pub dashed_total: usize,
    pub dashed_correct: usize,
}

impl LineEval {
    pub fn solid_accuracy(&self) -> f64 {
        if self.solid_total == 0 { 1.0 } else { self.solid_correct as f64 / self.solid_total as f64 }
    }
    pub fn dashed_accuracy(&self) -> f64 {
        if self.dashed_total == 0 { 1.0 } else { self.dashed_correct as f64 / self.dashed_total as f64 }
    }
    pub fn add(&mut self, other: &LineEval) {
        self.solid_total += other.solid_total;
        self.solid_correct += other.solid_correct;
        self.dashed_total += other.dashed_total;
        self.dashed_correct += other.dashed_correct;
    }
}

fn merge_intervals(mut iv: Vec<(i32, i32)>) -> Vec<(i32, i32)> {
    iv.sort_unstable();
    let mut out: Vec<(i32, i32)> = Vec::new();
    for (a, b) in iv {
        if let Some(last) = out.last_mut() {
            if a <= last.1 + 1 {
                last.1 = last.1.max(b);
                continue;
            }
        }
        out.push((a, b));
    }
    out
}

fn subtract_intervals(base: (i32, i32), holes: &[(i32, i32)]) -> Vec<(i32, i32)> {
    let mut keep = vec![base];
    for &(h0, h1) in holes {
        let mut next = Vec::new();
        for (a, b) in keep {
            if h1 < a || h0 > b {
                next.push((a, b));
            } else {
                if h0 > a {
                    next.push((a, h0 - 1));
                }
                if h1 < b {
                    next.push((h1 + 1, b));
                }
            }
        }
        keep = next;
    }
    keep
}

fn overlap_len(a: (i32, i32), b: (i32, i32)) -> i32 {
    (a.1.min(b.1) - a.0.max(b.0) + 1).max(0)
}

/// Complete-line scoring by coverage: a truth line counts as recovered when
/// detected segments of the same orientation and style, within `perp_tol`
/// of its axis, cover at least `cover_min` of its visible extent (the parts
/// not blanked out by an inline symbol, approximated by the symbol boxes
/// grown by `clear_margin`).
pub fn line_accuracy(
    truth: &[LineAnnotation],
    symbol_boxes: &[Rect],
    detected: &[LineSegment],
    perp_tol: i32,
    cover_min: f64,
    clear_margin: i32,
) -> LineEval {
    let mut eval = LineEval::default();
    for line in truth {
        let (axis0, axis1, perp) = match line.orientation {
            Orientation::Horizontal => (line.p1.x.min(line.p2.x), line.p1.x.max(line.p2.x), line.p1.y),
            Orientation::Vertical => (line.p1.y.min(line.p2.y), line.p1.y.max(line.p2.y), line.p1.x),
        };
        let holes: Vec<(i32, i32)> = symbol_boxes
            .iter()
            .map(|b| b.inflate(clear_margin))
            .filter(|b| match line.orientation {
                Orientation::Horizontal => perp >= b.y && perp < b.bottom(),
                Orientation::Vertical => perp >= b.x && perp < b.right(),
            })
            .map(|b| match line.orientation {
                Orientation::Horizontal => (b.x, b.right() - 1),
                Orientation::Vertical => (b.y, b.bottom() - 1),
            })
            .collect();
        let required = subtract_intervals((axis0, axis1), &holes);
        let required_len: i32 = required.iter().map(|&(a, b)| b - a + 1).sum();
        let covering: Vec<(i32, i32)> = detected
            .iter()
            .filter(|s| {
                s.orientation == line.orientation
                    && s.style == line.style
                    && (s.perp_mid() - perp as f64).abs() <= perp_tol as f64
            })
            .map(|s| s.axis_span())
            .collect();
        let covering = merge_intervals(covering);
        let mut covered = 0;
        for &req in &required {
            for &cov in &covering {
                covered += overlap_len(req, cov);
            }
        }
        let ok = required_len > 0 && covered as f64 >= cover_min * required_len as f64;
        match line.style {
            LineStyle::Solid => {
                eval.solid_total += 1;
                if ok {
                    eval.solid_correct += 1;
                }
            }
            LineStyle::Dashed => {
                eval.dashed_total += 1;
                if ok {
                    eval.dashed_correct += 1;
                }
            }
        }
    }
    eval
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TextEval {
    pub iou: f64,
    pub detection: PrMetrics,
    /// Fraction of matched boxes whose recognized string is exactly right.
    pub recognition: f64,
}

pub fn text_metrics(truth: &[TextAnnotation], pred: &[TextBox], ious: &[f64]) -> Vec<TextEval> {
    let t_boxes: Vec<Rect> = truth.iter().map(|t| t.bbox).collect();
    let p_boxes: Vec<Rect> = pred.iter().map(|p| p.bbox).collect();
    ious.iter()
        .map(|&iou_min| {
            let matched = match_boxes(&t_boxes, &p_boxes, iou_min);
            let tp = matched.len();
            let exact = matched
                .iter()
                .filter(|&&(ti, pi, _)| truth[ti].text == pred[pi].text)
                .count();
            TextEval {
                iou: iou_min,
                detection: prf(tp, pred.len() - tp, truth.len() - tp),
                recognition: if tp == 0 { 0.0 } else { exact as f64 / tp as f64 },
            }
        })
        .collect()
}

/// Match edges of two graphs one-to-one: same orientation, both endpoint
/// pairs within `tol` (under the better of the two endpoint pairings).
pub fn match_edges(truth: &PidGraph, pred: &PidGraph, tol: f64) -> Vec<(usize, usize)> {
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (ti, te) in truth.edges.iter().enumerate() {
        for (pi, pe) in pred.edges.iter().enumerate() {
            if te.orientation != pe.orientation {
                continue;
            }
            let d1 = te.p1.dist(pe.p1).max(te.p2.dist(pe.p2));
            let d2 = te.p1.dist(pe.p2).max(te.p2.dist(pe.p1));
            let d = d1.min(d2);
            if d <= tol {
                pairs.push((d, ti, pi));
            }
        }
    }
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then((a.1, a.2).cmp(&(b.1, b.2))));
    let mut t_used = vec![false; truth.edges.len()];
    let mut p_used = vec![false; pred.edges.len()];
    let mut out = Vec::new();
    for (_, ti, pi) in pairs {
        if !t_used[ti] && !p_used[pi] {
            t_used[ti] = true;
            p_used[pi] = true;
            out.push((ti, pi));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct GraphEval {
    pub edge_recall: f64,
    /// Fraction of adjacent truth edge pairs that are adjacent between the
    /// corresponding predicted edges.
    pub adjacency_accuracy: f64,
    /// Fraction of matched edges carrying the truth edge's label.
    pub label_accuracy: f64,
}

pub fn graph_eval(truth: &PidGraph, pred: &PidGraph, tol: f64) -> GraphEval {
    let matched = match_edges(truth, pred, tol);
    let edge_recall = if truth.edges.is_empty() {
        1.0
    } else {
        matched.len() as f64 / truth.edges.len() as f64
    };
    let map: std::collections::HashMap<usize, usize> = matched.iter().copied().collect();
    let truth_adj = truth.adjacency();
    let pred_adj = pred.adjacency();
    let mut total_pairs = 0;
    let mut good_pairs = 0;
    for ti in 0..truth.edges.len() {
        for &tj in &truth_adj[ti] {
            if tj <= ti {
                continue;
            }
            total_pairs += 1;
            if let (Some(&pi), Some(&pj)) = (map.get(&ti), map.get(&tj)) {
                if pred_adj[pi].contains(&pj) {
                    good_pairs += 1;
                }
            }
        }
    }
    let adjacency_accuracy = if total_pairs == 0 { 1.0 } else { good_pairs as f64 / total_pairs as f64 };
    let labeled: Vec<&(usize, usize)> = matched
        .iter()
        .filter(|&&(ti, _)| !truth.edges[ti].label.is_empty())
        .collect();
    let label_hits = labeled
        .iter()
        .filter(|&&&(ti, pi)| truth.edges[ti].label == pred.edges[pi].label)
        .count();
    let label_accuracy = if labeled.is_empty() { 1.0 } else { label_hits as f64 / labeled.len() as f64 };
    GraphEval { edge_recall, adjacency_accuracy, label_accuracy }
}

/// Label accuracy of a predicted graph directly against annotation lines:
/// every predicted edge lying on a labeled truth line must carry its label.
pub fn edge_label_accuracy(pred: &PidGraph, truth: &[LineAnnotation], perp_tol: i32) -> f64 {
    let mut total = 0;
    let mut good = 0;
    for e in &pred.edges {
        let (axis0, axis1, perp) = match e.orientation {
            Orientation::Horizontal => (e.p1.x.min(e.p2.x), e.p1.x.max(e.p2.x), (e.p1.y + e.p2.y) / 2),
            Orientation::Vertical => (e.p1.y.min(e.p2.y), e.p1.y.max(e.p2.y), (e.p1.x + e.p2.x) / 2),
        };
        let host = truth.iter().find(|l| {
            if l.orientation != e.orientation || l.label.is_empty() {
                return false;
            }
            let (t0, t1, tp) = match l.orientation {
                Orientation::Horizontal => (l.p1.x.min(l.p2.x), l.p1.x.max(l.p2.x), l.p1.y),
                Orientation::Vertical => (l.p1.y.min(l.p2.y), l.p1.y.max(l.p2.y), l.p1.x),
            };
            (tp - perp).abs() <= perp_tol && axis0 >= t0 - perp_tol && axis1 <= t1 + perp_tol
        });
        if let Some(l) = host {
            total += 1;
            if e.label == l.label {
                good += 1;
            }
        }
    }
    if total == 0 { 1.0 } else { good as f64 / total as f64 }
}
