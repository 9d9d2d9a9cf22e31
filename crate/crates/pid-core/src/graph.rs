//! Pipeline connectivity: detected line segments become graph edges, their
//! endpoints (after T-junction splitting and proximity clustering) become
//! vertices, and pipe labels are attached to edges then propagated across
//! unlabeled stretches of the network.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::dbscan::dbscan;
use crate::geometry::{point_segment_distance, Orientation, Point, Rect};
use crate::lines::{LineSegment, LineStyle};
use crate::text::TextBox;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LabelSource {
    None,
    Assigned,
    Propagated,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphEdge {
    pub v1: usize,
    pub v2: usize,
    pub p1: Point,
    pub p2: Point,
    pub orientation: Orientation,
    pub style: LineStyle,
    pub label: String,
    pub label_source: LabelSource,
}

impl GraphEdge {
    pub fn midpoint(&self) -> (f64, f64) {
        (
            (self.p1.x + self.p2.x) as f64 / 2.0,
            (self.p1.y + self.p2.y) as f64 / 2.0,
        )
    }

    pub fn length(&self) -> f64 {
        self.p1.dist(self.p2)
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct PidGraph {
    pub vertices: Vec<Point>,
    pub edges: Vec<GraphEdge>,
}

impl PidGraph {
    pub fn adjacent_edges(&self, edge_id: usize) -> Vec<usize> {
        let e = &self.edges[edge_id];
        let mut out: Vec<usize> = self
            .edges
            .iter()
            .enumerate()
            .filter(|(i, o)| {
                *i != edge_id && (o.v1 == e.v1 || o.v1 == e.v2 || o.v2 == e.v1 || o.v2 == e.v2)
            })
            .map(|(i, _)| i)
            .collect();
        out.sort_unstable();
        out
    }

    pub fn degree(&self, vertex: usize) -> usize {
        self.edges
            .iter()
            .filter(|e| e.v1 == vertex || e.v2 == vertex)
            .count()
    }

    /// Deterministic adjacency listing: for every edge, its sorted neighbors.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        (0..self.edges.len()).map(|i| self.adjacent_edges(i)).collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct GraphConfig {
    /// Minimum segment length kept; 0 selects 2x the morphology kernel.
    pub alpha: f64,
    /// Junction tolerance as a fraction of alpha.
    pub eta: f64,
    /// Ceiling on the vertex clustering radius.
    pub cluster_eps: f64,
    pub cluster_min_pts: usize,
    /// Maximum distance at which a label can attach to an edge.
    pub label_max_dist: f64,
}

impl Default for GraphConfig {
    fn default() -> Self {
        GraphConfig {
            alpha: 0.0,
            eta: 0.5,
            cluster_eps: 50.0,
            cluster_min_pts: 2,
            label_max_dist: 100.0,
        }
    }
}

impl GraphConfig {
    pub fn effective_alpha(&self, kernel_len: u32) -> f64 {
        if self.alpha > 0.0 {
            self.alpha
        } else {
            2.0 * kernel_len as f64
        }
    }
}

/// Pre-graph cleanup: drop segments shorter than alpha, drop segments whose
/// midpoint sits inside a symbol box, and clip segments that run into one.
pub fn filter_lines(segments: &[LineSegment], symbol_boxes: &[Rect], alpha: f64) -> Vec<LineSegment> {
    let mut out = Vec::new();
    'seg: for seg in segments {
        let mut s = *seg;
        let m = s.midpoint();
        for b in symbol_boxes {
            if b.contains(m) {
                continue 'seg;
            }
        }
        for b in symbol_boxes {
            s = truncate_against(&s, b);
        }
        if s.length() >= alpha {
            out.push(s);
        }
    }
    out
}

fn truncate_against(seg: &LineSegment, b: &Rect) -> LineSegment {
    let mut s = *seg;
    match s.orientation {
        Orientation::Horizontal => {
            let y = s.p1.y;
            if y < b.y || y >= b.bottom() {
                return s;
            }
            let (mut x0, mut x1) = (s.p1.x.min(s.p2.x), s.p1.x.max(s.p2.x));
            if x0 < b.x && x1 >= b.x && x1 < b.right() {
                x1 = b.x - 1;
            } else if x1 >= b.right() && x0 >= b.x && x0 < b.right() {
                x0 = b.right();
            }
            s.p1 = Point::new(x0, y);
            s.p2 = Point::new(x1, y);
        }
        Orientation::Vertical => {
            let x = s.p1.x;
            if x < b.x || x >= b.right() {
                return s;
            }
            let (mut y0, mut y1) = (s.p1.y.min(s.p2.y), s.p1.y.max(s.p2.y));
            if y0 < b.y && y1 >= b.y && y1 < b.bottom() {
                y1 = b.y - 1;
            } else if y1 >= b.bottom() && y0 >= b.y && y0 < b.bottom() {
                y0 = b.bottom();
            }
            s.p1 = Point::new(x, y0);
            s.p2 = Point::new(x, y1);
        }
    }
    s
}

/// Build the connectivity graph: split edges where another segment's endpoint
/// touches their interior (T junctions), then cluster nearby endpoints into
/// shared vertices.
pub fn build_graph(segments: &[LineSegment], cfg: &GraphConfig, kernel_len: u32) -> PidGraph {
    let alpha = cfg.effective_alpha(kernel_len);
    let tol = cfg.eta * alpha;

    // endpoints of every segment are junction candidates
    let endpoints: Vec<Point> = segments.iter().flat_map(|s| [s.p1, s.p2]).collect();

    // split each segment at candidate points on its interior: endpoints of
    // other segments (T junctions) and perpendicular crossings
    let mut pieces: Vec<LineSegment> = Vec::new();
    for seg in segments {
        let mut cuts: Vec<i32> = Vec::new();
        let (a0, a1) = seg.axis_span();
        for p in &endpoints {
            let (axis, perp) = match seg.orientation {
                Orientation::Horizontal => (p.x, (p.y - seg.p1.y).abs()),
                Orientation::Vertical => (p.y, (p.x - seg.p1.x).abs()),
            };
            if perp as f64 <= tol && axis > a0 + 1 && axis < a1 - 1 {
                cuts.push(axis);
            }
        }
        for other in segments {
            if other.orientation == seg.orientation {
                continue;
            }
            let (o0, o1) = other.axis_span();
            let (axis, self_perp) = match seg.orientation {
                Orientation::Horizontal => (other.p1.x, seg.p1.y),
                Orientation::Vertical => (other.p1.y, seg.p1.x),
            };
            if axis > a0 + 1 && axis < a1 - 1 && self_perp >= o0 && self_perp <= o1 {
                cuts.push(axis);
            }
        }
        cuts.sort_unstable();
        cuts.dedup();
        let mut prev = a0;
        for c in cuts {
            pieces.push(sub_segment(seg, prev, c));
            prev = c;
        }
        pieces.push(sub_segment(seg, prev, a1));
    }

    // cluster endpoints into vertices
    let eps = cfg.cluster_eps.min(2.0 * tol).max(1.0);
    let pts: Vec<(f64, f64)> = pieces
        .iter()
        .flat_map(|s| [(s.p1.x as f64, s.p1.y as f64), (s.p2.x as f64, s.p2.y as f64)])
        .collect();
    let labels = dbscan(&pts, eps, cfg.cluster_min_pts);

    let mut vertices: Vec<Point> = Vec::new();
    let mut vertex_of: Vec<usize> = vec![usize::MAX; pts.len()];
    let n_clusters = labels.iter().copied().max().map(|m| (m + 1) as usize).unwrap_or(0);
    for c in 0..n_clusters {
        let members: Vec<usize> = (0..pts.len()).filter(|&i| labels[i] == c as i32).collect();
        let cx = members.iter().map(|&i| pts[i].0).sum::<f64>() / members.len() as f64;
        let cy = members.iter().map(|&i| pts[i].1).sum::<f64>() / members.len() as f64;
        let v = vertices.len();
        vertices.push(Point::new(cx.round() as i32, cy.round() as i32));
        for i in members {
            vertex_of[i] = v;
        }
    }
    for i in 0..pts.len() {
        if vertex_of[i] == usize::MAX {
            // noise endpoint: reuse an identical existing vertex if any
            let p = Point::new(pts[i].0.round() as i32, pts[i].1.round() as i32);
            let v = vertices.iter().position(|&q| q == p).unwrap_or_else(|| {
                vertices.push(p);
                vertices.len() - 1
            });
            vertex_of[i] = v;
        }
    }

    let mut edges: Vec<GraphEdge> = Vec::new();
    for (i, piece) in pieces.iter().enumerate() {
        let v1 = vertex_of[2 * i];
        let v2 = vertex_of[2 * i + 1];
        if v1 == v2 {
            continue; // collapsed stub
        }
        let dup = edges
            .iter()
            .any(|e| (e.v1, e.v2) == (v1, v2) || (e.v1, e.v2) == (v2, v1));
        if dup {
            continue;
        }
        edges.push(GraphEdge {
            v1,
            v2,
            p1: vertices[v1],
            p2: vertices[v2],
            orientation: piece.orientation,
            style: piece.style,
            label: String::new(),
            label_source: LabelSource::None,
        });
    }
    edges.sort_by_key(|e| (e.p1.y.min(e.p2.y), e.p1.x.min(e.p2.x), e.p1.y.max(e.p2.y), e.p1.x.max(e.p2.x)));
    PidGraph { vertices, edges }
}

fn sub_segment(seg: &LineSegment, a0: i32, a1: i32) -> LineSegment {
    let mut s = *seg;
    match seg.orientation {
        Orientation::Horizontal => {
            s.p1 = Point::new(a0, seg.p1.y);
            s.p2 = Point::new(a1, seg.p1.y);
        }
        Orientation::Vertical => {
            s.p1 = Point::new(seg.p1.x, a0);
            s.p2 = Point::new(seg.p1.x, a1);
        }
    }
    s
}

/// Greedy assignment of matching text boxes to edges by ascending distance;
/// each label and each edge is consumed at most once.
pub fn assign_edge_labels(graph: &mut PidGraph, texts: &[TextBox], pipe_label: &regex::Regex, cfg: &GraphConfig) {
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (ti, t) in texts.iter().enumerate() {
        if !pipe_label.is_match(&t.text) {
            continue;
        }
        let c = t.bbox.centerf();
        for (ei, e) in graph.edges.iter().enumerate() {
            let d = point_segment_distance(
                c,
                (e.p1.x as f64, e.p1.y as f64),
                (e.p2.x as f64, e.p2.y as f64),
            );
            if d <= cfg.label_max_dist {
                pairs.push((d, ti, ei));
            }
        }
    }
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then((a.1, a.2).cmp(&(b.1, b.2))));
    let mut text_used = vec![false; texts.len()];
    let mut edge_used = vec![false; graph.edges.len()];
    for (_, ti, ei) in pairs {
        if text_used[ti] || edge_used[ei] {
            continue;
        }
        text_used[ti] = true;
        edge_used[ei] = true;
        graph.edges[ei].label = texts[ti].text.clone();
        graph.edges[ei].label_source = LabelSource::Assigned;
    }
}

/// Breadth-first label propagation across shared vertices, seeded by the
/// assigned edges in left-to-right order. Edges holding their own assigned
/// label keep it and block traversal into their region.
pub fn propagate_labels(graph: &mut PidGraph) {
    let mut order: Vec<usize> = (0..graph.edges.len())
        .filter(|&i| graph.edges[i].label_source == LabelSource::Assigned)
        .collect();
    order.sort_by(|&a, &b| {
        let ma = graph.edges[a].midpoint();
        let mb = graph.edges[b].midpoint();
        ma.partial_cmp(&mb).unwrap()
    });
    let adjacency = graph.adjacency();
    let mut queue: VecDeque<usize> = order.into();
    while let Some(i) = queue.pop_front() {
        let label = graph.edges[i].label.clone();
        let mut neighbors = adjacency[i].clone();
        neighbors.sort_by_key(|&n| {
            let m = graph.edges[n].midpoint();
            (m.0.round() as i64, m.1.round() as i64)
        });
        for n in neighbors {
            if graph.edges[n].label_source == LabelSource::None {
                graph.edges[n].label = label.clone();
                graph.edges[n].label_source = LabelSource::Propagated;
                queue.push_back(n);
            }
        }
    }
}
