//! Line extraction: solid lines via line-kernel opening + convex-hull
//! endpoints, dashed-line chaining, and a probabilistic Hough baseline used
//! for comparison overlays and robustness checks.

use serde::{Deserialize, Serialize};

use crate::dbscan::dbscan;
use crate::geometry::{convex_hull, extreme_points_along, Orientation, Point};
use crate::morph::{contours, open, LineKernel};
use crate::raster::BinaryRaster;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LineStyle {
    Solid,
    Dashed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineSegment {
    pub p1: Point,
    pub p2: Point,
    pub orientation: Orientation,
    pub style: LineStyle,
}

impl LineSegment {
    pub fn new(p1: Point, p2: Point, orientation: Orientation, style: LineStyle) -> Self {
        LineSegment {
            p1,
            p2,
            orientation,
            style,
        }
    }

    pub fn length(&self) -> f64 {
        self.p1.dist(self.p2)
    }

    pub fn midpoint(&self) -> Point {
        Point::new((self.p1.x + self.p2.x) / 2, (self.p1.y + self.p2.y) / 2)
    }

    /// Interval along the orientation axis, low..=high.
    pub fn axis_span(&self) -> (i32, i32) {
        let a = self.orientation.axis(self.p1);
        let b = self.orientation.axis(self.p2);
        (a.min(b), a.max(b))
    }

    pub fn perp_mid(&self) -> f64 {
        (self.orientation.perp(self.p1) + self.orientation.perp(self.p2)) as f64 / 2.0
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct LineDetectConfig {
    /// Kernel length as a fraction of the max image dimension.
    pub kernel_fraction: f64,
    pub min_kernel: u32,
    /// Split a dash chain when this many consecutive expected dashes are missing.
    pub dash_jump_limit: u32,
    /// DBSCAN radius for merging nearby dash chains.
    pub dash_merge_eps: f64,
    /// DBSCAN min-neighbors for chain merging.
    pub dash_merge_min_pts: usize,
}

impl Default for LineDetectConfig {
    fn default() -> Self {
        LineDetectConfig {
            kernel_fraction: 0.001,
            min_kernel: 5,
            dash_jump_limit: 3,
            dash_merge_eps: 50.0,
            dash_merge_min_pts: 2,
        }
    }
}

impl LineDetectConfig {
    pub fn kernel_len(&self, width: u32, height: u32) -> u32 {
        let frac = (self.kernel_fraction * width.max(height) as f64).round() as u32;
        frac.max(self.min_kernel)
    }
}

/// Solid detections together with the opened rasters per orientation; the
/// opened rasters feed rectangle vertex sampling downstream.
#[derive(Debug, Clone)]
pub struct SolidLines {
    pub segments: Vec<LineSegment>,
    pub kernel_len: u32,
    pub opened_h: BinaryRaster,
    pub opened_v: BinaryRaster,
}

/// Per orientation: open with the line kernel, split into components, take
/// convex-hull extreme points along the orientation as segment endpoints.
pub fn detect_solid_lines(a: &BinaryRaster, cfg: &LineDetectConfig) -> SolidLines {
    let k = cfg.kernel_len(a.width, a.height);
    let opened_h = open(a, LineKernel::new(Orientation::Horizontal, k));
    let opened_v = open(a, LineKernel::new(Orientation::Vertical, k));
    let mut segments = Vec::new();
    for (orient, opened) in [
        (Orientation::Horizontal, &opened_h),
        (Orientation::Vertical, &opened_v),
    ] {
        for comp in contours(opened) {
            let hull = convex_hull(&comp);
            let (p1, p2) = extreme_points_along(&hull, orient);
            let seg = LineSegment::new(p1, p2, orient, LineStyle::Solid);
            if seg.length() >= k as f64 {
                segments.push(seg);
            }
        }
    }
    sort_segments(&mut segments);
    SolidLines {
        segments,
        kernel_len: k,
        opened_h,
        opened_v,
    }
}

pub fn sort_segments(segments: &mut [LineSegment]) {
    segments.sort_by_key(|s| {
        (
            matches!(s.orientation, Orientation::Vertical),
            s.p1.y,
            s.p1.x,
            s.p2.y,
            s.p2.x,
        )
    });
}

#[derive(Debug, Clone)]
pub struct DashedLines {
    pub dashed: Vec<LineSegment>,
    /// Indices into the input slice of the short segments consumed by chains.
    pub consumed: Vec<usize>,
}

/// Chain short collinear solid detections into dashed lines.
///
/// Candidates are solid segments shorter than 3x the kernel length. Length
/// and gap thresholds come from the (length, gap) cluster with the least
/// mean; chains split where three or more consecutive dashes are missing
/// and nearby chains on the same axis merge via DBSCAN.
pub fn detect_dashed_lines(
    segments: &[LineSegment],
    kernel_len: u32,
    cfg: &LineDetectConfig,
) -> DashedLines {
    let max_dash = 3.0 * kernel_len as f64;
    let cand: Vec<usize> = (0..segments.len())
        .filter(|&i| segments[i].style == LineStyle::Solid && segments[i].length() < max_dash)
        .collect();
    if cand.len() < 2 {
        return DashedLines {
            dashed: Vec::new(),
            consumed: Vec::new(),
        };
    }

    // group candidates into collinear rows (same orientation, perpendicular
    // offset within 2 px), sorted along the axis
    let mut rows: Vec<(Orientation, f64, Vec<usize>)> = Vec::new();
    let mut sorted = cand.clone();
    sorted.sort_by(|&a, &b| {
        let sa = &segments[a];
        let sb = &segments[b];
        (matches!(sa.orientation, Orientation::Vertical), sa.perp_mid())
            .partial_cmp(&(matches!(sb.orientation, Orientation::Vertical), sb.perp_mid()))
            .unwrap()
    });
    for i in sorted {
        let s = &segments[i];
        match rows.last_mut() {
            Some((o, perp, members))
                if *o == s.orientation && (s.perp_mid() - *perp).abs() <= 2.0 =>
            {
                members.push(i);
            }
            _ => rows.push((s.orientation, s.perp_mid(), vec![i])),
        }
    }
    for (_, _, members) in rows.iter_mut() {
        members.sort_by_key(|&i| segments[i].axis_span().0);
    }

    // collect (length, gap) samples between consecutive dashes in a row
    let mut samples: Vec<(f64, f64)> = Vec::new();
    for (_, _, members) in &rows {
        for w in members.windows(2) {
            let a = segments[w[0]].axis_span();
            let b = segments[w[1]].axis_span();
            let gap = (b.0 - a.1) as f64;
            if gap > 0.0 && gap <= 6.0 * kernel_len as f64 {
                samples.push((segments[w[0]].length(), gap));
            }
        }
    }
    if samples.is_empty() {
        return DashedLines {
            dashed: Vec::new(),
            consumed: Vec::new(),
        };
    }
    // thresholds = mean of the cluster with the least mean length+gap
    let labels = dbscan(&samples, (kernel_len as f64).max(4.0), 2);
    let mut best: Option<(f64, f64, f64)> = None; // (mean sum, len_thr, gap_thr)
    let nclusters = labels.iter().copied().max().unwrap_or(-1) + 1;
    for c in 0..nclusters {
        let members: Vec<&(f64, f64)> = samples
            .iter()
            .zip(&labels)
            .filter(|(_, &l)| l == c)
            .map(|(s, _)| s)
            .collect();
        let len_m = members.iter().map(|s| s.0).sum::<f64>() / members.len() as f64;
        let gap_m = members.iter().map(|s| s.1).sum::<f64>() / members.len() as f64;
        if best.map_or(true, |(sum, _, _)| len_m + gap_m < sum) {
            best = Some((len_m + gap_m, len_m, gap_m));
        }
    }
    let (_, len_thr, gap_thr) = best.unwrap_or_else(|| {
        let len_m = samples.iter().map(|s| s.0).sum::<f64>() / samples.len() as f64;
        let gap_m = samples.iter().map(|s| s.1).sum::<f64>() / samples.len() as f64;
        (len_m + gap_m, len_m, gap_m)
    });
    let period = len_thr + gap_thr;

    // chain along each row; record jump-split boundaries so the merge step
    // does not undo them
    let mut dashed = Vec::new();
    let mut consumed = Vec::new();
    for (orient, _, members) in &rows {
        let mut chains: Vec<Vec<usize>> = Vec::new();
        let mut jump_after: Vec<bool> = Vec::new();
        for &i in members {
            let s = &segments[i];
            if s.length() > 2.0 * len_thr + 2.0 {
                chains.push(Vec::new());
                jump_after.push(false);
                continue;
            }
            let extend = match chains.last().filter(|c| !c.is_empty()) {
                Some(chain) => {
                    let prev = segments[*chain.last().unwrap()].axis_span().1;
                    let gap = (s.axis_span().0 - prev) as f64;
                    let missing = ((gap - gap_thr) / period).round().max(0.0);
                    let expected = gap_thr + missing * period;
                    let tol = 0.5 * gap_thr * (missing + 1.0) + 2.0;
                    if gap <= 0.0 || (gap - expected).abs() > tol {
                        None
                    } else if missing >= cfg.dash_jump_limit as f64 {
                        Some(false) // jump split
                    } else {
                        Some(true)
                    }
                }
                None => None,
            };
            match extend {
                Some(true) => chains.last_mut().unwrap().push(i),
                Some(false) => {
                    *jump_after.last_mut().unwrap() = true;
                    chains.push(vec![i]);
                    jump_after.push(false);
                }
                None => {
                    chains.push(vec![i]);
                    jump_after.push(false);
                }
            }
        }
        let chains: Vec<(Vec<usize>, bool)> = chains
            .into_iter()
            .zip(jump_after)
            .filter(|(c, _)| c.len() >= 2)
            .collect();
        if chains.is_empty() {
            continue;
        }

        // merge adjacent chains on the same axis via DBSCAN over their
        // facing endpoints, except across a jump boundary
        let mut merged: Vec<Vec<usize>> = Vec::new();
        for (idx, (chain, _)) in chains.iter().enumerate() {
            let mut extended = false;
            if idx > 0 && !chains[idx - 1].1 {
                let prev_end = segments[*chains[idx - 1].0.last().unwrap()].axis_span().1;
                let cur_start = segments[chain[0]].axis_span().0;
                let pts = [(prev_end as f64, 0.0), (cur_start as f64, 0.0)];
                let lbl = dbscan(&pts, cfg.dash_merge_eps, cfg.dash_merge_min_pts);
                if lbl[0] == lbl[1] && lbl[0] >= 0 {
                    merged.last_mut().unwrap().extend(chain.iter().copied());
                    extended = true;
                }
            }
            if !extended {
                merged.push(chain.clone());
            }
        }

        for chain in merged {
            let mut pts = Vec::new();
            for &i in &chain {
                pts.push(segments[i].p1);
                pts.push(segments[i].p2);
            }
            let hull = convex_hull(&pts);
            let (p1, p2) = extreme_points_along(&hull, *orient);
            let perp = (chain.iter().map(|&i| segments[i].perp_mid()).sum::<f64>()
                / chain.len() as f64)
                .round() as i32;
            let (p1, p2) = match orient {
                Orientation::Horizontal => (Point::new(p1.x, perp), Point::new(p2.x, perp)),
                Orientation::Vertical => (Point::new(perp, p1.y), Point::new(perp, p2.y)),
            };
            dashed.push(LineSegment::new(p1, p2, *orient, LineStyle::Dashed));
            consumed.extend(chain);
        }
    }
    consumed.sort_unstable();
    consumed.dedup();
    sort_segments(&mut dashed);
    DashedLines { dashed, consumed }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct HoughParams {
    /// Minimum accumulator votes for a line.
    pub vote_min: u32,
    /// Degrees around 0 and 90 to scan.
    pub theta_window: i32,
    /// Max foreground gap bridged within one segment.
    pub max_gap: u32,
    pub min_len: u32,
}

impl Default for HoughParams {
    fn default() -> Self {
        HoughParams {
            vote_min: 30,
            theta_window: 2,
            max_gap: 3,
            min_len: 20,
        }
    }
}

/// Standard Hough segment baseline restricted to near-axis angles.
/// Kept deliberately simple; only used for comparisons.
pub fn detect_lines_hough(a: &BinaryRaster, params: &HoughParams) -> Vec<LineSegment> {
    let w = a.width as i32;
    let h = a.height as i32;
    let mut thetas: Vec<f64> = Vec::new();
    for d in -params.theta_window..=params.theta_window {
        thetas.push((d as f64).to_radians()); // near-vertical lines
        thetas.push(((90 + d) as f64).to_radians());
    }
    let diag = ((w * w + h * h) as f64).sqrt().ceil() as i32;
    let nrho = (2 * diag + 1) as usize;
    let mut acc = vec![0u32; thetas.len() * nrho];
    for y in 0..h {
        for x in 0..w {
            if !a.get(x as u32, y as u32) {
                continue;
            }
            for (ti, &theta) in thetas.iter().enumerate() {
                let rho = (x as f64 * theta.cos() + y as f64 * theta.sin()).round() as i32;
                acc[ti * nrho + (rho + diag) as usize] += 1;
            }
        }
    }
    let mut peaks: Vec<(u32, usize, i32)> = Vec::new();
    for ti in 0..thetas.len() {
        for r in 0..nrho {
            let v = acc[ti * nrho + r];
            if v >= params.vote_min {
                // local max in rho within +-2
                let lo = r.saturating_sub(2);
                let hi = (r + 2).min(nrho - 1);
                if (lo..=hi).all(|rr| acc[ti * nrho + rr] <= v)
                    && (lo..r).all(|rr| acc[ti * nrho + rr] < v)
                {
                    peaks.push((v, ti, r as i32 - diag));
                }
            }
        }
    }
    peaks.sort_by_key(|&(v, ti, r)| (std::cmp::Reverse(v), ti, r));

    let mut used = BinaryRaster::new(a.width, a.height);
    let mut out = Vec::new();
    for &(_, ti, rho) in &peaks {
        let theta = thetas[ti];
        let near_vertical = theta.cos().abs() > 0.5;
        // walk the line through the image, collecting foreground runs
        let steps = if near_vertical { h } else { w };
        let mut run: Vec<Point> = Vec::new();
        let mut gap = 0u32;
        let flush = |run: &mut Vec<Point>, out: &mut Vec<LineSegment>| {
            if run.len() as u32 >= params.min_len {
                let p1 = run[0];
                let p2 = *run.last().unwrap();
                let orient = if near_vertical {
                    Orientation::Vertical
                } else {
                    Orientation::Horizontal
                };
                out.push(LineSegment::new(p1, p2, orient, LineStyle::Solid));
            }
            run.clear();
        };
        for s in 0..steps {
            let (x, y) = if near_vertical {
                let y = s;
                let x = ((rho as f64 - y as f64 * theta.sin()) / theta.cos()).round() as i32;
                (x, y)
            } else {
                let x = s;
                let y = ((rho as f64 - x as f64 * theta.cos()) / theta.sin()).round() as i32;
                (x, y)
            };
            let on = x >= 0
                && y >= 0
                && x < w
                && y < h
                && a.get(x as u32, y as u32)
                && !used.get(x as u32, y as u32);
            if on {
                used.set(x as u32, y as u32, true);
                run.push(Point::new(x, y));
                gap = 0;
            } else if !run.is_empty() {
                gap += 1;
                if gap > params.max_gap {
                    flush(&mut run, &mut out);
                    gap = 0;
                }
            }
        }
        flush(&mut run, &mut out);
    }
    sort_segments(&mut out);
    out
}
