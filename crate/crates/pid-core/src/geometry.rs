//! Points, rectangles, convex hulls and small geometric helpers shared by
//! the detection and graph stages.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Point {
    pub x: i32,
    pub y: i32,
}

impl Point {
    pub fn new(x: i32, y: i32) -> Self {
        Point { x, y }
    }

    pub fn dist(self, other: Point) -> f64 {
        let dx = (self.x - other.x) as f64;
        let dy = (self.y - other.y) as f64;
        (dx * dx + dy * dy).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Horizontal,
    Vertical,
}

impl Orientation {
    /// Coordinate along the orientation axis.
    pub fn axis(self, p: Point) -> i32 {
        match self {
            Orientation::Horizontal => p.x,
            Orientation::Vertical => p.y,
        }
    }

    /// Coordinate perpendicular to the orientation axis.
    pub fn perp(self, p: Point) -> i32 {
        match self {
            Orientation::Horizontal => p.y,
            Orientation::Vertical => p.x,
        }
    }

    pub fn other(self) -> Orientation {
        match self {
            Orientation::Horizontal => Orientation::Vertical,
            Orientation::Vertical => Orientation::Horizontal,
        }
    }
}

/// Axis-aligned rectangle, `w`/`h` in pixels (>= 1 for non-degenerate boxes).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rect {
    pub x: i32,
    pub y: i32,
    pub w: i32,
    pub h: i32,
}

impl Rect {
    pub fn new(x: i32, y: i32, w: i32, h: i32) -> Self {
        Rect { x, y, w, h }
    }

    pub fn right(&self) -> i32 {
        self.x + self.w
    }

    pub fn bottom(&self) -> i32 {
        self.y + self.h
    }

    pub fn area(&self) -> i64 {
        self.w.max(0) as i64 * self.h.max(0) as i64
    }

    pub fn center(&self) -> Point {
        Point::new(self.x + self.w / 2, self.y + self.h / 2)
    }

    pub fn centerf(&self) -> (f64, f64) {
        (
            self.x as f64 + self.w as f64 / 2.0,
            self.y as f64 + self.h as f64 / 2.0,
        )
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.x && p.x < self.right() && p.y >= self.y && p.y < self.bottom()
    }

    pub fn intersection_area(&self, other: &Rect) -> i64 {
        let w = self.right().min(other.right()) - self.x.max(other.x);
        let h = self.bottom().min(other.bottom()) - self.y.max(other.y);
        if w <= 0 || h <= 0 {
            0
        } else {
            w as i64 * h as i64
        }
    }

    pub fn iou(&self, other: &Rect) -> f64 {
        let inter = self.intersection_area(other);
        let union = self.area() + other.area() - inter;
        if union <= 0 {
            0.0
        } else {
            inter as f64 / union as f64
        }
    }

    pub fn union(&self, other: &Rect) -> Rect {
        let x = self.x.min(other.x);
        let y = self.y.min(other.y);
        let r = self.right().max(other.right());
        let b = self.bottom().max(other.bottom());
        Rect::new(x, y, r - x, b - y)
    }

    pub fn inflate(&self, d: i32) -> Rect {
        Rect::new(self.x - d, self.y - d, self.w + 2 * d, self.h + 2 * d)
    }

    pub fn clamp_to(&self, w: u32, h: u32) -> Rect {
        let x0 = self.x.clamp(0, w as i32);
        let y0 = self.y.clamp(0, h as i32);
        let x1 = self.right().clamp(0, w as i32);
        let y1 = self.bottom().clamp(0, h as i32);
        Rect::new(x0, y0, x1 - x0, y1 - y0)
    }
}

fn cross(o: Point, a: Point, b: Point) -> i64 {
    (a.x - o.x) as i64 * (b.y - o.y) as i64 - (a.y - o.y) as i64 * (b.x - o.x) as i64
}

/// Convex hull via monotone chain, vertices in counter-clockwise order
/// (positive-cross convention). Collinear interior points are dropped, so a
/// degenerate collinear input yields exactly the two extreme points and a
/// single point yields itself.
pub fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut pts: Vec<Point> = points.to_vec();
    pts.sort_by_key(|p| (p.x, p.y));
    pts.dedup();
    if pts.len() <= 2 {
        return pts;
    }
    let mut lower: Vec<Point> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Point> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    if lower.is_empty() {
        // fully collinear input: keep the two extremes
        return vec![pts[0], pts[pts.len() - 1]];
    }
    lower
}

/// Hull points with minimum and maximum projection along `orientation`.
/// Ties are broken by the smaller perpendicular coordinate.
pub fn extreme_points_along(hull: &[Point], orientation: Orientation) -> (Point, Point) {
    assert!(!hull.is_empty());
    let key = |p: &Point| (orientation.axis(*p), orientation.perp(*p));
    let lo = *hull.iter().min_by_key(|p| key(p)).unwrap();
    let hi = *hull
        .iter()
        .max_by_key(|p| (orientation.axis(**p), -orientation.perp(**p)))
        .unwrap();
    (lo, hi)
}

/// Euclidean distance from a point to a segment.
pub fn point_segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (px, py) = p;
    let (ax, ay) = a;
    let (bx, by) = b;
    let dx = bx - ax;
    let dy = by - ay;
    let len2 = dx * dx + dy * dy;
    if len2 == 0.0 {
        return ((px - ax).powi(2) + (py - ay).powi(2)).sqrt();
    }
    let t = (((px - ax) * dx + (py - ay) * dy) / len2).clamp(0.0, 1.0);
    let cx = ax + t * dx;
    let cy = ay + t * dy;
    ((px - cx).powi(2) + (py - cy).powi(2)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hull_triangle_is_itself() {
        let pts = [Point::new(0, 0), Point::new(10, 0), Point::new(5, 8)];
        let hull = convex_hull(&pts);
        assert_eq!(hull.len(), 3);
        for p in &pts {
            assert!(hull.contains(p));
        }
    }

    #[test]
    fn hull_excludes_interior_point() {
        let pts = [
            Point::new(0, 0),
            Point::new(10, 0),
            Point::new(10, 10),
            Point::new(0, 10),
            Point::new(5, 5),
        ];
        let hull = convex_hull(&pts);
        assert_eq!(hull.len(), 4);
        assert!(!hull.contains(&Point::new(5, 5)));
    }

    #[test]
    fn hull_collinear_returns_extremes() {
        let pts: Vec<Point> = (0..10).map(|i| Point::new(i, 2 * i)).collect();
        let hull = convex_hull(&pts);
        assert_eq!(hull.len(), 2);
        assert!(hull.contains(&Point::new(0, 0)));
        assert!(hull.contains(&Point::new(9, 18)));
    }

    #[test]
    fn hull_single_point() {
        assert_eq!(convex_hull(&[Point::new(3, 4)]), vec![Point::new(3, 4)]);
    }

    #[test]
    fn extremes_on_horizontal_run() {
        let pts: Vec<Point> = (10..110).map(|x| Point::new(x, 50)).collect();
        let hull = convex_hull(&pts);
        let (a, b) = extreme_points_along(&hull, Orientation::Horizontal);
        assert_eq!(a, Point::new(10, 50));
        assert_eq!(b, Point::new(109, 50));
    }

    #[test]
    fn extremes_single_point_twice() {
        let p = Point::new(7, 9);
        let (a, b) = extreme_points_along(&[p], Orientation::Horizontal);
        assert_eq!((a, b), (p, p));
    }

    #[test]
    fn extremes_tie_break_smaller_perp() {
        // thick 3-px-tall run, x in [0,99]
        let mut pts = Vec::new();
        for y in 0..3 {
            for x in 0..100 {
                pts.push(Point::new(x, y));
            }
        }
        let hull = convex_hull(&pts);
        let (a, b) = extreme_points_along(&hull, Orientation::Horizontal);
        assert_eq!(a, Point::new(0, 0));
        assert_eq!(b, Point::new(99, 0));
    }

    #[test]
    fn iou_arithmetic() {
        let a = Rect::new(0, 0, 100, 20);
        let b = Rect::new(50, 0, 100, 20);
        let iou = a.iou(&b);
        assert!((iou - 50.0 * 20.0 / (150.0 * 20.0)).abs() < 1e-12);
    }
}
