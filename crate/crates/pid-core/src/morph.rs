//! Morphological primitives over binary rasters with 1-px-wide line
//! structuring elements, plus connected components.
//!
//! Out-of-bounds reads are background, so erosion never invents foreground
//! at the borders. The kernel is anchored at its center; an even length `l`
//! is anchored at `l / 2`, giving offsets `-(l/2) ..= l-1-l/2`.

use crate::geometry::{Orientation, Point};
use crate::raster::BinaryRaster;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LineKernel {
    pub orientation: Orientation,
    pub length: u32,
}

impl LineKernel {
    pub fn new(orientation: Orientation, length: u32) -> Self {
        assert!(length >= 2, "kernel length must be >= 2");
        LineKernel {
            orientation,
            length,
        }
    }

    pub fn offsets(&self) -> (i32, i32) {
        let l = self.length as i32;
        (-(l / 2), l - 1 - l / 2)
    }
}

/// out(x,y) = min over kernel offsets of a(x+dx, y+dy); OOB = background.
pub fn erode(a: &BinaryRaster, b: LineKernel) -> BinaryRaster {
    filter_1d(a, b, true)
}

/// out(x,y) = max over kernel offsets of a(x+dx, y+dy); OOB = background.
pub fn dilate(a: &BinaryRaster, b: LineKernel) -> BinaryRaster {
    filter_1d(a, b, false)
}

/// Erosion followed by dilation with the same kernel.
pub fn open(a: &BinaryRaster, b: LineKernel) -> BinaryRaster {
    dilate(&erode(a, b), b)
}

fn filter_1d(a: &BinaryRaster, b: LineKernel, is_min: bool) -> BinaryRaster {
    let (lo, hi) = b.offsets();
    let win = b.length as usize;
    let mut out = BinaryRaster::new(a.width, a.height);
    match b.orientation {
        Orientation::Horizontal => {
            let w = a.width as usize;
            let mut prefix = vec![0u32; w + 1];
            for y in 0..a.height {
                let row = &a.bits[(y * a.width) as usize..((y + 1) * a.width) as usize];
                for x in 0..w {
                    prefix[x + 1] = prefix[x] + row[x] as u32;
                }
                let orow =
                    &mut out.bits[(y * a.width) as usize..((y + 1) * a.width) as usize];
                for x in 0..w as i32 {
                    let x0 = x + lo;
                    let x1 = x + hi;
                    if is_min {
                        // window must lie fully inside and be all-true
                        if x0 >= 0 && x1 < w as i32 {
                            let s = prefix[x1 as usize + 1] - prefix[x0 as usize];
                            orow[x as usize] = s as usize == win;
                        }
                    } else {
                        let cx0 = x0.max(0) as usize;
                        let cx1 = x1.min(w as i32 - 1);
                        if cx1 >= cx0 as i32 {
                            let s = prefix[cx1 as usize + 1] - prefix[cx0];
                            orow[x as usize] = s > 0;
                        }
                    }
                }
            }
        }
        Orientation::Vertical => {
            let h = a.height as usize;
            let w = a.width as usize;
            let mut prefix = vec![0u32; h + 1];
            for x in 0..w {
                for y in 0..h {
                    prefix[y + 1] = prefix[y] + a.bits[y * w + x] as u32;
                }
                for y in 0..h as i32 {
                    let y0 = y + lo;
                    let y1 = y + hi;
                    let v = if is_min {
                        y0 >= 0 && y1 < h as i32 && {
                            let s = prefix[y1 as usize + 1] - prefix[y0 as usize];
                            s as usize == win
                        }
                    } else {
                        let cy0 = y0.max(0) as usize;
                        let cy1 = y1.min(h as i32 - 1);
                        cy1 >= cy0 as i32 && prefix[cy1 as usize + 1] - prefix[cy0] > 0
                    };
                    out.bits[y as usize * w + x] = v;
                }
            }
        }
    }
    out
}

/// 8-connected foreground components; each returned set holds all pixels of
/// one component in scan order of discovery.
pub fn contours(a: &BinaryRaster) -> Vec<Vec<Point>> {
    let w = a.width as i32;
    let h = a.height as i32;
    let mut seen = vec![false; a.bits.len()];
    let mut out = Vec::new();
    let mut stack = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let idx = (y * w + x) as usize;
            if !a.bits[idx] || seen[idx] {
                continue;
            }
            let mut comp = Vec::new();
            seen[idx] = true;
            stack.push((x, y));
            while let Some((cx, cy)) = stack.pop() {
                comp.push(Point::new(cx, cy));
                for dy in -1..=1 {
                    for dx in -1..=1 {
                        if dx == 0 && dy == 0 {
                            continue;
                        }
                        let nx = cx + dx;
                        let ny = cy + dy;
                        if nx < 0 || ny < 0 || nx >= w || ny >= h {
                            continue;
                        }
                        let nidx = (ny * w + nx) as usize;
                        if a.bits[nidx] && !seen[nidx] {
                            seen[nidx] = true;
                            stack.push((nx, ny));
                        }
                    }
                }
            }
            out.push(comp);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Brute-force min/max filter oracle, independent of the prefix-sum path.
    pub fn filter_oracle(a: &BinaryRaster, b: LineKernel, is_min: bool) -> BinaryRaster {
        let (lo, hi) = b.offsets();
        let mut out = BinaryRaster::new(a.width, a.height);
        for y in 0..a.height as i32 {
            for x in 0..a.width as i32 {
                let mut acc = is_min;
                for d in lo..=hi {
                    let (sx, sy) = match b.orientation {
                        Orientation::Horizontal => (x + d, y),
                        Orientation::Vertical => (x, y + d),
                    };
                    let v = a.at(sx, sy);
                    acc = if is_min { acc && v } else { acc || v };
                }
                out.set(x as u32, y as u32, acc);
            }
        }
        out
    }

    fn run(a: &BinaryRaster, xs: std::ops::Range<u32>, y: u32) -> BinaryRaster {
        let mut r = a.clone();
        for x in xs {
            r.set(x, y, true);
        }
        r
    }

    #[test]
    fn erode_all_false_stays_false() {
        let a = BinaryRaster::new(16, 16);
        let k = LineKernel::new(Orientation::Horizontal, 5);
        assert_eq!(erode(&a, k).count(), 0);
        assert_eq!(dilate(&a, k).count(), 0);
    }

    #[test]
    fn erode_run_shorter_than_kernel_vanishes() {
        let a = run(&BinaryRaster::new(32, 8), 10..13, 4);
        let k = LineKernel::new(Orientation::Horizontal, 5);
        let e = erode(&a, k);
        assert_eq!(e.count(), 0);
        assert_eq!(e, filter_oracle(&a, k, true));
    }

    #[test]
    fn erode_run_of_ten_survives_centered() {
        let a = run(&BinaryRaster::new(32, 8), 10..20, 4);
        let k = LineKernel::new(Orientation::Horizontal, 5);
        let e = erode(&a, k);
        assert_eq!(e, filter_oracle(&a, k, true));
        assert_eq!(e.count(), 6);
        for x in 12..18 {
            assert!(e.get(x, 4));
        }
    }

    #[test]
    fn dilate_single_pixel_spreads_to_kernel() {
        let mut a = BinaryRaster::new(32, 8);
        a.set(15, 4, true);
        let k = LineKernel::new(Orientation::Horizontal, 5);
        let d = dilate(&a, k);
        assert_eq!(d, filter_oracle(&a, k, false));
        assert_eq!(d.count(), 5);
        for x in 13..18 {
            assert!(d.get(x, 4));
        }
    }

    #[test]
    fn opening_restores_long_run_exactly() {
        let a = run(&BinaryRaster::new(128, 8), 10..110, 3);
        let k = LineKernel::new(Orientation::Horizontal, 7);
        let opened = open(&a, k);
        assert_eq!(opened, a);
        let oracle = filter_oracle(&filter_oracle(&a, k, true), k, false);
        assert_eq!(opened, oracle);
    }

    #[test]
    fn morphology_matches_oracle_on_random_rasters() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for iter in 0..40 {
            let mut a = BinaryRaster::new(64, 64);
            for b in a.bits.iter_mut() {
                *b = rng.gen_bool(0.4);
            }
            for len in [2u32, 5, 9] {
                for orient in [Orientation::Horizontal, Orientation::Vertical] {
                    let k = LineKernel::new(orient, len);
                    assert_eq!(erode(&a, k), filter_oracle(&a, k, true), "iter {iter}");
                    assert_eq!(dilate(&a, k), filter_oracle(&a, k, false), "iter {iter}");
                }
            }
        }
    }

    #[test]
    fn opening_idempotent_and_antiextensive() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let mut a = BinaryRaster::new(48, 48);
            for b in a.bits.iter_mut() {
                *b = rng.gen_bool(0.5);
            }
            for orient in [Orientation::Horizontal, Orientation::Vertical] {
                let k = LineKernel::new(orient, 5);
                let o1 = open(&a, k);
                let o2 = open(&o1, k);
                assert_eq!(o1, o2);
                for (i, &bit) in o1.bits.iter().enumerate() {
                    assert!(!bit || a.bits[i], "opening must be anti-extensive");
                }
            }
        }
    }

    #[test]
    fn contours_blank_and_disjoint() {
        let a = BinaryRaster::new(16, 16);
        assert!(contours(&a).is_empty());
        let mut b = BinaryRaster::new(32, 8);
        for x in 2..7 {
            b.set(x, 2, true);
        }
        for x in 12..20 {
            b.set(x, 5, true);
        }
        let cs = contours(&b);
        assert_eq!(cs.len(), 2);
        let mut sizes: Vec<usize> = cs.iter().map(|c| c.len()).collect();
        sizes.sort();
        assert_eq!(sizes, vec![5, 8]);
    }

    #[test]
    fn contours_diagonal_chain_is_one_component() {
        let mut a = BinaryRaster::new(16, 16);
        for i in 0..10 {
            a.set(i, i, true);
        }
        assert_eq!(contours(&a).len(), 1);
    }
}
