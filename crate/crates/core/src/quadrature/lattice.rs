//! A global Simpson lattice shared by all test functions.
//!
//! The domain is cut into a tensor partition along every breakpoint (piece
//! corners, subdomain corners and coefficient discontinuities). Each cell
//! carries its own uniform node grid with an even interval count, so any
//! test-function support box can be snapped to whole Simpson panels of the
//! cells it meets. Because all tests share the nodes, assembling the weak
//! system becomes a pair of dense matrix products.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Domain, PartitionLayout, Point, GEOM_TOL};

/// Inward shift of nodes on cell sides, relative to the node spacing, so that
/// piecewise data is always sampled from inside the cell.
const NUDGE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub lo: Point,
    pub hi: Point,
    /// Interval counts per axis (even).
    pub n: [usize; 2],
    pub owner: usize,
    /// Which sides lie on ∂Ω: bottom, right, top, left.
    pub boundary: [bool; 4],
}

/// An inclusive node range `start..=end` with an even, positive length.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SnappedRange {
    pub start: usize,
    pub end: usize,
}

impl SnappedRange {
    /// Composite Simpson weight of node `k` (absolute index) for spacing `h`.
    pub fn weight(&self, k: usize, h: f64) -> f64 {
        let local = k - self.start;
        let c = if local == 0 || k == self.end {
            1.0
        } else if local % 2 == 1 {
            4.0
        } else {
            2.0
        };
        c * h / 3.0
    }

    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

impl Cell {
    pub fn h(&self, axis: usize) -> f64 {
        (self.hi[axis] - self.lo[axis]) / self.n[axis] as f64
    }

    pub fn npoints(&self) -> usize {
        (self.n[0] + 1) * (self.n[1] + 1)
    }

    /// Node coordinate `k` along `axis`, nudged inward on the cell sides.
    pub fn coord(&self, axis: usize, k: usize) -> f64 {
        let h = self.h(axis);
        if k == 0 {
            self.lo[axis] + NUDGE * h
        } else if k == self.n[axis] {
            self.hi[axis] - NUDGE * h
        } else {
            self.lo[axis] + k as f64 * h
        }
    }

    pub fn node(&self, i: usize, j: usize) -> Point {
        [self.coord(0, i), self.coord(1, j)]
    }

    /// Snaps `[a, b] ∩ [lo, hi]` outward to whole Simpson panels.
    pub fn snap(&self, axis: usize, a: f64, b: f64) -> Option<SnappedRange> {
        let lo = self.lo[axis];
        let a = a.max(lo);
        let b = b.min(self.hi[axis]);
        if b - a <= GEOM_TOL {
            return None;
        }
        let h = self.h(axis);
        let n = self.n[axis];
        let mut start = (((a - lo) / h) + 1e-9).floor().max(0.0) as usize;
        let mut end = ((((b - lo) / h) - 1e-9).ceil() as usize).min(n);
        start = start.min(n);
        if end <= start {
            end = (start + 1).min(n);
            start = end - 1;
        }
        if (end - start) % 2 == 1 {
            if end < n {
                end += 1;
            } else {
                start -= 1;
            }
        }
        Some(SnappedRange { start, end })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    cells: Vec<Cell>,
}

fn sorted_breaks(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    v
}

/// Even interval count with spacing at most `target`.
fn even_count(len: f64, target: f64) -> usize {
    let n = (len / target - 1e-9).ceil().max(1.0) as usize;
    n + n % 2
}

impl Lattice {
    /// `extra_x` / `extra_y` are lines across which the integrand may jump.
    pub fn new(
        domain: &Domain,
        layout: &PartitionLayout,
        extra_x: &[f64],
        extra_y: &[f64],
        target_h: f64,
    ) -> Result<Self> {
        if !(target_h.is_finite() && target_h > 0.0) {
            return Err(Error::invalid("lattice spacing must be positive"));
        }
        let bb = domain.bounding_box();
        let inside = |v: f64, axis: usize| v > bb.lo[axis] + 1e-12 && v < bb.hi[axis] - 1e-12;
        let mut xs = vec![bb.lo[0], bb.hi[0]];
        let mut ys = vec![bb.lo[1], bb.hi[1]];
        let all_pieces = domain
            .pieces()
            .into_iter()
            .chain(layout.subdomains().iter().flat_map(Domain::pieces));
        for r in all_pieces {
            xs.extend([r.lo[0], r.hi[0]].into_iter().filter(|&v| inside(v, 0)));
            ys.extend([r.lo[1], r.hi[1]].into_iter().filter(|&v| inside(v, 1)));
        }
        xs.extend(extra_x.iter().copied().filter(|&v| inside(v, 0)));
        ys.extend(extra_y.iter().copied().filter(|&v| inside(v, 1)));
        let xs = sorted_breaks(xs);
        let ys = sorted_breaks(ys);

        let edges = domain.edges();
        let normals = [[0.0, -1.0], [1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]];
        let mut cells = Vec::new();
        for j in 0..ys.len() - 1 {
            for i in 0..xs.len() - 1 {
                let lo = [xs[i], ys[j]];
                let hi = [xs[i + 1], ys[j + 1]];
                let centre = [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])];
                if !domain.contains(centre) {
                    continue;
                }
                let owner = (0..layout.len())
                    .find(|&l| layout.subdomains()[l].contains(centre))
                    .ok_or_else(|| Error::geometry(format!("no subdomain owns {centre:?}")))?;
                let mids = [
                    [centre[0], lo[1]],
                    [hi[0], centre[1]],
                    [centre[0], hi[1]],
                    [lo[0], centre[1]],
                ];
                let mut boundary = [false; 4];
                for s in 0..4 {
                    boundary[s] = edges.iter().any(|e| e.normal == normals[s] && e.contains(mids[s]));
                }
                let n = [even_count(hi[0] - lo[0], target_h), even_count(hi[1] - lo[1], target_h)];
                cells.push(Cell { lo, hi, n, owner, boundary });
            }
        }
        Ok(Lattice { cells })
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn npoints(&self) -> usize {
        self.cells.iter().map(Cell::npoints).sum()
    }
}
