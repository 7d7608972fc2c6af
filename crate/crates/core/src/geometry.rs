//! Computational domains built from axis-aligned rectangles.
//!
//! Every domain is stored as a list of interior-disjoint rectangles
//! ("pieces"). Boundary edges, clipping and partition bookkeeping are all
//! derived from that list, so no general polygon machinery is needed.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

pub type Point = [f64; 2];

/// Absolute tolerance for coordinate comparisons.
pub const GEOM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub lo: Point,
    pub hi: Point,
}

impl Rect {
    pub fn new(lo: Point, hi: Point) -> Result<Self> {
        if !(lo[0] < hi[0] && lo[1] < hi[1]) {
            return Err(Error::geometry(format!(
                "degenerate rectangle lo={lo:?} hi={hi:?}"
            )));
        }
        if lo.iter().chain(hi.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("rectangle corners"));
        }
        Ok(Rect { lo, hi })
    }

    pub fn square(lo: f64, hi: f64) -> Result<Self> {
        Rect::new([lo, lo], [hi, hi])
    }

    /// Axis-aligned box of half-widths `half` centred at `center`.
    pub fn centered(center: Point, half: [f64; 2]) -> Result<Self> {
        Rect::new(
            [center[0] - half[0], center[1] - half[1]],
            [center[0] + half[0], center[1] + half[1]],
        )
    }

    pub fn width(&self) -> f64 {
        self.hi[0] - self.lo[0]
    }

    pub fn height(&self) -> f64 {
        self.hi[1] - self.lo[1]
    }

    pub fn extent(&self, axis: usize) -> f64 {
        self.hi[axis] - self.lo[axis]
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> Point {
        [
            0.5 * (self.lo[0] + self.hi[0]),
            0.5 * (self.lo[1] + self.hi[1]),
        ]
    }

    pub fn half_diagonal(&self) -> f64 {
        0.5 * self.width().hypot(self.height())
    }

    /// Closed containment with tolerance [`GEOM_TOL`].
    pub fn contains(&self, p: Point) -> bool {
        p[0] >= self.lo[0] - GEOM_TOL
            && p[0] <= self.hi[0] + GEOM_TOL
            && p[1] >= self.lo[1] - GEOM_TOL
            && p[1] <= self.hi[1] + GEOM_TOL
    }

    pub fn contains_open(&self, p: Point) -> bool {
        p[0] > self.lo[0] + GEOM_TOL
            && p[0] < self.hi[0] - GEOM_TOL
            && p[1] > self.lo[1] + GEOM_TOL
            && p[1] < self.hi[1] - GEOM_TOL
    }

    /// Intersection with positive area, `None` otherwise.
    pub fn intersect(&self, other: &Rect) -> Option<Rect> {
        let lo = [self.lo[0].max(other.lo[0]), self.lo[1].max(other.lo[1])];
        let hi = [self.hi[0].min(other.hi[0]), self.hi[1].min(other.hi[1])];
        if hi[0] - lo[0] > GEOM_TOL && hi[1] - lo[1] > GEOM_TOL {
            Some(Rect { lo, hi })
        } else {
            None
        }
    }

    pub fn overlap_area(&self, other: &Rect) -> f64 {
        self.intersect(other).map_or(0.0, |r| r.area())
    }

    /// The four sides, counter-clockwise from the bottom, with outward normals.
    pub fn sides(&self) -> [Edge; 4] {
        let [x0, y0] = self.lo;
        let [x1, y1] = self.hi;
        [
            Edge { a: [x0, y0], b: [x1, y0], normal: [0.0, -1.0] },
            Edge { a: [x1, y0], b: [x1, y1], normal: [1.0, 0.0] },
            Edge { a: [x0, y1], b: [x1, y1], normal: [0.0, 1.0] },
            Edge { a: [x0, y0], b: [x0, y1], normal: [-1.0, 0.0] },
        ]
    }
}

/// A straight axis-aligned boundary segment from `a` to `b` (increasing
/// coordinate) with its outward unit normal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub a: Point,
    pub b: Point,
    pub normal: Point,
}

impl Edge {
    pub fn length(&self) -> f64 {
        (self.b[0] - self.a[0]).hypot(self.b[1] - self.a[1])
    }

    pub fn point_at(&self, t: f64) -> Point {
        [
            self.a[0] + t * (self.b[0] - self.a[0]),
            self.a[1] + t * (self.b[1] - self.a[1]),
        ]
    }

    /// Axis along which the edge runs (0 = horizontal, 1 = vertical).
    pub fn axis(&self) -> usize {
        if self.normal[0] == 0.0 {
            0
        } else {
            1
        }
    }

    pub fn contains(&self, p: Point) -> bool {
        let along = self.axis();
        let across = 1 - along;
        (p[across] - self.a[across]).abs() <= 1e-10
            && p[along] >= self.a[along] - 1e-10
            && p[along] <= self.b[along] + 1e-10
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    Rectangle(Rect),
    /// `outer` with one corner quadrant `excluded` removed.
    LShape { outer: Rect, excluded: Rect },
    /// Interior-disjoint rectangles.
    Union(Vec<Rect>),
}

impl Domain {
    pub fn rectangle(lo: Point, hi: Point) -> Result<Self> {
        Ok(Domain::Rectangle(Rect::new(lo, hi)?))
    }

    pub fn unit_square() -> Self {
        Domain::Rectangle(Rect { lo: [0.0, 0.0], hi: [1.0, 1.0] })
    }

    pub fn l_shape(outer: Rect, excluded: Rect) -> Result<Self> {
        let d = Domain::LShape { outer, excluded };
        d.validate()?;
        Ok(d)
    }

    /// (-1,1)^2 with the quadrant (-1,0)^2 removed.
    pub fn canonical_l_shape() -> Self {
        Domain::LShape {
            outer: Rect { lo: [-1.0, -1.0], hi: [1.0, 1.0] },
            excluded: Rect { lo: [-1.0, -1.0], hi: [0.0, 0.0] },
        }
    }

    pub fn union(rects: Vec<Rect>) -> Result<Self> {
        let d = Domain::Union(rects);
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Domain::Rectangle(r) => Rect::new(r.lo, r.hi).map(|_| ()),
            Domain::LShape { outer, excluded } => {
                Rect::new(outer.lo, outer.hi)?;
                Rect::new(excluded.lo, excluded.hi)?;
                let touches_x = (excluded.lo[0] - outer.lo[0]).abs() < GEOM_TOL
                    || (excluded.hi[0] - outer.hi[0]).abs() < GEOM_TOL;
                let touches_y = (excluded.lo[1] - outer.lo[1]).abs() < GEOM_TOL
                    || (excluded.hi[1] - outer.hi[1]).abs() < GEOM_TOL;
                let inside = excluded.lo[0] >= outer.lo[0] - GEOM_TOL
                    && excluded.hi[0] <= outer.hi[0] + GEOM_TOL
                    && excluded.lo[1] >= outer.lo[1] - GEOM_TOL
                    && excluded.hi[1] <= outer.hi[1] + GEOM_TOL;
                let proper = excluded.width() < outer.width() - GEOM_TOL
                    && excluded.height() < outer.height() - GEOM_TOL;
                if !(touches_x && touches_y && inside && proper) {
                    return Err(Error::geometry(
                        "L-shape must exclude a proper corner quadrant of the outer rectangle",
                    ));
                }
                Ok(())
            }
            Domain::Union(rects) => {
                if rects.is_empty() {
                    return Err(Error::geometry("empty union"));
                }
                for r in rects {
                    Rect::new(r.lo, r.hi)?;
                }
                for (i, a) in rects.iter().enumerate() {
                    for b in &rects[i + 1..] {
                        if a.intersect(b).is_some() {
                            return Err(Error::geometry(format!(
                                "union rectangles {a:?} and {b:?} overlap"
                            )));
                        }
                    }
                }
                Ok(())
            }
        }
    }

    /// Interior-disjoint rectangles whose union is the domain.
    pub fn pieces(&self) -> Vec<Rect> {
        match self {
            Domain::Rectangle(r) => vec![*r],
            Domain::Union(rs) => rs.clone(),
            Domain::LShape { outer, excluded } => {
                let split = |axis: usize| {
                    if (excluded.lo[axis] - outer.lo[axis]).abs() < GEOM_TOL {
                        excluded.hi[axis]
                    } else {
                        excluded.lo[axis]
                    }
                };
                let xs = [outer.lo[0], split(0), outer.hi[0]];
                let ys = [outer.lo[1], split(1), outer.hi[1]];
                let mut out = Vec::with_capacity(3);
                for j in 0..2 {
                    for i in 0..2 {
                        let r = Rect { lo: [xs[i], ys[j]], hi: [xs[i + 1], ys[j + 1]] };
                        if r.intersect(excluded).is_none() {
                            out.push(r);
                        }
                    }
                }
                out
            }
        }
    }

    pub fn area(&self) -> f64 {
        self.pieces().iter().map(Rect::area).sum()
    }

    pub fn bounding_box(&self) -> Rect {
        let pieces = self.pieces();
        let mut lo = pieces[0].lo;
        let mut hi = pieces[0].hi;
        for r in &pieces[1..] {
            for k in 0..2 {
                lo[k] = lo[k].min(r.lo[k]);
                hi[k] = hi[k].max(r.hi[k]);
            }
        }
        Rect { lo, hi }
    }

    /// Area centroid.
    pub fn centroid(&self) -> Point {
        let mut c = [0.0; 2];
        let mut total = 0.0;
        for r in self.pieces() {
            let a = r.area();
            let rc = r.center();
            c[0] += a * rc[0];
            c[1] += a * rc[1];
            total += a;
        }
        [c[0] / total, c[1] / total]
    }

    /// Membership in the closure of the domain.
    pub fn contains(&self, p: Point) -> bool {
        self.pieces().iter().any(|r| r.contains(p))
    }

    /// Maximal straight boundary edges with outward normals.
    pub fn edges(&self) -> Vec<Edge> {
        boundary_edges(&self.pieces())
    }

    pub fn perimeter(&self) -> f64 {
        self.edges().iter().map(Edge::length).sum()
    }

    pub fn on_boundary(&self, p: Point) -> bool {
        self.edges().iter().any(|e| e.contains(p))
    }

    /// Uniform sample of the domain by rejection from the bounding box.
    pub fn sample_uniform(&self, rng: &mut seed::Rng) -> Point {
        let bb = self.bounding_box();
        let pieces = self.pieces();
        loop {
            let p = [
                bb.lo[0] + rng.random::<f64>() * bb.width(),
                bb.lo[1] + rng.random::<f64>() * bb.height(),
            ];
            if pieces.iter().any(|r| r.contains(p)) {
                return p;
            }
        }
    }
}

fn subtract_interval(intervals: Vec<(f64, f64)>, cut: (f64, f64)) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(intervals.len() + 1);
    for (a, b) in intervals {
        if cut.1 <= a + GEOM_TOL || cut.0 >= b - GEOM_TOL {
            out.push((a, b));
            continue;
        }
        if cut.0 > a + GEOM_TOL {
            out.push((a, cut.0));
        }
        if cut.1 < b - GEOM_TOL {
            out.push((cut.1, b));
        }
    }
    out
}

/// Outer boundary of a set of interior-disjoint rectangles, merged into
/// maximal collinear edges. Ordered bottom, right, top, left; by position
/// within each group.
pub(crate) fn boundary_edges(pieces: &[Rect]) -> Vec<Edge> {
    // (normal index, line coordinate, start, end)
    let mut segs: Vec<(usize, f64, f64, f64)> = Vec::new();
    for (i, r) in pieces.iter().enumerate() {
        for (side, e) in r.sides().iter().enumerate() {
            let along = e.axis();
            let across = 1 - along;
            let line = e.a[across];
            let mut parts = vec![(e.a[along], e.b[along])];
            for (j, other) in pieces.iter().enumerate() {
                if i == j {
                    continue;
                }
                // The opposite side of the neighbour lies on the same line.
                let opp = other.sides()[(side + 2) % 4];
                if (opp.a[across] - line).abs() < GEOM_TOL {
                    parts = subtract_interval(parts, (opp.a[along], opp.b[along]));
                }
            }
            segs.extend(parts.into_iter().map(|(a, b)| (side, line, a, b)));
        }
    }
    segs.sort_by(|x, y| {
        x.0.cmp(&y.0)
            .then(x.1.total_cmp(&y.1))
            .then(x.2.total_cmp(&y.2))
    });
    let mut merged: Vec<(usize, f64, f64, f64)> = Vec::new();
    for s in segs {
        if let Some(last) = merged.last_mut() {
            if last.0 == s.0 && (last.1 - s.1).abs() < GEOM_TOL && (last.3 - s.2).abs() < GEOM_TOL
            {
                last.3 = s.3;
                continue;
            }
        }
        merged.push(s);
    }
    let normals = [[0.0, -1.0], [1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]];
    merged
        .into_iter()
        .map(|(side, line, s, t)| {
            let (a, b) = if side % 2 == 0 {
                ([s, line], [t, line])
            } else {
                ([line, s], [line, t])
            };
            Edge { a, b, normal: normals[side] }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundarySample {
    pub point: Point,
    pub outward_normal: Point,
    pub edge_id: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleMode {
    /// Uniformly spaced, endpoints included.
    #[default]
    UniformGrid,
    UniformRandom,
}

/// `n_per_edge` samples on every maximal boundary edge.
pub fn sample_boundary(
    domain: &Domain,
    n_per_edge: usize,
    mode: SampleMode,
    seed: u64,
) -> Result<Vec<BoundarySample>> {
    if n_per_edge < 2 {
        return Err(Error::invalid("at least two boundary samples per edge are required"));
    }
    domain.validate()?;
    let edges = domain.edges();
    let mut rng = seed::rng_from_seed(seed);
    let mut out = Vec::with_capacity(edges.len() * n_per_edge);
    for (edge_id, e) in edges.iter().enumerate() {
        if e.length() <= GEOM_TOL {
            return Err(Error::geometry("zero-length boundary edge"));
        }
        for k in 0..n_per_edge {
            let t = match mode {
                SampleMode::UniformGrid => k as f64 / (n_per_edge - 1) as f64,
                SampleMode::UniformRandom => rng.random::<f64>(),
            };
            out.push(BoundarySample { point: e.point_at(t), outward_normal: e.normal, edge_id });
        }
    }
    Ok(out)
}

/// Rectangles covering `bx ∩ Ω`, pairwise interior-disjoint. Pieces that share
/// a full side are merged.
pub fn clip_box(domain: &Domain, bx: &Rect) -> Vec<Rect> {
    let mut parts: Vec<Rect> = domain.pieces().iter().filter_map(|r| r.intersect(bx)).collect();
    'outer: loop {
        for i in 0..parts.len() {
            for j in i + 1..parts.len() {
                if let Some(m) = merge_pair(&parts[i], &parts[j]) {
                    parts[i] = m;
                    parts.swap_remove(j);
                    continue 'outer;
                }
            }
        }
        break;
    }
    parts
}

fn merge_pair(a: &Rect, b: &Rect) -> Option<Rect> {
    let close = |u: f64, v: f64| (u - v).abs() < GEOM_TOL;
    for axis in 0..2 {
        let other = 1 - axis;
        if close(a.lo[other], b.lo[other])
            && close(a.hi[other], b.hi[other])
            && (close(a.hi[axis], b.lo[axis]) || close(b.hi[axis], a.lo[axis]))
        {
            let mut lo = a.lo;
            let mut hi = a.hi;
            lo[axis] = a.lo[axis].min(b.lo[axis]);
            hi[axis] = a.hi[axis].max(b.hi[axis]);
            return Some(Rect { lo, hi });
        }
    }
    None
}

/// A straight interface between subdomains `left` and `right`. The normal
/// points from `left` into `right`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interface {
    pub left: usize,
    pub right: usize,
    pub a: Point,
    pub b: Point,
    pub normal: Point,
    pub kappa_left: f64,
    pub kappa_right: f64,
}

impl Interface {
    pub fn length(&self) -> f64 {
        (self.b[0] - self.a[0]).hypot(self.b[1] - self.a[1])
    }

    pub fn midpoint(&self) -> Point {
        [0.5 * (self.a[0] + self.b[0]), 0.5 * (self.a[1] + self.b[1])]
    }

    pub fn contains(&self, p: Point) -> bool {
        Edge { a: self.a, b: self.b, normal: self.normal }.contains(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterfaceSample {
    pub point: Point,
    pub normal: Point,
}

/// A non-overlapping decomposition of a domain into subdomains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionLayout {
    domain: Domain,
    subdomains: Vec<Domain>,
    interfaces: Vec<Interface>,
}

impl PartitionLayout {
    /// Validates the cover and detects all interfaces.
    pub fn new(domain: Domain, subdomains: Vec<Domain>) -> Result<Self> {
        domain.validate()?;
        if subdomains.is_empty() {
            return Err(Error::geometry("a partition needs at least one subdomain"));
        }
        let total = domain.area();
        let mut covered = 0.0;
        for (l, sub) in subdomains.iter().enumerate() {
            sub.validate()?;
            let inside: f64 = sub
                .pieces()
                .iter()
                .map(|r| clip_box(&domain, r).iter().map(Rect::area).sum::<f64>())
                .sum();
            if (inside - sub.area()).abs() > 1e-12 * total.max(1.0) {
                return Err(Error::geometry(format!("subdomain {l} leaves the domain")));
            }
            covered += sub.area();
        }
        for (l, a) in subdomains.iter().enumerate() {
            for (q, b) in subdomains.iter().enumerate().skip(l + 1) {
                for ra in a.pieces() {
                    for rb in b.pieces() {
                        if ra.intersect(&rb).is_some() {
                            return Err(Error::geometry(format!(
                                "subdomains {l} and {q} overlap"
                            )));
                        }
                    }
                }
            }
        }
        if (covered - total).abs() > 1e-12 * total.max(1.0) {
            return Err(Error::geometry(format!(
                "subdomains cover area {covered}, domain has area {total}"
            )));
        }
        let interfaces = detect_interfaces(&subdomains);
        Ok(PartitionLayout { domain, subdomains, interfaces })
    }

    pub fn single(domain: Domain) -> Result<Self> {
        PartitionLayout::new(domain.clone(), vec![domain])
    }

    /// Tensor split of a rectangle at the given interior coordinates.
    pub fn tensor(outer: Rect, x_cuts: &[f64], y_cuts: &[f64]) -> Result<Self> {
        let mut xs = vec![outer.lo[0]];
        xs.extend_from_slice(x_cuts);
        xs.push(outer.hi[0]);
        let mut ys = vec![outer.lo[1]];
        ys.extend_from_slice(y_cuts);
        ys.push(outer.hi[1]);
        let mut subs = Vec::new();
        for j in 0..ys.len() - 1 {
            for i in 0..xs.len() - 1 {
                subs.push(Domain::Rectangle(Rect::new([xs[i], ys[j]], [xs[i + 1], ys[j + 1]])?));
            }
        }
        PartitionLayout::new(Domain::Rectangle(outer), subs)
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn subdomains(&self) -> &[Domain] {
        &self.subdomains
    }

    pub fn len(&self) -> usize {
        self.subdomains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subdomains.is_empty()
    }

    pub fn interfaces(&self) -> &[Interface] {
        &self.interfaces
    }

    /// Sets the one-sided coefficient limits on every interface, sampled at
    /// the interface midpoint from each side.
    pub fn set_interface_kappa(&mut self, kappa: impl Fn(Point) -> f64) {
        for itf in &mut self.interfaces {
            let m = itf.midpoint();
            let d = 1e-9 * itf.length().max(1.0);
            itf.kappa_left = kappa([m[0] - d * itf.normal[0], m[1] - d * itf.normal[1]]);
            itf.kappa_right = kappa([m[0] + d * itf.normal[0], m[1] + d * itf.normal[1]]);
        }
    }

    /// `n` uniformly spaced samples on interface `idx`, endpoints included.
    pub fn sample_interface(&self, idx: usize, n: usize) -> Result<Vec<InterfaceSample>> {
        let itf = self.interfaces.get(idx).ok_or_else(|| {
            Error::invalid(format!(
                "interface index {idx} out of range ({} interfaces)",
                self.interfaces.len()
            ))
        })?;
        if n < 2 {
            return Err(Error::invalid("at least two interface samples are required"));
        }
        Ok((0..n)
            .map(|k| {
                let t = k as f64 / (n - 1) as f64;
                InterfaceSample {
                    point: [
                        itf.a[0] + t * (itf.b[0] - itf.a[0]),
                        itf.a[1] + t * (itf.b[1] - itf.a[1]),
                    ],
                    normal: itf.normal,
                }
            })
            .collect())
    }

    /// Number of other subdomains whose closure contains `p`.
    pub fn count_neighbors(&self, subdomain: usize, p: Point) -> Result<usize> {
        let own = self
            .subdomains
            .get(subdomain)
            .ok_or_else(|| Error::invalid(format!("subdomain index {subdomain} out of range")))?;
        if !own.contains(p) {
            return Err(Error::geometry(format!(
                "point {p:?} is outside the closure of subdomain {subdomain}"
            )));
        }
        Ok(self
            .subdomains
            .iter()
            .enumerate()
            .filter(|(q, d)| *q != subdomain && d.contains(p))
            .count())
    }

    /// Partition-of-unity weight of subdomain `l` at `p`: 1 inside, shared
    /// equally on boundaries between subdomains, 0 outside.
    pub fn chi(&self, subdomain: usize, p: Point) -> f64 {
        match self.count_neighbors(subdomain, p) {
            Ok(k) => 1.0 / (k as f64 + 1.0),
            Err(_) => 0.0,
        }
    }
}

fn detect_interfaces(subdomains: &[Domain]) -> Vec<Interface> {
    let mut raw: Vec<(usize, usize, usize, f64, f64, f64, f64)> = Vec::new();
    for (l, a) in subdomains.iter().enumerate() {
        for (q, b) in subdomains.iter().enumerate().skip(l + 1) {
            for ra in a.pieces() {
                for rb in b.pieces() {
                    for axis in 0..2 {
                        let along = 1 - axis;
                        let lo = ra.lo[along].max(rb.lo[along]);
                        let hi = ra.hi[along].min(rb.hi[along]);
                        if hi - lo <= GEOM_TOL {
                            continue;
                        }
                        if (ra.hi[axis] - rb.lo[axis]).abs() < GEOM_TOL {
                            raw.push((l, q, axis, 1.0, ra.hi[axis], lo, hi));
                        } else if (ra.lo[axis] - rb.hi[axis]).abs() < GEOM_TOL {
                            raw.push((l, q, axis, -1.0, ra.lo[axis], lo, hi));
                        }
                    }
                }
            }
        }
    }
    raw.sort_by(|x, y| {
        (x.0, x.1, x.2)
            .cmp(&(y.0, y.1, y.2))
            .then(x.3.total_cmp(&y.3))
            .then(x.4.total_cmp(&y.4))
            .then(x.5.total_cmp(&y.5))
    });
    let mut merged: Vec<(usize, usize, usize, f64, f64, f64, f64)> = Vec::new();
    for s in raw {
        if let Some(last) = merged.last_mut() {
            if (last.0, last.1, last.2) == (s.0, s.1, s.2)
                && last.3 == s.3
                && (last.4 - s.4).abs() < GEOM_TOL
                && (last.6 - s.5).abs() < GEOM_TOL
            {
                last.6 = s.6;
                continue;
            }
        }
        merged.push(s);
    }
    merged
        .into_iter()
        .map(|(left, right, axis, sign, line, lo, hi)| {
            let mut a = [0.0; 2];
            let mut b = [0.0; 2];
            let mut normal = [0.0; 2];
            a[axis] = line;
            b[axis] = line;
            a[1 - axis] = lo;
            b[1 - axis] = hi;
            normal[axis] = sign;
            Interface { left, right, a, b, normal, kappa_left: 1.0, kappa_right: 1.0 }
        })
        .collect()
}
