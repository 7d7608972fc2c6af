//! Benchmark problem catalog and reference-grid ingestion.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::assembly::{BoundaryMode, ProblemSpec};
use crate::error::{Error, Result};
use crate::geometry::{Domain, PartitionLayout, Point, Rect};
use crate::solvers::BasisConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemId {
    DarcyWeakOnly,
    DarcyMultiscale,
    DarcyChannel,
    PoissonSharp,
    LshapeSingular,
    PoissonSmooth,
}

impl ProblemId {
    pub const ALL: [ProblemId; 6] = [
        ProblemId::DarcyWeakOnly,
        ProblemId::DarcyMultiscale,
        ProblemId::DarcyChannel,
        ProblemId::PoissonSharp,
        ProblemId::LshapeSingular,
        ProblemId::PoissonSmooth,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ProblemId::DarcyWeakOnly => "darcy_weak_only",
            ProblemId::DarcyMultiscale => "darcy_multiscale",
            ProblemId::DarcyChannel => "darcy_channel",
            ProblemId::PoissonSharp => "poisson_sharp",
            ProblemId::LshapeSingular => "lshape_singular",
            ProblemId::PoissonSmooth => "poisson_smooth",
        }
    }
}

impl fmt::Display for ProblemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProblemId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ProblemId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| Error::UnknownProblem(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reference {
    Exact,
    ExternalGrid,
}

/// Default hyperparameters of a catalog problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Defaults {
    pub m: usize,
    pub n: usize,
    pub gamma: f64,
    pub sigma: f64,
    pub beta: f64,
    pub lambda: f64,
    pub points_per_axis: usize,
    pub boundary_per_edge: usize,
    pub n_interior: usize,
    pub eval_grid: usize,
}

/// A named partition with per-subdomain basis settings.
#[derive(Debug, Clone, PartialEq)]
pub struct PouPreset {
    pub name: &'static str,
    pub layout: PartitionLayout,
    pub bases: Vec<BasisConfig>,
}

#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub id: ProblemId,
    pub spec: ProblemSpec,
    pub defaults: Defaults,
    pub reference: Reference,
    pub layouts: Vec<PouPreset>,
}

impl CatalogEntry {
    pub fn layout(&self, name: &str) -> Result<&PouPreset> {
        self.layouts.iter().find(|p| p.name == name).ok_or_else(|| {
            let known: Vec<_> = self.layouts.iter().map(|p| p.name).collect();
            Error::invalid(format!("problem {} has no layout `{name}` (known: {known:?})", self.id))
        })
    }

    pub fn eval_exact(&self, points: &[Point]) -> Result<Vec<f64>> {
        let u = self
            .spec
            .exact
            .as_ref()
            .ok_or_else(|| Error::Unsupported(format!("{} has no closed-form solution", self.id)))?;
        Ok(points.iter().map(|&p| u(p)).collect())
    }

    pub fn eval_kappa(&self, points: &[Point]) -> Vec<f64> {
        points.iter().map(|&p| (self.spec.kappa)(p)).collect()
    }

    pub fn eval_source(&self, points: &[Point]) -> Vec<f64> {
        points.iter().map(|&p| (self.spec.source)(p)).collect()
    }

    pub fn eval_boundary(&self, points: &[Point]) -> Vec<f64> {
        points.iter().map(|&p| (self.spec.boundary)(p)).collect()
    }
}

fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Rect {
    Rect::new([x0, y0], [x1, y1]).expect("catalog rectangles are valid")
}

fn unit_square() -> Rect {
    rect(0.0, 0.0, 1.0, 1.0)
}

fn defaults(m: usize, n: usize, gamma: f64, sigma: f64) -> Defaults {
    Defaults {
        m,
        n,
        gamma,
        sigma,
        beta: 1.0,
        lambda: 1.0,
        points_per_axis: 65,
        boundary_per_edge: 200,
        n_interior: 1000,
        eval_grid: 129,
    }
}

pub fn darcy_weak_only_exact(p: Point) -> f64 {
    let x = p[0];
    if x <= 0.5 {
        x * x
    } else {
        -x * x + 2.0 * x - 0.5
    }
}

fn darcy_weak_only() -> CatalogEntry {
    let exact: Arc<dyn Fn(Point) -> f64 + Send + Sync> = Arc::new(darcy_weak_only_exact);
    let spec = ProblemSpec {
        domain: Domain::Rectangle(unit_square()),
        kappa: Arc::new(|p| 1.0 + p[0] * p[0] + p[1] * p[1]),
        kappa_grad: Some(Arc::new(|p| [2.0 * p[0], 2.0 * p[1]])),
        kappa_constant: false,
        source: Arc::new(|p| {
            let (x, y) = (p[0], p[1]);
            if x <= 0.5 {
                -2.0 - 6.0 * x * x - 2.0 * y * y
            } else {
                6.0 * x * x + 2.0 * y * y - 4.0 * x + 2.0
            }
        }),
        boundary: exact.clone(),
        exact: Some(exact),
        mode: BoundaryMode::Soft,
        breaks_x: vec![0.5],
        breaks_y: Vec::new(),
    };
    CatalogEntry {
        id: ProblemId::DarcyWeakOnly,
        spec,
        defaults: defaults(200, 300, 1.0, 0.05),
        reference: Reference::Exact,
        layouts: Vec::new(),
    }
}

fn darcy_multiscale() -> CatalogEntry {
    let w = 2.0 * PI * 8.0;
    let spec = ProblemSpec {
        domain: Domain::Rectangle(unit_square()),
        kappa: Arc::new(move |p| 2.0 + (w * p[0]).sin() * (w * p[1]).cos()),
        kappa_grad: Some(Arc::new(move |p| {
            [w * (w * p[0]).cos() * (w * p[1]).cos(), -w * (w * p[0]).sin() * (w * p[1]).sin()]
        })),
        kappa_constant: false,
        source: Arc::new(|p| p[0].sin() + p[1].cos()),
        boundary: Arc::new(|_| 0.0),
        exact: None,
        mode: BoundaryMode::Soft,
        breaks_x: Vec::new(),
        breaks_y: Vec::new(),
    };
    let mut d = defaults(2000, 2000, 1.0, 0.05);
    // κ oscillates with period 1/8; 129 points per support box give 16
    // nodes per period.
    d.points_per_axis = 129;
    d.eval_grid = 101;
    CatalogEntry { id: ProblemId::DarcyMultiscale, spec, defaults: d, reference: Reference::ExternalGrid, layouts: Vec::new() }
}

fn channel_kappa(p: Point) -> f64 {
    if (0.5..=0.7).contains(&p[0]) {
        100.0
    } else {
        1.0
    }
}

fn darcy_channel() -> CatalogEntry {
    let domain = Domain::Rectangle(unit_square());
    let spec = ProblemSpec {
        domain: domain.clone(),
        kappa: Arc::new(channel_kappa),
        kappa_grad: None,
        kappa_constant: false,
        source: Arc::new(|p| p[0].sin() + p[1].cos()),
        boundary: Arc::new(|_| 0.0),
        exact: None,
        mode: BoundaryMode::Soft,
        breaks_x: vec![0.5, 0.7],
        breaks_y: Vec::new(),
    };
    let layout = PartitionLayout::tensor(unit_square(), &[0.5, 0.7], &[]).expect("valid layout");
    let mut d = defaults(200, 600, 1.0, 0.05);
    d.eval_grid = 257;
    CatalogEntry {
        id: ProblemId::DarcyChannel,
        spec,
        defaults: d,
        reference: Reference::ExternalGrid,
        layouts: vec![PouPreset { name: "channel", layout, bases: vec![BasisConfig::new(200, 1.0); 3] }],
    }
}

pub fn poisson_sharp_exact(p: Point) -> f64 {
    (0.1 * (2.0 * PI * p[0]).sin() + (10.0 * p[0]).tanh()) * (2.0 * PI * p[1]).sin()
}

fn poisson_sharp_source(p: Point) -> f64 {
    let (x, y) = (p[0], p[1]);
    let t = (10.0 * x).tanh();
    let a = 0.1 * (2.0 * PI * x).sin() + t;
    let a2 = -0.4 * PI * PI * (2.0 * PI * x).sin() - 200.0 * t * (1.0 - t * t);
    let s = (2.0 * PI * y).sin();
    -a2 * s + 4.0 * PI * PI * a * s
}

fn poisson_sharp() -> CatalogEntry {
    let outer = rect(-1.0, -1.0, 1.0, 1.0);
    let mut spec = ProblemSpec::poisson(
        Domain::Rectangle(outer),
        Arc::new(poisson_sharp_source),
        Arc::new(poisson_sharp_exact),
    );
    spec.exact = Some(Arc::new(poisson_sharp_exact));
    let quads = PartitionLayout::tensor(outer, &[0.0], &[0.0]).expect("valid layout");
    let mut d = defaults(1600, 1800, 5.0, 0.05);
    d.n_interior = 4000;
    CatalogEntry {
        id: ProblemId::PoissonSharp,
        spec,
        defaults: d,
        reference: Reference::Exact,
        layouts: vec![PouPreset { name: "quadrants", layout: quads, bases: vec![BasisConfig::new(400, 5.0); 4] }],
    }
}

/// `r^{2/3} sin((2θ + π)/3)` with θ on the branch `[−π/2, π]`, so the
/// solution vanishes on both legs of the re-entrant corner.
pub fn lshape_exact(p: Point) -> f64 {
    let r = p[0].hypot(p[1]);
    if r == 0.0 {
        return 0.0;
    }
    let mut theta = p[1].atan2(p[0]);
    if theta < -0.5 * PI - 1e-12 {
        theta += 2.0 * PI;
    }
    r.powf(2.0 / 3.0) * ((2.0 * theta + PI) / 3.0).sin()
}

fn lshape_layouts() -> Vec<PouPreset> {
    let domain = Domain::canonical_l_shape();
    let squares = vec![
        Domain::Rectangle(rect(0.0, 0.0, 1.0, 1.0)),
        Domain::Rectangle(rect(-1.0, 0.0, 0.0, 1.0)),
        Domain::Rectangle(rect(0.0, -1.0, 1.0, 0.0)),
    ];
    let a = PartitionLayout::new(domain.clone(), squares).expect("valid layout");
    let s = 0.2;
    let six = vec![
        Domain::Union(vec![rect(s, 0.0, 1.0, 1.0), rect(0.0, s, s, 1.0)]),
        Domain::Union(vec![rect(-1.0, 0.0, -s, 1.0), rect(-s, s, 0.0, 1.0)]),
        Domain::Union(vec![rect(0.0, -1.0, 1.0, -s), rect(s, -s, 1.0, 0.0)]),
        Domain::Rectangle(rect(0.0, 0.0, s, s)),
        Domain::Rectangle(rect(-s, 0.0, 0.0, s)),
        Domain::Rectangle(rect(0.0, -s, s, 0.0)),
    ];
    let c = PartitionLayout::new(domain, six).expect("valid layout");
    let mut mixed = vec![BasisConfig::new(200, 1.0); 3];
    mixed.extend(vec![BasisConfig::mixed(200, vec![1.0, 5.0, 10.0]); 3]);
    vec![
        PouPreset { name: "a", layout: a, bases: vec![BasisConfig::new(400, 1.0); 3] },
        PouPreset { name: "c", layout: c.clone(), bases: vec![BasisConfig::new(200, 1.0); 6] },
        PouPreset { name: "e", layout: c, bases: mixed },
    ]
}

fn lshape_singular() -> CatalogEntry {
    let mut spec =
        ProblemSpec::poisson(Domain::canonical_l_shape(), Arc::new(|_| 0.0), Arc::new(lshape_exact));
    spec.exact = Some(Arc::new(lshape_exact));
    // the mixed-γ corner squares only pay off once enough narrow tests
    // resolve the singular corner
    let mut d = defaults(1200, 6000, 1.0, 0.03);
    d.beta = 100.0;
    d.boundary_per_edge = 400;
    d.n_interior = 40_000;
    CatalogEntry { id: ProblemId::LshapeSingular, spec, defaults: d, reference: Reference::Exact, layouts: lshape_layouts() }
}

pub fn poisson_smooth_exact(p: Point) -> f64 {
    (PI * p[0]).sin() * (PI * p[1]).sin()
}

fn poisson_smooth() -> CatalogEntry {
    let mut spec = ProblemSpec::poisson(
        Domain::Rectangle(unit_square()),
        Arc::new(|p| 2.0 * PI * PI * poisson_smooth_exact(p)),
        Arc::new(|_| 0.0),
    );
    spec.exact = Some(Arc::new(poisson_smooth_exact));
    spec.mode = BoundaryMode::Hard;
    CatalogEntry {
        id: ProblemId::PoissonSmooth,
        spec,
        defaults: defaults(200, 200, 1.0, 0.03),
        reference: Reference::Exact,
        layouts: Vec::new(),
    }
}

pub fn get(id: ProblemId) -> CatalogEntry {
    match id {
        ProblemId::DarcyWeakOnly => darcy_weak_only(),
        ProblemId::DarcyMultiscale => darcy_multiscale(),
        ProblemId::DarcyChannel => darcy_channel(),
        ProblemId::PoissonSharp => poisson_sharp(),
        ProblemId::LshapeSingular => lshape_singular(),
        ProblemId::PoissonSmooth => poisson_smooth(),
    }
}

pub fn get_by_name(name: &str) -> Result<CatalogEntry> {
    Ok(get(name.parse()?))
}

/// A scalar field sampled on a uniform tensor grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceGrid {
    pub nx: usize,
    pub ny: usize,
    pub lo: Point,
    pub hi: Point,
    /// Row-major with x fastest.
    pub values: Vec<f64>,
}

impl ReferenceGrid {
    pub fn x(&self, i: usize) -> f64 {
        self.lo[0] + (self.hi[0] - self.lo[0]) * i as f64 / (self.nx - 1) as f64
    }

    pub fn y(&self, j: usize) -> f64 {
        self.lo[1] + (self.hi[1] - self.lo[1]) * j as f64 / (self.ny - 1) as f64
    }

    pub fn points(&self) -> Vec<Point> {
        (0..self.ny).flat_map(|j| (0..self.nx).map(move |i| (i, j))).map(|(i, j)| [self.x(i), self.y(j)]).collect()
    }

    /// Bilinear interpolation; NaN outside the grid bounds.
    pub fn interpolate(&self, p: Point) -> f64 {
        let tol = 1e-12;
        if p[0] < self.lo[0] - tol || p[0] > self.hi[0] + tol || p[1] < self.lo[1] - tol || p[1] > self.hi[1] + tol {
            return f64::NAN;
        }
        let locate = |v: f64, lo: f64, hi: f64, n: usize| {
            let t = ((v - lo) / (hi - lo) * (n - 1) as f64).clamp(0.0, (n - 1) as f64);
            let i = (t.floor() as usize).min(n - 2);
            (i, t - i as f64)
        };
        let (i, tx) = locate(p[0], self.lo[0], self.hi[0], self.nx);
        let (j, ty) = locate(p[1], self.lo[1], self.hi[1], self.ny);
        let v = |i: usize, j: usize| self.values[j * self.nx + i];
        let mut out = 0.0;
        for (di, wx) in [(0, 1.0 - tx), (1, tx)] {
            for (dj, wy) in [(0, 1.0 - ty), (1, ty)] {
                let w = wx * wy;
                if w != 0.0 {
                    out += w * v(i + di, j + dj);
                }
            }
        }
        out
    }
}

fn parse_err(path: &Path, line: u64, msg: impl Into<String>) -> Error {
    Error::Parse { path: path.to_path_buf(), line, msg: msg.into() }
}

/// Reads a `x,y,u` CSV on a uniform row-major grid (x fastest).
pub fn load_reference_grid(path: &Path) -> Result<ReferenceGrid> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| parse_err(path, 0, e.to_string()))?;
    let mut rows: Vec<(u64, [f64; 3])> = Vec::new();
    let mut header_seen = false;
    for rec in reader.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(path, line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if !header_seen {
            let h: Vec<&str> = rec.iter().collect();
            if h != ["x", "y", "u"] {
                return Err(parse_err(path, line, format!("expected header `x,y,u`, found `{}`", h.join(","))));
            }
            header_seen = true;
            continue;
        }
        if rec.len() != 3 {
            return Err(parse_err(path, line, format!("expected 3 fields, found {}", rec.len())));
        }
        let mut vals = [0.0; 3];
        for (k, field) in rec.iter().enumerate() {
            vals[k] = field
                .parse::<f64>()
                .map_err(|e| parse_err(path, line, format!("field {}: `{field}`: {e}", k + 1)))?;
        }
        rows.push((line, vals));
    }
    if !header_seen {
        return Err(parse_err(path, 1, "empty file, expected header `x,y,u`"));
    }
    if rows.len() < 4 {
        return Err(parse_err(path, rows.last().map_or(1, |r| r.0), "grid needs at least 2×2 points"));
    }
    let y0 = rows[0].1[1];
    let nx = rows.iter().take_while(|r| r.1[1] == y0).count();
    if nx < 2 || rows.len() % nx != 0 {
        return Err(parse_err(path, rows[nx.min(rows.len() - 1)].0, "rows do not form a rectangular grid"));
    }
    let ny = rows.len() / nx;
    if ny < 2 {
        return Err(parse_err(path, rows[0].0, "grid needs at least two y levels"));
    }
    let lo = [rows[0].1[0], y0];
    let hi = [rows[nx - 1].1[0], rows[(ny - 1) * nx].1[1]];
    let hx = (hi[0] - lo[0]) / (nx - 1) as f64;
    let hy = (hi[1] - lo[1]) / (ny - 1) as f64;
    if !(hx > 0.0 && hy > 0.0) {
        return Err(parse_err(path, rows[0].0, "grid coordinates must increase"));
    }
    for (k, (line, v)) in rows.iter().enumerate() {
        let (i, j) = (k % nx, k / nx);
        let ex = lo[0] + i as f64 * hx;
        let ey = lo[1] + j as f64 * hy;
        if (v[0] - ex).abs() > 1e-9 * hx || (v[1] - ey).abs() > 1e-9 * hy {
            return Err(parse_err(
                path,
                *line,
                format!("point ({}, {}) breaks the uniform grid (expected ({ex}, {ey}))", v[0], v[1]),
            ));
        }
    }
    Ok(ReferenceGrid { nx, ny, lo, hi, values: rows.into_iter().map(|r| r.1[2]).collect() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn darcy_exact_values() {
        let e = get(ProblemId::DarcyWeakOnly);
        let u = e.eval_exact(&[[0.25, 0.1], [0.25, 0.9], [0.75, 0.3]]).unwrap();
        assert_eq!(u[0], 0.0625);
        assert_eq!(u[1], 0.0625);
        assert!((u[2] - 0.4375).abs() < 1e-15);
        assert_eq!(e.eval_boundary(&[[0.25, 0.0]]), vec![0.0625]);
    }

    #[test]
    fn kappa_plug_in() {
        let m = get(ProblemId::DarcyMultiscale);
        assert!((m.eval_kappa(&[[1.0 / 32.0, 0.0]])[0] - 3.0).abs() < 1e-12);
        assert!(m.eval_exact(&[[0.5, 0.5]]).is_err());
        let c = get(ProblemId::DarcyChannel);
        assert_eq!(c.eval_kappa(&[[0.6, 0.5], [0.4, 0.5]]), vec![100.0, 1.0]);
    }

    #[test]
    fn lshape_branch() {
        assert_eq!(lshape_exact([0.0, 0.0]), 0.0);
        for t in [0.1, 0.5, 1.0] {
            assert!(lshape_exact([-t, 0.0]).abs() < 1e-14);
            assert!(lshape_exact([-t, -0.0]).abs() < 1e-14);
            assert!(lshape_exact([0.0, -t]).abs() < 1e-14);
        }
        assert!(lshape_exact([0.5, 0.5]) > 0.0);
    }

    #[test]
    fn catalog_names_round_trip() {
        for id in ProblemId::ALL {
            assert_eq!(id.as_str().parse::<ProblemId>().unwrap(), id);
        }
        assert!(matches!("nope".parse::<ProblemId>(), Err(Error::UnknownProblem(_))));
        assert_eq!(get(ProblemId::PoissonSharp).defaults.gamma, 5.0);
    }

    #[test]
    fn lshape_layouts_cover() {
        let e = get(ProblemId::LshapeSingular);
        assert_eq!(e.layout("a").unwrap().layout.len(), 3);
        let c = e.layout("c").unwrap();
        assert_eq!(c.layout.len(), 6);
        let total: f64 = c.layout.subdomains().iter().map(Domain::area).sum();
        assert!((total - 3.0).abs() < 1e-12);
        assert!(e.layout("z").is_err());
    }

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn reference_grid_bilinear() {
        let mut s = String::from("x,y,u\n");
        for j in 0..3 {
            for i in 0..3 {
                let (x, y) = (i as f64 * 0.5, j as f64 * 0.5);
                s += &format!("{x},{y},{}\n", x + y);
            }
        }
        let f = write_tmp(&s);
        let g = load_reference_grid(f.path()).unwrap();
        assert_eq!((g.nx, g.ny), (3, 3));
        assert!((g.interpolate([0.25, 0.25]) - 0.5).abs() < 1e-15);
        assert!(g.interpolate([2.0, 0.0]).is_nan());
    }

    #[test]
    fn reference_grid_errors() {
        let f = write_tmp("0,0,1\n1,0,1\n");
        let e = load_reference_grid(f.path()).unwrap_err().to_string();
        assert!(e.contains(":1:"), "{e}");
        let f = write_tmp("x,y,u\n0,0,1\n0.5,0,1\n1.2,0,1\n0,1,1\n0.5,1,1\n1.2,1,1\n");
        let e = load_reference_grid(f.path()).unwrap_err().to_string();
        assert!(e.contains("uniform"), "{e}");
        let f = write_tmp("x,y,u\n0,0,1\n1,0,oops\n0,1,1\n1,1,1\n");
        let e = load_reference_grid(f.path()).unwrap_err().to_string();
        assert!(e.contains(":3:"), "{e}");
    }
}
