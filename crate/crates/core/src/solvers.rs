//! Dense least-squares solves and the end-to-end pipelines.

use std::time::Instant;

use faer::linalg::solvers::Solve;
use faer::{Mat, Side};
use serde::{Deserialize, Serialize};

use crate::assembly::{
    assemble_boundary, assemble_drm, assemble_interface, assemble_sf, assemble_weak, drm_boundary_weight,
    sf_boundary_weight, weak_boundary_weight, AssembledSystem, BlockKind, BoundaryMode, Part, ProblemSpec,
};
use crate::basis::{Constraint, FourierMap, NeuralBasis, PoUBasis, TrialBasis};
use crate::error::{Error, Result};
use crate::geometry::{sample_boundary, Domain, PartitionLayout, Point, SampleMode};
use crate::quadrature::QuadratureConfig;
use crate::seed;
use crate::test_space::{build_test_set, TestNormalization, DEFAULT_TRUNCATION};

pub const DEFAULT_RCOND: f64 = 1e-13;
pub const DEFAULT_DRM_EPSILON: f64 = 1e-5;

/// Minimum-norm least squares through QR of `[L r]` followed by an SVD of
/// the triangular factor; singular values below `rcond·σ_max` are dropped.
/// Returns `(α, ‖Lα − r‖₂, rank)`.
pub fn lstsq(l: &Mat<f64>, r: &[f64], rcond: f64) -> Result<(Vec<f64>, f64, usize)> {
    let (m, n) = (l.nrows(), l.ncols());
    if m == 0 || n == 0 {
        return Err(Error::invalid("least squares needs a non-empty matrix"));
    }
    if r.len() != m {
        return Err(Error::Dimension(format!("{m} rows but {} right-hand side entries", r.len())));
    }
    if r.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("least-squares right-hand side"));
    }
    for j in 0..n {
        if (0..m).any(|i| !l[(i, j)].is_finite()) {
            return Err(Error::NonFinite("least-squares matrix"));
        }
    }

    // Reduce to a square-ish problem when overdetermined.
    let (core, c) = if m > n {
        let aug = Mat::from_fn(m, n + 1, |i, j| if j < n { l[(i, j)] } else { r[i] });
        let rr = aug.qr().thin_R().to_owned();
        let top = Mat::from_fn(n, n, |i, j| rr[(i, j)]);
        let c: Vec<f64> = (0..n).map(|i| rr[(i, n)]).collect();
        (top, c)
    } else {
        (l.to_owned(), r.to_vec())
    };

    let svd = core.thin_svd().map_err(|e| Error::LinAlg(format!("SVD failed: {e:?}")))?;
    let u = svd.U();
    let v = svd.V();
    let s = svd.S().column_vector();
    let k = s.nrows();
    let smax = (0..k).map(|i| s[i]).fold(0.0, f64::max);
    let mut alpha = vec![0.0; n];
    let mut rank = 0;
    for i in 0..k {
        if !(smax > 0.0 && s[i] > rcond * smax) {
            continue;
        }
        rank += 1;
        let uc: f64 = (0..c.len()).map(|row| u[(row, i)] * c[row]).sum();
        let coef = uc / s[i];
        for (j, a) in alpha.iter_mut().enumerate() {
            *a += coef * v[(j, i)];
        }
    }
    // computed directly: the factored residual misses the rounding error of
    // near-singular directions
    let resid = residual_norm(l, &alpha, r);
    Ok((alpha, resid, rank))
}

/// `‖Lα − r‖₂`.
pub fn residual_norm(l: &Mat<f64>, alpha: &[f64], r: &[f64]) -> f64 {
    let la = matvec(l, alpha);
    la.iter().zip(r).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

pub fn matvec(l: &Mat<f64>, x: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; l.nrows()];
    for (j, &xj) in x.iter().enumerate() {
        if xj == 0.0 {
            continue;
        }
        for (i, o) in out.iter_mut().enumerate() {
            *o += l[(i, j)] * xj;
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "WTN")]
    Wtn,
    #[serde(rename = "FWTN")]
    Fwtn,
    #[serde(rename = "POU_WTN")]
    PouWtn,
    #[serde(rename = "SF")]
    Sf,
    #[serde(rename = "DRM")]
    Drm,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Wtn => "WTN",
            Method::Fwtn => "FWTN",
            Method::PouWtn => "POU_WTN",
            Method::Sf => "SF",
            Method::Drm => "DRM",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    pub residual: f64,
    pub rows: usize,
    pub cols: usize,
    pub rank: usize,
    pub assemble_ms: f64,
    pub solve_ms: f64,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub coefficients: Vec<f64>,
    pub basis: TrialBasis,
    pub method: Method,
    pub diagnostics: Diagnostics,
}

impl Solution {
    pub fn evaluate(&self, points: &[Point]) -> Vec<f64> {
        let mut out = Vec::with_capacity(points.len());
        for chunk in points.chunks(4096) {
            out.extend(matvec(&self.basis.eval(chunk), &self.coefficients));
        }
        out
    }
}

/// Shape parameters: one value for every neuron, or equal consecutive groups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Shape {
    Constant(f64),
    Mixed(Vec<f64>),
}

impl Shape {
    pub fn gammas(&self, m: usize) -> Vec<f64> {
        match self {
            Shape::Constant(g) => vec![*g; m],
            Shape::Mixed(groups) => {
                let k = groups.len().max(1);
                let mut out = Vec::with_capacity(m);
                for (g, &v) in groups.iter().enumerate() {
                    out.extend(std::iter::repeat(v).take(m / k + usize::from(g < m % k)));
                }
                out
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisConfig {
    pub m: usize,
    pub shape: Shape,
    /// Ball centre; defaults to the centroid of the (sub)domain.
    pub center: Option<Point>,
    /// Ball radius; defaults to the half-diagonal of the bounding box.
    pub radius: Option<f64>,
}

impl BasisConfig {
    pub fn new(m: usize, gamma: f64) -> Self {
        BasisConfig { m, shape: Shape::Constant(gamma), center: None, radius: None }
    }

    pub fn mixed(m: usize, gammas: Vec<f64>) -> Self {
        BasisConfig { m, shape: Shape::Mixed(gammas), center: None, radius: None }
    }

    fn build(&self, region: &Domain, seed: u64) -> Result<NeuralBasis> {
        let center = self.center.unwrap_or_else(|| region.centroid());
        let radius = self.radius.unwrap_or_else(|| region.bounding_box().half_diagonal());
        NeuralBasis::transnet(self.m, &self.shape.gammas(self.m), center, radius, seed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestConfig {
    pub n: usize,
    pub sigma: f64,
    pub n_l: u32,
    #[serde(default)]
    pub normalization: TestNormalization,
}

impl TestConfig {
    pub fn new(n: usize, sigma: f64) -> Self {
        TestConfig { n, sigma, n_l: DEFAULT_TRUNCATION, normalization: TestNormalization::Peak }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryConfig {
    pub n_per_edge: usize,
    pub mode: SampleMode,
}

impl Default for BoundaryConfig {
    fn default() -> Self {
        BoundaryConfig { n_per_edge: 200, mode: SampleMode::UniformGrid }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakConfig {
    pub tests: TestConfig,
    pub quadrature: QuadratureConfig,
    pub boundary: BoundaryConfig,
    pub beta: f64,
    pub rcond: f64,
}

impl WeakConfig {
    pub fn new(tests: TestConfig) -> Self {
        WeakConfig {
            tests,
            quadrature: QuadratureConfig::default(),
            boundary: BoundaryConfig::default(),
            beta: 1.0,
            rcond: DEFAULT_RCOND,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierConfig {
    pub p: usize,
    pub sigmas: Vec<f64>,
    pub margin: f64,
}

impl Default for FourierConfig {
    fn default() -> Self {
        FourierConfig { p: 64, sigmas: vec![1.0, 3.0], margin: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PouConfig {
    pub layout: PartitionLayout,
    pub bases: Vec<BasisConfig>,
    pub lambda: f64,
    pub n_interface: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollocationConfig {
    pub n_interior: usize,
    pub boundary: BoundaryConfig,
    pub beta: f64,
    pub rcond: f64,
}

impl CollocationConfig {
    pub fn new(n_interior: usize) -> Self {
        CollocationConfig { n_interior, boundary: BoundaryConfig::default(), beta: 1.0, rcond: DEFAULT_RCOND }
    }
}

fn hard_constraint(problem: &ProblemSpec) -> Result<Constraint> {
    match (problem.mode, &problem.domain) {
        (BoundaryMode::Soft, _) => Ok(Constraint::None),
        (BoundaryMode::Hard, Domain::Rectangle(r)) => Ok(Constraint::Bubble(*r)),
        (BoundaryMode::Hard, _) => Err(Error::Unsupported("hard constraint on a non-rectangular domain".into())),
    }
}

pub fn build_wtn_basis(problem: &ProblemSpec, cfg: &BasisConfig, seed: u64) -> Result<TrialBasis> {
    let b = cfg.build(&problem.domain, seed::derive_seed(seed, "basis", 0))?;
    Ok(TrialBasis::Single(b.with_constraint(hard_constraint(problem)?)))
}

pub fn build_fwtn_basis(problem: &ProblemSpec, fourier: &FourierConfig, cfg: &BasisConfig, seed: u64) -> Result<TrialBasis> {
    let map = FourierMap::mixture(fourier.p, &fourier.sigmas, fourier.margin, seed::derive_seed(seed, "fourier", 0))?;
    let b = NeuralBasis::fourier(cfg.m, map, &cfg.shape.gammas(cfg.m), seed::derive_seed(seed, "basis", 0))?;
    Ok(TrialBasis::Single(b.with_constraint(hard_constraint(problem)?)))
}

pub fn build_pou_basis(problem: &ProblemSpec, pou: &PouConfig, seed: u64) -> Result<TrialBasis> {
    if pou.layout.domain() != &problem.domain {
        return Err(Error::geometry("partition layout does not decompose the problem domain"));
    }
    if pou.bases.len() != pou.layout.len() {
        return Err(Error::Dimension(format!(
            "{} basis configs for {} subdomains",
            pou.bases.len(),
            pou.layout.len()
        )));
    }
    if problem.mode == BoundaryMode::Hard {
        return Err(Error::Unsupported("hard constraint with a partition of unity".into()));
    }
    let mut layout = pou.layout.clone();
    layout.set_interface_kappa(|p| (problem.kappa)(p));
    let bases = pou
        .bases
        .iter()
        .zip(layout.subdomains())
        .enumerate()
        .map(|(l, (cfg, sub))| cfg.build(sub, seed::derive_seed(seed, "basis", l as u64)))
        .collect::<Result<Vec<_>>>()?;
    Ok(TrialBasis::Pou(PoUBasis::new(layout, bases)?))
}

/// `[A; β̃B; λℳ]` against `[f; β̃g; 0]`.
pub fn weak_system(
    problem: &ProblemSpec,
    basis: &TrialBasis,
    weak: &WeakConfig,
    interface: Option<(f64, usize)>,
    seed: u64,
) -> Result<AssembledSystem> {
    let tests = build_test_set(
        &problem.domain,
        weak.tests.n,
        [weak.tests.sigma; 2],
        weak.tests.n_l,
        seed::derive_seed(seed, "tests", 0),
    )?;
    let (a, f) = assemble_weak(basis, &tests, problem, &weak.quadrature, seed::derive_seed(seed, "quadrature", 0))?;
    let w = weak.tests.normalization.row_weight([weak.tests.sigma; 2]);
    let mut parts = vec![Part::new(BlockKind::Weak, a, f, w)];
    if problem.mode == BoundaryMode::Soft {
        let samples = sample_boundary(
            &problem.domain,
            weak.boundary.n_per_edge,
            weak.boundary.mode,
            seed::derive_seed(seed, "boundary", 0),
        )?;
        let (b, g) = assemble_boundary(basis, &samples, problem)?;
        let w = weak_boundary_weight(weak.beta, problem.domain.perimeter(), samples.len());
        parts.push(Part::new(BlockKind::Boundary, b, g, w));
    }
    if let (Some((lambda, n)), TrialBasis::Pou(pou)) = (interface, basis) {
        if !pou.layout().interfaces().is_empty() {
            let m = assemble_interface(pou, problem, n)?;
            let rows = m.nrows();
            parts.push(Part::new(BlockKind::Interface, m, vec![0.0; rows], lambda));
        }
    }
    AssembledSystem::stack(basis.ncols(), parts)
}

fn finish(basis: TrialBasis, method: Method, system: &AssembledSystem, rcond: f64, assemble_ms: f64) -> Result<Solution> {
    let t = Instant::now();
    let (alpha, residual, rank) = lstsq(&system.matrix, &system.rhs, rcond)?;
    Ok(Solution {
        coefficients: alpha,
        basis,
        method,
        diagnostics: Diagnostics {
            residual,
            rows: system.matrix.nrows(),
            cols: system.matrix.ncols(),
            rank,
            assemble_ms,
            solve_ms: t.elapsed().as_secs_f64() * 1e3,
        },
    })
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

pub fn solve_wtn(problem: &ProblemSpec, basis: &BasisConfig, weak: &WeakConfig, seed: u64) -> Result<Solution> {
    let t = Instant::now();
    let b = build_wtn_basis(problem, basis, seed)?;
    let system = weak_system(problem, &b, weak, None, seed)?;
    finish(b, Method::Wtn, &system, weak.rcond, ms(t))
}

pub fn solve_fwtn(
    problem: &ProblemSpec,
    fourier: &FourierConfig,
    basis: &BasisConfig,
    weak: &WeakConfig,
    seed: u64,
) -> Result<Solution> {
    let t = Instant::now();
    let b = build_fwtn_basis(problem, fourier, basis, seed)?;
    let system = weak_system(problem, &b, weak, None, seed)?;
    finish(b, Method::Fwtn, &system, weak.rcond, ms(t))
}

pub fn solve_pou_wtn(problem: &ProblemSpec, pou: &PouConfig, weak: &WeakConfig, seed: u64) -> Result<Solution> {
    let t = Instant::now();
    let b = build_pou_basis(problem, pou, seed)?;
    let system = weak_system(problem, &b, weak, Some((pou.lambda, pou.n_interface)), seed)?;
    finish(b, Method::PouWtn, &system, weak.rcond, ms(t))
}

fn interior_samples(domain: &Domain, n: usize, seed: u64) -> Result<Vec<Point>> {
    if n == 0 {
        return Err(Error::invalid("at least one interior sample is required"));
    }
    let mut rng = seed::stream(seed, "interior", 0);
    Ok((0..n).map(|_| domain.sample_uniform(&mut rng)).collect())
}

/// Strong-form collocation system with its trial basis.
pub fn sf_system(problem: &ProblemSpec, basis: &TrialBasis, cfg: &CollocationConfig, seed: u64) -> Result<AssembledSystem> {
    let interior = interior_samples(&problem.domain, cfg.n_interior, seed)?;
    let (a, f) = assemble_sf(basis, &interior, problem)?;
    let mut parts = vec![Part::new(BlockKind::Strong, a, f, 1.0)];
    if problem.mode == BoundaryMode::Soft {
        let samples = sample_boundary(&problem.domain, cfg.boundary.n_per_edge, cfg.boundary.mode, seed::derive_seed(seed, "boundary", 0))?;
        let (b, g) = assemble_boundary(basis, &samples, problem)?;
        let w = sf_boundary_weight(cfg.beta, problem.domain.perimeter(), problem.domain.area(), interior.len(), samples.len());
        parts.push(Part::new(BlockKind::Boundary, b, g, w));
    }
    AssembledSystem::stack(basis.ncols(), parts)
}

pub fn solve_sf(problem: &ProblemSpec, basis: &BasisConfig, cfg: &CollocationConfig, seed: u64) -> Result<Solution> {
    let t = Instant::now();
    let b = build_wtn_basis(problem, basis, seed)?;
    let system = sf_system(problem, &b, cfg, seed)?;
    finish(b, Method::Sf, &system, cfg.rcond, ms(t))
}

/// Ritz system: the energy and boundary rows in `matrix`/`rhs` plus the
/// linear source term in `linear`.
pub fn drm_system(problem: &ProblemSpec, basis: &TrialBasis, cfg: &CollocationConfig, seed: u64) -> Result<AssembledSystem> {
    let interior = interior_samples(&problem.domain, cfg.n_interior, seed)?;
    let (l, linear) = assemble_drm(basis, &interior, problem)?;
    let rows = l.nrows();
    let mut parts = vec![Part::new(BlockKind::Energy, l, vec![0.0; rows], 1.0)];
    if problem.mode == BoundaryMode::Soft {
        let samples = sample_boundary(&problem.domain, cfg.boundary.n_per_edge, cfg.boundary.mode, seed::derive_seed(seed, "boundary", 0))?;
        let (b, g) = assemble_boundary(basis, &samples, problem)?;
        let w = drm_boundary_weight(cfg.beta, problem.domain.perimeter(), problem.domain.area(), interior.len(), samples.len());
        parts.push(Part::new(BlockKind::Boundary, b, g, w));
    }
    let mut system = AssembledSystem::stack(basis.ncols(), parts)?;
    system.linear = Some(linear);
    Ok(system)
}

/// Minimizer of `‖Lα − r‖² − ℓᵀα`: plain least squares when `ℓ = 0`,
/// otherwise `(LᵀL + εI) α = Lᵀr + ℓ/2`.
pub fn solve_ritz(system: &AssembledSystem, epsilon: f64, rcond: f64) -> Result<(Vec<f64>, usize)> {
    let l = &system.matrix;
    let linear = system.linear.as_deref().unwrap_or(&[]);
    if linear.iter().all(|&v| v == 0.0) {
        let (alpha, _, rank) = lstsq(l, &system.rhs, rcond)?;
        return Ok((alpha, rank));
    }
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(Error::invalid("the Ritz normal equations need a positive ε"));
    }
    let n = l.ncols();
    let mut g = l.transpose() * l;
    for i in 0..n {
        g[(i, i)] += epsilon;
    }
    let r = Mat::from_fn(system.rhs.len(), 1, |i, _| system.rhs[i]);
    let mut b = l.transpose() * &r;
    for (i, v) in linear.iter().enumerate() {
        b[(i, 0)] += 0.5 * v;
    }
    let chol = g.llt(Side::Lower).map_err(|e| Error::LinAlg(format!("Cholesky failed: {e:?}")))?;
    let mut x = chol.solve(&b);
    // one step of iterative refinement
    let res = &b - &g * &x;
    x += chol.solve(&res);
    Ok(((0..n).map(|i| x[(i, 0)]).collect(), n))
}

pub fn solve_drm(
    problem: &ProblemSpec,
    basis: &BasisConfig,
    cfg: &CollocationConfig,
    epsilon: f64,
    seed: u64,
) -> Result<Solution> {
    let t = Instant::now();
    let b = build_wtn_basis(problem, basis, seed)?;
    let system = drm_system(problem, &b, cfg, seed)?;
    let assemble_ms = ms(t);
    let t = Instant::now();
    let (alpha, rank) = solve_ritz(&system, epsilon, cfg.rcond)?;
    let residual = residual_norm(&system.matrix, &alpha, &system.rhs);
    Ok(Solution {
        coefficients: alpha,
        basis: b,
        method: Method::Drm,
        diagnostics: Diagnostics {
            residual,
            rows: system.matrix.nrows(),
            cols: system.matrix.ncols(),
            rank,
            assemble_ms,
            solve_ms: ms(t),
        },
    })
}
