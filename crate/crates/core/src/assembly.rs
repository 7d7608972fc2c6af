//! Linear blocks of the least-squares systems.
//!
//! Weak rows: `A_ij = ∫_Ω κ∇φ_j·∇ψ_i − ∫_∂Ω ψ_i κ ∂φ_j/∂n`, `f_i = ∫_Ω f ψ_i`.
//! The κ inside the boundary term makes `A` the exact integration by parts
//! of `−∇·(κ∇u)` against `ψ`; for κ ≡ 1 it reduces to the Poisson form.

use std::fmt;
use std::ops::Range;
use std::sync::Arc;

use faer::Mat;

use crate::basis::{Order, PoUBasis, TrialBasis};
use crate::error::{Error, Result};
use crate::geometry::{BoundarySample, Domain, PartitionLayout, Point};
use crate::quadrature::{gaussian_samples, Lattice, QuadratureConfig, QuadratureRule};
use crate::seed;
use crate::test_space::TestFunction;

pub type ScalarField = Arc<dyn Fn(Point) -> f64 + Send + Sync>;
pub type VectorField = Arc<dyn Fn(Point) -> [f64; 2] + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryMode {
    /// Dirichlet data imposed by penalty rows.
    #[default]
    Soft,
    /// Dirichlet data built into the trial space by a bubble multiplier.
    Hard,
}

/// `-∇·(κ∇u) = f` in Ω, `u = g` on ∂Ω.
#[derive(Clone)]
pub struct ProblemSpec {
    pub domain: Domain,
    pub kappa: ScalarField,
    /// Required by the strong form whenever κ is not constant.
    pub kappa_grad: Option<VectorField>,
    pub kappa_constant: bool,
    pub source: ScalarField,
    pub boundary: ScalarField,
    pub exact: Option<ScalarField>,
    pub mode: BoundaryMode,
    /// Vertical lines across which κ or f jump.
    pub breaks_x: Vec<f64>,
    /// Horizontal lines across which κ or f jump.
    pub breaks_y: Vec<f64>,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("domain", &self.domain)
            .field("kappa_constant", &self.kappa_constant)
            .field("has_exact", &self.exact.is_some())
            .field("mode", &self.mode)
            .field("breaks_x", &self.breaks_x)
            .field("breaks_y", &self.breaks_y)
            .finish_non_exhaustive()
    }
}

impl ProblemSpec {
    /// Poisson problem (κ ≡ 1) with soft Dirichlet data.
    pub fn poisson(domain: Domain, source: ScalarField, boundary: ScalarField) -> Self {
        ProblemSpec {
            domain,
            kappa: Arc::new(|_| 1.0),
            kappa_grad: Some(Arc::new(|_| [0.0, 0.0])),
            kappa_constant: true,
            source,
            boundary,
            exact: None,
            mode: BoundaryMode::Soft,
            breaks_x: Vec::new(),
            breaks_y: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockKind {
    Weak,
    Strong,
    Energy,
    Boundary,
    Interface,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub kind: BlockKind,
    pub rows: Range<usize>,
    pub weight: f64,
}

/// One block of rows before stacking; `weight` multiplies matrix and rhs.
#[derive(Debug, Clone)]
pub struct Part {
    pub kind: BlockKind,
    pub matrix: Mat<f64>,
    pub rhs: Vec<f64>,
    pub weight: f64,
}

impl Part {
    pub fn new(kind: BlockKind, matrix: Mat<f64>, rhs: Vec<f64>, weight: f64) -> Self {
        Part { kind, matrix, rhs, weight }
    }
}

#[derive(Debug, Clone)]
pub struct AssembledSystem {
    pub matrix: Mat<f64>,
    pub rhs: Vec<f64>,
    pub blocks: Vec<Block>,
    /// Linear energy term for the Ritz normal equations.
    pub linear: Option<Vec<f64>>,
}

impl AssembledSystem {
    pub fn stack(ncols: usize, parts: Vec<Part>) -> Result<Self> {
        let nrows: usize = parts.iter().map(|p| p.matrix.nrows()).sum();
        let mut matrix = Mat::zeros(nrows, ncols);
        let mut rhs = Vec::with_capacity(nrows);
        let mut blocks = Vec::with_capacity(parts.len());
        let mut row = 0;
        for p in parts {
            if p.matrix.ncols() != ncols || p.rhs.len() != p.matrix.nrows() {
                return Err(Error::Dimension(format!(
                    "{:?} block is {}x{} with {} rhs entries, expected {ncols} columns",
                    p.kind,
                    p.matrix.nrows(),
                    p.matrix.ncols(),
                    p.rhs.len()
                )));
            }
            let n = p.matrix.nrows();
            for j in 0..ncols {
                for i in 0..n {
                    matrix[(row + i, j)] = p.weight * p.matrix[(i, j)];
                }
            }
            rhs.extend(p.rhs.iter().map(|v| p.weight * v));
            blocks.push(Block { kind: p.kind, rows: row..row + n, weight: p.weight });
            row += n;
        }
        Ok(AssembledSystem { matrix, rhs, blocks, linear: None })
    }

    pub fn block(&self, kind: BlockKind) -> Option<&Block> {
        self.blocks.iter().find(|b| b.kind == kind)
    }

    /// `‖L_b α − r_b‖₂` over one block with its weight divided out.
    pub fn block_residual(&self, kind: BlockKind, alpha: &[f64]) -> Option<f64> {
        let b = self.block(kind)?;
        let mut sum = 0.0;
        for i in b.rows.clone() {
            let row: f64 = (0..self.matrix.ncols()).map(|j| self.matrix[(i, j)] * alpha[j]).sum();
            sum += (row - self.rhs[i]) * (row - self.rhs[i]);
        }
        Some(sum.sqrt() / b.weight)
    }
}

/// `β̃ = √(β |∂Ω| / N_∂Ω)` for weak-form systems.
pub fn weak_boundary_weight(beta: f64, perimeter: f64, n_boundary: usize) -> f64 {
    (beta * perimeter / n_boundary as f64).sqrt()
}

/// `β̃ = √(β |∂Ω| N_Ω / (|Ω| N_∂Ω))` for strong-form systems.
pub fn sf_boundary_weight(beta: f64, perimeter: f64, area: f64, n_interior: usize, n_boundary: usize) -> f64 {
    (beta * perimeter * n_interior as f64 / (area * n_boundary as f64)).sqrt()
}

/// `β̃ = √(2 β N_Ω |∂Ω| / (N_∂Ω |Ω|))` for Ritz systems.
pub fn drm_boundary_weight(beta: f64, perimeter: f64, area: f64, n_interior: usize, n_boundary: usize) -> f64 {
    (2.0 * beta * n_interior as f64 * perimeter / (n_boundary as f64 * area)).sqrt()
}

fn layout_for(basis: &TrialBasis, domain: &Domain) -> Result<PartitionLayout> {
    match basis {
        TrialBasis::Single(_) => PartitionLayout::single(domain.clone()),
        TrialBasis::Pou(p) => Ok(p.layout().clone()),
    }
}

/// Points per chunk of lattice nodes evaluated at once.
const CHUNK_POINTS: usize = 2048;

/// Weak stiffness `A` (N × ncols) and load `f`.
///
/// Simpson mode integrates on one lattice shared by all tests, with each
/// support box snapped outward to whole Simpson panels. Monte Carlo mode
/// replaces only the domain integrals; the boundary term always uses Simpson.
pub fn assemble_weak(
    basis: &TrialBasis,
    tests: &[TestFunction],
    problem: &ProblemSpec,
    quad: &QuadratureConfig,
    seed: u64,
) -> Result<(Mat<f64>, Vec<f64>)> {
    quad.validate()?;
    if tests.is_empty() {
        return Err(Error::invalid("weak assembly needs at least one test function"));
    }
    let layout = layout_for(basis, &problem.domain)?;
    let blocks = basis.blocks();
    let ntest = tests.len();
    let mut a = Mat::<f64>::zeros(ntest, basis.ncols());
    let mut f = vec![0.0; ntest];

    let half_width = tests
        .iter()
        .flat_map(|t| t.sigma.map(|s| s * f64::from(t.n_l)))
        .fold(f64::INFINITY, f64::min);
    let target_h = 2.0 * half_width / (quad.points_per_axis - 1) as f64;
    let lattice = Lattice::new(&problem.domain, &layout, &problem.breaks_x, &problem.breaks_y, target_h)?;
    let supports: Vec<_> = tests.iter().map(TestFunction::support).collect();
    let interior = quad.rule == QuadratureRule::Simpson;

    for (owner, &(offset, local)) in blocks.iter().enumerate() {
        let owned: Vec<_> = lattice.cells().iter().filter(|c| c.owner == owner).collect();
        let mut start = 0;
        while start < owned.len() {
            let mut end = start;
            let mut npts = 0;
            while end < owned.len() && (end == start || npts + owned[end].npoints() <= CHUNK_POINTS) {
                npts += owned[end].npoints();
                end += 1;
            }
            let chunk = &owned[start..end];
            start = end;

            let mut points = Vec::with_capacity(npts);
            let mut cell_offset = Vec::with_capacity(chunk.len());
            for c in chunk {
                cell_offset.push(points.len());
                for j in 0..=c.n[1] {
                    for i in 0..=c.n[0] {
                        points.push(c.node(i, j));
                    }
                }
            }
            let kappa: Vec<f64> = points.iter().map(|&p| (problem.kappa)(p)).collect();
            let source: Vec<f64> = if interior {
                points.iter().map(|&p| (problem.source)(p)).collect()
            } else {
                Vec::new()
            };

            let active: Vec<usize> = (0..ntest)
                .filter(|&t| {
                    chunk.iter().any(|c| {
                        c.snap(0, supports[t].lo[0], supports[t].hi[0]).is_some()
                            && c.snap(1, supports[t].lo[1], supports[t].hi[1]).is_some()
                    })
                })
                .collect();
            if active.is_empty() {
                continue;
            }
            let mut wx = Mat::<f64>::zeros(active.len(), points.len());
            let mut wy = Mat::<f64>::zeros(active.len(), points.len());
            let mut touched = false;

            for (r, &t) in active.iter().enumerate() {
                let psi = &tests[t];
                let s = &supports[t];
                for (c, &off) in chunk.iter().zip(&cell_offset) {
                    let (Some(rx), Some(ry)) = (c.snap(0, s.lo[0], s.hi[0]), c.snap(1, s.lo[1], s.hi[1])) else {
                        continue;
                    };
                    let (hx, hy) = (c.h(0), c.h(1));
                    let stride = c.n[0] + 1;
                    let idx = |i: usize, j: usize| off + j * stride + i;
                    if interior {
                        for j in ry.start..=ry.end {
                            let wyj = ry.weight(j, hy);
                            for i in rx.start..=rx.end {
                                let k = idx(i, j);
                                let w = wyj * rx.weight(i, hx);
                                let p = points[k];
                                let v = psi.value(p);
                                let g = psi.grad(p);
                                wx[(r, k)] += w * kappa[k] * g[0];
                                wy[(r, k)] += w * kappa[k] * g[1];
                                f[t] += w * v * source[k];
                            }
                        }
                        touched = true;
                    }
                    // −∫ ψ κ ∂φ/∂n along cell sides lying on ∂Ω
                    let mut side = |k: usize, w: f64, n: [f64; 2]| {
                        let v = psi.value(points[k]) * kappa[k] * w;
                        wx[(r, k)] -= v * n[0];
                        wy[(r, k)] -= v * n[1];
                        touched = true;
                    };
                    if c.boundary[0] && ry.start == 0 {
                        for i in rx.start..=rx.end {
                            side(idx(i, 0), rx.weight(i, hx), [0.0, -1.0]);
                        }
                    }
                    if c.boundary[1] && rx.end == c.n[0] {
                        for j in ry.start..=ry.end {
                            side(idx(c.n[0], j), ry.weight(j, hy), [1.0, 0.0]);
                        }
                    }
                    if c.boundary[2] && ry.end == c.n[1] {
                        for i in rx.start..=rx.end {
                            side(idx(i, c.n[1]), rx.weight(i, hx), [0.0, 1.0]);
                        }
                    }
                    if c.boundary[3] && rx.start == 0 {
                        for j in ry.start..=ry.end {
                            side(idx(0, j), ry.weight(j, hy), [-1.0, 0.0]);
                        }
                    }
                }
            }
            if !touched {
                continue;
            }
            let vals = local.evaluate(&points, Order::Gradient);
            let [gx, gy] = vals.grad.as_ref().expect("gradient requested");
            let prod = &wx * gx + &wy * gy;
            for (r, &t) in active.iter().enumerate() {
                for j in 0..prod.ncols() {
                    a[(t, offset + j)] += prod[(r, j)];
                }
            }
        }
    }

    if !interior {
        add_monte_carlo(basis, &layout, tests, problem, quad.mc_samples, seed, &mut a, &mut f);
    }
    Ok((a, f))
}

/// Domain integrals by sampling each test's own density:
/// `∫ κ∇φ·∇ψ = E_ψ[κ ∇φ · (−(x−μ)/σ²)]`, `∫ fψ = E_ψ[f]`.
#[allow(clippy::too_many_arguments)]
fn add_monte_carlo(
    basis: &TrialBasis,
    layout: &PartitionLayout,
    tests: &[TestFunction],
    problem: &ProblemSpec,
    n: usize,
    seed: u64,
    a: &mut Mat<f64>,
    f: &mut [f64],
) {
    let blocks = basis.blocks();
    let inv_n = 1.0 / n as f64;
    for (t, psi) in tests.iter().enumerate() {
        let mut rng = seed::stream(seed, "mc", t as u64);
        let samples: Vec<Point> = gaussian_samples(psi, n, &mut rng)
            .into_iter()
            .filter(|p| problem.domain.contains(*p))
            .collect();
        for (owner, &(offset, local)) in blocks.iter().enumerate() {
            let pts: Vec<Point> = samples
                .iter()
                .copied()
                .filter(|&p| {
                    (0..layout.len()).find(|&l| layout.subdomains()[l].contains(p)) == Some(owner)
                })
                .collect();
            if pts.is_empty() {
                continue;
            }
            let vals = local.evaluate(&pts, Order::Gradient);
            let [gx, gy] = vals.grad.as_ref().expect("gradient requested");
            for (m, &p) in pts.iter().enumerate() {
                let k = (problem.kappa)(p) * inv_n;
                let dx = -(p[0] - psi.mean[0]) / (psi.sigma[0] * psi.sigma[0]);
                let dy = -(p[1] - psi.mean[1]) / (psi.sigma[1] * psi.sigma[1]);
                for j in 0..local.ncols() {
                    a[(t, offset + j)] += k * (dx * gx[(m, j)] + dy * gy[(m, j)]);
                }
                f[t] += inv_n * (problem.source)(p);
            }
        }
    }
}

/// `B_mj = φ_j(x_m)`, `g_m = g(x_m)`; the caller applies `β̃`.
pub fn assemble_boundary(
    basis: &TrialBasis,
    samples: &[BoundarySample],
    problem: &ProblemSpec,
) -> Result<(Mat<f64>, Vec<f64>)> {
    if problem.mode == BoundaryMode::Hard {
        return Err(Error::Unsupported(
            "boundary penalty rows requested for a hard-constrained problem".into(),
        ));
    }
    let pts: Vec<Point> = samples.iter().map(|s| s.point).collect();
    let b = basis.eval(&pts);
    let g = pts.iter().map(|&p| (problem.boundary)(p)).collect();
    Ok((b, g))
}

/// Continuity rows `ℳ⁰` followed by flux rows `ℳ¹`, `n_per_interface` of each
/// per interface. Both use the unwrapped local bases; κ is taken one-sided.
pub fn assemble_interface(pou: &PoUBasis, problem: &ProblemSpec, n_per_interface: usize) -> Result<Mat<f64>> {
    let layout = pou.layout();
    let ni = layout.interfaces().len();
    let mut m0 = Mat::<f64>::zeros(ni * n_per_interface, pou.ncols());
    let mut m1 = Mat::<f64>::zeros(ni * n_per_interface, pou.ncols());
    for (k, itf) in layout.interfaces().iter().enumerate() {
        let samples = layout.sample_interface(k, n_per_interface)?;
        let pts: Vec<Point> = samples.iter().map(|s| s.point).collect();
        let n = itf.normal;
        let d = 1e-9 * itf.length().max(1.0);
        for (side, sign) in [(itf.left, 1.0), (itf.right, -1.0)] {
            let vals = pou.evaluate_local(side, &pts, Order::Gradient);
            let [gx, gy] = vals.grad.as_ref().expect("gradient requested");
            let off = pou.offsets()[side];
            for (m, p) in pts.iter().enumerate() {
                // step into this side's subdomain
                let q = [p[0] + sign * -d * n[0], p[1] + sign * -d * n[1]];
                let kap = (problem.kappa)(q);
                let row = k * n_per_interface + m;
                for j in 0..vals.value.ncols() {
                    m0[(row, off + j)] = sign * vals.value[(m, j)];
                    m1[(row, off + j)] = sign * kap * (gx[(m, j)] * n[0] + gy[(m, j)] * n[1]);
                }
            }
        }
    }
    let mut out = Mat::zeros(2 * ni * n_per_interface, pou.ncols());
    let half = ni * n_per_interface;
    for j in 0..pou.ncols() {
        for i in 0..half {
            out[(i, j)] = m0[(i, j)];
            out[(half + i, j)] = m1[(i, j)];
        }
    }
    Ok(out)
}

/// Strong-form rows `−κΔφ − ∇κ·∇φ` and `f` at interior samples.
pub fn assemble_sf(basis: &TrialBasis, interior: &[Point], problem: &ProblemSpec) -> Result<(Mat<f64>, Vec<f64>)> {
    if !problem.kappa_constant && problem.kappa_grad.is_none() {
        return Err(Error::invalid("strong form with variable κ needs ∇κ"));
    }
    let vals = basis.evaluate(interior, Order::Laplacian);
    let lap = vals.laplacian.as_ref().expect("laplacian requested");
    let [gx, gy] = vals.grad.as_ref().expect("gradient requested");
    let mut a = Mat::zeros(interior.len(), basis.ncols());
    for (m, &p) in interior.iter().enumerate() {
        let k = (problem.kappa)(p);
        let dk = match &problem.kappa_grad {
            Some(g) if !problem.kappa_constant => g(p),
            _ => [0.0, 0.0],
        };
        for j in 0..basis.ncols() {
            a[(m, j)] = -k * lap[(m, j)] - dk[0] * gx[(m, j)] - dk[1] * gy[(m, j)];
        }
    }
    let f = interior.iter().map(|&p| (problem.source)(p)).collect();
    Ok((a, f))
}

/// Ritz blocks: `√(|Ω|/2N)·√κ Φ_x` over `√(|Ω|/2N)·√κ Φ_y`, and the linear
/// term `(|Ω|/N) Φᵀ f`.
pub fn assemble_drm(basis: &TrialBasis, interior: &[Point], problem: &ProblemSpec) -> Result<(Mat<f64>, Vec<f64>)> {
    let n = interior.len();
    if n == 0 {
        return Err(Error::invalid("Ritz assembly needs interior samples"));
    }
    let vals = basis.evaluate(interior, Order::Gradient);
    let [gx, gy] = vals.grad.as_ref().expect("gradient requested");
    let area = problem.domain.area();
    let c = (area / (2.0 * n as f64)).sqrt();
    let mut sk = Vec::with_capacity(n);
    for &p in interior {
        let k = (problem.kappa)(p);
        if k < 0.0 {
            return Err(Error::invalid(format!("negative κ = {k} at {p:?}")));
        }
        sk.push(c * k.sqrt());
    }
    let ncols = basis.ncols();
    let mut l = Mat::zeros(2 * n, ncols);
    for j in 0..ncols {
        for m in 0..n {
            l[(m, j)] = sk[m] * gx[(m, j)];
            l[(n + m, j)] = sk[m] * gy[(m, j)];
        }
    }
    let fw: Vec<f64> = interior.iter().map(|&p| area / n as f64 * (problem.source)(p)).collect();
    let mut linear = vec![0.0; ncols];
    for (j, lin) in linear.iter_mut().enumerate() {
        *lin = (0..n).map(|m| vals.value[(m, j)] * fw[m]).sum();
    }
    Ok((l, linear))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::NeuralBasis;
    use crate::geometry::{sample_boundary, SampleMode};
    use crate::test_space::build_test_set;

    fn unit_poisson() -> ProblemSpec {
        ProblemSpec::poisson(Domain::unit_square(), Arc::new(|_| 1.0), Arc::new(|_| 0.0))
    }

    fn basis(m: usize) -> TrialBasis {
        TrialBasis::Single(NeuralBasis::transnet(m, &vec![1.0; m], [0.5, 0.5], 0.5_f64.sqrt(), 9).unwrap())
    }

    #[test]
    fn constant_column_is_zero() {
        let tests = build_test_set(&Domain::unit_square(), 20, [0.05, 0.05], 10, 1).unwrap();
        let (a, _) = assemble_weak(&basis(10), &tests, &unit_poisson(), &QuadratureConfig::default(), 0).unwrap();
        for i in 0..a.nrows() {
            assert_eq!(a[(i, 0)], 0.0);
        }
        let (s, _) = assemble_sf(&basis(10), &[[0.3, 0.3], [0.9, 0.1]], &unit_poisson()).unwrap();
        assert_eq!(s[(0, 0)], 0.0);
        assert_eq!(s[(1, 0)], 0.0);
    }

    #[test]
    fn boundary_block() {
        let samples = sample_boundary(&Domain::unit_square(), 5, SampleMode::UniformGrid, 0).unwrap();
        let (b, g) = assemble_boundary(&basis(4), &samples, &unit_poisson()).unwrap();
        assert_eq!(b.nrows(), 20);
        assert!((0..20).all(|m| b[(m, 0)] == 1.0));
        assert!(g.iter().all(|&v| v == 0.0));
        let mut hard = unit_poisson();
        hard.mode = BoundaryMode::Hard;
        assert!(assemble_boundary(&basis(4), &samples, &hard).is_err());
    }

    #[test]
    fn boundary_weights() {
        let a = weak_boundary_weight(1.0, 4.0, 800);
        let b = weak_boundary_weight(1.0, 4.0, 1600);
        assert!((b / a - 0.5_f64.sqrt()).abs() < 1e-15);
        assert!((sf_boundary_weight(1.0, 4.0, 1.0, 1000, 800) - 5.0_f64.sqrt()).abs() < 1e-14);
        assert!((drm_boundary_weight(1.0, 4.0, 1.0, 1000, 800) - 10.0_f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn stacking_records_blocks() {
        let p1 = Part::new(BlockKind::Weak, Mat::from_fn(2, 3, |i, j| (i + j) as f64), vec![1.0, 2.0], 1.0);
        let p2 = Part::new(BlockKind::Boundary, Mat::from_fn(1, 3, |_, _| 1.0), vec![3.0], 2.0);
        let s = AssembledSystem::stack(3, vec![p1, p2]).unwrap();
        assert_eq!(s.matrix.nrows(), 3);
        assert_eq!(s.rhs, vec![1.0, 2.0, 6.0]);
        assert_eq!(s.matrix[(2, 1)], 2.0);
        assert_eq!(s.block(BlockKind::Boundary).unwrap().rows, 2..3);
        let bad = Part::new(BlockKind::Weak, Mat::zeros(2, 2), vec![0.0; 2], 1.0);
        assert!(AssembledSystem::stack(3, vec![bad]).is_err());
    }

    #[test]
    fn drm_with_unit_kappa_is_scaled_gradient() {
        let pts = [[0.2, 0.3], [0.6, 0.8]];
        let b = basis(5);
        let (l, lin) = assemble_drm(&b, &pts, &unit_poisson()).unwrap();
        let TrialBasis::Single(nb) = &b else { unreachable!() };
        let [gx, _] = nb.eval_grad(&pts);
        let c = (1.0_f64 / 4.0).sqrt();
        assert!((l[(1, 3)] - c * gx[(1, 3)]).abs() < 1e-15);
        assert!((lin[0] - 1.0).abs() < 1e-15);
    }
}
