//! TransNet trial bases.
//!
//! A basis is a constant column followed by `M` neurons
//! `tanh(γ_j (a_j · y + r_j))`, where `y` is either the shifted point
//! `x - c` or its Fourier lift, and `r_j ~ U[0, R]` so that the hyperplanes
//! are uniformly distributed over the ball of radius `R`. The shape
//! parameters act in physical units. Matrices are column-major `faer::Mat`
//! with one row per point.

mod fourier;
mod pou;

pub use fourier::FourierMap;
pub use pou::PoUBasis;

use faer::Mat;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point, Rect};
use crate::seed;

/// Highest derivative order requested from an evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Order {
    Value,
    Gradient,
    Laplacian,
}

/// Basis values at a set of points: `value[(m, j)] = φ_j(x_m)`.
#[derive(Debug, Clone)]
pub struct BasisValues {
    pub value: Mat<f64>,
    pub grad: Option<[Mat<f64>; 2]>,
    pub laplacian: Option<Mat<f64>>,
}

impl BasisValues {
    fn zeros(n: usize, m: usize, order: Order) -> Self {
        BasisValues {
            value: Mat::zeros(n, m),
            grad: (order >= Order::Gradient).then(|| [Mat::zeros(n, m), Mat::zeros(n, m)]),
            laplacian: (order >= Order::Laplacian).then(|| Mat::zeros(n, m)),
        }
    }
}

/// Hard Dirichlet constraint: every basis function is multiplied by a bubble
/// vanishing on the boundary of a rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Constraint {
    #[default]
    None,
    /// `h = (x - x0)(x1 - x)(y - y0)(y1 - y)`.
    Bubble(Rect),
}

impl Constraint {
    /// `(h, ∇h, Δh)` at `p`.
    fn bubble(r: &Rect, p: Point) -> (f64, [f64; 2], f64) {
        let px = (p[0] - r.lo[0]) * (r.hi[0] - p[0]);
        let py = (p[1] - r.lo[1]) * (r.hi[1] - p[1]);
        let dpx = r.hi[0] + r.lo[0] - 2.0 * p[0];
        let dpy = r.hi[1] + r.lo[1] - 2.0 * p[1];
        (px * py, [dpx * py, px * dpy], -2.0 * py - 2.0 * px)
    }
}

/// `γ ≈ C M^{1/d} / R`, offered as a starting point for shape selection.
pub fn empirical_shape(c: f64, m: usize, d: usize, radius: f64) -> f64 {
    c * (m as f64).powf(1.0 / d as f64) / radius
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeuralBasis {
    /// Unit directions, one per neuron, each of the input dimension.
    directions: Vec<Vec<f64>>,
    offsets: Vec<f64>,
    gammas: Vec<f64>,
    center: Point,
    radius: f64,
    fourier: Option<FourierMap>,
    constraint: Constraint,
}

fn unit_direction(dim: usize, rng: &mut seed::Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

fn check_gammas(m: usize, gammas: &[f64]) -> Result<()> {
    if m == 0 {
        return Err(Error::invalid("basis needs at least one neuron"));
    }
    if gammas.len() != m {
        return Err(Error::Dimension(format!("{} shape parameters for {m} neurons", gammas.len())));
    }
    if gammas.iter().any(|g| !(g.is_finite() && *g > 0.0)) {
        return Err(Error::invalid("shape parameters must be positive and finite"));
    }
    Ok(())
}

impl NeuralBasis {
    /// Plain TransNet: hyperplanes uniformly distributed over the ball
    /// `B_radius(center)`.
    pub fn transnet(
        m: usize,
        gammas: &[f64],
        center: Point,
        radius: f64,
        seed: u64,
    ) -> Result<Self> {
        check_gammas(m, gammas)?;
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::invalid("ball radius must be positive"));
        }
        let mut rng = seed::rng_from_seed(seed);
        let mut directions = Vec::with_capacity(m);
        let mut offsets = Vec::with_capacity(m);
        for _ in 0..m {
            directions.push(unit_direction(2, &mut rng));
            offsets.push(rng.random::<f64>() * radius);
        }
        Ok(NeuralBasis {
            directions,
            offsets,
            gammas: gammas.to_vec(),
            center,
            radius,
            fourier: None,
            constraint: Constraint::None,
        })
    }

    /// TransNet on the Fourier-lifted inputs; hyperplanes cover the ball of
    /// radius `√P + ε_F` around the origin of the lifted space.
    pub fn fourier(m: usize, map: FourierMap, gammas: &[f64], seed: u64) -> Result<Self> {
        check_gammas(m, gammas)?;
        let radius = map.radius();
        let dim = map.output_dim();
        let mut rng = seed::rng_from_seed(seed);
        let mut directions = Vec::with_capacity(m);
        let mut offsets = Vec::with_capacity(m);
        for _ in 0..m {
            directions.push(unit_direction(dim, &mut rng));
            offsets.push(rng.random::<f64>() * radius);
        }
        Ok(NeuralBasis {
            directions,
            offsets,
            gammas: gammas.to_vec(),
            center: [0.0, 0.0],
            radius,
            fourier: Some(map),
            constraint: Constraint::None,
        })
    }

    pub fn with_constraint(mut self, constraint: Constraint) -> Self {
        self.constraint = constraint;
        self
    }

    /// Number of neurons `M` (the basis has `M + 1` columns).
    pub fn neurons(&self) -> usize {
        self.offsets.len()
    }

    pub fn ncols(&self) -> usize {
        self.neurons() + 1
    }

    pub fn directions(&self) -> &[Vec<f64>] {
        &self.directions
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    pub fn center(&self) -> Point {
        self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn fourier_map(&self) -> Option<&FourierMap> {
        self.fourier.as_ref()
    }

    pub fn constraint(&self) -> Constraint {
        self.constraint
    }

    pub fn evaluate(&self, points: &[Point], order: Order) -> BasisValues {
        let mut out = match &self.fourier {
            None => self.evaluate_plain(points, order),
            Some(map) => self.evaluate_fourier(map, points, order),
        };
        if let Constraint::Bubble(r) = self.constraint {
            apply_bubble(&r, points, &mut out);
        }
        out
    }

    pub fn eval(&self, points: &[Point]) -> Mat<f64> {
        self.evaluate(points, Order::Value).value
    }

    pub fn eval_grad(&self, points: &[Point]) -> [Mat<f64>; 2] {
        self.evaluate(points, Order::Gradient).grad.expect("gradient requested")
    }

    pub fn eval_laplacian(&self, points: &[Point]) -> Mat<f64> {
        self.evaluate(points, Order::Laplacian).laplacian.expect("laplacian requested")
    }

    fn evaluate_plain(&self, points: &[Point], order: Order) -> BasisValues {
        let n = points.len();
        let mut out = BasisValues::zeros(n, self.ncols(), order);
        for m in 0..n {
            out.value[(m, 0)] = 1.0;
        }
        for j in 0..self.neurons() {
            let a = &self.directions[j];
            let g = self.gammas[j];
            let (zx, zy) = (g * a[0], g * a[1]);
            let zsq = zx * zx + zy * zy;
            for (m, p) in points.iter().enumerate() {
                let z = zx * (p[0] - self.center[0]) + zy * (p[1] - self.center[1]) + g * self.offsets[j];
                let t = z.tanh();
                let s = 1.0 - t * t;
                out.value[(m, j + 1)] = t;
                if let Some([gx, gy]) = out.grad.as_mut() {
                    gx[(m, j + 1)] = s * zx;
                    gy[(m, j + 1)] = s * zy;
                }
                if let Some(lap) = out.laplacian.as_mut() {
                    lap[(m, j + 1)] = -2.0 * t * s * zsq;
                }
            }
        }
        out
    }

    fn evaluate_fourier(&self, map: &FourierMap, points: &[Point], order: Order) -> BasisValues {
        let n = points.len();
        let mdim = self.neurons();
        let dim = map.output_dim();
        // W[:, j] = γ_j a_j, so Z = Ξ W + b.
        let w = Mat::<f64>::from_fn(dim, mdim, |k, j| self.gammas[j] * self.directions[j][k]);
        let lift = map.lift_all(points, order);
        let z = &lift.value * &w;
        let zk = lift.grad.as_ref().map(|[gx, gy]| [gx * &w, gy * &w]);
        let zlap = lift.laplacian.as_ref().map(|l| l * &w);

        let mut out = BasisValues::zeros(n, self.ncols(), order);
        for m in 0..n {
            out.value[(m, 0)] = 1.0;
        }
        for j in 0..mdim {
            let b = self.gammas[j] * self.offsets[j];
            for m in 0..n {
                let t = (z[(m, j)] + b).tanh();
                let s = 1.0 - t * t;
                out.value[(m, j + 1)] = t;
                if let (Some([gx, gy]), Some([zx, zy])) = (out.grad.as_mut(), zk.as_ref()) {
                    gx[(m, j + 1)] = s * zx[(m, j)];
                    gy[(m, j + 1)] = s * zy[(m, j)];
                }
                if let (Some(lap), Some([zx, zy]), Some(zl)) =
                    (out.laplacian.as_mut(), zk.as_ref(), zlap.as_ref())
                {
                    let zsq = zx[(m, j)].powi(2) + zy[(m, j)].powi(2);
                    lap[(m, j + 1)] = -2.0 * t * s * zsq + s * zl[(m, j)];
                }
            }
        }
        out
    }
}

fn apply_bubble(r: &Rect, points: &[Point], out: &mut BasisValues) {
    let ncols = out.value.ncols();
    for (m, p) in points.iter().enumerate() {
        let (h, dh, lh) = Constraint::bubble(r, *p);
        for j in 0..ncols {
            let v = out.value[(m, j)];
            if let Some(lap) = out.laplacian.as_mut() {
                let [gx, gy] = out.grad.as_ref().expect("laplacian implies gradient");
                let l = lap[(m, j)];
                lap[(m, j)] = lh * v + 2.0 * (dh[0] * gx[(m, j)] + dh[1] * gy[(m, j)]) + h * l;
            }
            if let Some([gx, gy]) = out.grad.as_mut() {
                gx[(m, j)] = dh[0] * v + h * gx[(m, j)];
                gy[(m, j)] = dh[1] * v + h * gy[(m, j)];
            }
            out.value[(m, j)] = h * v;
        }
    }
}

/// A trial space: one global basis or a partition-of-unity patchwork.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrialBasis {
    Single(NeuralBasis),
    Pou(PoUBasis),
}

impl TrialBasis {
    pub fn ncols(&self) -> usize {
        match self {
            TrialBasis::Single(b) => b.ncols(),
            TrialBasis::Pou(b) => b.ncols(),
        }
    }

    pub fn evaluate(&self, points: &[Point], order: Order) -> BasisValues {
        match self {
            TrialBasis::Single(b) => b.evaluate(points, order),
            TrialBasis::Pou(b) => b.evaluate(points, order),
        }
    }

    pub fn eval(&self, points: &[Point]) -> Mat<f64> {
        self.evaluate(points, Order::Value).value
    }

    /// Local bases with their column offsets in the global coefficient vector.
    pub fn blocks(&self) -> Vec<(usize, &NeuralBasis)> {
        match self {
            TrialBasis::Single(b) => vec![(0, b)],
            TrialBasis::Pou(p) => p.offsets().iter().copied().zip(p.bases()).collect(),
        }
    }
}
