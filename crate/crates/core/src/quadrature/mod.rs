//! Composite Simpson and Monte Carlo integration.

mod lattice;

pub use lattice::{Cell, Lattice, SnappedRange};

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{clip_box, Domain, Point, Rect};
use crate::seed;
use crate::test_space::TestFunction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadratureRule {
    #[default]
    Simpson,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureConfig {
    pub rule: QuadratureRule,
    /// Simpson points per axis across one test-function support box.
    pub points_per_axis: usize,
    /// Gaussian draws per test function for the Monte Carlo rule.
    pub mc_samples: usize,
    /// Simpson points per boundary edge for stand-alone line integrals.
    pub boundary_points_per_edge: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            rule: QuadratureRule::Simpson,
            points_per_axis: 65,
            mc_samples: 1024,
            boundary_points_per_edge: 201,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        check_simpson_count(self.points_per_axis)?;
        check_simpson_count(self.boundary_points_per_edge)?;
        if self.rule == QuadratureRule::MonteCarlo && self.mc_samples == 0 {
            return Err(Error::invalid("Monte Carlo quadrature needs at least one sample"));
        }
        Ok(())
    }
}

fn check_simpson_count(n: usize) -> Result<()> {
    if n < 3 || n % 2 == 0 {
        return Err(Error::invalid(format!("Simpson point count must be odd and ≥ 3, got {n}")));
    }
    Ok(())
}

/// Composite Simpson weights for `n` equally spaced nodes over `[a, b]`.
pub fn simpson_weights(a: f64, b: f64, n: usize) -> Result<Vec<f64>> {
    check_simpson_count(n)?;
    let scale = (b - a) / (3 * (n - 1)) as f64;
    Ok((0..n)
        .map(|k| {
            let c = if k == 0 || k == n - 1 {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            };
            c * scale
        })
        .collect())
}

fn nodes(a: f64, b: f64, n: usize) -> impl Iterator<Item = f64> {
    let h = (b - a) / (n - 1) as f64;
    (0..n).map(move |k| if k == n - 1 { b } else { a + k as f64 * h })
}

/// Tensor-product composite Simpson over a box.
pub fn simpson_box(f: impl Fn(Point) -> f64, bx: &Rect, n_per_axis: usize) -> Result<f64> {
    check_simpson_count(n_per_axis)?;
    let n = n_per_axis;
    // integer Simpson coefficients, scaled once at the end
    let coef = |k: usize| if k == 0 || k == n - 1 { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
    let xs: Vec<f64> = nodes(bx.lo[0], bx.hi[0], n).collect();
    let mut total = 0.0;
    for (j, y) in nodes(bx.lo[1], bx.hi[1], n).enumerate() {
        let row: f64 = xs.iter().enumerate().map(|(i, &x)| coef(i) * f([x, y])).sum();
        total += coef(j) * row;
    }
    let denom = (9 * (n - 1) * (n - 1)) as f64;
    Ok(total * bx.area() / denom)
}

/// Simpson over `box ∩ Ω`, piece by piece.
pub fn integrate_clipped(
    f: impl Fn(Point) -> f64,
    domain: &Domain,
    bx: &Rect,
    n_per_axis: usize,
) -> Result<f64> {
    check_simpson_count(n_per_axis)?;
    clip_box(domain, bx).iter().map(|r| simpson_box(&f, r, n_per_axis)).sum()
}

#[derive(Debug, Clone, Copy)]
pub enum Sampler<'a> {
    /// `|Ω| · mean f` over uniform samples of the domain.
    Uniform(&'a Domain),
    /// `∫_Ω g ψ ≈ mean g(x)` over `x ~ ψ`; draws outside Ω count as zero.
    Gaussian { psi: &'a TestFunction, domain: &'a Domain },
}

pub fn mc_integrate(f: impl Fn(Point) -> f64, sampler: Sampler<'_>, n: usize, seed: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("Monte Carlo integration needs at least one sample"));
    }
    let mut rng = seed::rng_from_seed(seed);
    match sampler {
        Sampler::Uniform(domain) => {
            let sum: f64 = (0..n).map(|_| f(domain.sample_uniform(&mut rng))).sum();
            Ok(domain.area() * sum / n as f64)
        }
        Sampler::Gaussian { psi, domain } => {
            let sum: f64 = gaussian_samples(psi, n, &mut rng)
                .into_iter()
                .filter(|p| domain.contains(*p))
                .map(&f)
                .sum();
            Ok(sum / n as f64)
        }
    }
}

/// `n` draws from the density `ψ`.
pub fn gaussian_samples(psi: &TestFunction, n: usize, rng: &mut seed::Rng) -> Vec<Point> {
    let dx = Normal::new(psi.mean[0], psi.sigma[0]).expect("validated σ");
    let dy = Normal::new(psi.mean[1], psi.sigma[1]).expect("validated σ");
    (0..n).map(|_| [dx.sample(rng), dy.sample(rng)]).collect()
}

/// `∮_{∂Ω} f ds` with composite Simpson on every straight edge.
pub fn edge_integral(f: impl Fn(Point) -> f64, domain: &Domain, n_per_edge: usize) -> Result<f64> {
    check_simpson_count(n_per_edge)?;
    let mut total = 0.0;
    for e in domain.edges() {
        let w = simpson_weights(0.0, e.length(), n_per_edge)?;
        total += nodes(0.0, 1.0, n_per_edge)
            .zip(&w)
            .map(|(t, w)| w * f(e.point_at(t)))
            .sum::<f64>();
    }
    Ok(total)
}
