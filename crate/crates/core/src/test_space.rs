//! Gaussian radial test functions with diagonal covariance.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Domain, Point, Rect};
use crate::seed;

pub const DEFAULT_TRUNCATION: u32 = 10;

/// Scale applied to the weak rows before stacking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestNormalization {
    /// Rows tested against `ψ / ψ(μ)`, so every test function peaks at 1.
    #[default]
    Peak,
    /// Rows tested against the unit-mass density itself.
    Mass,
}

impl TestNormalization {
    pub fn row_weight(self, sigma: [f64; 2]) -> f64 {
        match self {
            TestNormalization::Peak => 2.0 * PI * sigma[0] * sigma[1],
            TestNormalization::Mass => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub mean: Point,
    pub sigma: [f64; 2],
    /// Support half-width in units of σ.
    pub n_l: u32,
}

impl TestFunction {
    pub fn new(mean: Point, sigma: [f64; 2], n_l: u32) -> Result<Self> {
        if sigma.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::invalid("test function σ must be positive"));
        }
        if n_l == 0 {
            return Err(Error::invalid("truncation multiplier must be positive"));
        }
        Ok(TestFunction { mean, sigma, n_l })
    }

    pub fn peak(&self) -> f64 {
        1.0 / (2.0 * PI * self.sigma[0] * self.sigma[1])
    }

    pub fn value(&self, x: Point) -> f64 {
        let u = (x[0] - self.mean[0]) / self.sigma[0];
        let v = (x[1] - self.mean[1]) / self.sigma[1];
        self.peak() * (-0.5 * (u * u + v * v)).exp()
    }

    pub fn grad(&self, x: Point) -> [f64; 2] {
        let psi = self.value(x);
        [
            -(x[0] - self.mean[0]) / (self.sigma[0] * self.sigma[0]) * psi,
            -(x[1] - self.mean[1]) / (self.sigma[1] * self.sigma[1]) * psi,
        ]
    }

    /// `∏ [μ_k - N_l σ_k, μ_k + N_l σ_k]`.
    pub fn support(&self) -> Rect {
        let nl = f64::from(self.n_l);
        Rect {
            lo: [self.mean[0] - nl * self.sigma[0], self.mean[1] - nl * self.sigma[1]],
            hi: [self.mean[0] + nl * self.sigma[0], self.mean[1] + nl * self.sigma[1]],
        }
    }
}

pub fn eval_test(psi: &TestFunction, points: &[Point]) -> Vec<f64> {
    points.iter().map(|&p| psi.value(p)).collect()
}

pub fn eval_test_grad(psi: &TestFunction, points: &[Point]) -> [Vec<f64>; 2] {
    let (gx, gy) = points.iter().map(|&p| psi.grad(p)).map(|g| (g[0], g[1])).unzip();
    [gx, gy]
}

/// `n` test functions with means uniform in the domain.
pub fn build_test_set(
    domain: &Domain,
    n: usize,
    sigma: [f64; 2],
    n_l: u32,
    seed: u64,
) -> Result<Vec<TestFunction>> {
    if n == 0 {
        return Err(Error::invalid("test set needs at least one function"));
    }
    domain.validate()?;
    let mut rng = seed::rng_from_seed(seed);
    (0..n)
        .map(|_| TestFunction::new(domain.sample_uniform(&mut rng), sigma, n_l))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn peak_and_gradient_at_mean() {
        let psi = TestFunction::new([0.3, 0.6], [0.05, 0.05], 10).unwrap();
        assert!((psi.value([0.3, 0.6]) - 63.661_977_236_758_13).abs() < 1e-10);
        assert_eq!(psi.grad([0.3, 0.6]), [0.0, 0.0]);
    }

    #[test]
    fn support_edge_value_bound() {
        let psi = TestFunction::new([0.0, 0.0], [0.03, 0.05], 10).unwrap();
        let s = psi.support();
        let corner_mid = [s.hi[0], 0.0];
        assert!(psi.value(corner_mid) <= (-50.0_f64).exp() * psi.peak() * (1.0 + 1e-12));
    }

    #[test]
    fn support_area_saving() {
        let psi = TestFunction::new([0.5, 0.5], [0.03, 0.03], 10).unwrap();
        let s = psi.support();
        assert!((s.width() - 0.6).abs() < 1e-15);
        assert!((1.0 - s.area() - 0.64).abs() < 1e-12);
    }

    #[test]
    fn sets_respect_domain() {
        let t = build_test_set(&Domain::unit_square(), 300, [0.05, 0.05], 10, 1).unwrap();
        assert_eq!(t.len(), 300);
        assert!(t.iter().all(|p| (0.0..=1.0).contains(&p.mean[0]) && (0.0..=1.0).contains(&p.mean[1])));

        let l = build_test_set(&Domain::canonical_l_shape(), 1800, [0.05, 0.05], 10, 2).unwrap();
        assert!(l.iter().all(|p| !(p.mean[0] < 0.0 && p.mean[1] < 0.0)));
        assert!(build_test_set(&Domain::unit_square(), 0, [0.05, 0.05], 10, 0).is_err());
        assert!(build_test_set(&Domain::unit_square(), 3, [0.0, 0.05], 10, 0).is_err());
    }
}
