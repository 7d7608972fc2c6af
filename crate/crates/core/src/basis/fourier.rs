use std::f64::consts::PI;

use faer::Mat;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::Order;
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::seed;

/// Random Fourier features `𝔉(x) = [cos 2π𝔅x ; sin 2π𝔅x]`.
///
/// Every lifted point lies on the sphere of radius `√P`, so the TransNet
/// ball in lifted space has radius `√P + ε_F`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierMap {
    rows: Vec<Point>,
    row_sigmas: Vec<f64>,
    margin: f64,
}

pub(super) struct LiftValues {
    pub value: Mat<f64>,
    pub grad: Option<[Mat<f64>; 2]>,
    pub laplacian: Option<Mat<f64>>,
}

impl FourierMap {
    /// `p` rows split into consecutive, near-equal groups, one per entry of
    /// `sigmas` (earlier groups get the extra row); group `k` is drawn from
    /// `N(0, sigmas[k]²)`.
    pub fn mixture(p: usize, sigmas: &[f64], margin: f64, seed: u64) -> Result<Self> {
        if p == 0 || sigmas.is_empty() {
            return Err(Error::invalid("Fourier map needs P ≥ 1 and at least one σ_B"));
        }
        if sigmas.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(Error::invalid("σ_B values must be finite and non-negative"));
        }
        if !(margin.is_finite() && margin > 0.0) {
            return Err(Error::invalid("Fourier ball margin must be positive"));
        }
        let mut rng = seed::rng_from_seed(seed);
        let groups = sigmas.len();
        let mut rows = Vec::with_capacity(p);
        let mut row_sigmas = Vec::with_capacity(p);
        for (g, &s) in sigmas.iter().enumerate() {
            let count = p / groups + usize::from(g < p % groups);
            for _ in 0..count {
                let row = if s == 0.0 {
                    [0.0, 0.0]
                } else {
                    let d = Normal::new(0.0, s).expect("validated σ");
                    [d.sample(&mut rng), d.sample(&mut rng)]
                };
                rows.push(row);
                row_sigmas.push(s);
            }
        }
        Ok(FourierMap { rows, row_sigmas, margin })
    }

    pub fn from_rows(rows: Vec<Point>, margin: f64) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::invalid("Fourier map needs at least one row"));
        }
        let n = rows.len();
        Ok(FourierMap { rows, row_sigmas: vec![f64::NAN; n], margin })
    }

    pub fn p(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Point] {
        &self.rows
    }

    pub fn row_sigmas(&self) -> &[f64] {
        &self.row_sigmas
    }

    pub fn output_dim(&self) -> usize {
        2 * self.p()
    }

    pub fn radius(&self) -> f64 {
        (self.p() as f64).sqrt() + self.margin
    }

    pub fn lift(&self, x: Point) -> Vec<f64> {
        let p = self.p();
        let mut out = vec![0.0; 2 * p];
        for (k, b) in self.rows.iter().enumerate() {
            let th = 2.0 * PI * (b[0] * x[0] + b[1] * x[1]);
            out[k] = th.cos();
            out[p + k] = th.sin();
        }
        out
    }

    /// Lifted points with Jacobian columns and the summed second derivative.
    pub(super) fn lift_all(&self, points: &[Point], order: Order) -> LiftValues {
        let n = points.len();
        let p = self.p();
        let mut value = Mat::zeros(n, 2 * p);
        let mut grad = (order >= Order::Gradient).then(|| [Mat::zeros(n, 2 * p), Mat::zeros(n, 2 * p)]);
        let mut laplacian = (order >= Order::Laplacian).then(|| Mat::zeros(n, 2 * p));
        for (k, b) in self.rows.iter().enumerate() {
            let w = [2.0 * PI * b[0], 2.0 * PI * b[1]];
            let wsq = w[0] * w[0] + w[1] * w[1];
            for (m, x) in points.iter().enumerate() {
                let (s, c) = (w[0] * x[0] + w[1] * x[1]).sin_cos();
                value[(m, k)] = c;
                value[(m, p + k)] = s;
                if let Some([gx, gy]) = grad.as_mut() {
                    gx[(m, k)] = -w[0] * s;
                    gy[(m, k)] = -w[1] * s;
                    gx[(m, p + k)] = w[0] * c;
                    gy[(m, p + k)] = w[1] * c;
                }
                if let Some(l) = laplacian.as_mut() {
                    l[(m, k)] = -wsq * c;
                    l[(m, p + k)] = -wsq * s;
                }
            }
        }
        LiftValues { value, grad, laplacian }
    }
}
