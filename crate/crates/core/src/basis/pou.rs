use faer::Mat;
use serde::{Deserialize, Serialize};

use super::{BasisValues, NeuralBasis, Order};
use crate::error::{Error, Result};
use crate::geometry::{PartitionLayout, Point};

/// Global basis `ζ_ν = χ^(ℓ) φ_j^(ℓ)`, enumerated subdomain-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoUBasis {
    layout: PartitionLayout,
    bases: Vec<NeuralBasis>,
    offsets: Vec<usize>,
}

impl PoUBasis {
    pub fn new(layout: PartitionLayout, bases: Vec<NeuralBasis>) -> Result<Self> {
        if bases.len() != layout.len() {
            return Err(Error::Dimension(format!(
                "{} local bases for {} subdomains",
                bases.len(),
                layout.len()
            )));
        }
        let mut offsets = Vec::with_capacity(bases.len());
        let mut acc = 0;
        for b in &bases {
            offsets.push(acc);
            acc += b.ncols();
        }
        Ok(PoUBasis { layout, bases, offsets })
    }

    pub fn layout(&self) -> &PartitionLayout {
        &self.layout
    }

    pub fn bases(&self) -> &[NeuralBasis] {
        &self.bases
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn ncols(&self) -> usize {
        self.bases.iter().map(NeuralBasis::ncols).sum()
    }

    /// Column range of subdomain `l` in the global coefficient vector.
    pub fn block(&self, l: usize) -> std::ops::Range<usize> {
        self.offsets[l]..self.offsets[l] + self.bases[l].ncols()
    }

    /// Unwrapped local basis of subdomain `l` (no χ factor).
    pub fn evaluate_local(&self, l: usize, points: &[Point], order: Order) -> BasisValues {
        self.bases[l].evaluate(points, order)
    }

    /// χ-weighted global evaluation. χ is piecewise constant, so derivatives
    /// carry the same factor as values.
    pub fn evaluate(&self, points: &[Point], order: Order) -> BasisValues {
        let n = points.len();
        let ncols = self.ncols();
        let mut out = BasisValues::zeros(n, ncols, order);
        for l in 0..self.bases.len() {
            let (rows, weights): (Vec<usize>, Vec<f64>) = points
                .iter()
                .enumerate()
                .filter_map(|(m, p)| {
                    let c = self.layout.chi(l, *p);
                    (c > 0.0).then_some((m, c))
                })
                .unzip();
            if rows.is_empty() {
                continue;
            }
            let local_pts: Vec<Point> = rows.iter().map(|&m| points[m]).collect();
            let local = self.bases[l].evaluate(&local_pts, order);
            let off = self.offsets[l];
            let scatter = |dst: &mut Mat<f64>, src: &Mat<f64>| {
                for j in 0..src.ncols() {
                    for (k, &m) in rows.iter().enumerate() {
                        dst[(m, off + j)] = weights[k] * src[(k, j)];
                    }
                }
            };
            scatter(&mut out.value, &local.value);
            if let (Some(dst), Some(src)) = (out.grad.as_mut(), local.grad.as_ref()) {
                scatter(&mut dst[0], &src[0]);
                scatter(&mut dst[1], &src[1]);
            }
            if let (Some(dst), Some(src)) = (out.laplacian.as_mut(), local.laplacian.as_ref()) {
                scatter(dst, src);
            }
        }
        out
    }
}
