//! Error metrics, projection studies and field export.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::basis::NeuralBasis;
use crate::error::{Error, Result};
use crate::geometry::{Domain, Point, Rect};
use crate::problems::ReferenceGrid;
use crate::assembly::ProblemSpec;
use crate::quadrature::QuadratureRule;
use crate::solvers::{lstsq, matvec, solve_wtn, BasisConfig, Solution, TestConfig, WeakConfig};

/// `‖û − u‖₂ / ‖u‖₂` over paired samples.
pub fn relative_l2(u_hat: &[f64], u_ref: &[f64]) -> Result<f64> {
    if u_hat.len() != u_ref.len() {
        return Err(Error::Dimension(format!("{} estimates for {} reference values", u_hat.len(), u_ref.len())));
    }
    let (num, den) = u_hat
        .iter()
        .zip(u_ref)
        .fold((0.0, 0.0), |(n, d), (a, b)| (n + (a - b) * (a - b), d + b * b));
    if !num.is_finite() || !den.is_finite() {
        return Err(Error::NonFinite("error samples"));
    }
    if den == 0.0 {
        return Err(Error::invalid("reference field has zero norm"));
    }
    Ok((num / den).sqrt())
}

/// A uniform `nx × ny` tensor grid over a box, row-major with x fastest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub bounds: Rect,
}

impl GridSpec {
    pub fn new(bounds: Rect, nx: usize, ny: usize) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(Error::invalid("evaluation grid needs at least 2 points per axis"));
        }
        Ok(GridSpec { nx, ny, bounds })
    }

    /// `n × n` grid over the bounding box of a domain.
    pub fn covering(domain: &Domain, n: usize) -> Result<Self> {
        GridSpec::new(domain.bounding_box(), n, n)
    }

    pub fn points(&self) -> Vec<Point> {
        let b = &self.bounds;
        let coord = |lo: f64, hi: f64, k: usize, n: usize| {
            if k == n - 1 {
                hi
            } else {
                lo + (hi - lo) * k as f64 / (n - 1) as f64
            }
        };
        let mut out = Vec::with_capacity(self.nx * self.ny);
        for j in 0..self.ny {
            let y = coord(b.lo[1], b.hi[1], j, self.ny);
            for i in 0..self.nx {
                out.push([coord(b.lo[0], b.hi[0], i, self.nx), y]);
            }
        }
        out
    }
}

/// Solution values on a grid; points outside the domain get NaN.
pub fn evaluate_on_grid(solution: &Solution, domain: &Domain, grid: &GridSpec) -> Vec<f64> {
    let pts = grid.points();
    let inside: Vec<usize> = (0..pts.len()).filter(|&k| domain.contains(pts[k])).collect();
    let sel: Vec<Point> = inside.iter().map(|&k| pts[k]).collect();
    let vals = solution.evaluate(&sel);
    let mut out = vec![f64::NAN; pts.len()];
    for (k, v) in inside.into_iter().zip(vals) {
        out[k] = v;
    }
    out
}

/// Relative error over the finite entries of `reference`.
pub fn relative_l2_masked(u_hat: &[f64], reference: &[f64]) -> Result<f64> {
    if u_hat.len() != reference.len() {
        return Err(Error::Dimension("grid sizes differ".into()));
    }
    let (a, b): (Vec<f64>, Vec<f64>) =
        u_hat.iter().zip(reference).filter(|(_, r)| r.is_finite()).map(|(a, r)| (*a, *r)).unzip();
    relative_l2(&a, &b)
}

/// Writes `x,y,u` rows; values use the shortest round-trip representation.
pub fn export_field_csv(path: &Path, points: &[Point], values: &[f64]) -> Result<()> {
    if points.len() != values.len() {
        return Err(Error::Dimension(format!("{} points for {} values", points.len(), values.len())));
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::invalid(format!("{other:?}")),
    })?;
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(["x", "y", "u"]).map_err(io)?;
    for (p, v) in points.iter().zip(values) {
        w.write_record([p[0].to_string(), p[1].to_string(), v.to_string()]).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

/// Pointwise `û − u_ref` on a shared grid.
pub fn pointwise_error(u_hat: &[f64], reference: &ReferenceGrid) -> Result<Vec<f64>> {
    if u_hat.len() != reference.values.len() {
        return Err(Error::Dimension("grid sizes differ".into()));
    }
    Ok(u_hat.iter().zip(&reference.values).map(|(a, b)| a - b).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub method: String,
    pub problem: String,
    pub hyperparameters: serde_json::Value,
    pub rel_l2: Option<f64>,
    pub seed: u64,
    pub wall_time_ms: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<serde_json::Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<serde_json::Value>,
}

/// Appends one JSON object per line.
pub fn append_report(path: &Path, report: &ErrorReport) -> Result<()> {
    let mut f = std::fs::OpenOptions::new().create(true).append(true).open(path)?;
    let line = serde_json::to_string(report).map_err(|e| Error::invalid(e.to_string()))?;
    writeln!(f, "{line}")?;
    Ok(())
}

/// `‖Aα* − t‖₂ / ‖t‖₂` for the least-squares projection of `target` onto
/// the basis columns sampled at `points`.
pub fn projection_error(basis: &NeuralBasis, target: &[f64], points: &[Point], rcond: f64) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::invalid("projection needs at least one sample"));
    }
    if target.len() != points.len() {
        return Err(Error::Dimension(format!("{} target values for {} points", target.len(), points.len())));
    }
    let tn = target.iter().map(|v| v * v).sum::<f64>().sqrt();
    if tn == 0.0 {
        return Err(Error::invalid("projection target has zero norm"));
    }
    let a = basis.eval(points);
    let (alpha, _, _) = lstsq(&a, target, rcond)?;
    let fit = matvec(&a, &alpha);
    let r = fit.iter().zip(target).map(|(f, t)| (f - t) * (f - t)).sum::<f64>().sqrt();
    Ok(r / tn)
}

/// Reading of the shape-study target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeTarget {
    /// `exp((x² − y²) / 2σ²) / (2πσ²)` exactly as printed.
    #[default]
    AsPrinted,
    /// The Gaussian bump `exp(−(x² + y²) / 2σ²) / (2πσ²)`.
    Bump,
}

impl ShapeTarget {
    pub fn eval(&self, sigma_f: f64, p: Point) -> f64 {
        self.exponent(sigma_f, p).exp() / (2.0 * PI * sigma_f * sigma_f)
    }

    fn exponent(&self, sigma_f: f64, p: Point) -> f64 {
        let s2 = sigma_f * sigma_f;
        match self {
            ShapeTarget::AsPrinted => (p[0] * p[0] - p[1] * p[1]) / (2.0 * s2),
            ShapeTarget::Bump => -(p[0] * p[0] + p[1] * p[1]) / (2.0 * s2),
        }
    }

    /// Target values divided by their maximum over `points`. The printed
    /// reading overflows f64 for small σ_f on the unit square, and the
    /// relative projection error does not see the scale.
    pub fn eval_scaled(&self, sigma_f: f64, points: &[Point]) -> Vec<f64> {
        let e: Vec<f64> = points.iter().map(|&p| self.exponent(sigma_f, p)).collect();
        let top = e.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        e.iter().map(|v| (v - top).exp()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeStudy {
    pub target: ShapeTarget,
    /// Study square `[-half, half]²`.
    pub half_width: f64,
    pub grid: usize,
    pub rcond: f64,
    /// Radius of the hyperplane ball; defaults to the square's half-diagonal.
    pub radius: Option<f64>,
}

impl Default for ShapeStudy {
    fn default() -> Self {
        ShapeStudy { target: ShapeTarget::AsPrinted, half_width: 1.0, grid: 101, rcond: 1e-12, radius: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeCurve {
    pub m: usize,
    pub sigma_f: f64,
    /// `(γ, median projection error over seeds)`.
    pub errors: Vec<(f64, f64)>,
    pub gamma_opt: f64,
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

impl ShapeStudy {
    pub fn curve(&self, m: usize, sigma_f: f64, gammas: &[f64], seeds: &[u64]) -> Result<ShapeCurve> {
        let h = self.half_width;
        let sq = Rect::new([-h, -h], [h, h])?;
        let pts = GridSpec::new(sq, self.grid, self.grid)?.points();
        let target = self.target.eval_scaled(sigma_f, &pts);
        let mut errors = Vec::with_capacity(gammas.len());
        for &g in gammas {
            let mut e = seeds
                .iter()
                .map(|&s| {
                    let b = NeuralBasis::transnet(m, &vec![g; m], [0.0, 0.0], self.radius.unwrap_or(sq.half_diagonal()), s)?;
                    projection_error(&b, &target, &pts, self.rcond)
                })
                .collect::<Result<Vec<_>>>()?;
            errors.push((g, median(&mut e)));
        }
        let gamma_opt = errors
            .iter()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|e| e.0)
            .ok_or_else(|| Error::invalid("empty γ grid"))?;
        Ok(ShapeCurve { m, sigma_f, errors, gamma_opt })
    }
}

/// Cartesian sweep over `(M, σ_f)` returning the error curve of each cell.
pub fn shape_sweep(
    study: &ShapeStudy,
    ms: &[usize],
    sigma_fs: &[f64],
    gammas: &[f64],
    seeds: &[u64],
) -> Result<Vec<ShapeCurve>> {
    let mut out = Vec::new();
    for &m in ms {
        for &s in sigma_fs {
            out.push(study.curve(m, s, gammas, seeds)?);
        }
    }
    Ok(out)
}

/// Monte Carlo against Simpson quadrature for the weak rows of one problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureStudy {
    pub m: usize,
    pub n: usize,
    pub gamma: f64,
    pub sigma: f64,
    pub n_l: u32,
    /// Simpson points per support-box axis; a box then holds `k²` nodes.
    pub simpson_points: Vec<usize>,
    /// Gaussian draws per test function.
    pub mc_samples: Vec<usize>,
    pub eval_grid: usize,
}

impl Default for QuadratureStudy {
    fn default() -> Self {
        QuadratureStudy {
            m: 200,
            n: 200,
            gamma: 1.0,
            sigma: 0.03,
            n_l: 10,
            simpson_points: vec![17, 33, 65],
            mc_samples: vec![289, 1089, 4225],
            eval_grid: 129,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRow {
    pub rule: QuadratureRule,
    /// Nodes per test function.
    pub n_points: usize,
    /// Median over seeds.
    pub rel_l2: f64,
}

impl QuadratureStudy {
    pub fn run(&self, problem: &ProblemSpec, exact: &dyn Fn(Point) -> f64, seeds: &[u64]) -> Result<Vec<QuadratureRow>> {
        if seeds.is_empty() {
            return Err(Error::invalid("quadrature study needs at least one seed"));
        }
        let grid = GridSpec::covering(&problem.domain, self.eval_grid)?;
        let pts: Vec<Point> = grid.points().into_iter().filter(|&p| problem.domain.contains(p)).collect();
        let u: Vec<f64> = pts.iter().map(|&p| exact(p)).collect();
        let cases = self
            .simpson_points
            .iter()
            .map(|&k| (QuadratureRule::Simpson, k, k * k))
            .chain(self.mc_samples.iter().map(|&k| (QuadratureRule::MonteCarlo, k, k)));
        let mut rows = Vec::new();
        for (rule, k, n_points) in cases {
            let mut weak = WeakConfig::new(TestConfig { n_l: self.n_l, ..TestConfig::new(self.n, self.sigma) });
            weak.quadrature.rule = rule;
            match rule {
                QuadratureRule::Simpson => weak.quadrature.points_per_axis = k,
                QuadratureRule::MonteCarlo => weak.quadrature.mc_samples = k,
            }
            let mut errs = seeds
                .iter()
                .map(|&s| {
                    let sol = solve_wtn(problem, &BasisConfig::new(self.m, self.gamma), &weak, s)?;
                    relative_l2(&sol.evaluate(&pts), &u)
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(QuadratureRow { rule, n_points, rel_l2: median(&mut errs) });
        }
        Ok(rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_l2_cases() {
        let u = [1.0, -2.0, 3.0];
        assert_eq!(relative_l2(&u, &u).unwrap(), 0.0);
        let twice: Vec<f64> = u.iter().map(|v| 2.0 * v).collect();
        assert!((relative_l2(&twice, &u).unwrap() - 1.0).abs() < 1e-15);
        let c = 0.5;
        let shifted: Vec<f64> = u.iter().map(|v| v + c).collect();
        let want = c * 3.0_f64.sqrt() / 14.0_f64.sqrt();
        assert!((relative_l2(&shifted, &u).unwrap() - want).abs() < 1e-15);
        assert!(relative_l2(&u, &[0.0; 3]).is_err());
        assert!(relative_l2(&u, &[1.0]).is_err());
    }

    #[test]
    fn grid_rows() {
        let g = GridSpec::covering(&Domain::unit_square(), 129).unwrap();
        let p = g.points();
        assert_eq!(p.len(), 16641);
        assert_eq!(p[1], [1.0 / 128.0, 0.0]);
        assert_eq!(p[16640], [1.0, 1.0]);
    }

    #[test]
    fn projection_in_span() {
        let b = NeuralBasis::transnet(30, &[2.0; 30], [0.0, 0.0], 1.5, 4).unwrap();
        let g = GridSpec::new(Rect::new([-1.0, -1.0], [1.0, 1.0]).unwrap(), 21, 21).unwrap();
        let pts = g.points();
        let a = b.eval(&pts);
        let col5: Vec<f64> = (0..pts.len()).map(|m| a[(m, 5)]).collect();
        assert!(projection_error(&b, &col5, &pts, 1e-12).unwrap() < 1e-10);
        assert!(projection_error(&b, &vec![1.0; pts.len()], &pts, 1e-12).unwrap() < 1e-10);
        assert!(projection_error(&b, &vec![0.0; pts.len()], &pts, 1e-12).is_err());
    }

    #[test]
    fn medians() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
