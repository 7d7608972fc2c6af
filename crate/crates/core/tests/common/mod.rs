#![allow(dead_code)]

use wtn_core::assembly::{assemble_weak, BlockKind};
use wtn_core::basis::{NeuralBasis, Order};
use wtn_core::geometry::PartitionLayout;
use wtn_core::problems::{self, ProblemId};
use wtn_core::quadrature::QuadratureConfig;
use wtn_core::solvers::*;
use wtn_core::test_space::TestFunction;
use wtn_core::{Point, TrialBasis};

/// Fourth-order central differences of the value column `j` at `p`: the
/// gradient, the Laplacian and `|∂xx| + |∂yy|` as its scale.
pub fn fd(basis: &NeuralBasis, p: Point, j: usize, h: f64) -> ([f64; 2], f64, f64) {
    let v = |dx: f64, dy: f64| basis.eval(&[[p[0] + dx * h, p[1] + dy * h]])[(0, j)];
    let c = v(0.0, 0.0);
    let d1 = |a: [f64; 2]| (8.0 * (v(a[0], a[1]) - v(-a[0], -a[1])) - v(2.0 * a[0], 2.0 * a[1]) + v(-2.0 * a[0], -2.0 * a[1])) / (12.0 * h);
    let d2 = |a: [f64; 2]| {
        (16.0 * (v(a[0], a[1]) + v(-a[0], -a[1])) - v(2.0 * a[0], 2.0 * a[1]) - v(-2.0 * a[0], -2.0 * a[1]) - 30.0 * c) / (12.0 * h * h)
    };
    let (xx, yy) = (d2([1.0, 0.0]), d2([0.0, 1.0]));
    ([d1([1.0, 0.0]), d1([0.0, 1.0])], xx + yy, xx.abs() + yy.abs())
}

pub fn check_derivatives(basis: &NeuralBasis, p: Point) {
    let vals = basis.evaluate(&[p], Order::Laplacian);
    let [gx, gy] = vals.grad.unwrap();
    let lap = vals.laplacian.unwrap();
    for j in 0..basis.ncols() {
        let (g, l, scale) = fd(basis, p, j, 2.5e-4);
        for (got, want) in [(gx[(0, j)], g[0]), (gy[(0, j)], g[1])] {
            assert!((got - want).abs() <= 1e-5 * want.abs().max(1.0), "gradient col {j}: {got} vs {want}");
        }
        let got = lap[(0, j)];
        assert!((got - l).abs() <= 1e-5 * scale.max(1.0), "laplacian col {j}: {got} vs {l}");
    }
}

/// `‖2(LᵀL + εI)α − 2Lᵀr − ℓ‖ / ‖2Lᵀr + ℓ‖` at the DRM solution.
pub fn drm_stationarity(seed: u64) -> f64 {
    let e = problems::get(ProblemId::DarcyWeakOnly);
    let b = build_wtn_basis(&e.spec, &BasisConfig::new(60, 1.0), seed).unwrap();
    let sys = drm_system(&e.spec, &b, &CollocationConfig::new(500), seed).unwrap();
    let eps = DEFAULT_DRM_EPSILON;
    let (alpha, _) = solve_ritz(&sys, eps, DEFAULT_RCOND).unwrap();
    let lt = sys.matrix.transpose().to_owned();
    let linear = sys.linear.as_ref().unwrap();
    let lr = matvec(&lt, &sys.rhs);
    let ltla = matvec(&lt, &matvec(&sys.matrix, &alpha));
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..alpha.len() {
        let g = 2.0 * ltla[i] + 2.0 * eps * alpha[i] - 2.0 * lr[i] - linear[i];
        num += g * g;
        den += (2.0 * lr[i] + linear[i]).powi(2);
    }
    (num / den).sqrt()
}

/// PoU-WTN over a single subdomain reproduces WTN's coefficients bit for bit.
pub fn check_single_pou(id: ProblemId, seed: u64) {
    let e = problems::get(id);
    let mut weak = WeakConfig::new(TestConfig::new(150, 0.05));
    weak.quadrature.points_per_axis = 17;
    let basis = BasisConfig::new(40, 1.5);
    let plain = solve_wtn(&e.spec, &basis, &weak, seed).unwrap();
    let pou = PouConfig {
        layout: PartitionLayout::single(e.spec.domain.clone()).unwrap(),
        bases: vec![basis.clone()],
        lambda: 1.0,
        n_interface: 10,
    };
    let wrapped = solve_pou_wtn(&e.spec, &pou, &weak, seed).unwrap();
    assert_eq!(plain.coefficients, wrapped.coefficients, "{}", id.as_str());
    let sys = weak_system(&e.spec, &wrapped.basis, &weak, Some((1.0, 10)), seed).unwrap();
    assert!(sys.block(BlockKind::Interface).is_none());
}

/// `(∂x, ∂y)` of neuron `j` (`j ≥ 1`) from its parameters alone.
fn neuron_grad(b: &NeuralBasis, j: usize, p: Point) -> [f64; 2] {
    let a = &b.directions()[j - 1];
    let (c, g) = (b.center(), b.gammas()[j - 1]);
    let z = g * (a[0] * (p[0] - c[0]) + a[1] * (p[1] - c[1]) + b.offsets()[j - 1]);
    let s = 1.0 - z.tanh().powi(2);
    [g * a[0] * s, g * a[1] * s]
}

/// Composite Simpson on `[lo, hi]` with `n` intervals (even).
fn simpson_1d(lo: f64, hi: f64, n: usize) -> Vec<(f64, f64)> {
    let h = (hi - lo) / n as f64;
    (0..=n)
        .map(|k| {
            let c = if k == 0 || k == n { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
            (lo + k as f64 * h, c * h / 3.0)
        })
        .collect()
}

/// Weak stiffness and load against brute-force quadrature over the whole
/// domain, with an independent scalar evaluation of the neurons.
pub fn check_truncated_stiffness() {
    let entry = problems::get(ProblemId::DarcyWeakOnly);
    let spec = &entry.spec;
    let nb = NeuralBasis::transnet(6, &[1.0, 2.0, 3.0, 1.0, 2.0, 3.0], [0.5, 0.5], 0.5f64.sqrt(), 11).unwrap();
    let basis = TrialBasis::Single(nb.clone());
    let means = [[0.5, 0.5], [0.02, 0.3], [0.97, 0.99], [0.49, 0.1], [0.3, 0.004]];
    let tests: Vec<_> = means.iter().map(|&m| TestFunction::new(m, [0.05, 0.05], 10).unwrap()).collect();
    let quad = QuadratureConfig { points_per_axis: 513, ..Default::default() };
    let (a, f) = assemble_weak(&basis, &tests, spec, &quad, 0).unwrap();

    // full-domain oracle; f jumps at x = 1/2, so split there
    let nx = 512;
    let xs: Vec<_> = simpson_1d(0.0, 0.5, nx).into_iter().chain(simpson_1d(0.5, 1.0, nx)).collect();
    let ys = simpson_1d(0.0, 1.0, 2 * nx);
    for (t, psi) in tests.iter().enumerate() {
        let mut row = [0.0; 7];
        let mut load = 0.0;
        for (ix, &(x, wx)) in xs.iter().enumerate() {
            // nudge the shared break node to the side of its half
            let xq = if ix == nx { x - 1e-12 } else if ix == nx + 1 { x + 1e-12 } else { x };
            for &(y, wy) in &ys {
                let p = [xq, y];
                let w = wx * wy;
                let k = (spec.kappa)(p);
                let g = psi.grad(p);
                for (j, r) in row.iter_mut().enumerate().skip(1) {
                    let d = neuron_grad(&nb, j, p);
                    *r += w * k * (d[0] * g[0] + d[1] * g[1]);
                }
                load += w * (spec.source)(p) * psi.value(p);
            }
        }
        // −∮ ψ κ ∂φ/∂n on the four sides
        let side = simpson_1d(0.0, 1.0, 2 * nx);
        for &(s, w) in &side {
            for (p, n) in [([s, 0.0], [0.0, -1.0]), ([1.0, s], [1.0, 0.0]), ([s, 1.0], [0.0, 1.0]), ([0.0, s], [-1.0, 0.0])] {
                let v = psi.value(p) * (spec.kappa)(p) * w;
                for (j, r) in row.iter_mut().enumerate().skip(1) {
                    let d = neuron_grad(&nb, j, p);
                    *r -= v * (d[0] * n[0] + d[1] * n[1]);
                }
            }
        }
        let scale = row.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (j, r) in row.iter().enumerate() {
            assert!((a[(t, j)] - r).abs() <= 1e-6 * scale, "test {t} col {j}: {} vs {r}", a[(t, j)]);
        }
        assert!((f[t] - load).abs() <= 1e-6 * load.abs().max(1.0), "load {t}: {} vs {load}", f[t]);
    }
}
