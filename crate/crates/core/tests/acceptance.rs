//! End-to-end acceptance runs. Each test prints one `criterion N: PASS|FAIL`
//! line before asserting; random-basis methods are scored by the median over
//! five seeds.
//!
//! Criterion 7 scores against FEM reference grids when `WTN_MULTISCALE_REF`
//! and `WTN_CHANNEL_REF` point to `x,y,u` CSV files, and otherwise checks
//! residual properties that need no reference.

mod common;

use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, MutexGuard, OnceLock};
use std::time::Instant;

use wtn_core::assembly::BlockKind;
use wtn_core::basis::{Constraint, FourierMap, NeuralBasis};
use wtn_core::evaluation::{
    evaluate_on_grid, median, relative_l2_masked, GridSpec, QuadratureStudy, ShapeStudy, ShapeTarget,
};
use wtn_core::geometry::{PartitionLayout, Rect};
use wtn_core::problems::{self, load_reference_grid, CatalogEntry, ProblemId};
use wtn_core::quadrature::{simpson_box, QuadratureRule};
use wtn_core::solvers::*;
use wtn_core::{Point, Solution};

const SEEDS: [u64; 5] = [0, 1, 2, 3, 4];

/// The machine has few cores and the runs are memory-hungry; one at a time.
fn heavy() -> MutexGuard<'static, ()> {
    static LOCK: Mutex<()> = Mutex::new(());
    LOCK.lock().unwrap_or_else(|e| e.into_inner())
}

/// Written to stderr directly so the line survives libtest's output capture.
fn verdict(criterion: &str, pass: bool, detail: &str) {
    let line = format!("criterion {criterion}: {} {detail}\n", if pass { "PASS" } else { "FAIL" });
    let _ = std::io::stderr().write_all(line.as_bytes());
}

fn weak_for(entry: &CatalogEntry, n: usize, sigma: f64) -> WeakConfig {
    let d = entry.defaults;
    let mut w = WeakConfig::new(TestConfig::new(n, sigma));
    w.quadrature.points_per_axis = d.points_per_axis;
    w.boundary.n_per_edge = d.boundary_per_edge;
    w.beta = d.beta;
    w
}

/// Relative L₂ error on the catalog's evaluation grid, restricted to Ω.
fn score(entry: &CatalogEntry, sol: &Solution) -> f64 {
    let domain = &entry.spec.domain;
    let grid = GridSpec::covering(domain, entry.defaults.eval_grid).unwrap();
    let exact = entry.spec.exact.as_ref().unwrap();
    let u: Vec<f64> = grid.points().iter().map(|&p| if domain.contains(p) { exact(p) } else { f64::NAN }).collect();
    relative_l2_masked(&evaluate_on_grid(sol, domain, &grid), &u).unwrap()
}

fn median_over_seeds(mut run: impl FnMut(u64) -> f64) -> f64 {
    let mut v: Vec<f64> = SEEDS.iter().map(|&s| run(s)).collect();
    median(&mut v)
}

fn darcy_wtn(m: usize, n: usize) -> f64 {
    let e = problems::get(ProblemId::DarcyWeakOnly);
    let w = weak_for(&e, n, 0.05);
    median_over_seeds(|s| score(&e, &solve_wtn(&e.spec, &BasisConfig::new(m, 1.0), &w, s).unwrap()))
}

/// `(median error, slowest seed in seconds)` of the headline Darcy run.
fn darcy_headline() -> (f64, f64) {
    static CELL: OnceLock<(f64, f64)> = OnceLock::new();
    *CELL.get_or_init(|| {
        let e = problems::get(ProblemId::DarcyWeakOnly);
        let w = weak_for(&e, 300, 0.05);
        let mut slowest = 0.0f64;
        let err = median_over_seeds(|s| {
            let t = Instant::now();
            let err = score(&e, &solve_wtn(&e.spec, &BasisConfig::new(200, 1.0), &w, s).unwrap());
            slowest = slowest.max(t.elapsed().as_secs_f64());
            err
        });
        (err, slowest)
    })
}

#[test]
fn criterion_1_darcy_wtn() {
    let _g = heavy();
    let (err, slowest) = darcy_headline();
    let pass = err <= 5.4e-3 && slowest <= 600.0;
    verdict("1", pass, &format!("WTN M=200 N=300 median {err:.3e} (≤ 5.4e-3), slowest seed {slowest:.1}s (≤ 600s)"));
    assert!(pass);
}

#[test]
fn criterion_2_darcy_test_count_trend() {
    let _g = heavy();
    let (e300, _) = darcy_headline();
    let e100 = darcy_wtn(200, 100);
    let under = darcy_wtn(100, 50);
    let pass = e300 <= e100 && under >= 3e-2;
    verdict("2", pass, &format!("M=200: N=300 {e300:.3e} ≤ N=100 {e100:.3e}; M=100 N=50 {under:.3e} (≥ 3e-2)"));
    assert!(pass);
}

#[test]
fn criterion_3_darcy_baselines() {
    let _g = heavy();
    let e = problems::get(ProblemId::DarcyWeakOnly);
    let cfg = CollocationConfig::new(e.defaults.n_interior);
    let basis = BasisConfig::new(200, 1.0);
    let sf = median_over_seeds(|s| score(&e, &solve_sf(&e.spec, &basis, &cfg, s).unwrap()));
    let drm = median_over_seeds(|s| score(&e, &solve_drm(&e.spec, &basis, &cfg, DEFAULT_DRM_EPSILON, s).unwrap()));
    let (wtn, _) = darcy_headline();
    let pass = (2e-2..=3e-1).contains(&sf) && (5e-3..=1e-1).contains(&drm) && wtn < sf && wtn < drm;
    verdict("3", pass, &format!("SF {sf:.3e} in [2e-2, 3e-1], DRM {drm:.3e} in [5e-3, 1e-1], WTN {wtn:.3e} below both"));
    assert!(pass);
}

#[test]
fn criterion_4_quadrature_study() {
    let _g = heavy();
    let e = problems::get(ProblemId::PoissonSmooth);
    let study = QuadratureStudy::default();
    let rows = study.run(&e.spec, &problems::poisson_smooth_exact, &SEEDS).unwrap();
    let simpson: Vec<_> = rows.iter().filter(|r| r.rule == QuadratureRule::Simpson).collect();
    let mc: Vec<_> = rows.iter().filter(|r| r.rule == QuadratureRule::MonteCarlo).collect();
    let mut pass = simpson.len() == mc.len() && !simpson.is_empty();
    let mut detail = Vec::new();
    for (s, m) in simpson.iter().zip(&mc) {
        pass &= s.rel_l2 <= m.rel_l2;
        detail.push(format!("{}pt Simpson {:.2e} vs {}pt MC {:.2e}", s.n_points, s.rel_l2, m.n_points, m.rel_l2));
    }
    pass &= simpson.windows(2).all(|w| w[1].rel_l2 <= w[0].rel_l2);
    verdict("4", pass, &detail.join("; "));
    assert!(pass);
}

#[test]
fn criterion_5_poisson_sharp() {
    let _g = heavy();
    let e = problems::get(ProblemId::PoissonSharp);
    let w = weak_for(&e, 1800, e.defaults.sigma);
    let wtn = median_over_seeds(|s| score(&e, &solve_wtn(&e.spec, &BasisConfig::new(1600, 5.0), &w, s).unwrap()));
    let preset = e.layout("quadrants").unwrap();
    let pou = PouConfig { layout: preset.layout.clone(), bases: preset.bases.clone(), lambda: e.defaults.lambda, n_interface: 200 };
    let pou_err = median_over_seeds(|s| score(&e, &solve_pou_wtn(&e.spec, &pou, &w, s).unwrap()));
    let pass = wtn <= 2e-2 && pou_err <= 1e-3 && pou_err * 10.0 <= wtn;
    verdict("5", pass, &format!("WTN {wtn:.3e} (≤ 2e-2), PoU-WTN {pou_err:.3e} (≤ 1e-3, ratio {:.0}×)", wtn / pou_err));
    assert!(pass);
}

#[test]
fn criterion_6_lshape_strategies() {
    let _g = heavy();
    let e = problems::get(ProblemId::LshapeSingular);
    let d = e.defaults;
    let w = weak_for(&e, d.n, d.sigma);
    let wtn = median_over_seeds(|s| score(&e, &solve_wtn(&e.spec, &BasisConfig::new(d.m, d.gamma), &w, s).unwrap()));
    let mut pou = Vec::new();
    for name in ["a", "c", "e"] {
        let preset = e.layout(name).unwrap();
        let cfg = PouConfig { layout: preset.layout.clone(), bases: preset.bases.clone(), lambda: d.lambda, n_interface: 200 };
        pou.push(median_over_seeds(|s| score(&e, &solve_pou_wtn(&e.spec, &cfg, &w, s).unwrap())));
    }
    let pass = wtn <= 1.5e-1 && pou[0] > pou[1] && pou[1] > pou[2] && pou[2] <= 3e-3;
    verdict(
        "6",
        pass,
        &format!("WTN {wtn:.3e} (≤ 1.5e-1); PoU a {:.3e} > c {:.3e} > e {:.3e} (e ≤ 3e-3)", pou[0], pou[1], pou[2]),
    );
    assert!(pass);
}

fn reference_error(entry: &CatalogEntry, sol: &Solution, path: &Path) -> f64 {
    let r = load_reference_grid(path).unwrap();
    let pts = r.points();
    let domain = &entry.spec.domain;
    let u_hat: Vec<f64> = pts.iter().zip(sol.evaluate(&pts)).map(|(&p, v)| if domain.contains(p) { v } else { f64::NAN }).collect();
    let reference: Vec<f64> = r.values.iter().zip(&u_hat).map(|(v, u)| if u.is_nan() { f64::NAN } else { *v }).collect();
    relative_l2_masked(&u_hat, &reference).unwrap()
}

/// `(‖ℳ⁰α‖∞ / ‖α‖∞, ‖ℳ¹α‖∞ / (‖α‖∞ max|ℳ¹|))` of a PoU system.
fn interface_jumps(sys: &wtn_core::AssembledSystem, alpha: &[f64]) -> (f64, f64) {
    let blk = sys.block(BlockKind::Interface).unwrap();
    let half = blk.rows.len() / 2;
    let amax = alpha.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut jump = [0.0f64; 2];
    let mut entry = 0.0f64;
    for (k, i) in blk.rows.clone().enumerate() {
        let h = usize::from(k >= half);
        let mut row = 0.0;
        for (c, a) in alpha.iter().enumerate() {
            let v = sys.matrix[(i, c)] / blk.weight;
            row += v * a;
            if h == 1 {
                entry = entry.max(v.abs());
            }
        }
        jump[h] = jump[h].max(row.abs());
    }
    (jump[0] / amax, jump[1] / (amax * entry))
}

#[test]
fn criterion_7_fem_referenced() {
    let _g = heavy();
    let multiscale = problems::get(ProblemId::DarcyMultiscale);
    let channel = problems::get(ProblemId::DarcyChannel);
    let env = |k: &str| std::env::var_os(k).map(PathBuf::from);
    let d = multiscale.defaults;
    let w = weak_for(&multiscale, d.n, d.sigma);
    let basis = BasisConfig::new(d.m, d.gamma);
    let preset = channel.layout("channel").unwrap();
    let pou = PouConfig { layout: preset.layout.clone(), bases: preset.bases.clone(), lambda: 1.0, n_interface: 200 };
    let wc = weak_for(&channel, channel.defaults.n, channel.defaults.sigma);

    let mut lines = Vec::new();
    let mut pass = true;
    match env("WTN_MULTISCALE_REF") {
        Some(path) => {
            let err = median_over_seeds(|s| {
                let sol = solve_fwtn(&multiscale.spec, &FourierConfig::default(), &basis, &w, s).unwrap();
                reference_error(&multiscale, &sol, &path)
            });
            pass &= err <= 3e-2;
            lines.push(format!("F-WTN vs reference {err:.3e} (≤ 3e-2)"));
        }
        None => {
            let mut ratios = Vec::new();
            for &s in &SEEDS {
                let plain = build_wtn_basis(&multiscale.spec, &basis, s).unwrap();
                let sys = weak_system(&multiscale.spec, &plain, &w, None, s).unwrap();
                let (a, _, _) = lstsq(&sys.matrix, &sys.rhs, w.rcond).unwrap();
                let r_plain = sys.block_residual(BlockKind::Weak, &a).unwrap();
                let lifted = build_fwtn_basis(&multiscale.spec, &FourierConfig::default(), &basis, s).unwrap();
                let sys = weak_system(&multiscale.spec, &lifted, &w, None, s).unwrap();
                let (a, _, _) = lstsq(&sys.matrix, &sys.rhs, w.rcond).unwrap();
                ratios.push(sys.block_residual(BlockKind::Weak, &a).unwrap() / r_plain);
            }
            let ratio = median(&mut ratios);
            pass &= ratio <= 0.5;
            lines.push(format!("(a) F-WTN/WTN weak residual {ratio:.3e} (≤ 0.5)"));
        }
    }
    match env("WTN_CHANNEL_REF") {
        Some(path) => {
            let err = median_over_seeds(|s| reference_error(&channel, &solve_pou_wtn(&channel.spec, &pou, &wc, s).unwrap(), &path));
            pass &= err <= 1.2e-1;
            lines.push(format!("PoU-WTN channel vs reference {err:.3e} (≤ 1.2e-1)"));
        }
        None => {
            let (mut j0, mut j1) = (Vec::new(), Vec::new());
            for &s in &SEEDS {
                let b = build_pou_basis(&channel.spec, &pou, s).unwrap();
                let sys = weak_system(&channel.spec, &b, &wc, Some((pou.lambda, pou.n_interface)), s).unwrap();
                let (a, _, _) = lstsq(&sys.matrix, &sys.rhs, wc.rcond).unwrap();
                let (c0, c1) = interface_jumps(&sys, &a);
                j0.push(c0);
                j1.push(c1);
            }
            let (j0, j1) = (median(&mut j0), median(&mut j1));
            pass &= j0 <= 1e-3 && j1 <= 1e-3;
            lines.push(format!("(b) channel jumps ‖ℳ⁰α‖∞ {j0:.2e}, ‖ℳ¹α‖∞ {j1:.2e} relative (≤ 1e-3)"));
        }
    }
    verdict("7", pass, &lines.join("; "));
    assert!(pass);
}

fn passes(check: impl FnOnce()) -> bool {
    catch_unwind(AssertUnwindSafe(check)).is_ok()
}

#[test]
fn criterion_8_property_suites() {
    let probe = |k: u64| -> Point { [((k * 37) % 101) as f64 / 100.0, ((k * 61) % 103) as f64 / 102.0] };
    let unit = Rect::new([0.0, 0.0], [1.0, 1.0]).unwrap();
    let mut results: Vec<(&str, bool)> = Vec::new();

    results.push((
        "basis derivatives",
        passes(|| {
            for k in 0..100 {
                let gammas: Vec<f64> = (0..6).map(|j| 0.5 + j as f64).collect();
                let b = NeuralBasis::transnet(6, &gammas, [0.5, 0.5], 0.5f64.sqrt(), k).unwrap();
                common::check_derivatives(&b, probe(k));
                common::check_derivatives(&b.with_constraint(Constraint::Bubble(unit)), probe(k));
                let map = FourierMap::mixture(4, &[1.0, 3.0], 1.0, k).unwrap();
                common::check_derivatives(&NeuralBasis::fourier(4, map, &[0.3; 4], k).unwrap(), probe(k));
            }
        }),
    ));
    results.push((
        "Fourier lift norm",
        passes(|| {
            for k in 0..100 {
                let map = FourierMap::mixture(64, &[1.0, 3.0], 1.0, k).unwrap();
                let p = probe(k);
                let norm = map.lift([4.0 * p[0] - 2.0, 4.0 * p[1] - 2.0]).iter().map(|v| v * v).sum::<f64>().sqrt();
                assert!((norm - 8.0).abs() < 1e-12);
            }
        }),
    ));
    results.push((
        "partition of unity",
        passes(|| {
            let l = problems::get(ProblemId::LshapeSingular);
            let quads = PartitionLayout::tensor(Rect::square(-1.0, 1.0).unwrap(), &[0.0], &[0.0]).unwrap();
            for layout in [&l.layout("c").unwrap().layout, &quads] {
                for i in 0..=40 {
                    for j in 0..=40 {
                        let p = [-1.0 + i as f64 * 0.05, -1.0 + j as f64 * 0.05];
                        if layout.domain().contains(p) {
                            assert_eq!((0..layout.len()).map(|s| layout.chi(s, p)).sum::<f64>(), 1.0);
                        }
                    }
                }
            }
        }),
    ));
    results.push(("truncated stiffness", passes(common::check_truncated_stiffness)));
    results.push((
        "Simpson order",
        passes(|| {
            let f = |p: Point| (2.0 * p[0]).exp() * (3.0 * p[1]).cos();
            let exact = ((2.0f64).exp() - 1.0) / 2.0 * (3.0f64).sin() / 3.0;
            let errs: Vec<f64> = [5, 9, 17, 33].iter().map(|&n| (simpson_box(f, &unit, n).unwrap() - exact).abs()).collect();
            assert!(errs.windows(2).all(|w| (w[0] / w[1]).log2() > 3.8));
        }),
    ));
    results.push(("DRM stationarity", passes(|| assert!(common::drm_stationarity(0) < 1e-8))));
    results.push((
        "lstsq optimality",
        passes(|| {
            let b = NeuralBasis::transnet(30, &[2.0; 30], [0.5, 0.5], 0.7, 1).unwrap();
            let pts: Vec<Point> = (0..60).map(|k| [(k % 8) as f64 / 7.0, (k / 8) as f64 / 7.0]).collect();
            let l = b.eval(&pts);
            let r: Vec<f64> = pts.iter().map(|p| (3.0 * p[0]).sin() * p[1]).collect();
            let (alpha, res, _) = lstsq(&l, &r, DEFAULT_RCOND).unwrap();
            for k in 0..alpha.len() {
                for step in [1e-3, -1e-3] {
                    let mut pert = alpha.clone();
                    pert[k] += step * pert[k].abs().max(1.0);
                    assert!(residual_norm(&l, &pert, &r) >= res * (1.0 - 1e-12));
                }
            }
        }),
    ));
    results.push(("single-subdomain PoU", passes(|| common::check_single_pou(ProblemId::DarcyWeakOnly, 0))));

    let pass = results.iter().all(|r| r.1);
    let detail: Vec<String> = results.iter().map(|(n, ok)| format!("{n} {}", if *ok { "ok" } else { "failed" })).collect();
    verdict("8", pass, &detail.join(", "));
    assert!(pass);
}

#[test]
fn criterion_9_shape_bands() {
    let _g = heavy();
    let study = ShapeStudy { target: ShapeTarget::Bump, ..ShapeStudy::default() };
    let mut gammas = vec![0.1, 0.25, 0.5, 0.75];
    gammas.extend((0..=30).map(|k| 1.0 + 0.5 * k as f64));
    let bands: [(f64, (f64, f64)); 6] =
        [(2.0, (0.5, 3.0)), (1.0, (0.5, 3.0)), (0.5, (0.5, 3.0)), (0.1, (2.0, 8.0)), (0.05, (2.0, 8.0)), (0.03, (7.0, 13.0))];
    let mut pass = true;
    let mut cells = Vec::new();
    for m in [200, 400] {
        for &(sigma_f, (lo, hi)) in &bands {
            let c = study.curve(m, sigma_f, &gammas, &SEEDS).unwrap();
            let ok = (lo..=hi).contains(&c.gamma_opt);
            pass &= ok;
            cells.push(format!("M={m} σf={sigma_f} γ*={}{}", c.gamma_opt, if ok { "" } else { " (out of band)" }));
        }
    }
    verdict("9", pass, &cells.join(", "));
    assert!(pass);
}
