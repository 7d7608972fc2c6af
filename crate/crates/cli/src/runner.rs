use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use wtn_core::evaluation::{
    append_report, evaluate_on_grid, export_field_csv, relative_l2_masked, ErrorReport, GridSpec,
};
use wtn_core::problems::{self, load_reference_grid, CatalogEntry, Reference};
use wtn_core::solvers::{
    solve_drm, solve_fwtn, solve_pou_wtn, solve_sf, solve_wtn, BasisConfig, BoundaryConfig, CollocationConfig,
    FourierConfig, PouConfig, Solution, TestConfig, WeakConfig,
};
use wtn_core::{Method, Point};

use crate::config::Job;
use crate::{CliError, Result};

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    pub jobs: usize,
    /// Replaces every job's reference grid.
    pub reference: Option<PathBuf>,
}

pub const REPORT_FILE: &str = "report.jsonl";

fn weak_config(job: &Job) -> WeakConfig {
    let mut w = WeakConfig::new(TestConfig {
        n_l: job.n_l,
        normalization: job.normalization,
        ..TestConfig::new(job.n, job.sigma)
    });
    w.quadrature.rule = job.quadrature;
    w.quadrature.points_per_axis = job.points_per_axis;
    w.quadrature.mc_samples = job.mc_samples;
    w.boundary.n_per_edge = job.boundary_per_edge;
    w.beta = job.beta;
    w.rcond = job.rcond;
    w
}

pub fn solve(entry: &CatalogEntry, job: &Job) -> Result<Solution> {
    let basis = BasisConfig { m: job.m, shape: job.shape.clone(), center: None, radius: None };
    let spec = &entry.spec;
    let sol = match job.method {
        Method::Wtn => solve_wtn(spec, &basis, &weak_config(job), job.seed)?,
        Method::Fwtn => {
            let fourier = FourierConfig { p: job.fourier_p, sigmas: job.fourier_sigmas.clone(), ..FourierConfig::default() };
            solve_fwtn(spec, &fourier, &basis, &weak_config(job), job.seed)?
        }
        Method::PouWtn => {
            let name = job.layout.as_deref().ok_or_else(|| CliError::Config("PoU run without a layout".into()))?;
            let preset = entry.layout(name)?;
            let mut bases = preset.bases.clone();
            if let Some(shapes) = &job.subdomain_shapes {
                for (b, s) in bases.iter_mut().zip(shapes) {
                    b.shape = s.clone();
                }
            }
            if let Some(ms) = &job.subdomain_m {
                for (b, &m) in bases.iter_mut().zip(ms) {
                    b.m = m;
                }
            }
            let pou = PouConfig { layout: preset.layout.clone(), bases, lambda: job.lambda, n_interface: job.n_interface };
            solve_pou_wtn(spec, &pou, &weak_config(job), job.seed)?
        }
        Method::Sf | Method::Drm => {
            let cfg = CollocationConfig {
                n_interior: job.n_interior,
                boundary: BoundaryConfig { n_per_edge: job.boundary_per_edge, ..BoundaryConfig::default() },
                beta: job.beta,
                rcond: job.rcond,
            };
            if job.method == Method::Sf {
                solve_sf(spec, &basis, &cfg, job.seed)?
            } else {
                solve_drm(spec, &basis, &cfg, job.epsilon, job.seed)?
            }
        }
    };
    Ok(sol)
}

/// Error against the closed form or the reference grid, plus the sampled
/// field for export.
fn score(entry: &CatalogEntry, job: &Job, sol: &Solution, reference: Option<&Path>) -> Result<(Option<f64>, Vec<Point>, Vec<f64>)> {
    let domain = &entry.spec.domain;
    match (entry.reference, reference) {
        (Reference::Exact, _) => {
            let grid = GridSpec::covering(domain, job.eval_grid)?;
            let pts = grid.points();
            let u_hat = evaluate_on_grid(sol, domain, &grid);
            let exact = entry.spec.exact.as_ref().expect("exact catalog entries carry a solution");
            let u: Vec<f64> = pts.iter().map(|&p| if domain.contains(p) { exact(p) } else { f64::NAN }).collect();
            Ok((Some(relative_l2_masked(&u_hat, &u)?), pts, u_hat))
        }
        (Reference::ExternalGrid, Some(path)) => {
            let r = load_reference_grid(path)?;
            let pts = r.points();
            let u_hat: Vec<f64> = pts
                .iter()
                .zip(sol.evaluate(&pts))
                .map(|(&p, v)| if domain.contains(p) { v } else { f64::NAN })
                .collect();
            let masked: Vec<f64> = r.values.iter().zip(&u_hat).map(|(r, u)| if u.is_nan() { f64::NAN } else { *r }).collect();
            Ok((Some(relative_l2_masked(&u_hat, &masked)?), pts, u_hat))
        }
        (Reference::ExternalGrid, None) => {
            let grid = GridSpec::covering(domain, job.eval_grid)?;
            Ok((None, grid.points(), evaluate_on_grid(sol, domain, &grid)))
        }
    }
}

pub fn run_job(job: &Job, index: usize, opts: &RunOptions) -> Result<ErrorReport> {
    let entry = problems::get(job.problem);
    let reference = opts.reference.as_deref().or(job.reference.as_deref());
    if let Some(path) = reference {
        if !path.exists() {
            return Err(CliError::Config(format!("reference grid {} does not exist", path.display())));
        }
    }
    let t = Instant::now();
    let sol = solve(&entry, job)?;
    let (rel_l2, pts, u_hat) = score(&entry, job, &sol, reference)?;
    let wall_time_ms = t.elapsed().as_secs_f64() * 1e3;
    if job.export_field {
        let file = format!("{}_{}_{index}_s{}.csv", job.name, job.method.as_str(), job.seed);
        export_field_csv(&opts.out_dir.join(file), &pts, &u_hat)?;
    }
    let config = serde_json::to_value(job).expect("jobs serialize");
    let mut hyper = config.clone();
    if let Some(obj) = hyper.as_object_mut() {
        obj.remove("seed");
        obj.remove("name");
    }
    Ok(ErrorReport {
        method: job.method.as_str().to_string(),
        problem: job.problem.as_str().to_string(),
        hyperparameters: hyper,
        rel_l2,
        seed: job.seed,
        wall_time_ms,
        diagnostics: Some(serde_json::to_value(sol.diagnostics).expect("diagnostics serialize")),
        config: Some(config),
    })
}

/// Runs every job on a pool of `opts.jobs` workers. Reports are appended
/// in job order as soon as the prefix before them is complete.
pub fn run_all(jobs: &[Job], opts: &RunOptions) -> Result<Vec<ErrorReport>> {
    std::fs::create_dir_all(&opts.out_dir)?;
    let report_path = opts.out_dir.join(REPORT_FILE);
    let next = AtomicUsize::new(0);
    struct Sink {
        done: Vec<Option<Result<ErrorReport>>>,
        written: usize,
        failed: bool,
    }
    let sink = Mutex::new(Sink { done: (0..jobs.len()).map(|_| None).collect(), written: 0, failed: false });
    let workers = opts.jobs.clamp(1, jobs.len().max(1));
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::SeqCst);
                if k >= jobs.len() || sink.lock().expect("report lock").failed {
                    break;
                }
                let r = run_job(&jobs[k], k, opts);
                let mut g = sink.lock().expect("report lock");
                g.failed |= r.is_err();
                g.done[k] = Some(r);
                while g.written < jobs.len() {
                    let Some(Ok(rep)) = &g.done[g.written] else { break };
                    if append_report(&report_path, rep).is_err() {
                        g.failed = true;
                        break;
                    }
                    g.written += 1;
                }
            });
        }
    });
    let sink = sink.into_inner().expect("report lock");
    let mut out = Vec::with_capacity(jobs.len());
    for (k, r) in sink.done.into_iter().enumerate() {
        match r {
            Some(Ok(rep)) => out.push(rep),
            Some(Err(e)) => {
                let j = &jobs[k];
                return Err(CliError::Job {
                    index: k,
                    label: format!("{} {} M={} N={} seed={}", j.name, j.method.as_str(), j.m, j.n, j.seed),
                    source: Box::new(e),
                });
            }
            None => {}
        }
    }
    if out.len() != jobs.len() {
        return Err(CliError::Config(format!("could not write {}", report_path.display())));
    }
    Ok(out)
}
