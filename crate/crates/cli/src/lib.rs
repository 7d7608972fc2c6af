//! Experiment runner behind the `wtn` binary: config expansion, job
//! execution, reports and the two standalone studies.

pub mod config;
pub mod runner;

use std::fmt::Write as _;
use std::path::Path;

use wtn_core::evaluation::{QuadratureRow, QuadratureStudy, ShapeCurve, ShapeStudy};
use wtn_core::problems::{self, Reference};
use wtn_core::ProblemId;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("job {index} ({label}) failed: {source}")]
    Job {
        index: usize,
        label: String,
        #[source]
        source: Box<CliError>,
    },

    #[error(transparent)]
    Core(#[from] wtn_core::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CliError>;

/// One line per catalog problem, in catalog order.
pub fn list_catalog() -> String {
    let mut out = String::new();
    writeln!(out, "{:<18} {:>5} {:>5} {:>5} {:>6} {:>6}  {:<14} layouts", "problem", "M", "N", "γ", "σ", "β", "reference").unwrap();
    for id in ProblemId::ALL {
        let e = problems::get(id);
        let d = e.defaults;
        let reference = match e.reference {
            Reference::Exact => "exact",
            Reference::ExternalGrid => "external_grid",
        };
        let layouts: Vec<_> = e.layouts.iter().map(|l| l.name).collect();
        writeln!(
            out,
            "{:<18} {:>5} {:>5} {:>5} {:>6} {:>6}  {:<14} {}",
            id.as_str(),
            d.m,
            d.n,
            d.gamma,
            d.sigma,
            d.beta,
            reference,
            if layouts.is_empty() { "-".to_string() } else { layouts.join(",") }
        )
        .unwrap();
    }
    out
}

pub fn quadrature_study(study: &QuadratureStudy, seeds: &[u64]) -> Result<Vec<QuadratureRow>> {
    let e = problems::get(ProblemId::PoissonSmooth);
    Ok(study.run(&e.spec, &problems::poisson_smooth_exact, seeds)?)
}

pub fn write_quadrature_csv(path: &Path, rows: &[QuadratureRow]) -> Result<()> {
    let mut s = String::from("method,n_points,rel_l2\n");
    for r in rows {
        let rule = serde_json::to_value(r.rule).expect("rule serializes");
        writeln!(s, "{},{},{}", rule.as_str().unwrap_or_default(), r.n_points, r.rel_l2).unwrap();
    }
    std::fs::write(path, s)?;
    Ok(())
}

pub fn write_gamma_csv(path: &Path, curves: &[ShapeCurve]) -> Result<()> {
    let mut s = String::from("m,sigma_f,gamma,proj_error,gamma_opt\n");
    for c in curves {
        for (g, e) in &c.errors {
            writeln!(s, "{},{},{g},{e},{}", c.m, c.sigma_f, c.gamma_opt).unwrap();
        }
    }
    std::fs::write(path, s)?;
    Ok(())
}

pub fn gamma_sweep(study: &ShapeStudy, ms: &[usize], sigma_fs: &[f64], gammas: &[f64], seeds: &[u64]) -> Result<Vec<ShapeCurve>> {
    Ok(wtn_core::evaluation::shape_sweep(study, ms, sigma_fs, gammas, seeds)?)
}
