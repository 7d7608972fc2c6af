//! Experiment files: TOML with one `[[experiment]]` table per sweep. Any
//! sweepable key may hold a list; the lists of one table expand as a
//! Cartesian product.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use wtn_core::problems::{self, CatalogEntry};
use wtn_core::solvers::{Shape, DEFAULT_DRM_EPSILON, DEFAULT_RCOND};
use wtn_core::test_space::DEFAULT_TRUNCATION;
use wtn_core::{Method, ProblemId, QuadratureRule, TestNormalization};

use crate::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    fn values(&self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentFile {
    #[serde(default)]
    pub experiment: Vec<ExperimentSpec>,
}

/// One `[[experiment]]` table as written.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: Option<String>,
    pub problem: String,
    pub method: OneOrMany<Method>,
    pub m: Option<OneOrMany<usize>>,
    pub n: Option<OneOrMany<usize>>,
    pub gamma: Option<OneOrMany<f64>>,
    /// Mixed shape parameters, one equal group of neurons per value.
    pub gamma_mixed: Option<Vec<f64>>,
    /// Per-subdomain shape for PoU runs; overrides the layout preset.
    pub gamma_subdomain: Option<Vec<Shape>>,
    pub m_subdomain: Option<Vec<usize>>,
    pub sigma: Option<OneOrMany<f64>>,
    pub n_l: Option<u32>,
    pub beta: Option<OneOrMany<f64>>,
    pub beta_sf: Option<f64>,
    pub beta_drm: Option<f64>,
    pub epsilon: Option<f64>,
    pub lambda: Option<f64>,
    pub layout: Option<OneOrMany<String>>,
    pub quadrature: Option<OneOrMany<QuadratureRule>>,
    pub points_per_axis: Option<OneOrMany<usize>>,
    pub mc_samples: Option<OneOrMany<usize>>,
    pub normalization: Option<TestNormalization>,
    pub rcond: Option<f64>,
    pub n_interior: Option<usize>,
    pub boundary_per_edge: Option<usize>,
    pub n_interface: Option<usize>,
    pub fourier_p: Option<usize>,
    pub fourier_sigmas: Option<Vec<f64>>,
    pub eval_grid: Option<usize>,
    pub seeds: Option<Vec<u64>>,
    /// Reference field (`x,y,u` CSV) for problems without a closed form.
    pub reference: Option<PathBuf>,
    #[serde(default)]
    pub export_field: bool,
}

/// A fully resolved run; one per (expanded experiment, seed).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Job {
    pub name: String,
    pub problem: ProblemId,
    pub method: Method,
    pub m: usize,
    pub n: usize,
    pub shape: Shape,
    pub sigma: f64,
    pub n_l: u32,
    pub beta: f64,
    pub epsilon: f64,
    pub lambda: f64,
    pub layout: Option<String>,
    pub subdomain_shapes: Option<Vec<Shape>>,
    pub subdomain_m: Option<Vec<usize>>,
    pub quadrature: QuadratureRule,
    pub points_per_axis: usize,
    pub mc_samples: usize,
    pub normalization: TestNormalization,
    pub rcond: f64,
    pub n_interior: usize,
    pub boundary_per_edge: usize,
    pub n_interface: usize,
    pub fourier_p: usize,
    pub fourier_sigmas: Vec<f64>,
    pub eval_grid: usize,
    pub seed: u64,
    pub reference: Option<PathBuf>,
    pub export_field: bool,
}

pub const DEFAULT_SEEDS: [u64; 5] = [0, 1, 2, 3, 4];

pub fn parse(text: &str, path: &Path) -> Result<ExperimentFile> {
    let file: ExperimentFile =
        toml::from_str(text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    if file.experiment.is_empty() {
        return Err(CliError::Config(format!("{}: no [[experiment]] tables", path.display())));
    }
    Ok(file)
}

pub fn load(path: &Path) -> Result<ExperimentFile> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    parse(&text, path)
}

impl ExperimentFile {
    /// Every job of every table, in file order. Validation happens here so
    /// a bad table fails before any solve starts.
    pub fn jobs(&self) -> Result<Vec<Job>> {
        let mut out = Vec::new();
        for (k, spec) in self.experiment.iter().enumerate() {
            let jobs = spec.expand().map_err(|e| CliError::Config(format!("experiment #{}: {e}", k + 1)))?;
            out.extend(jobs);
        }
        Ok(out)
    }
}

/// One cell of the Cartesian product; `None` falls back to a default.
#[derive(Debug, Clone, Default)]
struct Cell {
    layout: Option<String>,
    m: Option<usize>,
    n: Option<usize>,
    gamma: Option<f64>,
    sigma: Option<f64>,
    beta: Option<f64>,
    rule: Option<QuadratureRule>,
    ppa: Option<usize>,
    mc: Option<usize>,
}

fn cross<T: Clone>(cells: Vec<Cell>, values: &Option<OneOrMany<T>>, set: impl Fn(&mut Cell, T)) -> Vec<Cell> {
    let Some(values) = values else { return cells };
    let values = values.values();
    cells
        .into_iter()
        .flat_map(|c| {
            values.iter().map(|v| {
                let mut c = c.clone();
                set(&mut c, v.clone());
                c
            }).collect::<Vec<_>>()
        })
        .collect()
}

impl ExperimentSpec {
    pub fn expand(&self) -> std::result::Result<Vec<Job>, String> {
        let entry = problems::get_by_name(&self.problem).map_err(|e| e.to_string())?;
        let d = entry.defaults;
        if self.gamma.is_some() && self.gamma_mixed.is_some() {
            return Err("`gamma` and `gamma_mixed` are exclusive".into());
        }
        let seeds = self.seeds.clone().unwrap_or_else(|| DEFAULT_SEEDS.to_vec());
        if seeds.is_empty() {
            return Err("`seeds` is empty".into());
        }
        let name = self.name.clone().unwrap_or_else(|| self.problem.clone());

        let mut cells = vec![Cell::default()];
        cells = cross(cells, &self.layout, |c, v| c.layout = Some(v));
        cells = cross(cells, &self.m, |c, v| c.m = Some(v));
        cells = cross(cells, &self.n, |c, v| c.n = Some(v));
        cells = cross(cells, &self.gamma, |c, v| c.gamma = Some(v));
        cells = cross(cells, &self.sigma, |c, v| c.sigma = Some(v));
        cells = cross(cells, &self.beta, |c, v| c.beta = Some(v));
        cells = cross(cells, &self.quadrature, |c, v| c.rule = Some(v));
        cells = cross(cells, &self.points_per_axis, |c, v| c.ppa = Some(v));
        cells = cross(cells, &self.mc_samples, |c, v| c.mc = Some(v));

        let mut jobs = Vec::new();
        for method in self.method.values() {
            for c in &cells {
                validate_layout(&entry, method, c.layout.as_deref(), self)?;
                let shape = match &self.gamma_mixed {
                    Some(g) => Shape::Mixed(g.clone()),
                    None => Shape::Constant(c.gamma.unwrap_or(d.gamma)),
                };
                let beta = match method {
                    Method::Sf => self.beta_sf.or(c.beta).unwrap_or(1.0),
                    Method::Drm => self.beta_drm.or(c.beta).unwrap_or(1.0),
                    _ => c.beta.unwrap_or(d.beta),
                };
                for &seed in &seeds {
                    jobs.push(Job {
                        name: name.clone(),
                        problem: entry.id,
                        method,
                        m: c.m.unwrap_or(d.m),
                        n: c.n.unwrap_or(d.n),
                        shape: shape.clone(),
                        sigma: c.sigma.unwrap_or(d.sigma),
                        n_l: self.n_l.unwrap_or(DEFAULT_TRUNCATION),
                        beta,
                        epsilon: self.epsilon.unwrap_or(DEFAULT_DRM_EPSILON),
                        lambda: self.lambda.unwrap_or(d.lambda),
                        layout: c.layout.clone(),
                        subdomain_shapes: self.gamma_subdomain.clone(),
                        subdomain_m: self.m_subdomain.clone(),
                        quadrature: c.rule.unwrap_or_default(),
                        points_per_axis: c.ppa.unwrap_or(d.points_per_axis),
                        mc_samples: c.mc.unwrap_or(1024),
                        normalization: self.normalization.unwrap_or_default(),
                        rcond: self.rcond.unwrap_or(DEFAULT_RCOND),
                        n_interior: self.n_interior.unwrap_or(d.n_interior),
                        boundary_per_edge: self.boundary_per_edge.unwrap_or(d.boundary_per_edge),
                        n_interface: self.n_interface.unwrap_or(200),
                        fourier_p: self.fourier_p.unwrap_or(64),
                        fourier_sigmas: self.fourier_sigmas.clone().unwrap_or_else(|| vec![1.0, 3.0]),
                        eval_grid: self.eval_grid.unwrap_or(d.eval_grid),
                        seed,
                        reference: self.reference.clone(),
                        export_field: self.export_field,
                    });
                }
            }
        }
        Ok(jobs)
    }
}

fn validate_layout(
    entry: &CatalogEntry,
    method: Method,
    layout: Option<&str>,
    spec: &ExperimentSpec,
) -> std::result::Result<(), String> {
    match (method, layout) {
        (Method::PouWtn, None) => Err(format!("method {} requires a `layout`", method.as_str())),
        (Method::PouWtn, Some(name)) => {
            let preset = entry.layout(name).map_err(|e| e.to_string())?;
            let l = preset.layout.len();
            if spec.gamma_subdomain.as_ref().is_some_and(|g| g.len() != l) {
                return Err(format!("`gamma_subdomain` needs {l} entries for layout `{name}`"));
            }
            if spec.m_subdomain.as_ref().is_some_and(|m| m.len() != l) {
                return Err(format!("`m_subdomain` needs {l} entries for layout `{name}`"));
            }
            Ok(())
        }
        (_, Some(_)) => Err(format!("`layout` only applies to {}", Method::PouWtn.as_str())),
        (_, None) => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn jobs(text: &str) -> Result<Vec<Job>> {
        parse(text, Path::new("test.toml"))?.jobs()
    }

    #[test]
    fn lists_expand_cartesian() {
        let j = jobs(
            r#"
            [[experiment]]
            problem = "darcy_weak_only"
            method = "WTN"
            m = [100, 200]
            n = [50, 100, 200]
            seeds = [7]
            "#,
        )
        .unwrap();
        assert_eq!(j.len(), 6);
        assert_eq!((j[0].m, j[0].n), (100, 50));
        assert_eq!((j[5].m, j[5].n), (200, 200));
        assert!(j.iter().all(|j| j.seed == 7 && j.sigma == 0.05));
    }

    #[test]
    fn catalog_defaults_fill_gaps() {
        let j = jobs("[[experiment]]\nproblem = \"poisson_sharp\"\nmethod = \"WTN\"\n").unwrap();
        assert_eq!(j.len(), DEFAULT_SEEDS.len());
        assert_eq!(j[0].shape, Shape::Constant(5.0));
        assert_eq!((j[0].m, j[0].n), (1600, 1800));
    }

    #[test]
    fn pou_needs_layout() {
        let e = jobs("[[experiment]]\nproblem = \"poisson_sharp\"\nmethod = \"POU_WTN\"\n").unwrap_err();
        assert!(e.to_string().contains("requires a `layout`"), "{e}");
        let e = jobs("[[experiment]]\nproblem = \"poisson_sharp\"\nmethod = \"POU_WTN\"\nlayout = \"nope\"\n").unwrap_err();
        assert!(e.to_string().contains("no layout"), "{e}");
        let e = jobs("[[experiment]]\nproblem = \"poisson_sharp\"\nmethod = \"WTN\"\nlayout = \"quadrants\"\n").unwrap_err();
        assert!(e.to_string().contains("only applies"), "{e}");
    }

    #[test]
    fn parse_errors_carry_lines() {
        let e = jobs("[[experiment]]\nproblem = \"darcy_weak_only\"\nmethod = \"WTN\"\nm = \"many\"\n").unwrap_err();
        assert!(e.to_string().contains("line 4"), "{e}");
        let e = jobs("[[experiment]]\nproblem = \"darcy_weak_only\"\nmethod = \"WTN\"\nbogus = 1\n").unwrap_err();
        assert!(e.to_string().contains("bogus"), "{e}");
        assert!(jobs("").is_err());
    }

    #[test]
    fn method_specific_beta() {
        let j = jobs("[[experiment]]\nproblem = \"darcy_weak_only\"\nmethod = [\"SF\", \"DRM\", \"WTN\"]\nbeta_drm = 10.0\nseeds = [0]\n")
            .unwrap();
        assert_eq!(j.iter().map(|j| j.beta).collect::<Vec<_>>(), vec![1.0, 10.0, 1.0]);
    }
}
