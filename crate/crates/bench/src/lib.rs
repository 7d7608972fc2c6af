//! Shared fixtures for the criterion benches in `benches/`.

use wtn_core::problems::{self, ProblemId};
use wtn_core::solvers::{build_wtn_basis, BasisConfig, TestConfig, WeakConfig};
use wtn_core::test_space::build_test_set;
use wtn_core::{ProblemSpec, TestFunction, TrialBasis};

pub struct Fixture {
    pub problem: ProblemSpec,
    pub basis: TrialBasis,
    pub tests: Vec<TestFunction>,
    pub weak: WeakConfig,
}

/// The Darcy benchmark with `m` neurons and `n` tests at the catalog σ.
pub fn darcy(m: usize, n: usize) -> Fixture {
    let entry = problems::get(ProblemId::DarcyWeakOnly);
    let sigma = entry.defaults.sigma;
    let basis = build_wtn_basis(&entry.spec, &BasisConfig::new(m, entry.defaults.gamma), 0).expect("basis");
    let tests = build_test_set(&entry.spec.domain, n, [sigma; 2], 10, 0).expect("tests");
    Fixture { problem: entry.spec, basis, tests, weak: WeakConfig::new(TestConfig::new(n, sigma)) }
}
