//! Weak TransNet: meshless least-squares solvers for second-order elliptic
//! problems `−∇·(κ∇u) = f`, `u = g` on ∂Ω.
//!
//! The trial space is a random-hyperplane tanh network (optionally on Fourier
//! features or localized by a partition of unity), the test space is a set
//! of truncated Gaussians, and the output coefficients solve one dense linear
//! least-squares problem. Strong-form collocation and Ritz-energy solvers on
//! the same trial spaces are included as baselines.

pub mod assembly;
pub mod basis;
pub mod error;
pub mod evaluation;
pub mod geometry;
pub mod problems;
pub mod quadrature;
pub mod seed;
pub mod solvers;
pub mod test_space;

pub use assembly::{AssembledSystem, BoundaryMode, ProblemSpec};
pub use basis::{FourierMap, NeuralBasis, Order, PoUBasis, TrialBasis};
pub use error::{Error, Result};
pub use geometry::{Domain, PartitionLayout, Point, Rect};
pub use problems::{CatalogEntry, ProblemId};
pub use quadrature::{QuadratureConfig, QuadratureRule};
pub use solvers::{Method, Solution};
pub use test_space::{TestFunction, TestNormalization};

pub use faer::Mat;
