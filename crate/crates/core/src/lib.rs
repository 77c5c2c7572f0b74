//! Mixed discontinuous Galerkin discretization of the two-dimensional
//! time-harmonic Maxwell equations in mixed form, with numerical fluxes
//! expressed through lifting operators.

pub mod analysis;
pub mod assembly;
pub mod cli;
pub mod coefficients;
pub mod error;
pub mod lifting;
pub mod linalg;
pub mod local;
pub mod mesh;
pub mod quadrature;
pub mod scalar;
pub mod solver;
pub mod spaces;

pub use error::{Error, Result};
pub use scalar::{Real, Vec2};

/// Single-precision instantiations.
pub type MeshF32 = mesh::Mesh<f32>;
pub type DgContextF32 = assembly::DgContext<f32>;
pub type ProblemSpecF32 = assembly::ProblemSpec<f32>;
pub type FemFieldF32 = spaces::FemField<f32>;
pub type SolutionF32 = solver::Solution<f32>;

/// Double-precision instantiations, the configuration all tolerances target.
pub type MeshF64 = mesh::Mesh<f64>;
pub type DgContextF64 = assembly::DgContext<f64>;
pub type ProblemSpecF64 = assembly::ProblemSpec<f64>;
pub type FemFieldF64 = spaces::FemField<f64>;
pub type SolutionF64 = solver::Solution<f64>;
