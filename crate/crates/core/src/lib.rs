//! Galerkin weighted-residual solver for coupled third-order nonlinear
//! boundary value problems, with Bernstein polynomials as trial functions.
//!
//! ```
//! use bernstein_galerkin::cli::presets;
//! use bernstein_galerkin::solver::{picard_solve, SolverConfig};
//! use bernstein_galerkin::problem::Unknown;
//!
//! let problem = presets::load("example1").unwrap();
//! let sol = picard_solve(&problem.spec, 4, &SolverConfig::default()).unwrap();
//! let p = sol.eval(0.5, Unknown::P, 0).unwrap();
//! assert!((p - 0.375).abs() < 1e-8);
//! ```

pub mod assembly;
pub mod basis;
pub mod cli;
pub mod expr;
pub mod linalg;
pub mod par;
pub mod problem;
pub mod quadrature;
pub mod reduction;
pub mod solver;

pub use basis::BernsteinBasis;
pub use expr::Expr;
pub use problem::{BoundaryData, Domain, End, Equation, ProblemSpec, Unknown};
pub use solver::{picard_solve, refine_solve, Solution, SolverConfig};
