//! Sparsifying preconditioner for pseudospectral discretizations of
//! indefinite periodic Helmholtz and Schrödinger problems.
//!
//! The dense system (L - s + q) u = f is recast through the Green's
//! operator G = (L - s)^{-1} as (I + Gq) u = Gf, then approximated by a
//! sparse pair (Q, P): Q sparsifies G row by row from local least-squares
//! stencils, P = Q + (QG restricted to the pattern) diag(q). One sparse LU
//! of P per configuration preconditions GMRES, which typically converges in
//! a handful of iterations even deep in the indefinite regime.

pub mod check;
pub mod config;
pub mod driver;
pub mod error;
pub mod fft;
pub mod grid;
pub mod krylov;
pub mod oracle;
pub mod partition;
pub mod precond;
pub mod problem;
pub mod report;
pub mod solver;
pub mod sparsifier;
pub mod spectral;

pub use config::{Equation, RunConfig};
pub use error::{Error, Result};
pub use grid::GridSpec;
pub use krylov::{GmresOptions, IterationReport};
pub use precond::{solve_problem, solve_problem_unpreconditioned, Preconditioner};
pub use problem::{build_problem, MediaKind, MediaSpec, SplitProblem};
