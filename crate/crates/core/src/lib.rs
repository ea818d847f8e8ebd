//! Target-matrix mesh optimization on structured high-order quad/hex meshes.
//!
//! The objective, gradient and Hessian are evaluated element by element with
//! sum-factorized tensor contractions; the Hessian is kept as quadrature-point data
//! (partial assembly) and applied inside a preconditioned MINRES Newton solver.

pub mod error;
pub mod fe;
pub mod mesh;
pub mod metrics;
pub mod operator;
pub mod small;
pub mod solvers;

pub use error::{Error, Result};
