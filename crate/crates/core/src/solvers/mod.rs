//! Linear and nonlinear solvers for the mesh optimization problem.

pub mod linesearch;
pub mod minres;
pub mod newton;

pub use linesearch::{line_search, norm, LineSearchOutcome};
pub use minres::{jacobi_preconditioner, minres, JacobiPreconditioner, MinresConfig, MinresError, MinresResult};
pub use newton::{newton_solve, newton_solve_observed, IterRecord, KernelTimes, NewtonConfig, NewtonResult, NewtonStatus, SolveTrace};

use crate::error::Result;
use crate::operator::{HessQData, Tmop};

/// What the line search needs: F with the smallest Jacobian determinant, and dF.
pub trait Objective {
    /// `(F(x), min det A(x))`; an error marks `x` as invalid.
    fn value(&self, x: &[f64]) -> Result<(f64, f64)>;
    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>>;
}

/// An objective with a symmetric Hessian available through stored point data.
pub trait NewtonProblem: Objective {
    type QData;
    fn hessian_setup(&self, x: &[f64]) -> Result<Self::QData>;
    fn hessian_apply(&self, qd: &Self::QData, v: &[f64], out: &mut [f64]);
    fn hessian_diagonal(&self, qd: &Self::QData) -> Vec<f64>;
}

impl Objective for Tmop {
    fn value(&self, x: &[f64]) -> Result<(f64, f64)> {
        self.objective_and_min_det(x)
    }

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        Tmop::gradient(self, x)
    }
}

impl NewtonProblem for Tmop {
    type QData = HessQData;

    fn hessian_setup(&self, x: &[f64]) -> Result<HessQData> {
        Tmop::hessian_setup(self, x)
    }

    fn hessian_apply(&self, qd: &HessQData, v: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&Tmop::hessian_apply(self, qd, v));
    }

    fn hessian_diagonal(&self, qd: &HessQData) -> Vec<f64> {
        Tmop::hessian_diagonal(self, qd)
    }
}
