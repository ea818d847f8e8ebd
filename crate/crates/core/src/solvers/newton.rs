//! Newton iteration with MINRES inner solves and the TMOP line search.

use std::time::Instant;

use super::linesearch::{line_search, norm};
use super::minres::{jacobi_preconditioner, minres, MinresConfig, MinresError};
use super::NewtonProblem;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonConfig {
    /// Stop when |dF(x)| / |dF(x0)| <= rtol.
    pub rtol: f64,
    /// Also stop when |dF(x)| <= atol, which catches starts that are stationary up to roundoff.
    pub atol: f64,
    pub max_iter: usize,
    pub max_halvings: usize,
    pub minres: MinresConfig,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            max_iter: 200,
            max_halvings: 30,
            minres: MinresConfig::default(),
        }
    }
}

/// One accepted Newton step.
#[derive(Debug, Clone, PartialEq)]
pub struct IterRecord {
    pub alpha: f64,
    pub f: f64,
    pub grad_norm: f64,
    pub minres_iters: usize,
    pub minres_rel_residual: f64,
    pub min_det: f64,
    pub halvings: usize,
}

/// Wall-clock seconds per kernel. The buckets are disjoint; `linesearch` is the line
/// search's own work without the objective and gradient evaluations it triggers.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct KernelTimes {
    pub objective: f64,
    pub gradient: f64,
    /// Includes the Hessian diagonal when preconditioning.
    pub hessian_setup: f64,
    pub hessian_apply: f64,
    pub linesearch: f64,
    pub total: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveTrace {
    pub f_initial: f64,
    pub grad_norm_initial: f64,
    pub min_det_initial: f64,
    pub iterations: Vec<IterRecord>,
    pub minres_total: usize,
    pub times: KernelTimes,
}

impl SolveTrace {
    pub fn newton_iterations(&self) -> usize {
        self.iterations.len()
    }

    pub fn f_final(&self) -> f64 {
        self.iterations.last().map_or(self.f_initial, |r| r.f)
    }

    pub fn min_det_final(&self) -> f64 {
        self.iterations.last().map_or(self.min_det_initial, |r| r.min_det)
    }

    /// |dF(x)| / |dF(x0)| at the last iterate (0 when the initial gradient vanishes).
    pub fn rel_grad_final(&self) -> f64 {
        if self.grad_norm_initial == 0.0 {
            return 0.0;
        }
        self.iterations.last().map_or(1.0, |r| r.grad_norm / self.grad_norm_initial)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NewtonStatus {
    Converged,
    MaxIterations,
    LineSearchFailed { iteration: usize, halvings: usize },
    MinresBreakdown { iteration: usize, error: MinresError },
    InvalidInitialMesh(String),
}

impl NewtonStatus {
    pub fn is_success(&self) -> bool {
        matches!(self, Self::Converged)
    }

    /// Short status word for reports.
    pub fn label(&self) -> &'static str {
        match self {
            Self::Converged => "converged",
            Self::MaxIterations => "max_iterations",
            Self::LineSearchFailed { .. } => "line_search_failed",
            Self::MinresBreakdown { .. } => "minres_breakdown",
            Self::InvalidInitialMesh(_) => "invalid_initial_mesh",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonResult {
    pub x: Vec<f64>,
    pub trace: SolveTrace,
    pub status: NewtonStatus,
}

/// Minimizes the problem's objective from `x0`: solve `H dx = g` with MINRES, line search
/// `x - alpha dx`, rebuild the Hessian data at the accepted point, repeat.
pub fn newton_solve<P: NewtonProblem + ?Sized>(problem: &P, x0: &[f64], cfg: &NewtonConfig) -> NewtonResult {
    newton_solve_observed(problem, x0, cfg, |_| {})
}

/// [`newton_solve`] that hands every accepted step to `observe` as soon as it is taken.
pub fn newton_solve_observed<P: NewtonProblem + ?Sized>(
    problem: &P,
    x0: &[f64],
    cfg: &NewtonConfig,
    mut observe: impl FnMut(&IterRecord),
) -> NewtonResult {
    let start = Instant::now();
    let mut trace = SolveTrace::default();
    let mut times = KernelTimes::default();
    let finish = |x: Vec<f64>, mut trace: SolveTrace, mut times: KernelTimes, status| {
        times.total = start.elapsed().as_secs_f64();
        trace.times = times;
        NewtonResult { x, trace, status }
    };

    let t0 = Instant::now();
    let init = problem.value(x0);
    times.objective += t0.elapsed().as_secs_f64();
    let (mut f, min_det) = match init {
        Ok(v) if v.1 > 0.0 => v,
        Ok((_, d)) => {
            return finish(x0.to_vec(), trace, times, NewtonStatus::InvalidInitialMesh(format!("min det A = {d:e}")))
        }
        Err(e) => return finish(x0.to_vec(), trace, times, NewtonStatus::InvalidInitialMesh(e.to_string())),
    };
    let t0 = Instant::now();
    let mut g = match problem.gradient(x0) {
        Ok(g) => g,
        Err(e) => return finish(x0.to_vec(), trace, times, NewtonStatus::InvalidInitialMesh(e.to_string())),
    };
    times.gradient += t0.elapsed().as_secs_f64();
    let g0 = norm(&g);
    trace.f_initial = f;
    trace.grad_norm_initial = g0;
    trace.min_det_initial = min_det;

    let mut x = x0.to_vec();
    let mut gnorm = g0;
    loop {
        if gnorm <= cfg.atol || gnorm <= cfg.rtol * g0 {
            return finish(x, trace, times, NewtonStatus::Converged);
        }
        if trace.iterations.len() >= cfg.max_iter {
            return finish(x, trace, times, NewtonStatus::MaxIterations);
        }
        let it = trace.iterations.len();

        let t0 = Instant::now();
        let qd = match problem.hessian_setup(&x) {
            Ok(q) => q,
            // accepted iterates are valid, so this only happens for an inconsistent problem
            Err(e) => return finish(x, trace, times, NewtonStatus::InvalidInitialMesh(e.to_string())),
        };
        let prec = cfg.minres.precondition.then(|| jacobi_preconditioner(&problem.hessian_diagonal(&qd)));
        times.hessian_setup += t0.elapsed().as_secs_f64();

        let mut t_apply = 0.0;
        let solve = minres(
            |v: &[f64], o: &mut [f64]| {
                let t0 = Instant::now();
                problem.hessian_apply(&qd, v, o);
                t_apply += t0.elapsed().as_secs_f64();
            },
            &g,
            prec.as_ref().map(|p| move |r: &[f64], z: &mut [f64]| p.apply(r, z)),
            &cfg.minres,
        );
        times.hessian_apply += t_apply;
        let sol = match solve {
            Ok(s) => s,
            Err(error) => {
                return finish(x, trace, times, NewtonStatus::MinresBreakdown { iteration: it, error });
            }
        };
        trace.minres_total += sol.iterations;
        drop(qd);

        let t0 = Instant::now();
        let ls = line_search(problem, &x, &sol.x, f, gnorm, cfg.max_halvings);
        let t_ls = t0.elapsed().as_secs_f64();
        let ls = match ls {
            Ok(o) => o,
            Err(halvings) => {
                times.linesearch += t_ls;
                return finish(x, trace, times, NewtonStatus::LineSearchFailed { iteration: it, halvings });
            }
        };
        times.objective += ls.t_objective;
        times.gradient += ls.t_gradient;
        times.linesearch += (t_ls - ls.t_objective - ls.t_gradient).max(0.0);

        trace.iterations.push(IterRecord {
            alpha: ls.alpha,
            f: ls.f,
            grad_norm: ls.grad_norm,
            minres_iters: sol.iterations,
            minres_rel_residual: sol.rel_residual,
            min_det: ls.min_det,
            halvings: ls.halvings,
        });
        observe(trace.iterations.last().unwrap());
        x = ls.x;
        g = ls.grad;
        f = ls.f;
        gnorm = ls.grad_norm;
    }
}
