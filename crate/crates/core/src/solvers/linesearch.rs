//! Backtracking line search with the growth and validity conditions of TMOP.

use std::time::Instant;

use super::Objective;

/// Growth factor allowed for both F and |dF| from one iterate to the next.
pub const GROWTH: f64 = 1.2;

#[derive(Debug, Clone, PartialEq)]
pub struct LineSearchOutcome {
    pub alpha: f64,
    pub x: Vec<f64>,
    pub f: f64,
    pub grad: Vec<f64>,
    pub grad_norm: f64,
    pub min_det: f64,
    /// Rejected trial steps before acceptance.
    pub halvings: usize,
    pub t_objective: f64,
    pub t_gradient: f64,
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Tries `x - alpha dx` for alpha = 1, 1/2, 1/4, ... and returns the first step with
/// `F' < 1.2 F`, `|dF'| < 1.2 |dF|` and `min det A' > 0`, or `Err(max_halvings)` once
/// every trial down to `2^-max_halvings` is rejected.
pub fn line_search<P: Objective + ?Sized>(
    problem: &P,
    x: &[f64],
    dx: &[f64],
    f: f64,
    grad_norm: f64,
    max_halvings: usize,
) -> Result<LineSearchOutcome, usize> {
    let mut alpha = 1.0;
    let mut trial = vec![0.0; x.len()];
    let (mut t_obj, mut t_grad) = (0.0, 0.0);
    for halvings in 0..=max_halvings {
        for ((t, xi), di) in trial.iter_mut().zip(x).zip(dx) {
            *t = xi - alpha * di;
        }
        let t0 = Instant::now();
        let val = problem.value(&trial);
        t_obj += t0.elapsed().as_secs_f64();
        if let Ok((f_new, min_det)) = val {
            if min_det > 0.0 && f_new < GROWTH * f {
                let t0 = Instant::now();
                let grad = problem.gradient(&trial);
                t_grad += t0.elapsed().as_secs_f64();
                if let Ok(g) = grad {
                    let gn = norm(&g);
                    if gn < GROWTH * grad_norm {
                        return Ok(LineSearchOutcome {
                            alpha,
                            x: trial,
                            f: f_new,
                            grad: g,
                            grad_norm: gn,
                            min_det,
                            halvings,
                            t_objective: t_obj,
                            t_gradient: t_grad,
                        });
                    }
                }
            }
        }
        alpha *= 0.5;
    }
    Err(max_halvings)
}
