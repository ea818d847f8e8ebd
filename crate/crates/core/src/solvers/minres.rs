//! Preconditioned MINRES for symmetric, possibly indefinite systems.

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinresConfig {
    pub max_iter: usize,
    /// Stop when the preconditioned residual norm drops below `rtol` times its initial value.
    pub rtol: f64,
    pub precondition: bool,
}

impl Default for MinresConfig {
    fn default() -> Self {
        Self {
            max_iter: 50,
            rtol: 1e-8,
            precondition: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinresResult {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Final preconditioned residual norm relative to the initial one.
    pub rel_residual: f64,
    pub converged: bool,
    /// Relative preconditioned residual after each iteration.
    pub history: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MinresError {
    #[error("Lanczos breakdown at iteration {iteration} with relative residual {residual:e}")]
    Breakdown { iteration: usize, residual: f64 },
    #[error("preconditioner is not positive definite (r.M^-1 r = {0:e})")]
    IndefinitePreconditioner(f64),
    #[error("invalid MINRES configuration: {0}")]
    Config(String),
}

/// z = M^-1 r with M = diag(max(|d_i|, 1e-12)).
#[derive(Debug, Clone, PartialEq)]
pub struct JacobiPreconditioner {
    inv: Vec<f64>,
}

impl JacobiPreconditioner {
    pub const FLOOR: f64 = 1e-12;

    pub fn new(diag: &[f64]) -> Self {
        Self {
            inv: diag.iter().map(|d| 1.0 / d.abs().max(Self::FLOOR)).collect(),
        }
    }

    pub fn apply(&self, r: &[f64], z: &mut [f64]) {
        for ((z, r), m) in z.iter_mut().zip(r).zip(&self.inv) {
            *z = r * m;
        }
    }
}

pub fn jacobi_preconditioner(diag: &[f64]) -> JacobiPreconditioner {
    JacobiPreconditioner::new(diag)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `A x = b` from x = 0. `apply(v, out)` writes `A v`; `precond(r, z)` writes M^-1 r.
pub fn minres<A, P>(
    mut apply: A,
    b: &[f64],
    mut precond: Option<P>,
    cfg: &MinresConfig,
) -> Result<MinresResult, MinresError>
where
    A: FnMut(&[f64], &mut [f64]),
    P: FnMut(&[f64], &mut [f64]),
{
    if cfg.max_iter == 0 || !(cfg.rtol > 0.0) {
        return Err(MinresError::Config(format!(
            "max_iter = {}, rtol = {}",
            cfg.max_iter, cfg.rtol
        )));
    }
    let n = b.len();
    let mut prec = |r: &[f64], z: &mut [f64]| match precond.as_mut() {
        Some(p) => p(r, z),
        None => z.copy_from_slice(r),
    };
    let mut x = vec![0.0; n];
    let mut r1 = b.to_vec();
    let mut y = vec![0.0; n];
    prec(&r1, &mut y);
    let rty = dot(&r1, &y);
    if rty < 0.0 {
        return Err(MinresError::IndefinitePreconditioner(rty));
    }
    let beta1 = rty.sqrt();
    if beta1 == 0.0 {
        return Ok(MinresResult {
            x,
            iterations: 0,
            rel_residual: 0.0,
            converged: true,
            history: Vec::new(),
        });
    }

    let mut r2 = r1.clone();
    let mut v = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut w1 = vec![0.0; n];
    let mut w2 = vec![0.0; n];
    let (mut oldb, mut beta) = (0.0, beta1);
    let (mut dbar, mut epsln) = (0.0, 0.0);
    let mut phibar = beta1;
    let (mut cs, mut sn) = (-1.0f64, 0.0f64);
    let mut history = Vec::new();
    // running estimate of |T_k|, the scale for deciding that beta vanished
    let mut anorm = 0.0f64;

    for itn in 1..=cfg.max_iter {
        let s = 1.0 / beta;
        for (vi, yi) in v.iter_mut().zip(&y) {
            *vi = s * yi;
        }
        apply(&v, &mut y);
        if itn >= 2 {
            let f = beta / oldb;
            for (yi, ri) in y.iter_mut().zip(&r1) {
                *yi -= f * ri;
            }
        }
        let alfa = dot(&v, &y);
        let f = alfa / beta;
        for (yi, ri) in y.iter_mut().zip(&r2) {
            *yi -= f * ri;
        }
        std::mem::swap(&mut r1, &mut r2);
        r2.copy_from_slice(&y);
        prec(&r2, &mut y);
        oldb = beta;
        let rty = dot(&r2, &y);
        if rty < 0.0 {
            return Err(MinresError::IndefinitePreconditioner(rty));
        }
        beta = rty.sqrt();
        anorm = anorm.max((alfa * alfa + beta * beta + oldb * oldb).sqrt());

        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        let gamma = gbar.hypot(beta).max(f64::EPSILON);
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar *= sn;

        let denom = 1.0 / gamma;
        std::mem::swap(&mut w1, &mut w2);
        std::mem::swap(&mut w2, &mut w);
        for i in 0..n {
            w[i] = (v[i] - oldeps * w1[i] - delta * w2[i]) * denom;
            x[i] += phi * w[i];
        }

        let rel = phibar / beta1;
        history.push(rel);
        if rel <= cfg.rtol {
            return Ok(MinresResult {
                x,
                iterations: itn,
                rel_residual: rel,
                converged: true,
                history,
            });
        }
        if beta <= 16.0 * f64::EPSILON * anorm {
            return Err(MinresError::Breakdown {
                iteration: itn,
                residual: rel,
            });
        }
    }
    let rel = phibar / beta1;
    Ok(MinresResult {
        x,
        iterations: cfg.max_iter,
        rel_residual: rel,
        converged: false,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    type NoPrec = fn(&[f64], &mut [f64]);

    #[test]
    fn jacobi_rules() {
        let p = jacobi_preconditioner(&[1.0, 1.0]);
        let mut z = [0.0; 2];
        p.apply(&[3.0, -2.0], &mut z);
        assert_eq!(z, [3.0, -2.0]);
        let p = jacobi_preconditioner(&[4.0, -2.0]);
        p.apply(&[1.0, 1.0], &mut z);
        assert_eq!(z, [0.25, 0.5]);
        let p = jacobi_preconditioner(&[0.0, 1.0]);
        p.apply(&[1e-3, 1.0], &mut z);
        assert!(z[0].is_finite() && (z[0] - 1e9).abs() < 1e-3);
    }

    #[test]
    fn identity_in_one_iteration() {
        let b = [1.0, -2.0, 3.5];
        let r = minres(|v, o| o.copy_from_slice(v), &b, None::<NoPrec>, &MinresConfig::default()).unwrap();
        assert_eq!(r.iterations, 1);
        for (x, b) in r.x.iter().zip(&b) {
            assert!((x - b).abs() < 1e-15);
        }
    }

    #[test]
    fn indefinite_diagonal() {
        let apply = |v: &[f64], o: &mut [f64]| {
            o[0] = v[0];
            o[1] = -v[1];
        };
        let cfg = MinresConfig {
            rtol: 1e-14,
            ..Default::default()
        };
        let r = minres(apply, &[1.0, 1.0], None::<NoPrec>, &cfg).unwrap();
        assert!(r.iterations <= 2);
        assert!((r.x[0] - 1.0).abs() < 1e-12 && (r.x[1] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_rhs() {
        let r = minres(|v, o| o.copy_from_slice(v), &[0.0; 4], None::<NoPrec>, &MinresConfig::default()).unwrap();
        assert_eq!(r.iterations, 0);
        assert!(r.x.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn singular_inconsistent_system_breaks_down() {
        // A = diag(1, 0), b = (1, 1): the Krylov space closes before the residual vanishes
        let apply = |v: &[f64], o: &mut [f64]| {
            o[0] = v[0];
            o[1] = 0.0;
        };
        let r = minres(apply, &[1.0, 1.0], None::<NoPrec>, &MinresConfig::default());
        assert!(matches!(r, Err(MinresError::Breakdown { .. })), "{r:?}");
    }

    #[test]
    fn bad_config() {
        let cfg = MinresConfig {
            max_iter: 0,
            ..Default::default()
        };
        assert!(minres(|v, o| o.copy_from_slice(v), &[1.0], None::<NoPrec>, &cfg).is_err());
    }
}
