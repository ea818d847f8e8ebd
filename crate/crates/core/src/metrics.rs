//! TMOP quality metrics with analytic first and second derivatives, and target matrices.
//!
//! Every supported metric is a function of the two invariants `f = |T|^2` and
//! `tau = det(T)`, so the derivatives are assembled from the scalar partials:
//!
//! ```text
//! dmu/dT   = 2 mu_f T + mu_tau cof(T)
//! d2mu/dT2 = 2 mu_f I + mu_ff (2T)(2T) + mu_ftau [(2T) cof + cof (2T)]
//!            + mu_tautau cof cof + mu_tau d2tau/dT2
//! ```

use crate::error::{Error, Result};
use crate::small::{self, Mat};

/// Second derivative storage: entry [(m,n),(o,p)] at `(m*d+n) * d*d + (o*d+p)`.
pub type Hess = [f64; 81];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MetricId {
    /// 2D shape: |T|^2 / (2 tau) - 1
    Mu2,
    /// size: (tau - 1)^2
    Mu55,
    /// 3D shape: |T|^2 / (3 tau^(2/3)) - 1
    Mu303,
}

impl MetricId {
    pub fn from_number(n: u32) -> Result<Self> {
        match n {
            2 => Ok(Self::Mu2),
            55 => Ok(Self::Mu55),
            303 => Ok(Self::Mu303),
            _ => Err(Error::Config(format!("unknown metric {n}"))),
        }
    }

    pub fn number(self) -> u32 {
        match self {
            Self::Mu2 => 2,
            Self::Mu55 => 55,
            Self::Mu303 => 303,
        }
    }

    pub fn check_dim(self, dim: usize) -> Result<()> {
        match (self, dim) {
            (Self::Mu2, 2) | (Self::Mu303, 3) | (Self::Mu55, 2 | 3) => Ok(()),
            _ => Err(Error::Config(format!(
                "metric {} is not defined for dimension {dim}",
                self.number()
            ))),
        }
    }

    /// Shape metrics are invariant to scaling of T.
    pub fn is_shape(self) -> bool {
        !matches!(self, Self::Mu55)
    }

    fn partials(self, f: f64, tau: f64, order: u8) -> Partials {
        match self {
            Self::Mu2 => {
                let it = 1.0 / tau;
                let mut p = Partials {
                    value: 0.5 * f * it - 1.0,
                    mf: 0.5 * it,
                    mt: -0.5 * f * it * it,
                    ..Default::default()
                };
                if order > 1 {
                    p.mft = -0.5 * it * it;
                    p.mtt = f * it * it * it;
                }
                p
            }
            Self::Mu55 => Partials {
                value: (tau - 1.0) * (tau - 1.0),
                mt: 2.0 * (tau - 1.0),
                mtt: 2.0,
                ..Default::default()
            },
            Self::Mu303 => {
                let c = 1.0 / (tau * tau).cbrt();
                let it = 1.0 / tau;
                let mut p = Partials {
                    value: f * c / 3.0 - 1.0,
                    mf: c / 3.0,
                    mt: -2.0 / 9.0 * f * c * it,
                    ..Default::default()
                };
                if order > 1 {
                    p.mft = -2.0 / 9.0 * c * it;
                    p.mtt = 10.0 / 27.0 * f * c * it * it;
                }
                p
            }
        }
    }
}

#[derive(Debug, Default, Clone, Copy)]
struct Partials {
    value: f64,
    mf: f64,
    mt: f64,
    mff: f64,
    mft: f64,
    mtt: f64,
}

/// Metric value with optional first and second derivatives.
#[derive(Debug, Clone)]
pub struct MetricEval {
    pub dim: usize,
    pub value: f64,
    pub first: Mat,
    pub second: Hess,
}

fn invariants(dim: usize, t: &[f64]) -> Result<(f64, f64)> {
    let tau = small::det(dim, t);
    if tau <= 0.0 || !tau.is_finite() {
        return Err(Error::NonPositiveDeterminant(tau));
    }
    Ok((small::frobenius_sq(dim, t), tau))
}

pub fn metric_value(id: MetricId, dim: usize, t: &[f64]) -> Result<f64> {
    let (f, tau) = invariants(dim, t)?;
    Ok(id.partials(f, tau, 0).value)
}

pub fn metric_first_derivative(id: MetricId, dim: usize, t: &[f64]) -> Result<Mat> {
    let (f, tau) = invariants(dim, t)?;
    let p = id.partials(f, tau, 1);
    Ok(first_from_partials(dim, t, &p))
}

pub fn metric_second_derivative(id: MetricId, dim: usize, t: &[f64]) -> Result<Hess> {
    let (f, tau) = invariants(dim, t)?;
    let p = id.partials(f, tau, 2);
    Ok(second_from_partials(dim, t, &p))
}

/// Value plus derivatives up to `order` (0, 1 or 2); higher derivatives not requested are zero.
pub fn evaluate(id: MetricId, dim: usize, t: &[f64], order: u8) -> Result<MetricEval> {
    let (f, tau) = invariants(dim, t)?;
    let p = id.partials(f, tau, order);
    Ok(MetricEval {
        dim,
        value: p.value,
        first: if order >= 1 {
            first_from_partials(dim, t, &p)
        } else {
            [0.0; 9]
        },
        second: if order >= 2 {
            second_from_partials(dim, t, &p)
        } else {
            [0.0; 81]
        },
    })
}

fn first_from_partials(dim: usize, t: &[f64], p: &Partials) -> Mat {
    let cof = small::cofactor(dim, t);
    let mut g = [0.0; 9];
    for k in 0..dim * dim {
        g[k] = 2.0 * p.mf * t[k] + p.mt * cof[k];
    }
    g
}

/// d2 det(T) / dT_ij dT_kl.
fn det_second(dim: usize, t: &[f64]) -> Hess {
    let mut h = [0.0; 81];
    let dd = dim * dim;
    if dim == 2 {
        // eps_ik eps_jl
        let eps = |a: usize, b: usize| -> f64 {
            match (a, b) {
                (0, 1) => 1.0,
                (1, 0) => -1.0,
                _ => 0.0,
            }
        };
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        h[(i * 2 + j) * dd + k * 2 + l] = eps(i, k) * eps(j, l);
                    }
                }
            }
        }
    } else {
        let eps = |a: usize, b: usize, c: usize| -> f64 {
            match (a, b, c) {
                (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
                (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
                _ => 0.0,
            }
        };
        for i in 0..3 {
            for k in 0..3 {
                if i == k {
                    continue;
                }
                let m = 3 - i - k;
                let eik = eps(i, k, m);
                for j in 0..3 {
                    for l in 0..3 {
                        if j == l {
                            continue;
                        }
                        let n = 3 - j - l;
                        h[(i * 3 + j) * dd + k * 3 + l] = eik * eps(j, l, n) * t[m * 3 + n];
                    }
                }
            }
        }
    }
    h
}

fn second_from_partials(dim: usize, t: &[f64], p: &Partials) -> Hess {
    let dd = dim * dim;
    let cof = small::cofactor(dim, t);
    let mut h = if p.mt != 0.0 {
        let mut h = det_second(dim, t);
        h[..dd * dd].iter_mut().for_each(|v| *v *= p.mt);
        h
    } else {
        [0.0; 81]
    };
    for r in 0..dd {
        let (tr, cr) = (2.0 * t[r], cof[r]);
        for c in 0..dd {
            let (tc, cc) = (2.0 * t[c], cof[c]);
            h[r * dd + c] += p.mff * tr * tc + p.mft * (tr * cc + cr * tc) + p.mtt * cr * cc;
        }
        h[r * dd + r] += 2.0 * p.mf;
    }
    h
}

/// Kind of constant target matrix W.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetSpec {
    /// W = I.
    IdealUnit,
    /// W = h I with h = (mesh volume / element count)^(1/d) on the initial mesh.
    IdealEqualSize,
}

/// The target Jacobian W shared by every quadrature point, with its inverse and determinant.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetData {
    dim: usize,
    w: Mat,
    w_inv: Mat,
    det_w: f64,
    isotropic: Option<f64>,
}

impl TargetData {
    pub fn unit(dim: usize) -> Self {
        Self::isotropic(dim, 1.0).expect("unit target")
    }

    /// W = h I.
    pub fn isotropic(dim: usize, h: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Config(format!("target size {h} must be positive")));
        }
        let mut w = [0.0; 9];
        let mut w_inv = [0.0; 9];
        for i in 0..dim {
            w[i * dim + i] = h;
            w_inv[i * dim + i] = 1.0 / h;
        }
        Ok(Self {
            dim,
            w,
            w_inv,
            det_w: h.powi(dim as i32),
            isotropic: Some(h),
        })
    }

    /// Any constant W with det(W) > 0.
    pub fn general(dim: usize, w: &[f64]) -> Result<Self> {
        let det_w = small::det(dim, w);
        if det_w <= 0.0 {
            return Err(Error::Config(format!("target determinant {det_w} <= 0")));
        }
        let mut wm = [0.0; 9];
        wm[..dim * dim].copy_from_slice(&w[..dim * dim]);
        Ok(Self {
            dim,
            w: wm,
            w_inv: small::inverse(dim, w),
            det_w,
            isotropic: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn w(&self) -> &Mat {
        &self.w
    }

    pub fn w_inv(&self) -> &Mat {
        &self.w_inv
    }

    pub fn det_w(&self) -> f64 {
        self.det_w
    }

    /// `Some(h)` when W = h I.
    pub fn isotropic_size(&self) -> Option<f64> {
        self.isotropic
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(d: usize, v: &[f64]) -> Mat {
        let mut m = [0.0; 9];
        for i in 0..d {
            m[i * d + i] = v[i];
        }
        m
    }

    #[test]
    fn values() {
        let i3 = small::identity(3);
        assert!(metric_value(MetricId::Mu303, 3, &i3).unwrap().abs() < 1e-15);
        let v = metric_value(MetricId::Mu303, 3, &diag(3, &[2.0, 1.0, 1.0])).unwrap();
        assert!((v - (2f64.cbrt() - 1.0)).abs() < 1e-15);
        assert!((v - 0.259921).abs() < 1e-6);
        let v = metric_value(MetricId::Mu2, 2, &diag(2, &[2.0, 1.0])).unwrap();
        assert!((v - 0.25).abs() < 1e-15);
        let t = [2.0, 0.3, 0.0, 0.5, -0.1, 0.7, 0.0, 0.0, 1.0];
        let s = 1.0 / small::det(3, &t).cbrt();
        let unit: Vec<f64> = t.iter().map(|x| x * s).collect();
        assert!(metric_value(MetricId::Mu55, 3, &unit).unwrap().abs() < 1e-28);
    }

    #[test]
    fn minimizers_have_zero_gradient() {
        let g = metric_first_derivative(MetricId::Mu303, 3, &small::identity(3)).unwrap();
        assert!(g.iter().all(|v| v.abs() < 1e-15));
        let t = [1.0, 0.4, 0.0, 1.0];
        let g = metric_first_derivative(MetricId::Mu55, 2, &t).unwrap();
        assert!(g.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn inverted_input_is_an_error() {
        let t = diag(3, &[1.0, -1.0, 1.0]);
        for id in [MetricId::Mu55, MetricId::Mu303] {
            assert!(matches!(
                metric_value(id, 3, &t),
                Err(Error::NonPositiveDeterminant(_))
            ));
            assert!(metric_second_derivative(id, 3, &t).is_err());
        }
        assert!(metric_value(MetricId::Mu2, 2, &[0.0; 4]).is_err());
    }

    #[test]
    fn metric_dimension_rules() {
        assert!(MetricId::Mu2.check_dim(3).is_err());
        assert!(MetricId::Mu303.check_dim(2).is_err());
        assert!(MetricId::Mu55.check_dim(2).is_ok());
        assert_eq!(MetricId::from_number(303).unwrap(), MetricId::Mu303);
        assert!(MetricId::from_number(7).is_err());
    }

    #[test]
    fn targets() {
        let t = TargetData::isotropic(3, 0.5).unwrap();
        assert!((t.det_w() - 0.125).abs() < 1e-15);
        assert_eq!(TargetData::unit(2).det_w(), 1.0);
        assert!(TargetData::isotropic(3, 0.0).is_err());
        let w = [1.0, 0.2, 0.0, 0.1, 2.0, 0.3, 0.0, 0.0, 0.5];
        let g = TargetData::general(3, &w).unwrap();
        let p = small::mul(3, g.w(), g.w_inv());
        let i3 = small::identity(3);
        assert!(p.iter().zip(&i3).all(|(a, b)| (a - b).abs() < 1e-13));
    }
}
