//! 1D Lagrange bases on [0, 1] evaluated in barycentric form.

use super::quadrature::legendre;
use crate::error::{Error, Result};

/// Lagrange basis of order `p` through `p + 1` strictly increasing nodes in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct Basis1D {
    nodes: Vec<f64>,
    bary: Vec<f64>,
}

/// Gauss-Lobatto points of order `p` on [0, 1], endpoints included.
pub fn gauss_lobatto_points(order: usize) -> Vec<f64> {
    let n = order + 1;
    let mut x = vec![0.0; n];
    x[0] = 0.0;
    x[n - 1] = 1.0;
    // interior points are the roots of P'_p
    for i in 1..order {
        let mut t = -(std::f64::consts::PI * i as f64 / order as f64).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(order, t);
            // (1 - t^2) P'' = 2 t P' - p(p+1) P
            let d2p = (2.0 * t * dp - (order * (order + 1)) as f64 * p) / (1.0 - t * t);
            let dt = dp / d2p;
            t -= dt;
            if dt.abs() < 1e-16 {
                break;
            }
        }
        x[i] = 0.5 * (1.0 + t);
    }
    if order % 2 == 0 && order > 0 {
        x[order / 2] = 0.5;
    }
    x
}

impl Basis1D {
    /// Gauss-Lobatto nodal basis of the given order.
    pub fn gauss_lobatto(order: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::Config("basis order must be at least 1".into()));
        }
        Self::from_nodes(gauss_lobatto_points(order))
    }

    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::Config("a basis needs at least two nodes".into()));
        }
        if !nodes.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Config("basis nodes must be strictly increasing".into()));
        }
        let bary = (0..nodes.len())
            .map(|j| {
                let prod: f64 = (0..nodes.len())
                    .filter(|&k| k != j)
                    .map(|k| nodes[j] - nodes[k])
                    .product();
                1.0 / prod
            })
            .collect();
        Ok(Self { nodes, bary })
    }

    pub fn order(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Number of basis functions, `p + 1`.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Writes `l_i(x)` into `values` and `l_i'(x)` into `derivs`.
    pub fn eval(&self, x: f64, values: &mut [f64], derivs: &mut [f64]) {
        let n = self.nodes.len();
        assert!(values.len() == n && derivs.len() == n);
        let tiny = 4.0 * f64::EPSILON;
        if let Some(j) = self.nodes.iter().position(|&xj| (x - xj).abs() <= tiny) {
            values.iter_mut().for_each(|v| *v = 0.0);
            values[j] = 1.0;
            // row j of the differentiation matrix
            let mut diag = 0.0;
            for k in 0..n {
                if k != j {
                    let d = (self.bary[k] / self.bary[j]) / (self.nodes[j] - self.nodes[k]);
                    derivs[k] = d;
                    diag -= d;
                }
            }
            derivs[j] = diag;
            return;
        }
        let mut denom = 0.0;
        let mut inv_sum = 0.0;
        for k in 0..n {
            let r = 1.0 / (x - self.nodes[k]);
            values[k] = self.bary[k] * r;
            denom += values[k];
            inv_sum += r;
        }
        for k in 0..n {
            values[k] /= denom;
            derivs[k] = values[k] * (inv_sum - 1.0 / (x - self.nodes[k]));
        }
    }
}
