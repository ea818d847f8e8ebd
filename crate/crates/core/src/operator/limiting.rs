//! Node-displacement limiting: `lambda |x - x0|^2 / delta^2` integrated against `w_q det(W)`.

use super::{Tmop, Work};
use crate::error::{Error, Result};
use crate::mesh::Mesh;

/// Displacement scale, constant or one value per node.
#[derive(Debug, Clone, PartialEq)]
pub enum Delta {
    Constant(f64),
    PerNode(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitingConfig {
    /// Reference positions, a T-vector.
    pub x0: Vec<f64>,
    pub delta: Delta,
    pub weight: f64,
}

impl LimitingConfig {
    pub fn new(x0: Vec<f64>, delta: f64) -> Self {
        Self {
            x0,
            delta: Delta::Constant(delta),
            weight: 1.0,
        }
    }

    pub(crate) fn validate(&self, mesh: &Mesh) -> Result<()> {
        if self.x0.len() != mesh.num_dofs() {
            return Err(Error::Shape(format!(
                "limiting reference has {} entries, mesh has {} position dofs",
                self.x0.len(),
                mesh.num_dofs()
            )));
        }
        let ok = match &self.delta {
            Delta::Constant(d) => *d > 0.0 && d.is_finite(),
            Delta::PerNode(v) => {
                if v.len() != mesh.num_nodes() {
                    return Err(Error::Shape(format!(
                        "{} delta values for {} nodes",
                        v.len(),
                        mesh.num_nodes()
                    )));
                }
                v.iter().all(|d| *d > 0.0 && d.is_finite())
            }
        };
        if !ok {
            return Err(Error::Config("limiting delta must be positive".into()));
        }
        if !(self.weight > 0.0 && self.weight.is_finite()) {
            return Err(Error::Config("limiting weight must be positive".into()));
        }
        Ok(())
    }
}

impl Tmop {
    /// `w.qv2[q] = w_q det(W) lambda / delta(q)^2`.
    fn limiting_coefficients(&self, lim: &LimitingConfig, e: usize, w: &mut Work) {
        let nqd = self.basis.num_quad();
        let base = self.cfg.target.det_w() * lim.weight;
        match &lim.delta {
            Delta::Constant(d) => {
                let c = base / (d * d);
                for q in 0..nqd {
                    w.qv2[q] = c * self.basis.weights()[q];
                }
            }
            Delta::PerNode(v) => {
                let idx = self.restriction.element(e);
                let npe = idx.len();
                let mut de = vec![0.0; npe];
                for (o, &g) in de.iter_mut().zip(idx) {
                    *o = v[g];
                }
                self.basis.interp(&de, &mut w.qv2, &mut w.scratch, &mut w.count);
                for q in 0..nqd {
                    let dq = w.qv2[q];
                    w.qv2[q] = base * self.basis.weights()[q] / (dq * dq);
                }
            }
        }
    }

    /// Interpolated displacement of component `a` into `w.qv`.
    fn displacement(&self, lim: &LimitingConfig, x: &[f64], e: usize, a: usize, w: &mut Work) {
        let npe = self.basis.num_dofs();
        let n = self.restriction.num_nodes();
        let mut de = vec![0.0; npe];
        for (i, &g) in self.restriction.element(e).iter().enumerate() {
            de[i] = x[a * n + g] - lim.x0[a * n + g];
        }
        self.basis.interp(&de, &mut w.qv, &mut w.scratch, &mut w.count);
    }

    pub(crate) fn limiting_element_value(&self, lim: &LimitingConfig, x: &[f64], e: usize, w: &mut Work) -> f64 {
        self.limiting_coefficients(lim, e, w);
        let mut sum = 0.0;
        for a in 0..self.dim {
            self.displacement(lim, x, e, a, w);
            sum += w.qv.iter().zip(&w.qv2).map(|(u, c)| c * u * u).sum::<f64>();
        }
        sum
    }

    /// Adds the limiting gradient of element `e` into `out` (`[a][i]`).
    pub(crate) fn limiting_element_gradient(
        &self,
        lim: &LimitingConfig,
        x: &[f64],
        e: usize,
        w: &mut Work,
        out: &mut [f64],
    ) {
        let npe = self.basis.num_dofs();
        self.limiting_coefficients(lim, e, w);
        for a in 0..self.dim {
            self.displacement(lim, x, e, a, w);
            for (u, c) in w.qv.iter_mut().zip(&w.qv2) {
                *u *= 2.0 * c;
            }
            self.basis
                .interp_t(&w.qv, &mut out[a * npe..(a + 1) * npe], &mut w.scratch, &mut w.count);
        }
    }

    /// Per-point mass coefficients `2 w_q det(W) lambda / delta(q)^2` of element `e`.
    pub(crate) fn limiting_mass_coefficients(&self, lim: &LimitingConfig, e: usize, w: &mut Work) -> Vec<f64> {
        self.limiting_coefficients(lim, e, w);
        w.qv2.iter().map(|c| 2.0 * c).collect()
    }

    /// Limiting term alone.
    pub fn limiting_value(&self, x: &[f64]) -> f64 {
        let Some(lim) = &self.cfg.limiting else {
            return 0.0;
        };
        let mut w = self.work();
        (0..self.num_elements())
            .map(|e| self.limiting_element_value(lim, x, e, &mut w))
            .sum()
    }

    /// Gradient of the limiting term alone, constrained entries zeroed.
    pub fn limiting_gradient(&self, x: &[f64]) -> Vec<f64> {
        let stride = self.dim * self.basis.num_dofs();
        let mut ebuf = vec![0.0; self.num_elements() * stride];
        if let Some(lim) = &self.cfg.limiting {
            let mut w = self.work();
            for (e, out) in ebuf.chunks_mut(stride).enumerate() {
                self.limiting_element_gradient(lim, x, e, &mut w, out);
            }
        }
        let mut g = self.scatter_elements(&ebuf);
        self.mask(&mut g);
        g
    }
}
