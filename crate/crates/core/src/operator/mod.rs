//! The TMOP objective and its derivatives on a tensor-product mesh.
//!
//! `F(x) = sum_E sum_q w_q det(W) omega mu(A_q W^-1)` plus an optional limiting term
//! `sum_E sum_q w_q det(W) lambda sum_a (x_a - x0_a)^2 / delta^2`. Everything with a
//! gradient in the name follows the element kernels here; the Hessian lives in
//! [`hessian`], the assembled reference in [`full`].

mod full;
mod hessian;
mod limiting;

pub use full::CsrMatrix;
pub use hessian::HessQData;
pub use limiting::{Delta, LimitingConfig};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fe::{gauss_legendre_1d, Basis1D, ElementRestriction, OpCount, Scratch, TensorBasis};
use crate::mesh::Mesh;
use crate::metrics::{self, MetricId, TargetData};
use crate::small::{self, Mat};

#[derive(Debug, Clone)]
pub struct ObjectiveConfig {
    /// `None` leaves only the limiting term.
    pub metric: Option<MetricId>,
    pub target: TargetData,
    /// Constant spatial weight omega.
    pub weight: f64,
    pub limiting: Option<LimitingConfig>,
}

impl ObjectiveConfig {
    pub fn new(metric: MetricId, target: TargetData) -> Self {
        Self {
            metric: Some(metric),
            target,
            weight: 1.0,
            limiting: None,
        }
    }
}

/// Position-independent data for evaluating the objective on one mesh topology.
#[derive(Debug, Clone)]
pub struct Tmop {
    dim: usize,
    restriction: ElementRestriction,
    constrained: Vec<bool>,
    basis: TensorBasis,
    cfg: ObjectiveConfig,
}

/// Per-thread element buffers.
pub(crate) struct Work {
    pub scratch: Scratch,
    /// element dofs, component-outermost
    pub xe: Vec<f64>,
    /// reference gradients per component: `[a][b][q]`
    pub grads: Vec<f64>,
    /// one quadrature-point field
    pub qv: Vec<f64>,
    pub qv2: Vec<f64>,
    pub count: OpCount,
}

impl Tmop {
    /// Uses `nq` Gauss-Legendre points per direction.
    pub fn new(mesh: &Mesh, nq: usize, cfg: ObjectiveConfig) -> Result<Self> {
        let dim = mesh.dim();
        if let Some(m) = cfg.metric {
            m.check_dim(dim)?;
        }
        if cfg.target.dim() != dim {
            return Err(Error::Config(format!(
                "target is {}D, mesh is {dim}D",
                cfg.target.dim()
            )));
        }
        if !(cfg.weight > 0.0 && cfg.weight.is_finite()) {
            return Err(Error::Config(format!("metric weight {} must be > 0", cfg.weight)));
        }
        if let Some(lim) = &cfg.limiting {
            lim.validate(mesh)?;
        }
        let basis = TensorBasis::new(dim, &Basis1D::gauss_lobatto(mesh.order())?, &gauss_legendre_1d(nq)?)?;
        Ok(Self {
            dim,
            restriction: mesh.restriction().clone(),
            constrained: mesh.constrained().to_vec(),
            basis,
            cfg,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn basis(&self) -> &TensorBasis {
        &self.basis
    }

    pub fn config(&self) -> &ObjectiveConfig {
        &self.cfg
    }

    pub fn restriction(&self) -> &ElementRestriction {
        &self.restriction
    }

    pub fn constrained(&self) -> &[bool] {
        &self.constrained
    }

    pub fn num_elements(&self) -> usize {
        self.restriction.num_elements()
    }

    pub fn num_dofs(&self) -> usize {
        self.dim * self.restriction.num_nodes()
    }

    /// Total quadrature points over the mesh.
    pub fn num_quad_points(&self) -> usize {
        self.num_elements() * self.basis.num_quad()
    }

    fn check_len(&self, x: &[f64]) {
        assert_eq!(x.len(), self.num_dofs(), "T-vector length");
    }

    pub(crate) fn work(&self) -> Work {
        let nqd = self.basis.num_quad();
        Work {
            scratch: self.basis.scratch(),
            xe: vec![0.0; self.dim * self.basis.num_dofs()],
            grads: vec![0.0; self.dim * self.dim * nqd],
            qv: vec![0.0; nqd],
            qv2: vec![0.0; nqd],
            count: OpCount::default(),
        }
    }

    pub(crate) fn gather_element(&self, x: &[f64], e: usize, out: &mut [f64]) {
        let n = self.restriction.num_nodes();
        let npe = self.restriction.nodes_per_element();
        for (a, chunk) in out.chunks_mut(npe).enumerate().take(self.dim) {
            let comp = &x[a * n..(a + 1) * n];
            for (o, &g) in chunk.iter_mut().zip(self.restriction.element(e)) {
                *o = comp[g];
            }
        }
    }

    /// Adds element-major contributions `[e][a][i]` into a T-vector in ascending element order.
    pub(crate) fn scatter_elements(&self, ebuf: &[f64]) -> Vec<f64> {
        let n = self.restriction.num_nodes();
        let npe = self.restriction.nodes_per_element();
        let mut out = vec![0.0; self.dim * n];
        for (e, blk) in ebuf.chunks(self.dim * npe).enumerate() {
            let idx = self.restriction.element(e);
            for (a, vals) in blk.chunks(npe).enumerate() {
                let comp = &mut out[a * n..(a + 1) * n];
                for (&g, &v) in idx.iter().zip(vals) {
                    comp[g] += v;
                }
            }
        }
        out
    }

    /// Fills `w.grads` with the reference gradient of each component of the element map.
    pub(crate) fn element_gradients(&self, x: &[f64], e: usize, w: &mut Work) {
        self.gather_element(x, e, &mut w.xe);
        let npe = self.basis.num_dofs();
        let blk = self.dim * self.basis.num_quad();
        for a in 0..self.dim {
            self.basis.grad(
                &w.xe[a * npe..(a + 1) * npe],
                &mut w.grads[a * blk..(a + 1) * blk],
                &mut w.scratch,
                &mut w.count,
            );
        }
    }

    /// A at point `q` from `w.grads`.
    pub(crate) fn jacobian_at(&self, grads: &[f64], q: usize) -> Mat {
        let (d, nqd) = (self.dim, self.basis.num_quad());
        let mut a = [0.0; 9];
        for m in 0..d {
            for b in 0..d {
                a[m * d + b] = grads[(m * d + b) * nqd + q];
            }
        }
        a
    }

    /// T = A W^-1.
    pub(crate) fn t_of(&self, a: &Mat) -> Mat {
        match self.cfg.target.isotropic_size() {
            Some(h) => a.map(|v| v / h),
            None => small::mul(self.dim, a, self.cfg.target.w_inv()),
        }
    }

    /// `w_q det(W) omega` at point `q`.
    pub(crate) fn point_weight(&self, q: usize) -> f64 {
        self.basis.weights()[q] * self.cfg.target.det_w() * self.cfg.weight
    }

    /// Jacobians of every element at every quadrature point: `[e][q][a * d + b]`.
    pub fn jacobians_at_quad(&self, x: &[f64]) -> Vec<f64> {
        self.check_len(x);
        let (d, nqd) = (self.dim, self.basis.num_quad());
        let mut out = vec![0.0; self.num_elements() * nqd * d * d];
        out.par_chunks_mut(nqd * d * d)
            .enumerate()
            .for_each_init(
                || self.work(),
                |w, (e, chunk)| {
                    self.element_gradients(x, e, w);
                    for q in 0..nqd {
                        let a = self.jacobian_at(&w.grads, q);
                        chunk[q * d * d..(q + 1) * d * d].copy_from_slice(&a[..d * d]);
                    }
                },
            );
        out
    }

    /// Smallest det(A) over all elements and quadrature points.
    pub fn min_det_jacobian(&self, x: &[f64]) -> f64 {
        self.check_len(x);
        let nqd = self.basis.num_quad();
        let per_elem: Vec<f64> = (0..self.num_elements())
            .into_par_iter()
            .map_init(
                || self.work(),
                |w, e| {
                    self.element_gradients(x, e, w);
                    (0..nqd)
                        .map(|q| small::det(self.dim, &self.jacobian_at(&w.grads, q)))
                        .fold(f64::INFINITY, f64::min)
                },
            )
            .collect();
        per_elem.into_iter().fold(f64::INFINITY, f64::min)
    }

    /// Metric part of one element at its points, with the smallest det(A).
    fn element_value(&self, x: &[f64], e: usize, w: &mut Work) -> Result<(f64, f64)> {
        self.element_gradients(x, e, w);
        let mut sum = 0.0;
        let mut min_det = f64::INFINITY;
        for q in 0..self.basis.num_quad() {
            let a = self.jacobian_at(&w.grads, q);
            let det = small::det(self.dim, &a);
            min_det = min_det.min(det);
            if let Some(m) = self.cfg.metric {
                let mu = metrics::metric_value(m, self.dim, &self.t_of(&a)).map_err(|_| {
                    Error::InvalidMesh {
                        element: e,
                        point: q,
                        det,
                    }
                })?;
                sum += self.point_weight(q) * mu;
            }
        }
        if let Some(lim) = &self.cfg.limiting {
            sum += self.limiting_element_value(lim, x, e, w);
        }
        Ok((sum, min_det))
    }

    /// F and the smallest det(A) in one pass. An element with det(A) <= 0 where the metric is
    /// evaluated is reported as [`Error::InvalidMesh`] with the lowest failing element.
    pub fn objective_and_min_det(&self, x: &[f64]) -> Result<(f64, f64)> {
        self.check_len(x);
        let parts: Vec<Result<(f64, f64)>> = (0..self.num_elements())
            .into_par_iter()
            .map_init(|| self.work(), |w, e| self.element_value(x, e, w))
            .collect();
        let mut f = 0.0;
        let mut min_det = f64::INFINITY;
        for p in parts {
            let (v, d) = p?;
            f += v;
            min_det = min_det.min(d);
        }
        Ok((f, min_det))
    }

    pub fn objective(&self, x: &[f64]) -> Result<f64> {
        self.objective_and_min_det(x).map(|(f, _)| f)
    }

    fn element_gradient(&self, x: &[f64], e: usize, w: &mut Work, out: &mut [f64]) -> Result<()> {
        let (d, nqd, npe) = (self.dim, self.basis.num_quad(), self.basis.num_dofs());
        out.fill(0.0);
        if let Some(m) = self.cfg.metric {
            self.element_gradients(x, e, w);
            let w_inv = self.cfg.target.w_inv();
            for q in 0..nqd {
                let a = self.jacobian_at(&w.grads, q);
                let p = metrics::metric_first_derivative(m, d, &self.t_of(&a)).map_err(|_| {
                    Error::InvalidMesh {
                        element: e,
                        point: q,
                        det: small::det(d, &a),
                    }
                })?;
                // dmu/dA = P W^-T
                let y = small::mul_bt(d, &p, w_inv);
                let c = self.point_weight(q);
                for k in 0..d * d {
                    w.grads[k * nqd + q] = c * y[k];
                }
            }
            let blk = d * nqd;
            for a in 0..d {
                self.basis.grad_t(
                    &w.grads[a * blk..(a + 1) * blk],
                    &mut out[a * npe..(a + 1) * npe],
                    &mut w.scratch,
                    &mut w.count,
                );
            }
        } else {
            self.gather_element(x, e, &mut w.xe);
        }
        if let Some(lim) = &self.cfg.limiting {
            self.limiting_element_gradient(lim, x, e, w, out);
        }
        Ok(())
    }

    /// dF/dx with constrained entries zeroed.
    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut g = self.gradient_unmasked(x)?;
        for (v, &c) in g.iter_mut().zip(&self.constrained) {
            if c {
                *v = 0.0;
            }
        }
        Ok(g)
    }

    /// dF/dx including the constrained entries.
    pub fn gradient_unmasked(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x);
        let stride = self.dim * self.basis.num_dofs();
        let mut ebuf = vec![0.0; self.num_elements() * stride];
        let status: Vec<Result<()>> = ebuf
            .par_chunks_mut(stride)
            .enumerate()
            .map_init(|| self.work(), |w, (e, out)| self.element_gradient(x, e, w, out))
            .collect();
        status.into_iter().collect::<Result<Vec<()>>>()?;
        Ok(self.scatter_elements(&ebuf))
    }

    /// Zeroes constrained entries in place.
    pub fn mask(&self, v: &mut [f64]) {
        for (x, &c) in v.iter_mut().zip(&self.constrained) {
            if c {
                *x = 0.0;
            }
        }
    }
}

/// Jacobians of the mesh map at the Gauss-Legendre points, `[e][q][a * d + b]`.
pub fn jacobians_at_quad(mesh: &Mesh, nq: usize) -> Result<Vec<f64>> {
    let cfg = ObjectiveConfig {
        metric: None,
        target: TargetData::unit(mesh.dim()),
        weight: 1.0,
        limiting: None,
    };
    Ok(Tmop::new(mesh, nq, cfg)?.jacobians_at_quad(mesh.coords()))
}

/// Mesh volume by quadrature of det(A).
pub fn mesh_volume(mesh: &Mesh, nq: usize) -> Result<f64> {
    let d = mesh.dim();
    let jac = jacobians_at_quad(mesh, nq)?;
    let rule = gauss_legendre_1d(nq)?;
    let w1 = rule.weights();
    let nqd = nq.pow(d as u32);
    let mut vol = 0.0;
    for (k, a) in jac.chunks(d * d).enumerate() {
        let q = k % nqd;
        let (q1, q2, q3) = (q % nq, (q / nq) % nq, q / (nq * nq));
        let w = if d == 2 { w1[q1] * w1[q2] } else { w1[q1] * w1[q2] * w1[q3] };
        vol += w * small::det(d, a);
    }
    Ok(vol)
}

/// Target data for `spec` on the initial mesh.
pub fn build_targets(mesh0: &Mesh, spec: metrics::TargetSpec, nq: usize) -> Result<TargetData> {
    let d = mesh0.dim();
    match spec {
        metrics::TargetSpec::IdealUnit => Ok(TargetData::unit(d)),
        metrics::TargetSpec::IdealEqualSize => {
            let vol = mesh_volume(mesh0, nq)?;
            if !(vol > 0.0) {
                return Err(Error::Config(format!("mesh volume {vol} is not positive")));
            }
            TargetData::isotropic(d, (vol / mesh0.num_elements() as f64).powf(1.0 / d as f64))
        }
    }
}

#[cfg(test)]
mod tests;
