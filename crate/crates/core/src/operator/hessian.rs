//! Partially assembled Hessian: per-point d^2 x d^2 blocks, applied with sum factorization.

use rayon::prelude::*;

use super::{Tmop, Work};
use crate::error::{Error, Result};
use crate::fe::{apply_axis, AxisMatrix, OpCount};
use crate::metrics::{self, Hess};
use crate::small;

/// Length of a packed symmetric block: d^2 (d^2 + 1) / 2.
pub(crate) fn packed_len(dim: usize) -> usize {
    let dd = dim * dim;
    dd * (dd + 1) / 2
}

/// Packed position of entry (r, c), r <= c, of a symmetric `dd x dd` block.
#[inline]
pub(crate) fn packed_index(dd: usize, r: usize, c: usize) -> usize {
    let (r, c) = if r <= c { (r, c) } else { (c, r) };
    r * dd - (r * r - r) / 2 + (c - r)
}

/// Replaces the gradients `g[k][q]` at every point by the packed symmetric block times them.
#[inline]
fn block_products<const DD: usize, const PL: usize>(blocks: &[f64], g: &mut [f64], nqd: usize) {
    for (q, h) in blocks.chunks_exact(PL).enumerate() {
        let h: &[f64; PL] = h.try_into().unwrap();
        let mut v = [0.0; DD];
        for k in 0..DD {
            v[k] = g[k * nqd + q];
        }
        let mut z = [0.0; DD];
        let mut i = 0;
        for r in 0..DD {
            let mut s = h[i] * v[r];
            i += 1;
            for c in r + 1..DD {
                s += h[i] * v[c];
                z[c] += h[i] * v[r];
                i += 1;
            }
            z[r] += s;
        }
        for k in 0..DD {
            g[k * nqd + q] = z[k];
        }
    }
}

/// Quadrature data of the Hessian at fixed positions.
#[derive(Debug, Clone)]
pub struct HessQData {
    dim: usize,
    points_per_element: usize,
    /// `[e][q][packed]`, already weighted and conjugated with W^-1.
    blocks: Vec<f64>,
    /// Limiting mass coefficients `[e][q]`, when limiting is on.
    mass: Option<Vec<f64>>,
}

impl HessQData {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_elements(&self) -> usize {
        if self.points_per_element == 0 {
            0
        } else {
            self.blocks.len() / (self.points_per_element * packed_len(self.dim))
        }
    }

    fn packed(&self, e: usize, q: usize) -> &[f64] {
        let pl = packed_len(self.dim);
        let start = (e * self.points_per_element + q) * pl;
        &self.blocks[start..start + pl]
    }

    /// Full block (m k, o l) at point `q` of element `e`.
    pub fn block(&self, e: usize, q: usize) -> Hess {
        let dd = self.dim * self.dim;
        let p = self.packed(e, q);
        let mut h = [0.0; 81];
        for r in 0..dd {
            for c in 0..dd {
                h[r * dd + c] = p[packed_index(dd, r, c)];
            }
        }
        h
    }

    /// Bytes held for all elements.
    pub fn bytes(&self) -> usize {
        let mass = self.mass.as_ref().map_or(0, |m| m.len());
        (self.blocks.len() + mass) * std::mem::size_of::<f64>()
    }

    pub fn bytes_per_element(&self) -> usize {
        self.bytes() / self.num_elements().max(1)
    }

    pub(crate) fn mass(&self, e: usize) -> Option<&[f64]> {
        let n = self.points_per_element;
        self.mass.as_ref().map(|m| &m[e * n..(e + 1) * n])
    }
}

impl Tmop {
    /// Weighted, W-conjugated metric Hessian at one point as a full block:
    /// `H_A[(m k),(o l)] = c sum_{n,p} Winv[k,n] Winv[l,p] H[(m n),(o p)]`.
    pub(crate) fn point_hessian(&self, a: &small::Mat, q: usize) -> std::result::Result<Hess, f64> {
        let d = self.dim;
        let dd = d * d;
        let metric = self.cfg.metric.expect("metric");
        let h = metrics::metric_second_derivative(metric, d, &self.t_of(a))
            .map_err(|_| small::det(d, a))?;
        let c = self.point_weight(q);
        let mut out = [0.0; 81];
        if let Some(s) = self.cfg.target.isotropic_size() {
            let f = c / (s * s);
            for k in 0..dd * dd {
                out[k] = f * h[k];
            }
            return Ok(out);
        }
        let wi = self.cfg.target.w_inv();
        // contract the second index pair, then the first
        let mut g = [0.0; 81];
        for r in 0..dd {
            for o in 0..d {
                for l in 0..d {
                    g[r * dd + o * d + l] = (0..d).map(|p| h[r * dd + o * d + p] * wi[l * d + p]).sum();
                }
            }
        }
        for m in 0..d {
            for k in 0..d {
                for col in 0..dd {
                    let v: f64 = (0..d).map(|n| wi[k * d + n] * g[(m * d + n) * dd + col]).sum();
                    out[(m * d + k) * dd + col] = c * v;
                }
            }
        }
        Ok(out)
    }

    /// Evaluates and stores the Hessian blocks at positions `x`.
    pub fn hessian_setup(&self, x: &[f64]) -> Result<HessQData> {
        self.check_len(x);
        let d = self.dim;
        let dd = d * d;
        let nqd = self.basis.num_quad();
        let pl = packed_len(d);
        let ne = self.num_elements();
        let mut blocks = vec![0.0; if self.cfg.metric.is_some() { ne * nqd * pl } else { 0 }];
        if self.cfg.metric.is_some() {
            let status: Vec<Result<()>> = blocks
                .par_chunks_mut(nqd * pl)
                .enumerate()
                .map_init(
                    || self.work(),
                    |w, (e, chunk)| {
                        self.element_gradients(x, e, w);
                        for q in 0..nqd {
                            let a = self.jacobian_at(&w.grads, q);
                            let h = self.point_hessian(&a, q).map_err(|det| Error::InvalidMesh {
                                element: e,
                                point: q,
                                det,
                            })?;
                            let dst = &mut chunk[q * pl..(q + 1) * pl];
                            let mut k = 0;
                            for r in 0..dd {
                                for c in r..dd {
                                    // symmetrize against roundoff in the assembled formula
                                    dst[k] = 0.5 * (h[r * dd + c] + h[c * dd + r]);
                                    k += 1;
                                }
                            }
                        }
                        Ok(())
                    },
                )
                .collect();
            status.into_iter().collect::<Result<Vec<()>>>()?;
        }
        let mass = self.cfg.limiting.as_ref().map(|lim| {
            let mut w = self.work();
            (0..ne)
                .flat_map(|e| self.limiting_mass_coefficients(lim, e, &mut w))
                .collect()
        });
        Ok(HessQData {
            dim: d,
            points_per_element: nqd,
            blocks: if self.cfg.metric.is_some() { blocks } else { Vec::new() },
            mass,
        })
    }

    fn element_hessian_apply(&self, qd: &HessQData, v: &[f64], e: usize, w: &mut Work, out: &mut [f64]) {
        let d = self.dim;
        let dd = d * d;
        let (nqd, npe) = (self.basis.num_quad(), self.basis.num_dofs());
        let blk = d * nqd;
        out.fill(0.0);
        if self.cfg.metric.is_some() {
            self.element_gradients(v, e, w);
            let pl = packed_len(d);
            let blocks = &qd.blocks[e * nqd * pl..(e + 1) * nqd * pl];
            if d == 2 {
                block_products::<4, 10>(blocks, &mut w.grads, nqd);
            } else {
                block_products::<9, 45>(blocks, &mut w.grads, nqd);
            }
            w.count.add(nqd * dd * dd);
            for a in 0..d {
                self.basis.grad_t(
                    &w.grads[a * blk..(a + 1) * blk],
                    &mut out[a * npe..(a + 1) * npe],
                    &mut w.scratch,
                    &mut w.count,
                );
            }
        } else {
            self.gather_element(v, e, &mut w.xe);
        }
        if let Some(mass) = qd.mass(e) {
            for a in 0..d {
                let (xe, qv) = (&w.xe[a * npe..(a + 1) * npe], &mut w.qv);
                self.basis.interp(xe, qv, &mut w.scratch, &mut w.count);
                for (u, m) in w.qv.iter_mut().zip(mass) {
                    *u *= m;
                }
                w.count.add(nqd);
                self.basis
                    .interp_t(&w.qv, &mut out[a * npe..(a + 1) * npe], &mut w.scratch, &mut w.count);
            }
        }
    }

    /// Hessian action with the identity on constrained dofs.
    pub fn hessian_apply(&self, qd: &HessQData, v: &[f64]) -> Vec<f64> {
        self.hessian_apply_counted(qd, v).0
    }

    /// [`Self::hessian_apply`] together with the multiply-adds spent in element kernels.
    pub fn hessian_apply_counted(&self, qd: &HessQData, v: &[f64]) -> (Vec<f64>, OpCount) {
        self.check_len(v);
        let mut vm = v.to_vec();
        self.mask(&mut vm);
        let stride = self.dim * self.basis.num_dofs();
        let mut ebuf = vec![0.0; self.num_elements() * stride];
        let count: u64 = ebuf
            .par_chunks_mut(stride)
            .enumerate()
            .map_init(
                || self.work(),
                |w, (e, out)| {
                    w.count = OpCount::default();
                    self.element_hessian_apply(qd, &vm, e, w, out);
                    w.count.0
                },
            )
            .sum();
        let mut r = self.scatter_elements(&ebuf);
        for ((o, &c), &vi) in r.iter_mut().zip(&self.constrained).zip(v) {
            if c {
                *o = vi;
            }
        }
        (r, OpCount(count))
    }

    /// Action of the limiting term's Hessian alone (no constraint handling).
    pub fn limiting_hessian_apply(&self, qd: &HessQData, v: &[f64]) -> Vec<f64> {
        let stride = self.dim * self.basis.num_dofs();
        let npe = self.basis.num_dofs();
        let mut ebuf = vec![0.0; self.num_elements() * stride];
        let mut w = self.work();
        for (e, out) in ebuf.chunks_mut(stride).enumerate() {
            if let Some(mass) = qd.mass(e) {
                self.gather_element(v, e, &mut w.xe);
                for a in 0..self.dim {
                    self.basis.interp(&w.xe[a * npe..(a + 1) * npe], &mut w.qv, &mut w.scratch, &mut w.count);
                    for (u, m) in w.qv.iter_mut().zip(mass) {
                        *u *= m;
                    }
                    self.basis
                        .interp_t(&w.qv, &mut out[a * npe..(a + 1) * npe], &mut w.scratch, &mut w.count);
                }
            }
        }
        self.scatter_elements(&ebuf)
    }

    /// Exact diagonal of the operator applied by [`Self::hessian_apply`].
    pub fn hessian_diagonal(&self, qd: &HessQData) -> Vec<f64> {
        let d = self.dim;
        let dd = d * d;
        let (nq, ni) = (self.basis.quad_1d(), self.basis.dofs_1d());
        let (nqd, npe) = (self.basis.num_quad(), self.basis.num_dofs());
        let m = self.basis.eval_matrices();
        let (b, g) = (m.b().data, m.g().data);
        let prod = |x: &[f64], y: &[f64]| -> Vec<f64> { x.iter().zip(y).map(|(p, q)| p * q).collect() };
        // [0] B.B, [1] B.G, [2] G.G (entrywise)
        let tabs = [prod(b, b), prod(b, g), prod(g, g)];
        let axis_tab = |k: usize, bi: usize, ci: usize| -> AxisMatrix<'_> {
            let which = (k == bi) as usize + (k == ci) as usize;
            AxisMatrix::new(&tabs[which], nq, ni)
        };
        let stride = d * npe;
        let mut ebuf = vec![0.0; self.num_elements() * stride];
        ebuf.par_chunks_mut(stride).enumerate().for_each_init(
            || (vec![0.0; nqd.max(npe)], vec![0.0; nqd.max(npe)], vec![0.0; nqd]),
            |(t0, t1, hq), (e, out)| {
                let mut count = OpCount::default();
                if self.cfg.metric.is_some() {
                    for a in 0..d {
                        for bi in 0..d {
                            for ci in bi..d {
                                let scale = if bi == ci { 1.0 } else { 2.0 };
                                let r = a * d + bi;
                                let c = a * d + ci;
                                for q in 0..nqd {
                                    hq[q] = scale * qd.packed(e, q)[packed_index(dd, r, c)];
                                }
                                let o = &mut out[a * npe..(a + 1) * npe];
                                contract_t(d, nq, ni, hq, &axis_tab, bi, ci, t0, t1, o, &mut count);
                            }
                        }
                    }
                }
                if let Some(mass) = qd.mass(e) {
                    for a in 0..d {
                        let o = &mut out[a * npe..(a + 1) * npe];
                        // B.B on every axis: use an index pair that matches no axis
                        contract_t(d, nq, ni, mass, &axis_tab, 9, 9, t0, t1, o, &mut count);
                    }
                }
            },
        );
        let mut diag = self.scatter_elements(&ebuf);
        for (v, &c) in diag.iter_mut().zip(&self.constrained) {
            if c {
                *v = 1.0;
            }
        }
        diag
    }
}

/// Adds `sum_q h[q] prod_k tab_k[q_k, i_k]` into `out[i]`.
#[allow(clippy::too_many_arguments)]
fn contract_t<'a>(
    d: usize,
    nq: usize,
    ni: usize,
    h: &[f64],
    tab: &dyn Fn(usize, usize, usize) -> AxisMatrix<'a>,
    bi: usize,
    ci: usize,
    t0: &mut [f64],
    t1: &mut [f64],
    out: &mut [f64],
    count: &mut OpCount,
) {
    if d == 2 {
        apply_axis([nq, nq, 1], 0, tab(0, bi, ci), true, h, t0, false, count);
        apply_axis([ni, nq, 1], 1, tab(1, bi, ci), true, t0, out, true, count);
    } else {
        apply_axis([nq, nq, nq], 0, tab(0, bi, ci), true, h, t0, false, count);
        apply_axis([ni, nq, nq], 1, tab(1, bi, ci), true, t0, t1, false, count);
        apply_axis([ni, ni, nq], 2, tab(2, bi, ci), true, t1, out, true, count);
    }
}
