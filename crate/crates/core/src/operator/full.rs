//! Fully assembled reference path: dense element loops and a CSR Hessian.

use super::Tmop;
use crate::error::{Error, Result};
use crate::metrics;
use crate::small;

/// Nonzero limit for [`Tmop::fa_assemble`].
pub const FA_NNZ_LIMIT: usize = 1_000_000;

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub nrows: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Storage of values, column indices and row pointers.
    pub fn bytes(&self) -> usize {
        csr_bytes(self.nrows, self.nnz())
    }

    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let (s, e) = (self.row_ptr[r], self.row_ptr[r + 1]);
        (&self.col_idx[s..e], &self.values[s..e])
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (cols, vals) = self.row(r);
        cols.binary_search(&c).map_or(0.0, |k| vals[k])
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.nrows)
            .map(|r| {
                let (cols, vals) = self.row(r);
                cols.iter().zip(vals).map(|(&c, v)| v * x[c]).sum()
            })
            .collect()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows).map(|r| self.get(r, r)).collect()
    }

    /// max |K_rc - K_cr| and max-row-sum norm.
    pub fn asymmetry(&self) -> (f64, f64) {
        let mut asym = 0.0f64;
        let mut norm = 0.0f64;
        for r in 0..self.nrows {
            let (cols, vals) = self.row(r);
            let mut s = 0.0;
            for (&c, &v) in cols.iter().zip(vals) {
                asym = asym.max((v - self.get(c, r)).abs());
                s += v.abs();
            }
            norm = norm.max(s);
        }
        (asym, norm)
    }
}

/// Bytes of a CSR matrix with 8-byte values and indices.
pub fn csr_bytes(nrows: usize, nnz: usize) -> usize {
    nnz * (std::mem::size_of::<f64>() + std::mem::size_of::<usize>())
        + (nrows + 1) * std::mem::size_of::<usize>()
}

impl Tmop {
    /// Sorted lists of nodes sharing an element with each node.
    fn node_neighbors(&self) -> Vec<Vec<usize>> {
        let r = &self.restriction;
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); r.num_nodes()];
        for e in 0..r.num_elements() {
            let idx = r.element(e);
            for &g in idx {
                adj[g].extend_from_slice(idx);
            }
        }
        for a in &mut adj {
            a.sort_unstable();
            a.dedup();
        }
        adj
    }

    /// Nonzeros of the assembled Hessian, counted from the element connectivity.
    pub fn fa_nnz(&self) -> usize {
        let r = &self.restriction;
        // count distinct neighbors per node without materializing the lists
        let mut stamp = vec![usize::MAX; r.num_nodes()];
        let mut node_elems: Vec<Vec<usize>> = vec![Vec::new(); r.num_nodes()];
        for e in 0..r.num_elements() {
            for &g in r.element(e) {
                node_elems[g].push(e);
            }
        }
        let mut total = 0;
        for (g, elems) in node_elems.iter().enumerate() {
            for &e in elems {
                for &h in r.element(e) {
                    if stamp[h] != g {
                        stamp[h] = g;
                        total += 1;
                    }
                }
            }
        }
        total * self.dim * self.dim
    }

    /// Bytes the assembled Hessian would take in CSR form.
    pub fn fa_bytes(&self) -> usize {
        csr_bytes(self.num_dofs(), self.fa_nnz())
    }

    /// Per-point values `(det A, A)` from the dense gradient table.
    fn dense_jacobian(&self, xe: &[f64], dw: &[f64], q: usize) -> small::Mat {
        let (d, npe) = (self.dim, self.basis.num_dofs());
        let mut a = [0.0; 9];
        for m in 0..d {
            for i in 0..npe {
                let xi = xe[m * npe + i];
                for b in 0..d {
                    a[m * d + b] += xi * dw[(q * npe + i) * d + b];
                }
            }
        }
        a
    }

    fn invalid(e: usize, q: usize, a: &small::Mat, d: usize) -> Error {
        Error::InvalidMesh {
            element: e,
            point: q,
            det: small::det(d, a),
        }
    }

    /// Gradient by dense per-point loops over all element dofs (no sum factorization).
    pub fn fa_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x);
        let (d, npe, nqd) = (self.dim, self.basis.num_dofs(), self.basis.num_quad());
        let dw = self.basis.dense_gradients();
        let wv = self.basis.dense_values();
        let n = self.restriction.num_nodes();
        let mut g = vec![0.0; d * n];
        let mut xe = vec![0.0; d * npe];
        for e in 0..self.num_elements() {
            self.gather_element(x, e, &mut xe);
            let mut ge = vec![0.0; d * npe];
            for q in 0..nqd {
                if let Some(metric) = self.cfg.metric {
                    let a = self.dense_jacobian(&xe, &dw, q);
                    let p = metrics::metric_first_derivative(metric, d, &self.t_of(&a))
                        .map_err(|_| Self::invalid(e, q, &a, d))?;
                    let y = small::mul_bt(d, &p, self.cfg.target.w_inv());
                    let c = self.point_weight(q);
                    for m in 0..d {
                        for i in 0..npe {
                            for b in 0..d {
                                ge[m * npe + i] += c * y[m * d + b] * dw[(q * npe + i) * d + b];
                            }
                        }
                    }
                }
                if let Some(lim) = &self.cfg.limiting {
                    let c = 2.0 * self.limiting_point_coefficient(lim, e, q, &wv);
                    for m in 0..d {
                        let u: f64 = (0..npe)
                            .map(|i| {
                                let gi = self.restriction.element(e)[i];
                                wv[q * npe + i] * (xe[m * npe + i] - lim.x0[m * n + gi])
                            })
                            .sum();
                        for i in 0..npe {
                            ge[m * npe + i] += c * u * wv[q * npe + i];
                        }
                    }
                }
            }
            for (m, blk) in ge.chunks(npe).enumerate() {
                for (&gi, &v) in self.restriction.element(e).iter().zip(blk) {
                    g[m * n + gi] += v;
                }
            }
        }
        self.mask(&mut g);
        Ok(g)
    }

    /// `w_q det(W) lambda / delta(q)^2` from dense basis values.
    fn limiting_point_coefficient(&self, lim: &super::LimitingConfig, e: usize, q: usize, wv: &[f64]) -> f64 {
        let npe = self.basis.num_dofs();
        let delta = match &lim.delta {
            super::Delta::Constant(v) => *v,
            super::Delta::PerNode(v) => self
                .restriction
                .element(e)
                .iter()
                .enumerate()
                .map(|(i, &g)| wv[q * npe + i] * v[g])
                .sum(),
        };
        self.basis.weights()[q] * self.cfg.target.det_w() * lim.weight / (delta * delta)
    }

    /// Assembled Hessian with identity rows and columns for constrained dofs. Element blocks
    /// are formed by dense loops over dof pairs and quadrature points.
    pub fn fa_assemble(&self, x: &[f64]) -> Result<CsrMatrix> {
        self.check_len(x);
        let nnz = self.fa_nnz();
        if nnz > FA_NNZ_LIMIT {
            return Err(Error::AssemblyTooLarge {
                nnz,
                limit: FA_NNZ_LIMIT,
            });
        }
        let (d, npe, nqd) = (self.dim, self.basis.num_dofs(), self.basis.num_quad());
        let dd = d * d;
        let n = self.restriction.num_nodes();
        let dw = self.basis.dense_gradients();
        let wv = self.basis.dense_values();

        let adj = self.node_neighbors();
        let mut row_ptr = Vec::with_capacity(d * n + 1);
        let mut col_idx = Vec::with_capacity(nnz);
        row_ptr.push(0);
        for _a in 0..d {
            for nb in &adj {
                for c in 0..d {
                    col_idx.extend(nb.iter().map(|&h| c * n + h));
                }
                row_ptr.push(col_idx.len());
            }
        }
        let mut values = vec![0.0; col_idx.len()];
        let mut k = CsrMatrix {
            nrows: d * n,
            row_ptr,
            col_idx,
            values: Vec::new(),
        };

        let mut xe = vec![0.0; d * npe];
        let mut ke = vec![0.0; d * npe * d * npe];
        let mut u = vec![0.0; dd];
        for e in 0..self.num_elements() {
            self.gather_element(x, e, &mut xe);
            ke.fill(0.0);
            let stride = d * npe;
            for q in 0..nqd {
                if self.cfg.metric.is_some() {
                    let a = self.dense_jacobian(&xe, &dw, q);
                    let h = self.point_hessian(&a, q).map_err(|_| Self::invalid(e, q, &a, d))?;
                    for m in 0..d {
                        for i in 0..npe {
                            // u[(o,l)] = sum_b H[(m b),(o l)] dw_i,b
                            for (ol, uv) in u.iter_mut().enumerate() {
                                *uv = (0..d)
                                    .map(|b| h[(m * d + b) * dd + ol] * dw[(q * npe + i) * d + b])
                                    .sum();
                            }
                            let row = &mut ke[(m * npe + i) * stride..(m * npe + i + 1) * stride];
                            for o in 0..d {
                                for j in 0..npe {
                                    let s: f64 = (0..d).map(|l| u[o * d + l] * dw[(q * npe + j) * d + l]).sum();
                                    row[o * npe + j] += s;
                                }
                            }
                        }
                    }
                }
                if let Some(lim) = &self.cfg.limiting {
                    let c = 2.0 * self.limiting_point_coefficient(lim, e, q, &wv);
                    for m in 0..d {
                        for i in 0..npe {
                            let wi = wv[q * npe + i];
                            let row = &mut ke[(m * npe + i) * stride..(m * npe + i + 1) * stride];
                            for j in 0..npe {
                                row[m * npe + j] += c * wi * wv[q * npe + j];
                            }
                        }
                    }
                }
            }
            let idx = self.restriction.element(e);
            for m in 0..d {
                for (i, &gi) in idx.iter().enumerate() {
                    let r = m * n + gi;
                    let (s, end) = (k.row_ptr[r], k.row_ptr[r + 1]);
                    let cols = &k.col_idx[s..end];
                    for o in 0..d {
                        for (j, &gj) in idx.iter().enumerate() {
                            let pos = cols.binary_search(&(o * n + gj)).expect("pattern");
                            values[s + pos] += ke[(m * npe + i) * stride + o * npe + j];
                        }
                    }
                }
            }
        }
        // identity on the constrained subspace
        for r in 0..d * n {
            let (s, end) = (k.row_ptr[r], k.row_ptr[r + 1]);
            for p in s..end {
                let c = k.col_idx[p];
                if self.constrained[r] || self.constrained[c] {
                    values[p] = if r == c { 1.0 } else { 0.0 };
                }
            }
        }
        k.values = values;
        Ok(k)
    }
}
