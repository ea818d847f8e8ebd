//! Sum-factorized contractions between element dofs and tensor-product quadrature points.
//!
//! Element tensors are stored with the first reference axis fastest: index
//! `i1 + n1 * (i2 + n2 * i3)`. A 1D matrix applied "along axis k" contracts the k-th index.

use super::basis::Basis1D;
use super::quadrature::QuadRule1D;
use crate::error::{Error, Result};

/// Multiply-add counter for the contraction kernels.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct OpCount(pub u64);

impl OpCount {
    #[inline]
    pub fn add(&mut self, n: usize) {
        self.0 += n as u64;
    }
}

impl std::ops::Add for OpCount {
    type Output = OpCount;
    fn add(self, rhs: OpCount) -> OpCount {
        OpCount(self.0 + rhs.0)
    }
}

impl std::iter::Sum for OpCount {
    fn sum<I: Iterator<Item = OpCount>>(iter: I) -> OpCount {
        iter.fold(OpCount(0), |a, b| a + b)
    }
}

/// Row-major dense matrix borrowed for a 1D contraction.
#[derive(Debug, Clone, Copy)]
pub struct AxisMatrix<'a> {
    pub data: &'a [f64],
    pub rows: usize,
    pub cols: usize,
}

impl<'a> AxisMatrix<'a> {
    pub fn new(data: &'a [f64], rows: usize, cols: usize) -> Self {
        assert_eq!(data.len(), rows * cols);
        Self { data, rows, cols }
    }
}

/// The 1D interpolation and differentiation tables B[q][i] = l_i(x_q), G[q][i] = l_i'(x_q).
#[derive(Debug, Clone, PartialEq)]
pub struct EvalMatrices {
    nq: usize,
    ni: usize,
    b: Vec<f64>,
    g: Vec<f64>,
}

impl EvalMatrices {
    pub fn num_quad(&self) -> usize {
        self.nq
    }

    pub fn num_dofs(&self) -> usize {
        self.ni
    }

    pub fn b(&self) -> AxisMatrix<'_> {
        AxisMatrix::new(&self.b, self.nq, self.ni)
    }

    pub fn g(&self) -> AxisMatrix<'_> {
        AxisMatrix::new(&self.g, self.nq, self.ni)
    }

    pub fn b_entry(&self, q: usize, i: usize) -> f64 {
        self.b[q * self.ni + i]
    }

    pub fn g_entry(&self, q: usize, i: usize) -> f64 {
        self.g[q * self.ni + i]
    }
}

pub fn build_eval_matrices(basis: &Basis1D, rule: &QuadRule1D) -> EvalMatrices {
    let (nq, ni) = (rule.len(), basis.len());
    let mut b = vec![0.0; nq * ni];
    let mut g = vec![0.0; nq * ni];
    for (q, &x) in rule.points().iter().enumerate() {
        basis.eval(x, &mut b[q * ni..(q + 1) * ni], &mut g[q * ni..(q + 1) * ni]);
    }
    EvalMatrices { nq, ni, b, g }
}

/// Applies `m` (or its transpose) along `axis` of a tensor of extents `shape`.
///
/// The contracted extent must equal `m.cols` (or `m.rows` when transposed). With
/// `accumulate` the result is added to `output`.
#[allow(clippy::too_many_arguments)]
pub fn apply_axis(
    shape: [usize; 3],
    axis: usize,
    m: AxisMatrix<'_>,
    transpose: bool,
    input: &[f64],
    output: &mut [f64],
    accumulate: bool,
    count: &mut OpCount,
) {
    let (rows, cols) = if transpose {
        (m.cols, m.rows)
    } else {
        (m.rows, m.cols)
    };
    debug_assert_eq!(shape[axis], cols);
    let lo: usize = shape[..axis].iter().product();
    let hi: usize = shape[axis + 1..].iter().product();
    debug_assert!(input.len() >= lo * cols * hi);
    debug_assert!(output.len() >= lo * rows * hi);
    let coef = |r: usize, c: usize| {
        if transpose {
            m.data[c * m.cols + r]
        } else {
            m.data[r * m.cols + c]
        }
    };
    if lo == 1 {
        for h in 0..hi {
            let inp = &input[h * cols..(h + 1) * cols];
            let out = &mut output[h * rows..(h + 1) * rows];
            for (r, o) in out.iter_mut().enumerate() {
                let mut s = 0.0;
                for (c, &v) in inp.iter().enumerate() {
                    s += coef(r, c) * v;
                }
                if accumulate {
                    *o += s;
                } else {
                    *o = s;
                }
            }
        }
    } else {
        for h in 0..hi {
            for r in 0..rows {
                let out = &mut output[(h * rows + r) * lo..(h * rows + r + 1) * lo];
                if !accumulate {
                    out.fill(0.0);
                }
                for c in 0..cols {
                    let k = coef(r, c);
                    let inp = &input[(h * cols + c) * lo..(h * cols + c + 1) * lo];
                    for (o, &v) in out.iter_mut().zip(inp) {
                        *o += k * v;
                    }
                }
            }
        }
    }
    count.add(rows * cols * lo * hi);
}

fn check_mats(dim: usize, len: usize, mats: &[AxisMatrix<'_>], forward: bool) -> Result<[usize; 3]> {
    if mats.len() != dim || !(1..=3).contains(&dim) {
        return Err(Error::Shape(format!(
            "{} axis matrices for a rank-{dim} tensor",
            mats.len()
        )));
    }
    let mut shape = [1usize; 3];
    for (k, m) in mats.iter().enumerate() {
        shape[k] = if forward { m.cols } else { m.rows };
    }
    if shape.iter().product::<usize>() != len {
        return Err(Error::Shape(format!(
            "tensor of length {len} does not match axis extents {:?}",
            &shape[..dim]
        )));
    }
    Ok(shape)
}

/// Contracts an element dof tensor to quadrature points with one matrix per axis, applying
/// the last axis first.
pub fn contract_dofs_to_quad(
    dim: usize,
    e: &[f64],
    mats: &[AxisMatrix<'_>],
    count: &mut OpCount,
) -> Result<Vec<f64>> {
    let mut shape = check_mats(dim, e.len(), mats, true)?;
    let mut cur = e.to_vec();
    for k in (0..dim).rev() {
        let mut next = vec![0.0; cur.len() / shape[k] * mats[k].rows];
        apply_axis(shape, k, mats[k], false, &cur, &mut next, false, count);
        shape[k] = mats[k].rows;
        cur = next;
    }
    Ok(cur)
}

/// Adjoint of [`contract_dofs_to_quad`]: applies each matrix transposed along its axis.
pub fn contract_quad_to_dofs(
    dim: usize,
    q: &[f64],
    mats: &[AxisMatrix<'_>],
    count: &mut OpCount,
) -> Result<Vec<f64>> {
    let mut shape = check_mats(dim, q.len(), mats, false)?;
    let mut cur = q.to_vec();
    for k in 0..dim {
        let mut next = vec![0.0; cur.len() / shape[k] * mats[k].cols];
        apply_axis(shape, k, mats[k], true, &cur, &mut next, false, count);
        shape[k] = mats[k].cols;
        cur = next;
    }
    Ok(cur)
}

/// Work buffers for the per-element kernels of [`TensorBasis`].
#[derive(Debug, Clone)]
pub struct Scratch {
    bufs: [Vec<f64>; 5],
}

/// Tensor-product basis on the reference square or cube together with its quadrature.
#[derive(Debug, Clone)]
pub struct TensorBasis {
    dim: usize,
    ni: usize,
    nq: usize,
    mats: EvalMatrices,
    weights: Vec<f64>,
}

impl TensorBasis {
    pub fn new(dim: usize, basis: &Basis1D, rule: &QuadRule1D) -> Result<Self> {
        if !(2..=3).contains(&dim) {
            return Err(Error::Config(format!("dimension {dim} not supported")));
        }
        let mats = build_eval_matrices(basis, rule);
        let w1 = rule.weights();
        let nq = rule.len();
        let weights = (0..nq.pow(dim as u32))
            .map(|q| {
                let (q1, q2, q3) = (q % nq, (q / nq) % nq, q / (nq * nq));
                if dim == 2 {
                    w1[q1] * w1[q2]
                } else {
                    w1[q1] * w1[q2] * w1[q3]
                }
            })
            .collect();
        Ok(Self {
            dim,
            ni: basis.len(),
            nq,
            mats,
            weights,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// 1D dof count `p + 1`.
    pub fn dofs_1d(&self) -> usize {
        self.ni
    }

    /// 1D quadrature point count.
    pub fn quad_1d(&self) -> usize {
        self.nq
    }

    pub fn num_dofs(&self) -> usize {
        self.ni.pow(self.dim as u32)
    }

    pub fn num_quad(&self) -> usize {
        self.nq.pow(self.dim as u32)
    }

    pub fn eval_matrices(&self) -> &EvalMatrices {
        &self.mats
    }

    /// Tensor-product quadrature weights, lexicographic with the first axis fastest.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn scratch(&self) -> Scratch {
        let n = self.ni.max(self.nq).pow(self.dim as u32);
        Scratch {
            bufs: std::array::from_fn(|_| vec![0.0; n]),
        }
    }

    /// Values at quadrature points: `out` has `num_quad()` entries.
    pub fn interp(&self, e: &[f64], out: &mut [f64], s: &mut Scratch, count: &mut OpCount) {
        let (ni, nq) = (self.ni, self.nq);
        let b = self.mats.b();
        let [t0, t1, ..] = &mut s.bufs;
        if self.dim == 2 {
            apply_axis([ni, ni, 1], 1, b, false, e, t0, false, count);
            apply_axis([ni, nq, 1], 0, b, false, t0, out, false, count);
        } else {
            apply_axis([ni, ni, ni], 2, b, false, e, t0, false, count);
            apply_axis([ni, ni, nq], 1, b, false, t0, t1, false, count);
            apply_axis([ni, nq, nq], 0, b, false, t1, out, false, count);
        }
    }

    /// Transpose of [`Self::interp`], added into `out`.
    pub fn interp_t(&self, q: &[f64], out: &mut [f64], s: &mut Scratch, count: &mut OpCount) {
        let (ni, nq) = (self.ni, self.nq);
        let b = self.mats.b();
        let [t0, t1, ..] = &mut s.bufs;
        if self.dim == 2 {
            apply_axis([nq, nq, 1], 0, b, true, q, t0, false, count);
            apply_axis([ni, nq, 1], 1, b, true, t0, out, true, count);
        } else {
            apply_axis([nq, nq, nq], 0, b, true, q, t0, false, count);
            apply_axis([ni, nq, nq], 1, b, true, t0, t1, false, count);
            apply_axis([ni, ni, nq], 2, b, true, t1, out, true, count);
        }
    }

    /// Reference gradient at quadrature points. `out` holds `dim` blocks of `num_quad()`
    /// values; block `b` is the derivative along reference axis `b`.
    pub fn grad(&self, e: &[f64], out: &mut [f64], s: &mut Scratch, count: &mut OpCount) {
        let (ni, nq) = (self.ni, self.nq);
        let (b, g) = (self.mats.b(), self.mats.g());
        let nqd = self.num_quad();
        let [t0, t1, t2, t3, t4] = &mut s.bufs;
        if self.dim == 2 {
            let (d0, d1) = out.split_at_mut(nqd);
            apply_axis([ni, ni, 1], 1, b, false, e, t0, false, count);
            apply_axis([ni, ni, 1], 1, g, false, e, t1, false, count);
            apply_axis([ni, nq, 1], 0, g, false, t0, d0, false, count);
            apply_axis([ni, nq, 1], 0, b, false, t1, &mut d1[..nqd], false, count);
        } else {
            let (d0, rest) = out.split_at_mut(nqd);
            let (d1, d2) = rest.split_at_mut(nqd);
            apply_axis([ni, ni, ni], 2, b, false, e, t0, false, count);
            apply_axis([ni, ni, ni], 2, g, false, e, t1, false, count);
            apply_axis([ni, ni, nq], 1, b, false, t0, t2, false, count);
            apply_axis([ni, ni, nq], 1, g, false, t0, t3, false, count);
            apply_axis([ni, ni, nq], 1, b, false, t1, t4, false, count);
            apply_axis([ni, nq, nq], 0, g, false, t2, d0, false, count);
            apply_axis([ni, nq, nq], 0, b, false, t3, d1, false, count);
            apply_axis([ni, nq, nq], 0, b, false, t4, &mut d2[..nqd], false, count);
        }
    }

    /// Transpose of [`Self::grad`], added into `out`.
    pub fn grad_t(&self, q: &[f64], out: &mut [f64], s: &mut Scratch, count: &mut OpCount) {
        let (ni, nq) = (self.ni, self.nq);
        let (b, g) = (self.mats.b(), self.mats.g());
        let nqd = self.num_quad();
        let [t0, t1, t2, t3, t4] = &mut s.bufs;
        if self.dim == 2 {
            let (d0, d1) = q.split_at(nqd);
            apply_axis([nq, nq, 1], 0, g, true, d0, t0, false, count);
            apply_axis([nq, nq, 1], 0, b, true, &d1[..nqd], t1, false, count);
            apply_axis([ni, nq, 1], 1, b, true, t0, out, true, count);
            apply_axis([ni, nq, 1], 1, g, true, t1, out, true, count);
        } else {
            let (d0, rest) = q.split_at(nqd);
            let (d1, d2) = rest.split_at(nqd);
            apply_axis([nq, nq, nq], 0, g, true, d0, t0, false, count);
            apply_axis([nq, nq, nq], 0, b, true, d1, t1, false, count);
            apply_axis([nq, nq, nq], 0, b, true, &d2[..nqd], t2, false, count);
            // t3: dof-shaped along axes 0,1 for the B-on-axis-2 branch; t4 for G-on-axis-2
            apply_axis([ni, nq, nq], 1, b, true, t0, t3, false, count);
            apply_axis([ni, nq, nq], 1, g, true, t1, t3, true, count);
            apply_axis([ni, nq, nq], 1, b, true, t2, t4, false, count);
            apply_axis([ni, ni, nq], 2, b, true, t3, out, true, count);
            apply_axis([ni, ni, nq], 2, g, true, t4, out, true, count);
        }
    }

    /// Dense reference gradients `dW[q][i][b]` of every basis function at every quadrature
    /// point, built without sum factorization.
    pub fn dense_gradients(&self) -> Vec<f64> {
        let (ni, nq, d) = (self.ni, self.nq, self.dim);
        let (np, nqd) = (self.num_dofs(), self.num_quad());
        let mut out = vec![0.0; nqd * np * d];
        let split = |k: usize, n: usize| [k % n, (k / n) % n, k / (n * n)];
        for q in 0..nqd {
            let qi = split(q, nq);
            for i in 0..np {
                let ii = split(i, ni);
                for b in 0..d {
                    let mut v = 1.0;
                    for k in 0..d {
                        v *= if k == b {
                            self.mats.g_entry(qi[k], ii[k])
                        } else {
                            self.mats.b_entry(qi[k], ii[k])
                        };
                    }
                    out[(q * np + i) * d + b] = v;
                }
            }
        }
        out
    }

    /// Dense basis values `W[q][i]`, built without sum factorization.
    pub fn dense_values(&self) -> Vec<f64> {
        let (ni, nq, d) = (self.ni, self.nq, self.dim);
        let (np, nqd) = (self.num_dofs(), self.num_quad());
        let split = |k: usize, n: usize| [k % n, (k / n) % n, k / (n * n)];
        let mut out = vec![0.0; nqd * np];
        for q in 0..nqd {
            let qi = split(q, nq);
            for i in 0..np {
                let ii = split(i, ni);
                out[q * np + i] = (0..d).map(|k| self.mats.b_entry(qi[k], ii[k])).product();
            }
        }
        out
    }
}
