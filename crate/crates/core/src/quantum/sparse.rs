use std::collections::BTreeMap;

use super::layout::BasisLayout;
use crate::{CMatrix, Error, Result, C64};

/// Square operator in compressed sparse row form.
///
/// Model operators (hops, jumps, projectors) are very sparse once lifted
/// onto a multi-factor layout, so the propagator works on these directly.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseOp {
    dim: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<C64>,
}

impl SparseOp {
    pub fn zeros(dim: usize) -> Self {
        SparseOp {
            dim,
            indptr: vec![0; dim + 1],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Duplicate entries are summed; exact zeros are dropped.
    pub fn from_triplets(
        dim: usize,
        triplets: impl IntoIterator<Item = (usize, usize, C64)>,
    ) -> Result<Self> {
        let mut map: BTreeMap<(usize, usize), C64> = BTreeMap::new();
        for (r, c, v) in triplets {
            if r >= dim || c >= dim {
                return Err(Error::Dimension(format!(
                    "entry ({r},{c}) outside {dim}x{dim} operator"
                )));
            }
            *map.entry((r, c)).or_default() += v;
        }
        let mut op = SparseOp::zeros(dim);
        for ((r, c), v) in map {
            if v != C64::new(0.0, 0.0) {
                op.indptr[r + 1] += 1;
                op.indices.push(c);
                op.values.push(v);
            }
        }
        for r in 0..dim {
            op.indptr[r + 1] += op.indptr[r];
        }
        Ok(op)
    }

    pub fn identity(dim: usize) -> Self {
        Self::diagonal(&vec![C64::new(1.0, 0.0); dim])
    }

    pub fn diagonal(d: &[C64]) -> Self {
        Self::from_triplets(d.len(), d.iter().enumerate().map(|(i, &v)| (i, i, v)))
            .expect("diagonal entries are in range")
    }

    pub fn from_dense(m: &CMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Dimension(format!(
                "{}x{} operator is not square",
                m.nrows(),
                m.ncols()
            )));
        }
        let n = m.nrows();
        Self::from_triplets(
            n,
            (0..n)
                .flat_map(|r| (0..n).map(move |c| (r, c)))
                .map(|(r, c)| (r, c, m[(r, c)])),
        )
    }

    pub fn to_dense(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim, self.dim);
        for (r, c, v) in self.iter() {
            m[(r, c)] += v;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// `(row, col, value)` in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dim).flat_map(move |r| {
            (self.indptr[r]..self.indptr[r + 1]).map(move |k| (r, self.indices[k], self.values[k]))
        })
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        (self.indptr[r]..self.indptr[r + 1]).map(move |k| (self.indices[k], self.values[k]))
    }

    pub fn is_zero(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_diagonal(&self) -> bool {
        self.iter().all(|(r, c, _)| r == c)
    }

    /// Diagonal entries if the operator is diagonal with real entries.
    pub fn real_diagonal(&self) -> Option<Vec<f64>> {
        let mut d = vec![0.0; self.dim];
        for (r, c, v) in self.iter() {
            if r != c || v.im != 0.0 {
                return None;
            }
            d[r] = v.re;
        }
        Some(d)
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out
    }

    pub fn adjoint(&self) -> Self {
        Self::from_triplets(self.dim, self.iter().map(|(r, c, v)| (c, r, v.conj())))
            .expect("same dimension")
    }

    pub fn add(&self, other: &SparseOp) -> Result<Self> {
        self.check_dim(other)?;
        Self::from_triplets(self.dim, self.iter().chain(other.iter()))
    }

    pub fn matmul(&self, other: &SparseOp) -> Result<Self> {
        self.check_dim(other)?;
        let mut trip = Vec::new();
        for (r, k, a) in self.iter() {
            for (c, b) in other.row(k) {
                trip.push((r, c, a * b));
            }
        }
        Self::from_triplets(self.dim, trip)
    }

    /// Kronecker product, `self` varying slowest.
    pub fn kron(&self, other: &SparseOp) -> Self {
        let n = other.dim;
        let mut trip = Vec::with_capacity(self.nnz() * other.nnz());
        for (r1, c1, a) in self.iter() {
            for (r2, c2, b) in other.iter() {
                trip.push((r1 * n + r2, c1 * n + c2, a * b));
            }
        }
        Self::from_triplets(self.dim * n, trip).expect("indices in range by construction")
    }

    /// Lifts an operator on one factor to the whole layout.
    pub fn on_factor(layout: &BasisLayout, label: &str, local: &SparseOp) -> Result<Self> {
        let fi = layout.factor_index(label)?;
        let dims = layout.dims();
        if local.dim != dims[fi] {
            return Err(Error::Dimension(format!(
                "operator of dimension {} on factor `{label}` of dimension {}",
                local.dim, dims[fi]
            )));
        }
        let left: usize = dims[..fi].iter().product();
        let right: usize = dims[fi + 1..].iter().product();
        Ok(SparseOp::identity(left)
            .kron(local)
            .kron(&SparseOp::identity(right)))
    }

    /// Lifts a product of operators on distinct factors.
    pub fn on_factors(layout: &BasisLayout, parts: &[(&str, &SparseOp)]) -> Result<Self> {
        let mut locals: Vec<Option<&SparseOp>> = vec![None; layout.factors().len()];
        for (label, op) in parts {
            let fi = layout.factor_index(label)?;
            if locals[fi].is_some() {
                return Err(Error::Argument(format!("factor `{label}` listed twice")));
            }
            if op.dim != layout.factors()[fi].dim() {
                return Err(Error::Dimension(format!(
                    "operator of dimension {} on factor `{label}` of dimension {}",
                    op.dim,
                    layout.factors()[fi].dim()
                )));
            }
            locals[fi] = Some(op);
        }
        let mut out = SparseOp::identity(1);
        for (f, local) in layout.factors().iter().zip(locals) {
            out = match local {
                Some(op) => out.kron(op),
                None => out.kron(&SparseOp::identity(f.dim())),
            };
        }
        Ok(out)
    }

    /// `out += alpha * self * x`.
    pub fn mul_dense_acc(&self, alpha: C64, x: &CMatrix, out: &mut CMatrix) {
        let n = self.dim;
        debug_assert_eq!(x.nrows(), n);
        for j in 0..x.ncols() {
            let xc = x.column(j);
            let xs = xc.as_slice();
            let mut oc = out.column_mut(j);
            let os = oc.as_mut_slice();
            for (r, o) in os.iter_mut().enumerate() {
                let mut acc = C64::new(0.0, 0.0);
                for k in self.indptr[r]..self.indptr[r + 1] {
                    acc += self.values[k] * xs[self.indices[k]];
                }
                *o += alpha * acc;
            }
        }
    }

    /// `out += alpha * x * self^dagger`, as contiguous column updates.
    pub fn rmul_adjoint_acc(&self, alpha: C64, x: &CMatrix, out: &mut CMatrix) {
        let n = x.nrows();
        debug_assert_eq!(x.ncols(), self.dim);
        let xs = x.as_slice();
        let os = out.as_mut_slice();
        for (r, k, v) in self.iter() {
            let w = alpha * v.conj();
            let src = &xs[k * n..(k + 1) * n];
            let dst = &mut os[r * n..(r + 1) * n];
            for (d, s) in dst.iter_mut().zip(src) {
                *d += w * s;
            }
        }
    }

    /// Dense `self * x`.
    pub fn mul_dense(&self, x: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(self.dim, x.ncols());
        self.mul_dense_acc(C64::new(1.0, 0.0), x, &mut out);
        out
    }

    /// Dense `x * self`.
    pub fn rmul_dense(&self, x: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(x.nrows(), self.dim);
        for (r, c, v) in self.iter() {
            let src = x.column(r).clone_owned();
            let mut dst = out.column_mut(c);
            dst.axpy(v, &src, C64::new(1.0, 0.0));
        }
        out
    }

    /// `out += w * self * x * self^dagger`, looping over pairs of stored entries.
    pub fn sandwich_acc(&self, w: f64, x: &CMatrix, out: &mut CMatrix) {
        let entries: Vec<(usize, usize, C64)> = self.iter().collect();
        for &(j, l, b) in &entries {
            let bw = b.conj() * w;
            let xc = x.column(l);
            let mut oc = out.column_mut(j);
            for &(i, k, a) in &entries {
                oc[i] += a * bw * xc[k];
            }
        }
    }

    fn check_dim(&self, other: &SparseOp) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::Dimension(format!(
                "operator dimensions differ: {} vs {}",
                self.dim, other.dim
            )));
        }
        Ok(())
    }
}
