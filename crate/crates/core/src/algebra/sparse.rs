//! Row-compressed complex matrices.
//!
//! Only what the Lindblad kernels need: construction from triplets, products
//! against dense row-major matrices, adjoints and sparse-sparse products for
//! assembling `L†L` terms.

use ndarray::Array2;
use num_complex::Complex64 as C64;

#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<C64>,
}

impl CsrMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, indptr: vec![0; n + 1], indices: Vec::new(), values: Vec::new() }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            values: vec![C64::new(1.0, 0.0); n],
        }
    }

    /// Builds an `n × n` matrix from `(row, col, value)` triplets. Duplicates
    /// are summed and exact zeros dropped.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, C64)>) -> Self {
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut indptr = vec![0; n + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values: Vec<C64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        let mut rows = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            assert!(r < n && c < n, "triplet ({r}, {c}) outside {n}x{n}");
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                values.push(v);
                rows.push(r);
                last = Some((r, c));
            }
        }
        let mut kept_idx = Vec::with_capacity(indices.len());
        let mut kept_val = Vec::with_capacity(values.len());
        for ((r, c), v) in rows.into_iter().zip(indices).zip(values) {
            if v != C64::new(0.0, 0.0) {
                indptr[r + 1] += 1;
                kept_idx.push(c);
                kept_val.push(v);
            }
        }
        for i in 0..n {
            indptr[i + 1] += indptr[i];
        }
        Self { n, indptr, indices: kept_idx, values: kept_val }
    }

    pub fn from_dense(m: &Array2<C64>) -> Self {
        let n = m.nrows();
        let mut t = Vec::new();
        for ((i, j), &v) in m.indexed_iter() {
            if v != C64::new(0.0, 0.0) {
                t.push((i, j, v));
            }
        }
        Self::from_triplets(n, t)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let r = self.indptr[i]..self.indptr[i + 1];
        self.indices[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.n).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.row(i).find(|&(c, _)| c == j).map(|(_, v)| v).unwrap_or_default()
    }

    pub fn to_dense(&self) -> Array2<C64> {
        let mut out = Array2::zeros((self.n, self.n));
        for (i, j, v) in self.triplets() {
            out[[i, j]] += v;
        }
        out
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_triplets(self.n, self.triplets().map(|(i, j, v)| (j, i, v.conj())).collect())
    }

    pub fn scale(&self, s: C64) -> Self {
        Self::from_triplets(self.n, self.triplets().map(|(i, j, v)| (i, j, v * s)).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        Self::from_triplets(self.n, self.triplets().chain(other.triplets()).collect())
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let mut t = Vec::new();
        for i in 0..self.n {
            for (k, a) in self.row(i) {
                for (j, b) in other.row(k) {
                    t.push((i, j, a * b));
                }
            }
        }
        Self::from_triplets(self.n, t)
    }

    /// `out = self · rhs` for a dense square matrix.
    pub fn mul_dense(&self, rhs: &Array2<C64>) -> Array2<C64> {
        let mut out = Array2::zeros((self.n, self.n));
        self.mul_dense_acc(rhs, C64::new(1.0, 0.0), &mut out);
        out
    }

    /// `out += scale · self · rhs`.
    pub fn mul_dense_acc(&self, rhs: &Array2<C64>, scale: C64, out: &mut Array2<C64>) {
        let n = self.n;
        assert_eq!(rhs.dim(), (n, n));
        assert_eq!(out.dim(), (n, n));
        let rhs = rhs.as_standard_layout();
        let src = rhs.as_slice().expect("standard layout");
        let dst = out.as_slice_mut().expect("output in standard layout");
        for i in 0..n {
            let out_row = &mut dst[i * n..(i + 1) * n];
            for p in self.indptr[i]..self.indptr[i + 1] {
                let v = self.values[p] * scale;
                let k = self.indices[p];
                let in_row = &src[k * n..(k + 1) * n];
                for (o, &x) in out_row.iter_mut().zip(in_row) {
                    *o += v * x;
                }
            }
        }
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Self {
        let m = other.n;
        let mut t = Vec::with_capacity(self.nnz() * other.nnz());
        for (i, j, a) in self.triplets() {
            for (k, l, b) in other.triplets() {
                t.push((i * m + k, j * m + l, a * b));
            }
        }
        Self::from_triplets(self.n * m, t)
    }

    /// If every row holds at most one entry, returns `(column, value)` per row.
    pub fn as_monomial(&self) -> Option<Vec<Option<(usize, C64)>>> {
        (0..self.n)
            .map(|i| match self.indptr[i + 1] - self.indptr[i] {
                0 => Some(None),
                1 => Some(Some((self.indices[self.indptr[i]], self.values[self.indptr[i]]))),
                _ => None,
            })
            .collect()
    }
}
