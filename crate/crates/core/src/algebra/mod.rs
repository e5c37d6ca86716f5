//! Operators on a composite, truncated Hilbert space.
//!
//! Subsystems are ordered as in the Kronecker product `q1 ⊗ q2 ⊗ a ⊗ b ⊗ c`:
//! the first subsystem is the most significant digit of a basis index. Local
//! level `0` of a qubit is `|g⟩`, level `1` is `|e⟩`.

mod density;
mod sparse;

pub use density::DensityMatrix;
pub(crate) use density::{hermitize_measured, mirror_upper};
pub use sparse::CsrMatrix;

use ndarray::Array2;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Matrix = Array2<C64>;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);
pub(crate) const I: C64 = C64::new(0.0, 1.0);

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HilbertSpace {
    dims: Vec<usize>,
}

impl HilbertSpace {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidDimension(0));
        }
        if let Some(&d) = dims.iter().find(|&&d| d < 2) {
            return Err(Error::InvalidDimension(d));
        }
        Ok(Self { dims })
    }

    /// `[2, 2, d_a, d_b, d_c]`.
    pub fn divider(d_a: usize, d_b: usize, d_c: usize) -> Result<Self> {
        Self::new(vec![2, 2, d_a, d_b, d_c])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn num_subsystems(&self) -> usize {
        self.dims.len()
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    /// Global basis index of a product state given its local levels.
    pub fn index_of(&self, levels: &[usize]) -> Result<usize> {
        if levels.len() != self.dims.len() {
            return Err(Error::DimensionMismatch { expected: self.dims.len(), found: levels.len() });
        }
        let mut idx = 0;
        for (&l, &d) in levels.iter().zip(&self.dims) {
            if l >= d {
                return Err(Error::IndexOutOfRange { index: l, len: d });
            }
            idx = idx * d + l;
        }
        Ok(idx)
    }

    /// Local levels of a global basis index.
    pub fn levels_of(&self, mut index: usize) -> Vec<usize> {
        let mut levels = vec![0; self.dims.len()];
        for (slot, &d) in levels.iter_mut().zip(&self.dims).rev() {
            *slot = index % d;
            index /= d;
        }
        levels
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::SpaceMismatch { left: self.dims.clone(), right: other.dims.clone() })
        }
    }
}

#[derive(Clone, Debug)]
pub enum Storage {
    Dense(Matrix),
    Sparse(CsrMatrix),
}

/// A square complex matrix tagged with the space it acts on.
#[derive(Clone, Debug)]
pub struct Operator {
    space: HilbertSpace,
    storage: Storage,
}

impl Operator {
    pub fn from_dense(space: HilbertSpace, m: Matrix) -> Result<Self> {
        let n = space.total_dim();
        if m.dim() != (n, n) {
            return Err(Error::DimensionMismatch { expected: n, found: m.nrows() });
        }
        Ok(Self { space, storage: Storage::Dense(m) })
    }

    pub fn from_sparse(space: HilbertSpace, m: CsrMatrix) -> Result<Self> {
        let n = space.total_dim();
        if m.dim() != n {
            return Err(Error::DimensionMismatch { expected: n, found: m.dim() });
        }
        Ok(Self { space, storage: Storage::Sparse(m) })
    }

    pub fn zeros(space: &HilbertSpace) -> Self {
        let n = space.total_dim();
        Self { space: space.clone(), storage: Storage::Sparse(CsrMatrix::zeros(n)) }
    }

    pub fn identity(space: &HilbertSpace) -> Self {
        let n = space.total_dim();
        Self { space: space.clone(), storage: Storage::Sparse(CsrMatrix::identity(n)) }
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.total_dim()
    }

    pub fn storage(&self) -> &Storage {
        &self.storage
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.storage, Storage::Sparse(_))
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        match &self.storage {
            Storage::Dense(m) => m[[i, j]],
            Storage::Sparse(m) => m.get(i, j),
        }
    }

    pub fn to_dense(&self) -> Matrix {
        match &self.storage {
            Storage::Dense(m) => m.clone(),
            Storage::Sparse(m) => m.to_dense(),
        }
    }

    pub fn to_csr(&self) -> CsrMatrix {
        match &self.storage {
            Storage::Dense(m) => CsrMatrix::from_dense(m),
            Storage::Sparse(m) => m.clone(),
        }
    }

    pub fn into_dense(self) -> Self {
        let m = self.to_dense();
        Self { space: self.space, storage: Storage::Dense(m) }
    }

    pub fn into_sparse(self) -> Self {
        let m = self.to_csr();
        Self { space: self.space, storage: Storage::Sparse(m) }
    }

    pub fn adjoint(&self) -> Self {
        let storage = match &self.storage {
            Storage::Dense(m) => Storage::Dense(m.t().mapv(|z| z.conj())),
            Storage::Sparse(m) => Storage::Sparse(m.adjoint()),
        };
        Self { space: self.space.clone(), storage }
    }

    pub fn scale(&self, s: C64) -> Self {
        let storage = match &self.storage {
            Storage::Dense(m) => Storage::Dense(m * s),
            Storage::Sparse(m) => Storage::Sparse(m.scale(s)),
        };
        Self { space: self.space.clone(), storage }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.space.check_same(&other.space)?;
        let storage = match (&self.storage, &other.storage) {
            (Storage::Sparse(a), Storage::Sparse(b)) => Storage::Sparse(a.add(b)),
            _ => Storage::Dense(self.to_dense() + other.to_dense()),
        };
        Ok(Self { space: self.space.clone(), storage })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-ONE))
    }

    /// Matrix product `self · other`.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.space.check_same(&other.space)?;
        let storage = match (&self.storage, &other.storage) {
            (Storage::Sparse(a), Storage::Sparse(b)) => Storage::Sparse(a.matmul(b)),
            (Storage::Sparse(a), Storage::Dense(b)) => Storage::Dense(a.mul_dense(b)),
            (Storage::Dense(a), Storage::Sparse(b)) => {
                // (B† A†)†
                let at = a.t().mapv(|z| z.conj());
                let p = b.adjoint().mul_dense(&at);
                Storage::Dense(p.t().mapv(|z| z.conj()))
            }
            (Storage::Dense(a), Storage::Dense(b)) => Storage::Dense(a.dot(b)),
        };
        Ok(Self { space: self.space.clone(), storage })
    }

    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.mul(other)?.sub(&other.mul(self)?)
    }

    pub fn trace(&self) -> C64 {
        match &self.storage {
            Storage::Dense(m) => m.diag().sum(),
            Storage::Sparse(m) => m.diagonal().into_iter().sum(),
        }
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.space.check_same(&other.space)?;
        let d = self.to_dense() - other.to_dense();
        Ok(d.iter().map(|z| z.norm()).fold(0.0, f64::max))
    }

    pub fn max_abs(&self) -> f64 {
        match &self.storage {
            Storage::Dense(m) => m.iter().map(|z| z.norm()).fold(0.0, f64::max),
            Storage::Sparse(m) => m.triplets().map(|(_, _, z)| z.norm()).fold(0.0, f64::max),
        }
    }

    /// Entrywise `max |A - A†|`.
    pub fn hermiticity_error(&self) -> f64 {
        self.max_abs_diff(&self.adjoint()).expect("same space")
    }
}

/// Truncated bosonic lowering operator on `d` levels; for `d = 2` this is the
/// qubit lowering operator `σ₋ = |g⟩⟨e|`.
pub fn local_annihilator(d: usize) -> Result<Matrix> {
    if d < 2 {
        return Err(Error::InvalidDimension(d));
    }
    let mut m = Matrix::zeros((d, d));
    for k in 1..d {
        m[[k - 1, k]] = C64::new((k as f64).sqrt(), 0.0);
    }
    Ok(m)
}

/// Lifts a local matrix to `I ⊗ … ⊗ local ⊗ … ⊗ I`, stored sparse.
pub fn embed(space: &HilbertSpace, index: usize, local: &Matrix) -> Result<Operator> {
    let dims = space.dims();
    if index >= dims.len() {
        return Err(Error::IndexOutOfRange { index, len: dims.len() });
    }
    let d = dims[index];
    if local.dim() != (d, d) {
        return Err(Error::DimensionMismatch { expected: d, found: local.nrows() });
    }
    let left: usize = dims[..index].iter().product();
    let right: usize = dims[index + 1..].iter().product();
    let mut triplets = Vec::new();
    for ((r, c), &v) in local.indexed_iter() {
        if v == ZERO {
            continue;
        }
        for l in 0..left {
            for m in 0..right {
                triplets.push(((l * d + r) * right + m, (l * d + c) * right + m, v));
            }
        }
    }
    Operator::from_sparse(space.clone(), CsrMatrix::from_triplets(space.total_dim(), triplets))
}

/// `Tr(ρ A)`.
pub fn expectation(rho: &DensityMatrix, a: &Operator) -> Result<C64> {
    rho.space().check_same(a.space())?;
    let r = rho.data();
    Ok(match a.storage() {
        Storage::Dense(m) => r.iter().zip(m.t().iter()).map(|(x, y)| x * y).sum(),
        Storage::Sparse(m) => m.triplets().map(|(i, j, v)| v * r[[j, i]]).sum(),
    })
}

pub(crate) fn to_nalgebra(m: &Matrix) -> nalgebra::DMatrix<C64> {
    nalgebra::DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[[i, j]])
}

pub(crate) fn from_nalgebra(m: &nalgebra::DMatrix<C64>) -> Matrix {
    Matrix::from_shape_fn((m.nrows(), m.ncols()), |(i, j)| m[(i, j)])
}

pub(crate) fn adjoint(m: &Matrix) -> Matrix {
    m.t().mapv(|z| z.conj())
}
