use num_complex::Complex64 as C64;

use super::{adjoint, to_nalgebra, HilbertSpace, Matrix, Operator, ONE};
use crate::error::{Error, Result};

/// Tolerance used when validating externally supplied states.
const PHYSICAL_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct DensityMatrix {
    space: HilbertSpace,
    data: Matrix,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(space: HilbertSpace, data: Matrix) -> Result<Self> {
        let rho = Self::from_raw(space, data)?;
        let herm = rho.hermiticity_error();
        if herm > PHYSICAL_TOL {
            return Err(Error::NotPhysical(format!("not Hermitian (max |rho - rho†| = {herm:.3e})")));
        }
        let tr = rho.trace();
        if (tr - 1.0).abs() > PHYSICAL_TOL {
            return Err(Error::NotPhysical(format!("trace is {tr}")));
        }
        let min = rho.min_eigenvalue();
        if min < -PHYSICAL_TOL {
            return Err(Error::NotPhysical(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(rho)
    }

    /// Wraps a matrix after checking only its shape.
    pub fn from_raw(space: HilbertSpace, data: Matrix) -> Result<Self> {
        let n = space.total_dim();
        if data.dim() != (n, n) {
            return Err(Error::DimensionMismatch { expected: n, found: data.nrows() });
        }
        Ok(Self { space, data })
    }

    pub fn basis_state(space: &HilbertSpace, levels: &[usize]) -> Result<Self> {
        let idx = space.index_of(levels)?;
        let n = space.total_dim();
        let mut data = Matrix::zeros((n, n));
        data[[idx, idx]] = ONE;
        Ok(Self { space: space.clone(), data })
    }

    /// All subsystems in level 0.
    pub fn ground(space: &HilbertSpace) -> Self {
        Self::basis_state(space, &vec![0; space.num_subsystems()]).expect("level 0 always exists")
    }

    /// `|ψ⟩⟨ψ|` for a normalised ket.
    pub fn from_ket(space: &HilbertSpace, ket: &[C64]) -> Result<Self> {
        let n = space.total_dim();
        if ket.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: ket.len() });
        }
        let norm: f64 = ket.iter().map(|z| z.norm_sqr()).sum();
        let data = Matrix::from_shape_fn((n, n), |(i, j)| ket[i] * ket[j].conj() / norm);
        Ok(Self { space: space.clone(), data })
    }

    /// Diagonal state with the given basis populations.
    pub fn diagonal(space: &HilbertSpace, probs: &[f64]) -> Result<Self> {
        let n = space.total_dim();
        if probs.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: probs.len() });
        }
        let mut data = Matrix::zeros((n, n));
        for (i, &p) in probs.iter().enumerate() {
            data[[i, i]] = C64::new(p, 0.0);
        }
        Self::new(space.clone(), data)
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn data(&self) -> &Matrix {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut Matrix {
        &mut self.data
    }

    pub fn into_data(self) -> Matrix {
        self.data
    }

    pub fn as_operator(&self) -> Operator {
        Operator::from_dense(self.space.clone(), self.data.clone()).expect("shape checked")
    }

    pub fn trace(&self) -> f64 {
        self.data.diag().iter().map(|z| z.re).sum()
    }

    /// `Tr ρ²`.
    pub fn purity(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn populations(&self) -> Vec<f64> {
        self.data.diag().iter().map(|z| z.re).collect()
    }

    pub fn hermiticity_error(&self) -> f64 {
        hermiticity_error(&self.data)
    }

    /// `ρ ← (ρ + ρ†)/2`.
    pub fn hermitize(&mut self) {
        hermitize(&mut self.data);
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let m = to_nalgebra(&self.data);
        let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    /// True when every eigenvalue is ≥ `-eps`, via a Cholesky attempt on
    /// `ρ + eps·I`. Much cheaper than a full eigendecomposition.
    pub fn is_positive_within(&self, eps: f64) -> bool {
        let n = self.dim();
        let mut l: Vec<C64> = self.data.iter().copied().collect();
        for i in 0..n {
            l[i * n + i] += eps;
        }
        for j in 0..n {
            let (head, tail) = l.split_at_mut(j * n + n);
            let row_j = &mut head[j * n..];
            let d = row_j[j].re - row_j[..j].iter().map(|z| z.norm_sqr()).sum::<f64>();
            if !(d > 0.0) {
                return false;
            }
            let d = d.sqrt();
            row_j[j] = C64::new(d, 0.0);
            let row_j = &head[j * n..j * n + j];
            for i in j + 1..n {
                let row_i = &mut tail[(i - j - 1) * n..(i - j) * n];
                let dot: C64 = row_i[..j].iter().zip(row_j).map(|(a, b)| a * b.conj()).sum();
                row_i[j] = (row_i[j] - dot) / d;
            }
        }
        true
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (&self.data - &other.data).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

pub(crate) fn hermiticity_error(m: &Matrix) -> f64 {
    let n = m.nrows();
    let mut err: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            err = err.max((m[[i, j]] - m[[j, i]].conj()).norm());
        }
    }
    err
}

pub(crate) fn hermitize(m: &mut Matrix) {
    hermitize_measured(m);
}

const TILE: usize = 16;

/// Replaces `m` by `(m + m†)/2` and returns the `max |m − m†|` it had.
/// Walks tile pairs so the transposed accesses stay in cache.
pub(crate) fn hermitize_measured(m: &mut Matrix) -> f64 {
    let n = m.nrows();
    if !m.is_standard_layout() {
        let err = hermiticity_error(m);
        let h = (&*m + &adjoint(m)).mapv(|z| z * 0.5);
        m.assign(&h);
        return err;
    }
    let d = m.as_slice_mut().expect("standard layout");
    let mut err: f64 = 0.0;
    for bi in (0..n).step_by(TILE) {
        for bj in (bi..n).step_by(TILE) {
            for i in bi..(bi + TILE).min(n) {
                let j0 = if bi == bj { i + 1 } else { bj };
                for j in j0..(bj + TILE).min(n) {
                    let a = d[i * n + j];
                    let b = d[j * n + i].conj();
                    err = err.max((a - b).norm_sqr());
                    let v = (a + b) * 0.5;
                    d[i * n + j] = v;
                    d[j * n + i] = v.conj();
                }
            }
        }
    }
    for i in 0..n {
        err = err.max(4.0 * d[i * n + i].im * d[i * n + i].im);
        d[i * n + i].im = 0.0;
    }
    err.sqrt()
}

/// Overwrites the strict lower triangle with the conjugate of the upper one.
pub(crate) fn mirror_upper(d: &mut [C64], n: usize) {
    for bi in (0..n).step_by(TILE) {
        for bj in (bi..n).step_by(TILE) {
            for i in bi..(bi + TILE).min(n) {
                let j0 = if bi == bj { i + 1 } else { bj };
                for j in j0..(bj + TILE).min(n) {
                    d[j * n + i] = d[i * n + j].conj();
                }
            }
        }
    }
}

#[allow(dead_code)]
pub(crate) fn is_hermitian(m: &Matrix, tol: f64) -> bool {
    (m - &adjoint(m)).iter().all(|z| z.norm() <= tol)
}
