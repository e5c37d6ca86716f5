//! Lindblad generator kernels.
//!
//! The generator is stored as the effective non-Hermitian Hamiltonian
//! `K = H − (i/2) Σ γ L†L` plus the jump maps `γ L ρ L†`, so that
//! `L(ρ) = −i (K ρ − ρ K†) + Σ γ L ρ L†`. Drive operators are kept apart so
//! that a piecewise-constant or phase-rotating pump only changes scalar
//! coefficients.

use num_complex::Complex64 as C64;

use crate::algebra::{mirror_upper, CsrMatrix, DensityMatrix, HilbertSpace, Matrix, Operator, I, ZERO};
use crate::error::{Error, Result};
use crate::model::LindbladTerm;

#[derive(Clone, Debug)]
enum JumpKernel {
    /// At most one entry per row: `(row, source column, value)`.
    Monomial(Vec<(usize, usize, C64)>),
    General(CsrMatrix),
}

#[derive(Clone, Debug)]
pub struct Generator {
    space: HilbertSpace,
    k_static: CsrMatrix,
    drives: Vec<CsrMatrix>,
    jumps: Vec<(f64, JumpKernel)>,
    norm_static: f64,
    norm_drives: Vec<f64>,
}

fn row_sum_norm(m: &CsrMatrix) -> f64 {
    (0..m.dim()).map(|i| m.row(i).map(|(_, v)| v.norm()).sum::<f64>()).fold(0.0, f64::max)
}

impl Generator {
    /// `hamiltonian` is the drive-free part; `drives` are Hermitian-combined
    /// at evaluation time with the coefficients passed to `apply*`.
    pub fn new(hamiltonian: &Operator, drives: &[Operator], terms: &[LindbladTerm]) -> Result<Self> {
        let space = hamiltonian.space().clone();
        let n = space.total_dim();
        let mut k = hamiltonian.to_csr();
        let mut jumps = Vec::with_capacity(terms.len());
        let mut norm_jumps = 0.0;
        for term in terms {
            if term.jump.space() != &space {
                return Err(Error::SpaceMismatch {
                    left: space.dims().to_vec(),
                    right: term.jump.space().dims().to_vec(),
                });
            }
            if !(term.rate >= 0.0) {
                return Err(Error::NegativeRate { channel: term.label.to_string(), rate: term.rate });
            }
            if term.rate == 0.0 {
                continue;
            }
            let l = term.jump.to_csr();
            let ldl = l.adjoint().matmul(&l);
            k = k.add(&ldl.scale(C64::new(0.0, -0.5 * term.rate)));
            norm_jumps += term.rate * row_sum_norm(&l).powi(2);
            let kernel = match l.as_monomial() {
                Some(rows) => JumpKernel::Monomial(
                    rows.into_iter().enumerate().filter_map(|(i, e)| e.map(|(s, v)| (i, s, v))).collect(),
                ),
                None => JumpKernel::General(l),
            };
            jumps.push((term.rate, kernel));
        }
        let mut drive_csr = Vec::with_capacity(drives.len());
        for d in drives {
            if d.space() != &space {
                return Err(Error::SpaceMismatch { left: space.dims().to_vec(), right: d.space().dims().to_vec() });
            }
            drive_csr.push(d.to_csr());
        }
        debug_assert_eq!(k.dim(), n);
        Ok(Self {
            space,
            norm_static: row_sum_norm(&k) + norm_jumps,
            norm_drives: drive_csr.iter().map(row_sum_norm).collect(),
            k_static: k,
            drives: drive_csr,
            jumps,
        })
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.k_static.dim()
    }

    pub fn num_drives(&self) -> usize {
        self.drives.len()
    }

    /// Upper bound on the generator's induced ∞-norm scale, in rad/s.
    pub fn norm_estimate(&self, coeffs: &[C64]) -> f64 {
        2.0 * (self.norm_static
            + coeffs.iter().zip(&self.norm_drives).map(|(c, n)| c.norm() * n).sum::<f64>())
    }

    /// Dense `K` including the drive terms weighted by `coeffs`.
    pub(crate) fn effective_hamiltonian(&self, coeffs: &[C64]) -> Matrix {
        let mut k = self.k_static.to_dense();
        for (d, &c) in self.drives.iter().zip(coeffs) {
            k.scaled_add(c, &d.to_dense());
        }
        k
    }

    pub(crate) fn rates(&self) -> impl Iterator<Item = f64> + '_ {
        self.jumps.iter().map(|(r, _)| *r)
    }

    fn effective_times(&self, x: &Matrix, coeffs: &[C64], out: &mut Matrix) {
        assert_eq!(coeffs.len(), self.drives.len(), "one coefficient per drive operator");
        out.fill(ZERO);
        self.k_static.mul_dense_acc(x, C64::new(1.0, 0.0), out);
        for (d, &c) in self.drives.iter().zip(coeffs) {
            if c != ZERO {
                d.mul_dense_acc(x, c, out);
            }
        }
    }

    fn add_jumps(&self, x: &Matrix, out: &mut Matrix, scratch: &mut Matrix) {
        let n = self.dim();
        for (rate, kernel) in &self.jumps {
            match kernel {
                JumpKernel::Monomial(rows) => {
                    let src = x.as_slice().expect("standard layout");
                    let dst = out.as_slice_mut().expect("standard layout");
                    for &(i, si, vi) in rows {
                        let left = vi * *rate;
                        let out_row = &mut dst[i * n..(i + 1) * n];
                        let in_row = &src[si * n..(si + 1) * n];
                        for &(j, sj, vj) in rows {
                            out_row[j] += left * vj.conj() * in_row[sj];
                        }
                    }
                }
                JumpKernel::General(op) => {
                    // L X L† = (L (L X)†)†
                    let lx = op.mul_dense(x);
                    let lx_dag = lx.t().mapv(|z| z.conj());
                    scratch.fill(ZERO);
                    op.mul_dense_acc(&lx_dag, C64::new(*rate, 0.0), scratch);
                    *out += &scratch.t().mapv(|z| z.conj());
                }
            }
        }
    }

    /// Folds the drives, weighted by `coeffs`, into the static part.
    pub fn frozen(&self, coeffs: &[C64]) -> Self {
        assert_eq!(coeffs.len(), self.drives.len(), "one coefficient per drive operator");
        let mut k = self.k_static.clone();
        for (d, &c) in self.drives.iter().zip(coeffs) {
            if c != ZERO {
                k = k.add(&d.scale(c));
            }
        }
        let norm_drives: f64 = coeffs.iter().zip(&self.norm_drives).map(|(c, n)| c.norm() * n).sum();
        Self {
            space: self.space.clone(),
            k_static: k,
            drives: Vec::new(),
            jumps: self.jumps.clone(),
            norm_static: self.norm_static + norm_drives,
            norm_drives: Vec::new(),
        }
    }

    /// `L(ρ)` for Hermitian `ρ`. Only the upper triangle is computed, using
    /// `(ρ K†)_ij = Σ_k ρ_ik conj(K_jk)`, and then mirrored.
    pub fn apply_hermitian_into(&self, rho: &Matrix, coeffs: &[C64], out: &mut Matrix, scratch: &mut Matrix) {
        assert_eq!(coeffs.len(), self.drives.len(), "one coefficient per drive operator");
        let n = self.dim();
        let mut parts: Vec<(&CsrMatrix, C64)> = vec![(&self.k_static, C64::new(1.0, 0.0))];
        for (d, &c) in self.drives.iter().zip(coeffs) {
            if c != ZERO {
                parts.push((d, c));
            }
        }
        let rho = rho.as_standard_layout();
        let src = rho.as_slice().expect("standard layout");
        {
            let dst = out.as_slice_mut().expect("output in standard layout");
            for i in 0..n {
                let row_out = &mut dst[i * n + i..(i + 1) * n];
                row_out.fill(ZERO);
                for &(m, c) in &parts {
                    for (k, v) in m.row(i) {
                        let f = -I * c * v;
                        let rk = &src[k * n + i..(k + 1) * n];
                        for (o, &x) in row_out.iter_mut().zip(rk) {
                            *o += f * x;
                        }
                    }
                }
                let rho_i = &src[i * n..(i + 1) * n];
                for (off, o) in row_out.iter_mut().enumerate() {
                    let j = i + off;
                    let mut acc = ZERO;
                    for &(m, c) in &parts {
                        let mut s = ZERO;
                        for (k, v) in m.row(j) {
                            s += rho_i[k] * v.conj();
                        }
                        acc += c.conj() * s;
                    }
                    *o += I * acc;
                }
            }
        }
        self.add_jumps_upper(src, out, scratch);
        let dst = out.as_slice_mut().expect("output in standard layout");
        for i in 0..n {
            dst[i * n + i].im = 0.0;
        }
        mirror_upper(dst, n);
    }

    /// Adds `Σ γ L ρ L†` to the upper triangle of `out`.
    fn add_jumps_upper(&self, src: &[C64], out: &mut Matrix, scratch: &mut Matrix) {
        let n = self.dim();
        for (rate, kernel) in &self.jumps {
            match kernel {
                JumpKernel::Monomial(rows) => {
                    let dst = out.as_slice_mut().expect("output in standard layout");
                    for (idx, &(i, si, vi)) in rows.iter().enumerate() {
                        let left = vi * *rate;
                        let in_row = &src[si * n..(si + 1) * n];
                        let out_row = &mut dst[i * n..(i + 1) * n];
                        for &(j, sj, vj) in &rows[idx..] {
                            out_row[j] += left * vj.conj() * in_row[sj];
                        }
                    }
                }
                JumpKernel::General(op) => {
                    let x = Matrix::from_shape_vec((n, n), src.to_vec()).expect("square");
                    let lx = op.mul_dense(&x);
                    let lx_dag = lx.t().mapv(|z| z.conj());
                    scratch.fill(ZERO);
                    op.mul_dense_acc(&lx_dag, C64::new(*rate, 0.0), scratch);
                    for i in 0..n {
                        for j in i..n {
                            out[[i, j]] += scratch[[j, i]].conj();
                        }
                    }
                }
            }
        }
    }

    pub fn apply_hermitian(&self, rho: &Matrix, coeffs: &[C64]) -> Matrix {
        let n = self.dim();
        let mut out = Matrix::zeros((n, n));
        let mut scratch = Matrix::zeros((n, n));
        self.apply_hermitian_into(rho, coeffs, &mut out, &mut scratch);
        out
    }

    /// `L(X)` for an arbitrary square `X`.
    pub fn apply(&self, x: &Matrix, coeffs: &[C64]) -> Matrix {
        let n = self.dim();
        let mut kx = Matrix::zeros((n, n));
        self.effective_times(x, coeffs, &mut kx);
        let x_dag = x.t().mapv(|z| z.conj());
        let mut kxd = Matrix::zeros((n, n));
        self.effective_times(&x_dag, coeffs, &mut kxd);
        // −i (K X − X K†) with X K† = (K X†)†
        let mut out = Matrix::from_shape_fn((n, n), |(i, j)| -I * (kx[[i, j]] - kxd[[j, i]].conj()));
        let mut scratch = Matrix::zeros((n, n));
        self.add_jumps(x, &mut out, &mut scratch);
        out
    }
}

/// `dρ/dt = −i[H, ρ] + Σ γ (L ρ L† − ½{L†L, ρ})` with `ħ = 1` and `H` in
/// rad/s.
pub fn lindblad_rhs(rho: &DensityMatrix, h: &Operator, terms: &[LindbladTerm]) -> Result<Matrix> {
    if rho.space() != h.space() {
        return Err(Error::SpaceMismatch { left: rho.space().dims().to_vec(), right: h.space().dims().to_vec() });
    }
    let gen = Generator::new(h, &[], terms)?;
    Ok(gen.apply(rho.data(), &[]))
}
