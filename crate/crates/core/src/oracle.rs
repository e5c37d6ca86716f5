//! Independent references for validating the integrators: the exact
//! propagator of the vectorised generator, and closed-form photon numbers
//! for a driven, damped, decoupled cavity.
//!
//! Everything here is built from Kronecker products of dense matrices and
//! shares no kernel code with [`crate::dynamics`].

use ndarray::Array2;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::algebra::{DensityMatrix, Matrix, Operator, I};
use crate::error::{Error, Result};
use crate::model::{DividerParams, LindbladTerm};

/// Largest Hilbert-space dimension accepted by [`exact_propagate`]; the
/// vectorised generator is dense and has `dim⁴` entries.
pub const EXACT_DIM_LIMIT: usize = 64;

fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    let (n, m) = (a.nrows(), b.nrows());
    let mut out = Array2::zeros((n * m, n * m));
    for ((i, j), &x) in a.indexed_iter() {
        if x == C64::new(0.0, 0.0) {
            continue;
        }
        for ((k, l), &y) in b.indexed_iter() {
            out[[i * m + k, j * m + l]] = x * y;
        }
    }
    out
}

fn dagger(m: &Matrix) -> Matrix {
    m.t().mapv(|z| z.conj())
}

/// Dense generator acting on the row-major vectorisation
/// `vec(ρ)[i·N + j] = ρ_ij`, using `vec(A X B) = (A ⊗ Bᵀ) vec(X)`.
pub fn vectorized_generator(h: &Operator, terms: &[LindbladTerm]) -> Result<Matrix> {
    let n = h.dim();
    if n > EXACT_DIM_LIMIT {
        return Err(Error::DimensionGuard { dim: n, limit: EXACT_DIM_LIMIT });
    }
    let id = Matrix::eye(n);
    let hd = h.to_dense();
    let mut lv = (kron(&hd, &id) - kron(&id, &hd.t().to_owned())) * (-I);
    for term in terms {
        if term.jump.space() != h.space() {
            return Err(Error::SpaceMismatch {
                left: h.space().dims().to_vec(),
                right: term.jump.space().dims().to_vec(),
            });
        }
        let l = term.jump.to_dense();
        let ldl = dagger(&l).dot(&l);
        let g = C64::new(term.rate, 0.0);
        lv = lv + kron(&l, &l.mapv(|z| z.conj())) * g
            - kron(&ldl, &id) * (g * 0.5)
            - kron(&id, &ldl.t().to_owned()) * (g * 0.5);
    }
    Ok(lv)
}

fn one_norm(m: &Matrix) -> f64 {
    (0..m.ncols()).map(|j| m.column(j).iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// Matrix exponential by scaling and squaring of a Taylor series.
pub fn expm(a: &Matrix) -> Matrix {
    let n = a.nrows();
    let norm = one_norm(a);
    let s = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let scaled = a * C64::new(0.5f64.powi(s), 0.0);
    let mut result = Matrix::eye(n);
    let mut term = Matrix::eye(n);
    for k in 1..40 {
        term = term.dot(&scaled) * C64::new(1.0 / k as f64, 0.0);
        result += &term;
        if one_norm(&term) <= f64::EPSILON * 1e-2 * one_norm(&result) {
            break;
        }
    }
    for _ in 0..s {
        result = result.dot(&result);
    }
    result
}

/// `exp(t · generator)` for a vectorised generator.
pub fn propagator(generator: &Matrix, t: f64) -> Matrix {
    expm(&(generator * C64::new(t, 0.0)))
}

pub fn apply_propagator(prop: &Matrix, rho: &DensityMatrix) -> Result<DensityMatrix> {
    let n = rho.dim();
    if prop.nrows() != n * n {
        return Err(Error::DimensionMismatch { expected: prop.nrows(), found: n * n });
    }
    let v = rho.data().to_owned().into_shape_with_order(n * n).expect("contiguous");
    let out = prop.dot(&v).into_shape_with_order((n, n)).expect("square");
    DensityMatrix::from_raw(rho.space().clone(), out)
}

/// `ρ(t) = unvec(exp(t L) vec(ρ0))`.
pub fn exact_propagate(rho0: &DensityMatrix, generator: &Matrix, t: f64) -> Result<DensityMatrix> {
    let n = rho0.dim();
    if n > EXACT_DIM_LIMIT {
        return Err(Error::DimensionGuard { dim: n, limit: EXACT_DIM_LIMIT });
    }
    if generator.dim() != (n * n, n * n) {
        return Err(Error::DimensionMismatch { expected: n * n, found: generator.nrows() });
    }
    apply_propagator(&propagator(generator, t), rho0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CavityConvention {
    /// Standard dissipator `γ D[a]`: amplitude decays at `γ/2`.
    StandardHalved,
    /// Semiclassical saturation curve `(|Ω|/γ)(1 − e^{−γt})`.
    PaperEq6,
}

/// Driven, damped single mode with no qubit back-action.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalyticCavityModel {
    pub gamma: f64,
    pub amp: f64,
    pub convention: CavityConvention,
}

impl AnalyticCavityModel {
    pub fn new(gamma: f64, amp: f64, convention: CavityConvention) -> Result<Self> {
        if !(gamma > 0.0) {
            return Err(Error::InvalidParams(format!("cavity damping must be positive, got {gamma}")));
        }
        Ok(Self { gamma, amp, convention })
    }

    pub fn photon_number(&self, t: f64) -> f64 {
        match self.convention {
            CavityConvention::StandardHalved => {
                let s = 1.0 - (-self.gamma * t / 2.0).exp();
                4.0 * self.amp * self.amp / (self.gamma * self.gamma) * s * s
            }
            CavityConvention::PaperEq6 => self.amp / self.gamma * (1.0 - (-self.gamma * t).exp()),
        }
    }

    pub fn steady_value(&self) -> f64 {
        match self.convention {
            CavityConvention::StandardHalved => 4.0 * self.amp * self.amp / (self.gamma * self.gamma),
            CavityConvention::PaperEq6 => self.amp / self.gamma,
        }
    }
}

/// `(|Ω|/γ_a)(1 − e^{−γ_a t})`. A reference curve for
/// the saturation shape only; its scale does not follow from the standard
/// dissipator (see [`decoupled_cavity_exact`]).
pub fn eq6_reference(gamma_a: f64, amp: f64, t: f64) -> f64 {
    amp / gamma_a * (1.0 - (-gamma_a * t).exp())
}

/// Exact `n_a(t)` from vacuum for `H = amp (a + a†)` and dissipator
/// `γ_a D[a]`: the coherent amplitude obeys `α̇ = −(γ_a/2) α − i amp`, so
/// `n_a(t) = (4 amp²/γ_a²) (1 − e^{−γ_a t/2})²`.
pub fn decoupled_cavity_exact(p: &DividerParams, amp: f64, t: f64) -> f64 {
    AnalyticCavityModel { gamma: p.gamma_a, amp, convention: CavityConvention::StandardHalved }.photon_number(t)
}

/// Checks `exp((t1 + t2) L) = exp(t1 L) exp(t2 L)` and returns the largest
/// entrywise deviation.
pub fn semigroup_defect(generator: &Matrix, t1: f64, t2: f64) -> f64 {
    let lhs = propagator(generator, t1 + t2);
    let rhs = propagator(generator, t1).dot(&propagator(generator, t2));
    (&lhs - &rhs).iter().map(|z| z.norm()).fold(0.0, f64::max)
}
