//! Hamiltonians of the divider in the lab frame and in the frame rotating at
//! half the pump frequency, plus the frame change that links them.

use num_complex::Complex64 as C64;

use super::operators::DividerOperators;
use super::params::DividerParams;
use crate::algebra::{CsrMatrix, Operator, I, ONE};
use crate::error::Result;

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn sum(terms: Vec<(C64, Operator)>) -> Result<Operator> {
    let mut iter = terms.into_iter();
    let (c0, o0) = iter.next().expect("at least one term");
    let mut acc = o0.scale(c0);
    for (c, o) in iter {
        acc = acc.add(&o.scale(c))?;
    }
    Ok(acc)
}

/// Couplings shared by both frames (`ħ = 1`):
/// `g3 (a† σ₋σ₋ + a σ₊σ₊) + (λ1 b σ₊¹ + λ2 c σ₊² + h.c.) + g_e σz¹σz²`.
fn interaction(p: &DividerParams, ops: &DividerOperators) -> Result<Operator> {
    let three_body = ops.a.adjoint().mul(&ops.sm1)?.mul(&ops.sm2)?;
    let q1b = ops.b.mul(&ops.sm1.adjoint())?;
    let q2c = ops.c.mul(&ops.sm2.adjoint())?;
    sum(vec![
        (re(p.g3), three_body.clone()),
        (re(p.g3), three_body.adjoint()),
        (re(p.lambda1), q1b.clone()),
        (re(p.lambda1), q1b.adjoint()),
        (re(p.lambda2), q2c.clone()),
        (re(p.lambda2), q2c.adjoint()),
        (re(p.g_e), ops.sz1.mul(&ops.sz2)?),
    ])
}

/// Rotating-frame Hamiltonian split into its drive-independent part and the
/// drive quadrature `a + a†`.
#[derive(Clone, Debug)]
pub struct RotatingHamiltonian {
    pub static_part: Operator,
    pub drive: Operator,
}

impl RotatingHamiltonian {
    pub fn new(p: &DividerParams) -> Result<Self> {
        p.validate()?;
        let ops = DividerOperators::new(&p.space())?;
        Self::with_operators(p, &ops)
    }

    pub fn with_operators(p: &DividerParams, ops: &DividerOperators) -> Result<Self> {
        let static_part = sum(vec![
            (re(p.delta_ba()), ops.n_b()),
            (re(p.delta_ca()), ops.n_c()),
            (re(0.5 * p.delta_qa1()), ops.sz1.clone()),
            (re(0.5 * p.delta_qa2()), ops.sz2.clone()),
        ])?
        .add(&interaction(p, ops)?)?;
        let drive = ops.a.add(&ops.a.adjoint())?;
        Ok(Self { static_part, drive })
    }

    pub fn at(&self, amp: f64) -> Operator {
        self.static_part.add(&self.drive.scale(re(amp))).expect("same space")
    }
}

/// Lab-frame Hamiltonian: a static part plus the pump
/// `Ω(t) [a e^{iω_a t} + a† e^{−iω_a t}]`.
#[derive(Clone, Debug)]
pub struct LabHamiltonian {
    pub static_part: Operator,
    pub a: Operator,
    pub a_dag: Operator,
    pub omega_a: f64,
}

impl LabHamiltonian {
    pub fn new(p: &DividerParams) -> Result<Self> {
        p.validate()?;
        let ops = DividerOperators::new(&p.space())?;
        Self::with_operators(p, &ops)
    }

    pub fn with_operators(p: &DividerParams, ops: &DividerOperators) -> Result<Self> {
        let static_part = sum(vec![
            (re(p.omega_a), ops.n_a()),
            (re(p.omega_b), ops.n_b()),
            (re(p.omega_c), ops.n_c()),
            (re(0.5 * p.omega_q1), ops.sz1.clone()),
            (re(0.5 * p.omega_q2), ops.sz2.clone()),
        ])?
        .add(&interaction(p, ops)?)?;
        Ok(Self { static_part, a: ops.a.clone(), a_dag: ops.a.adjoint(), omega_a: p.omega_a })
    }

    /// Complex coefficient multiplying `a` at time `t`; `a†` gets its conjugate.
    pub fn drive_coefficient(&self, t: f64, envelope: f64) -> C64 {
        C64::from_polar(envelope, self.omega_a * t)
    }

    pub fn at(&self, t: f64, envelope: f64) -> Operator {
        let c = self.drive_coefficient(t, envelope);
        self.static_part
            .add(&self.a.scale(c))
            .and_then(|h| h.add(&self.a_dag.scale(c.conj())))
            .expect("same space")
    }
}

/// `H_r/ħ` at constant drive amplitude `amp`.
pub fn build_rotating_hamiltonian(p: &DividerParams, amp: f64) -> Result<Operator> {
    Ok(RotatingHamiltonian::new(p)?.at(amp))
}

/// `H_e(t)/ħ` with a continuous pump of amplitude `p.drive_amp`.
pub fn build_lab_hamiltonian(p: &DividerParams, t: f64) -> Result<Operator> {
    Ok(LabHamiltonian::new(p)?.at(t, p.drive_amp))
}

/// `G = a†a + (b†b + c†c)/2 + (σz¹ + σz²)/4`, so that the frame change is
/// `U(t) = exp(−i ω_a t G)`.
pub fn frame_generator(p: &DividerParams) -> Result<Operator> {
    let ops = DividerOperators::new(&p.space())?;
    sum(vec![
        (ONE, ops.n_a()),
        (re(0.5), ops.n_b()),
        (re(0.5), ops.n_c()),
        (re(0.25), ops.sz1.clone()),
        (re(0.25), ops.sz2.clone()),
    ])
}

/// `U(t) = exp(−i ω_a t G)`. `G` is diagonal, so `U` is too.
///
/// The sign is the one for which `U† a† U = a† e^{iω_a t}`, which makes
/// `U† H_e U − i U† ∂U/∂t` equal to the rotating-frame Hamiltonian.
pub fn frame_unitary(p: &DividerParams, t: f64) -> Result<Operator> {
    let g = frame_generator(p)?;
    let n = g.dim();
    let triplets = (0..n).map(|i| (i, i, (-I * p.omega_a * t * g.get(i, i).re).exp())).collect();
    Operator::from_sparse(g.space().clone(), CsrMatrix::from_triplets(n, triplets))
}
