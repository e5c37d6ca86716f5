//! The divider model: parameters, Hamiltonians, damping channels and pump
//! schedules.

mod drive;
mod hamiltonian;
mod operators;
mod params;

pub use drive::{drive_amplitude, DriveKind, DriveSchedule};
pub use hamiltonian::{
    build_lab_hamiltonian, build_rotating_hamiltonian, frame_generator, frame_unitary, LabHamiltonian,
    RotatingHamiltonian,
};
pub use operators::{DividerOperators, MODE_A, MODE_B, MODE_C, QUBIT_1, QUBIT_2};
pub use params::{DividerParams, Truncation};

use crate::algebra::Operator;
use crate::error::{Error, Result};

/// One damping channel `rate · D[jump]`. The jump operator is stored
/// unscaled; the rate is applied exactly once by the dissipator.
#[derive(Clone, Debug)]
pub struct LindbladTerm {
    pub label: &'static str,
    pub jump: Operator,
    pub rate: f64,
}

impl LindbladTerm {
    pub fn new(label: &'static str, jump: Operator, rate: f64) -> Result<Self> {
        if !(rate >= 0.0) {
            return Err(Error::NegativeRate { channel: label.to_string(), rate });
        }
        Ok(Self { label, jump, rate })
    }
}

/// `(a, γ_a), (b, γ_b), (c, γ_c), (σ₋¹, κ_1), (σ₋², κ_2)`.
pub fn build_collapse_terms(p: &DividerParams) -> Result<Vec<LindbladTerm>> {
    p.validate()?;
    let ops = DividerOperators::new(&p.space())?;
    collapse_terms_with(p, &ops)
}

pub(crate) fn collapse_terms_with(p: &DividerParams, ops: &DividerOperators) -> Result<Vec<LindbladTerm>> {
    Ok(vec![
        LindbladTerm::new("a", ops.a.clone(), p.gamma_a)?,
        LindbladTerm::new("b", ops.b.clone(), p.gamma_b)?,
        LindbladTerm::new("c", ops.c.clone(), p.gamma_c)?,
        LindbladTerm::new("sigma1", ops.sm1.clone(), p.kappa1)?,
        LindbladTerm::new("sigma2", ops.sm2.clone(), p.kappa2)?,
    ])
}
