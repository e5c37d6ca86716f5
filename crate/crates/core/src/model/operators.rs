use num_complex::Complex64 as C64;

use crate::algebra::{embed, local_annihilator, HilbertSpace, Matrix, Operator};
use crate::error::Result;

pub const QUBIT_1: usize = 0;
pub const QUBIT_2: usize = 1;
pub const MODE_A: usize = 2;
pub const MODE_B: usize = 3;
pub const MODE_C: usize = 4;

/// Ladder and Pauli operators of the five subsystems, embedded in the full
/// space.
#[derive(Clone, Debug)]
pub struct DividerOperators {
    pub space: HilbertSpace,
    pub a: Operator,
    pub b: Operator,
    pub c: Operator,
    /// `σ₋` of qubit 1.
    pub sm1: Operator,
    pub sm2: Operator,
    pub sz1: Operator,
    pub sz2: Operator,
}

impl DividerOperators {
    pub fn new(space: &HilbertSpace) -> Result<Self> {
        let d = space.dims();
        let lower = |idx: usize| -> Result<Operator> { embed(space, idx, &local_annihilator(d[idx])?) };
        let sz = Matrix::from_diag(&ndarray::arr1(&[C64::new(-1.0, 0.0), C64::new(1.0, 0.0)]));
        Ok(Self {
            space: space.clone(),
            a: lower(MODE_A)?,
            b: lower(MODE_B)?,
            c: lower(MODE_C)?,
            sm1: lower(QUBIT_1)?,
            sm2: lower(QUBIT_2)?,
            sz1: embed(space, QUBIT_1, &sz)?,
            sz2: embed(space, QUBIT_2, &sz)?,
        })
    }

    pub fn number(op: &Operator) -> Operator {
        op.adjoint().mul(op).expect("same space")
    }

    pub fn n_a(&self) -> Operator {
        Self::number(&self.a)
    }

    pub fn n_b(&self) -> Operator {
        Self::number(&self.b)
    }

    pub fn n_c(&self) -> Operator {
        Self::number(&self.c)
    }

    /// Excited-state projector `σ₊σ₋` of qubit 1.
    pub fn p1(&self) -> Operator {
        Self::number(&self.sm1)
    }

    pub fn p2(&self) -> Operator {
        Self::number(&self.sm2)
    }

    /// Diagonals of `(n_a, n_b, n_c, P_1, P_2)`; all five are diagonal in the
    /// product basis.
    pub fn observable_diagonals(&self) -> [Vec<f64>; 5] {
        let diag = |op: Operator| -> Vec<f64> {
            (0..op.dim()).map(|i| op.get(i, i).re).collect()
        };
        [diag(self.n_a()), diag(self.n_b()), diag(self.n_c()), diag(self.p1()), diag(self.p2())]
    }
}
