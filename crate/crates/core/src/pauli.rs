//! Single-qubit Pauli operators and multi-qubit Pauli strings.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// The four single-qubit Pauli operators (identity included).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PauliOp {
    I,
    X,
    Y,
    Z,
}

impl PauliOp {
    pub const ALL: [PauliOp; 4] = [PauliOp::I, PauliOp::X, PauliOp::Y, PauliOp::Z];

    /// 2x2 matrix representation.
    pub fn matrix(self) -> DMatrix<Complex64> {
        let o = Complex64::new(0.0, 0.0);
        let l = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        let elems = match self {
            PauliOp::I => [l, o, o, l],
            PauliOp::X => [o, l, l, o],
            PauliOp::Y => [o, -i, i, o],
            PauliOp::Z => [l, o, o, -l],
        };
        DMatrix::from_row_slice(2, 2, &elems)
    }

    /// Paulis are involutions, so each is its own inverse.
    pub fn inverse(self) -> PauliOp {
        self
    }

    pub fn label(self) -> char {
        match self {
            PauliOp::I => 'I',
            PauliOp::X => 'X',
            PauliOp::Y => 'Y',
            PauliOp::Z => 'Z',
        }
    }
}

/// A tensor product of single-qubit Paulis, one per qubit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PauliString(pub Vec<PauliOp>);

impl PauliString {
    pub fn num_qubits(&self) -> usize {
        self.0.len()
    }

    pub fn label(&self) -> String {
        self.0.iter().map(|p| p.label()).collect()
    }

    /// Dense matrix on the full register.
    pub fn matrix(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::identity(1, 1);
        for p in &self.0 {
            m = m.kronecker(&p.matrix());
        }
        m
    }

    /// Two Pauli strings either commute or anticommute; they commute iff the
    /// number of positions where both act nontrivially and differ is even.
    pub fn commutes_with(&self, other: &PauliString) -> Result<bool> {
        if self.num_qubits() != other.num_qubits() {
            return Err(Error::DimensionMismatch {
                expected: self.num_qubits(),
                actual: other.num_qubits(),
            });
        }
        let anti = self
            .0
            .iter()
            .zip(&other.0)
            .filter(|(a, b)| **a != PauliOp::I && **b != PauliOp::I && a != b)
            .count();
        Ok(anti % 2 == 0)
    }
}
