//! Free precession under H = (omega/2) Z per qubit.
//!
//! U(t) = exp(-iHt) = diag(e^{-i omega t/2}, e^{+i omega t/2}), so |+>
//! evolves to (|0> + e^{i omega t}|1>)/sqrt(2) up to a global phase, and the
//! singlet is left exactly invariant when every qubit precesses equally.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::gates::lift;
use crate::states::{DensityMatrix, StateVector};
use crate::Result;

/// Qubit frequency and elapsed proper time for a stretch of free evolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreeEvolutionParams {
    pub omega: f64,
    pub duration: f64,
}

impl FreeEvolutionParams {
    pub fn new(omega: f64, duration: f64) -> Self {
        FreeEvolutionParams { omega, duration }
    }
}

/// Single-qubit free evolution matrix for elapsed time `t`.
pub fn free_evolution_matrix(omega: f64, t: f64) -> DMatrix<Complex64> {
    let half = 0.5 * omega * t;
    DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
        Complex64::from_polar(1.0, -half),
        Complex64::from_polar(1.0, half),
    ]))
}

/// Evolution matrix on the listed qubits of an n-qubit register.
pub fn free_evolution_on(
    params: FreeEvolutionParams,
    qubits: &[usize],
    num_qubits: usize,
) -> Result<DMatrix<Complex64>> {
    let u1 = free_evolution_matrix(params.omega, params.duration);
    let mut full = DMatrix::identity(1 << num_qubits, 1 << num_qubits);
    for &q in qubits {
        full = lift(&u1, &[q], num_qubits)? * full;
    }
    Ok(full)
}

/// Freely precess the listed qubits of a pure state.
pub fn evolve_free(
    psi: &StateVector,
    params: FreeEvolutionParams,
    qubits: &[usize],
) -> Result<StateVector> {
    let u = free_evolution_on(params, qubits, psi.num_qubits())?;
    psi.apply(&u)
}

/// Freely precess the listed qubits of a mixed state.
pub fn evolve_free_density(
    rho: &DensityMatrix,
    params: FreeEvolutionParams,
    qubits: &[usize],
) -> Result<DensityMatrix> {
    let u = free_evolution_on(params, qubits, rho.num_qubits())?;
    rho.conjugate(&u)
}
