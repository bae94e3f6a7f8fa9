//! Projective measurements: single-qubit outcome distributions, sampled
//! collapse, the non-selective (decohering) map on density matrices, and
//! measurement of a general orthogonal projector family.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use crate::causal::DecoherenceSuperop;
use crate::gates::lift;
use crate::states::{DensityMatrix, StateVector, C_ZERO};
use crate::{Error, Result};

/// Single-qubit measurement basis. Outcomes are labeled by the eigenvalue
/// sign: +1 is |0> (Z) or |+> (X).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    Z,
    X,
}

impl Basis {
    /// Rank-1 projector onto the outcome with eigenvalue `sign`.
    pub fn projector(self, sign: i8) -> DMatrix<Complex64> {
        let half = Complex64::new(0.5, 0.0);
        let s = Complex64::new(f64::from(sign.signum()), 0.0);
        match self {
            // (I + s Z)/2 and (I + s X)/2.
            Basis::Z => DMatrix::from_row_slice(
                2,
                2,
                &[half + s * half, C_ZERO, C_ZERO, half - s * half],
            ),
            Basis::X => DMatrix::from_row_slice(2, 2, &[half, s * half, s * half, half]),
        }
    }

    /// The measured observable (Z or X).
    pub fn observable(self) -> DMatrix<Complex64> {
        self.projector(1) - self.projector(-1)
    }
}

/// Probabilities [p(+1), p(-1)] of measuring `qubit` of `psi` in `basis`.
pub fn outcome_probabilities(psi: &StateVector, qubit: usize, basis: Basis) -> Result<[f64; 2]> {
    let n = psi.num_qubits();
    let p_plus = lift(&basis.projector(1), &[qubit], n)?;
    let projected = p_plus * psi.amplitudes();
    let p = projected.norm_squared();
    Ok([p, (1.0 - p).max(0.0)])
}

/// Project `psi` onto the `sign` outcome of `basis` on `qubit`, returning
/// the branch probability and the renormalized post-measurement state.
pub fn collapse(
    psi: &StateVector,
    qubit: usize,
    basis: Basis,
    sign: i8,
) -> Result<(f64, StateVector)> {
    let n = psi.num_qubits();
    let proj = lift(&basis.projector(sign), &[qubit], n)?;
    let branch = proj * psi.amplitudes();
    let p = branch.norm_squared();
    if p < 1e-14 {
        return Err(Error::VanishingBranch(p));
    }
    let scaled = branch * Complex64::new(1.0 / p.sqrt(), 0.0);
    Ok((p, StateVector::from_parts_unchecked(n, scaled)))
}

/// Sample one measurement of `qubit` in `basis`, returning the outcome sign
/// and the collapsed state.
pub fn sample<R: Rng>(
    psi: &StateVector,
    qubit: usize,
    basis: Basis,
    rng: &mut R,
) -> Result<(i8, StateVector)> {
    let [p_plus, _] = outcome_probabilities(psi, qubit, basis)?;
    let sign = if rng.gen_bool(p_plus.clamp(0.0, 1.0)) {
        1
    } else {
        -1
    };
    let (_, post) = collapse(psi, qubit, basis, sign)?;
    Ok((sign, post))
}

/// Outcome probabilities for a density matrix.
pub fn outcome_probabilities_density(
    rho: &DensityMatrix,
    qubit: usize,
    basis: Basis,
) -> Result<[f64; 2]> {
    let n = rho.num_qubits();
    let proj = lift(&basis.projector(1), &[qubit], n)?;
    let p = (proj * rho.matrix()).trace().re;
    Ok([p.clamp(0.0, 1.0), (1.0 - p).clamp(0.0, 1.0)])
}

/// Selective collapse of a density matrix: branch probability and
/// renormalized conditional state.
pub fn collapse_density(
    rho: &DensityMatrix,
    qubit: usize,
    basis: Basis,
    sign: i8,
) -> Result<(f64, DensityMatrix)> {
    let n = rho.num_qubits();
    let proj = lift(&basis.projector(sign), &[qubit], n)?;
    let branch = &proj * rho.matrix() * &proj;
    let p = branch.trace().re;
    if p < 1e-14 {
        return Err(Error::VanishingBranch(p));
    }
    let scaled = branch * Complex64::new(1.0 / p, 0.0);
    Ok((p, DensityMatrix::from_parts_unchecked(n, scaled)))
}

/// Non-selective measurement of `qubit` in `basis`:
/// rho -> P_+ rho P_+ + P_- rho P_-.
pub fn decohere(rho: &DensityMatrix, qubit: usize, basis: Basis) -> Result<DensityMatrix> {
    let n = rho.num_qubits();
    let mut out = DMatrix::zeros(rho.dim(), rho.dim());
    for sign in [1i8, -1] {
        let proj = lift(&basis.projector(sign), &[qubit], n)?;
        out += &proj * rho.matrix() * &proj;
    }
    Ok(DensityMatrix::from_parts_unchecked(n, out))
}

/// Expectation value of the basis observable on `qubit`.
pub fn expectation(rho: &DensityMatrix, qubit: usize, basis: Basis) -> Result<f64> {
    let [p, _] = outcome_probabilities_density(rho, qubit, basis)?;
    Ok(2.0 * p - 1.0)
}

/// Full outcome table of a projector-family measurement: probability
/// P(a) = tr(E_a rho) and post-state E_a rho E_a / P(a) per outcome (the
/// post-state is None when the branch has no weight).
pub fn measure_projective(
    rho: &DensityMatrix,
    superop: &DecoherenceSuperop,
) -> Result<Vec<(f64, Option<DensityMatrix>)>> {
    if rho.dim() != superop.dim() {
        return Err(Error::DimensionMismatch {
            expected: superop.dim(),
            actual: rho.dim(),
        });
    }
    let mut out = Vec::with_capacity(superop.num_outcomes());
    for e in superop.projectors() {
        let branch = e * rho.matrix() * e;
        let p = branch.trace().re.max(0.0);
        let post = if p > 1e-14 {
            Some(DensityMatrix::from_parts_unchecked(
                rho.num_qubits(),
                branch * Complex64::new(1.0 / p, 0.0),
            ))
        } else {
            None
        };
        out.push((p, post));
    }
    Ok(out)
}

/// Sample one outcome of a projector-family measurement.
pub fn sample_projective<R: Rng>(
    rho: &DensityMatrix,
    superop: &DecoherenceSuperop,
    rng: &mut R,
) -> Result<(usize, DensityMatrix)> {
    let table = measure_projective(rho, superop)?;
    let mut u: f64 = rng.gen();
    let mut fallback = None;
    for (a, (p, post)) in table.into_iter().enumerate() {
        if let Some(state) = post {
            u -= p;
            if u <= 0.0 {
                return Ok((a, state));
            }
            // Remember the last populated branch in case rounding pushes u
            // past every bin.
            fallback = Some((a, state));
        }
    }
    fallback.ok_or(Error::VanishingBranch(0.0))
}
