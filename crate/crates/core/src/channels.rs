//! Single-qubit Kraus channels (dephasing, bit flip) and collective
//! rotations. Decay strengths are parameterized by the coherence factor
//! eta = exp(-Gamma T) of a noise episode of rate Gamma and duration T.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::gates::lift;
use crate::pauli::PauliOp;
use crate::states::DensityMatrix;
use crate::{Error, Result};

/// Completely positive trace-preserving map given by Kraus operators.
#[derive(Debug, Clone)]
pub struct KrausChannel {
    ops: Vec<DMatrix<Complex64>>,
    dim: usize,
}

impl KrausChannel {
    /// Validate sum K^dag K = I and wrap.
    pub fn new(ops: Vec<DMatrix<Complex64>>) -> Result<Self> {
        if ops.is_empty() {
            return Err(Error::IncompleteKrausSet(1.0));
        }
        let dim = ops[0].nrows();
        let mut sum = DMatrix::<Complex64>::zeros(dim, dim);
        for k in &ops {
            if k.nrows() != dim || k.ncols() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: k.nrows(),
                });
            }
            sum += k.adjoint() * k;
        }
        let dev = (&sum - DMatrix::<Complex64>::identity(dim, dim)).camax();
        if dev > crate::VALIDATION_TOL {
            return Err(Error::IncompleteKrausSet(dev));
        }
        Ok(KrausChannel { ops, dim })
    }

    pub fn ops(&self) -> &[DMatrix<Complex64>] {
        &self.ops
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Apply the channel to `qubits` of an n-qubit state (the channel acts
    /// on exactly those qubits, identity elsewhere).
    pub fn apply(&self, rho: &DensityMatrix, qubits: &[usize]) -> Result<DensityMatrix> {
        let n = rho.num_qubits();
        if 1 << qubits.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: 1 << qubits.len(),
            });
        }
        let mut out = DMatrix::zeros(rho.dim(), rho.dim());
        for k in &self.ops {
            let kl = lift(k, qubits, n)?;
            out += &kl * rho.matrix() * kl.adjoint();
        }
        Ok(DensityMatrix::from_parts_unchecked(n, out))
    }
}

/// Coherence factor left by exposure of duration `t` to noise of rate
/// `gamma`: eta = exp(-gamma t).
pub fn coherence_factor(gamma: f64, t: f64) -> Result<f64> {
    if gamma.is_nan() || gamma < 0.0 {
        return Err(Error::ParameterOutOfRange {
            name: "gamma",
            value: gamma,
            range: ">= 0",
        });
    }
    if t.is_nan() || t < 0.0 {
        return Err(Error::ParameterOutOfRange {
            name: "t",
            value: t,
            range: ">= 0",
        });
    }
    Ok((-gamma * t).exp())
}

fn check_eta(eta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::ParameterOutOfRange {
            name: "eta",
            value: eta,
            range: "[0, 1]",
        });
    }
    Ok(())
}

fn mixing_channel(eta: f64, flip: PauliOp) -> Result<KrausChannel> {
    check_eta(eta)?;
    let keep = ((1.0 + eta) / 2.0).sqrt();
    let kick = ((1.0 - eta) / 2.0).sqrt();
    let id = DMatrix::<Complex64>::identity(2, 2) * Complex64::new(keep, 0.0);
    let k = flip.matrix() * Complex64::new(kick, 0.0);
    KrausChannel::new(vec![id, k])
}

/// Phase damping: applies Z with probability (1 - eta)/2, shrinking the
/// transverse Bloch components by eta.
pub fn dephasing(eta: f64) -> Result<KrausChannel> {
    mixing_channel(eta, PauliOp::Z)
}

/// Bit flip: applies X with probability (1 - eta)/2, shrinking the y and z
/// Bloch components by eta.
pub fn bitflip(eta: f64) -> Result<KrausChannel> {
    mixing_channel(eta, PauliOp::X)
}

/// Identical z-rotation exp(-i theta Z / 2) on every qubit. The relative
/// phase of a weight-k against a weight-j computational amplitude advances
/// by (k - j) theta, so equal-weight superpositions are untouched.
pub fn collective_z_rotation(num_qubits: usize, theta: f64) -> Result<DMatrix<Complex64>> {
    if num_qubits == 0 || num_qubits > crate::MAX_QUBITS {
        return Err(Error::QubitCountOutOfRange(num_qubits));
    }
    let single = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
        Complex64::from_polar(1.0, -theta / 2.0),
        Complex64::from_polar(1.0, theta / 2.0),
    ]));
    let mut u = DMatrix::identity(1, 1);
    for _ in 0..num_qubits {
        u = u.kronecker(&single);
    }
    Ok(u)
}
