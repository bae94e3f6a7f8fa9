//! Dense gate matrices and embedding of small operators into a register.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use crate::states::{gaussian, C_ONE};
use crate::{Error, Result};

/// Single-qubit Hadamard.
pub fn hadamard() -> DMatrix<Complex64> {
    let r = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    DMatrix::from_row_slice(2, 2, &[r, r, r, -r])
}

/// Two-qubit controlled-NOT, control on the first (most significant) qubit.
pub fn cnot() -> DMatrix<Complex64> {
    let mut m = DMatrix::zeros(4, 4);
    m[(0, 0)] = C_ONE;
    m[(1, 1)] = C_ONE;
    m[(2, 3)] = C_ONE;
    m[(3, 2)] = C_ONE;
    m
}

/// Embed a k-qubit operator so it acts on the listed qubits of an n-qubit
/// register (identity elsewhere). `qubits[0]` receives the operator's most
/// significant qubit; the listed qubits need not be adjacent or ordered.
pub fn lift(op: &DMatrix<Complex64>, qubits: &[usize], num_qubits: usize) -> Result<DMatrix<Complex64>> {
    let k = qubits.len();
    if op.nrows() != (1 << k) || op.ncols() != (1 << k) {
        return Err(Error::DimensionMismatch {
            expected: 1 << k,
            actual: op.nrows(),
        });
    }
    let mut seen = [false; 8];
    for &q in qubits {
        if q >= num_qubits {
            return Err(Error::QubitIndexOutOfRange {
                index: q,
                num_qubits,
            });
        }
        if seen[q] {
            return Err(Error::QubitIndexOutOfRange {
                index: q,
                num_qubits,
            });
        }
        seen[q] = true;
    }
    let dim = 1 << num_qubits;
    let sub_of = |idx: usize| -> usize {
        let mut s = 0usize;
        for (pos, &q) in qubits.iter().enumerate() {
            let bit = (idx >> (num_qubits - 1 - q)) & 1;
            s |= bit << (k - 1 - pos);
        }
        s
    };
    let rest_of = |idx: usize| -> usize {
        let mut r = idx;
        for &q in qubits {
            r &= !(1 << (num_qubits - 1 - q));
        }
        r
    };
    let mut full = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        let si = sub_of(i);
        let ri = rest_of(i);
        for j in 0..dim {
            if rest_of(j) == ri {
                full[(i, j)] = op[(si, sub_of(j))];
            }
        }
    }
    Ok(full)
}

/// Validate unitarity within `tol`.
pub fn check_unitary(u: &DMatrix<Complex64>, tol: f64) -> Result<()> {
    let dim = u.nrows();
    if u.ncols() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: u.ncols(),
        });
    }
    let dev = (u * u.adjoint() - DMatrix::<Complex64>::identity(dim, dim)).camax();
    if dev > tol {
        return Err(Error::NotUnitary(dev));
    }
    Ok(())
}

/// Haar-distributed random unitary via QR of a complex Gaussian matrix,
/// with the R diagonal phases absorbed.
pub fn random_unitary<R: Rng>(dim: usize, rng: &mut R) -> DMatrix<Complex64> {
    let g = DMatrix::from_fn(dim, dim, |_, _| Complex64::new(gaussian(rng), gaussian(rng)));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C_ONE };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::PauliOp;
    use crate::states::{StateVector, C_ZERO};
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn cnot_flips_target_when_control_set() {
        let m = cnot();
        let s = StateVector::basis(2, 2).unwrap().apply(&m).unwrap();
        assert_eq!(s.amplitude(3), C_ONE);
        let s = StateVector::basis(2, 1).unwrap().apply(&m).unwrap();
        assert_eq!(s.amplitude(1), C_ONE);
    }

    #[test]
    fn hadamard_is_self_inverse() {
        let h = hadamard();
        assert!((&h * &h - DMatrix::<Complex64>::identity(2, 2)).camax() < 1e-15);
    }

    #[test]
    fn lift_places_operator_on_requested_qubit() {
        // X on qubit 1 of 3 maps |000> -> |010> (index 0 -> 2).
        let x = PauliOp::X.matrix();
        let full = lift(&x, &[1], 3).unwrap();
        assert_eq!(full[(2, 0)], C_ONE);
        assert_eq!(full[(0, 0)], C_ZERO);
    }

    #[test]
    fn lift_matches_kronecker_for_adjacent_qubits() {
        let x = PauliOp::X.matrix();
        let z = PauliOp::Z.matrix();
        let id = DMatrix::<Complex64>::identity(2, 2);
        let expect = x.kronecker(&z).kronecker(&id);
        let xz = x.kronecker(&z);
        let got = lift(&xz, &[0, 1], 3).unwrap();
        assert!((got - expect).camax() < 1e-15);
    }

    #[test]
    fn lift_with_reversed_qubit_order_swaps_roles() {
        // CNOT with control qubit 1, target qubit 0 on a 2-qubit register.
        let m = lift(&cnot(), &[1, 0], 2).unwrap();
        // |01> (control=qubit1 set) -> |11>.
        let s = StateVector::basis(2, 1).unwrap().apply(&m).unwrap();
        assert_eq!(s.amplitude(3), C_ONE);
    }

    #[test]
    fn lift_rejects_duplicate_and_out_of_range() {
        let x = PauliOp::X.matrix();
        assert!(lift(&x.kronecker(&x), &[1, 1], 3).is_err());
        assert!(lift(&x, &[3], 3).is_err());
    }

    #[test]
    fn random_unitary_is_unitary_and_deterministic() {
        let mut r1 = ChaCha12Rng::seed_from_u64(42);
        let mut r2 = ChaCha12Rng::seed_from_u64(42);
        let u1 = random_unitary(4, &mut r1);
        let u2 = random_unitary(4, &mut r2);
        check_unitary(&u1, 1e-10).unwrap();
        assert!((&u1 - &u2).camax() < 1e-15);
    }
}
