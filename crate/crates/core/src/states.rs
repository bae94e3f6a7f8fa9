//! State vectors and density matrices for one to four qubits.
//!
//! All states are stored unit-normalized. Qubit 0 is the most significant
//! bit of a basis index: on two qubits, |01> is amplitude index 1 and |10>
//! is index 2.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

use crate::{Error, Result, MAX_QUBITS, VALIDATION_TOL};

pub(crate) const C_ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub(crate) const C_ONE: Complex64 = Complex64::new(1.0, 0.0);

fn check_qubit_count(n: usize) -> Result<()> {
    if n == 0 || n > MAX_QUBITS {
        return Err(Error::QubitCountOutOfRange(n));
    }
    Ok(())
}

/// Pure state of `num_qubits` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amplitudes: DVector<Complex64>,
}

impl StateVector {
    /// Build from amplitudes, which must already be unit-norm.
    pub fn new(num_qubits: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        check_qubit_count(num_qubits)?;
        let dim = 1 << num_qubits;
        if amplitudes.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: amplitudes.len(),
            });
        }
        let v = DVector::from_vec(amplitudes);
        let norm = v.norm();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::NotNormalized((norm - 1.0).abs()));
        }
        Ok(StateVector {
            num_qubits,
            // Scrub residual rounding so stored states are unit-norm to
            // machine precision.
            amplitudes: v / Complex64::new(norm, 0.0),
        })
    }

    /// Wrap amplitudes the caller already knows are unit-norm.
    pub(crate) fn from_parts_unchecked(num_qubits: usize, amplitudes: DVector<Complex64>) -> Self {
        StateVector {
            num_qubits,
            amplitudes,
        }
    }

    /// Build from arbitrary nonzero amplitudes, normalizing them.
    pub fn normalized(num_qubits: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        check_qubit_count(num_qubits)?;
        let dim = 1 << num_qubits;
        if amplitudes.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: amplitudes.len(),
            });
        }
        let v = DVector::from_vec(amplitudes);
        let norm = v.norm();
        if norm < 1e-14 {
            return Err(Error::NotNormalized(1.0));
        }
        Ok(StateVector {
            num_qubits,
            amplitudes: v / Complex64::new(norm, 0.0),
        })
    }

    /// Computational basis state |index> on `num_qubits` qubits.
    pub fn basis(num_qubits: usize, index: usize) -> Result<Self> {
        check_qubit_count(num_qubits)?;
        let dim = 1 << num_qubits;
        if index >= dim {
            return Err(Error::QubitIndexOutOfRange {
                index,
                num_qubits,
            });
        }
        let mut amps = vec![C_ZERO; dim];
        amps[index] = C_ONE;
        StateVector::new(num_qubits, amps)
    }

    /// Single-qubit |+> or |-> (X eigenstates, eigenvalue `sign`).
    pub fn x_eigenstate(sign: i8) -> Self {
        let s = Complex64::new(f64::from(sign.signum()), 0.0);
        let r = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        StateVector {
            num_qubits: 1,
            amplitudes: DVector::from_vec(vec![r, s * r]),
        }
    }

    /// Singlet (|01> - |10>)/sqrt(2); stationary under equal precession of
    /// both qubits.
    pub fn psi_minus() -> Self {
        let r = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        StateVector {
            num_qubits: 2,
            amplitudes: DVector::from_vec(vec![C_ZERO, r, -r, C_ZERO]),
        }
    }

    /// Triplet (|01> + |10>)/sqrt(2).
    pub fn psi_plus() -> Self {
        let r = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        StateVector {
            num_qubits: 2,
            amplitudes: DVector::from_vec(vec![C_ZERO, r, r, C_ZERO]),
        }
    }

    /// (|00> + |11>)/sqrt(2).
    pub fn phi_plus() -> Self {
        let r = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        StateVector {
            num_qubits: 2,
            amplitudes: DVector::from_vec(vec![r, C_ZERO, C_ZERO, r]),
        }
    }

    /// (|00> - |11>)/sqrt(2).
    pub fn phi_minus() -> Self {
        let r = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        StateVector {
            num_qubits: 2,
            amplitudes: DVector::from_vec(vec![r, C_ZERO, C_ZERO, -r]),
        }
    }

    /// (|0...0> + e^{i phase} |1...1>)/sqrt(2) on `num_qubits` qubits.
    pub fn cat(num_qubits: usize, phase: f64) -> Result<Self> {
        check_qubit_count(num_qubits)?;
        let dim = 1 << num_qubits;
        let r = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let mut amps = vec![C_ZERO; dim];
        amps[0] = r;
        amps[dim - 1] = r * Complex64::from_polar(1.0, phase);
        StateVector::new(num_qubits, amps)
    }

    /// Haar-like random pure state: complex Gaussian amplitudes, normalized.
    pub fn random<R: Rng>(num_qubits: usize, rng: &mut R) -> Result<Self> {
        check_qubit_count(num_qubits)?;
        let dim = 1 << num_qubits;
        let amps: Vec<Complex64> = (0..dim)
            .map(|_| Complex64::new(gaussian(rng), gaussian(rng)))
            .collect();
        StateVector::normalized(num_qubits, amps)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amplitudes
    }

    pub fn amplitude(&self, index: usize) -> Complex64 {
        self.amplitudes[index]
    }

    /// <self|other>.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    /// Tensor product self (x) other. Mixed pure/mixed products are ruled
    /// out by the type system; convert with `DensityMatrix::from_pure` first.
    pub fn tensor(&self, other: &StateVector) -> Result<StateVector> {
        let n = self.num_qubits + other.num_qubits;
        check_qubit_count(n)?;
        let v = self.amplitudes.kronecker(&other.amplitudes);
        Ok(StateVector {
            num_qubits: n,
            amplitudes: DVector::from_column_slice(v.as_slice()),
        })
    }

    /// Apply a unitary on the full register.
    pub fn apply(&self, u: &DMatrix<Complex64>) -> Result<StateVector> {
        if u.nrows() != self.dim() || u.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: u.nrows(),
            });
        }
        Ok(StateVector {
            num_qubits: self.num_qubits,
            amplitudes: u * &self.amplitudes,
        })
    }

    /// Equality up to a global phase, within `tol` on every amplitude.
    pub fn approx_eq_up_to_phase(&self, other: &StateVector, tol: f64) -> bool {
        if self.num_qubits != other.num_qubits {
            return false;
        }
        let overlap = self.inner(other);
        if overlap.norm() < 1e-12 {
            return false;
        }
        let phase = overlap / overlap.norm();
        (&other.amplitudes - &self.amplitudes * phase).camax() < tol
    }

    pub fn validate(&self, tol: f64) -> Result<()> {
        let norm = self.amplitudes.norm();
        if (norm - 1.0).abs() > tol {
            return Err(Error::NotNormalized((norm - 1.0).abs()));
        }
        Ok(())
    }
}

pub(crate) fn gaussian<R: Rng>(rng: &mut R) -> f64 {
    // Box-Muller; two uniforms per call keeps the stream layout simple.
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Mixed state of `num_qubits` qubits, stored as a dense Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    num_qubits: usize,
    matrix: DMatrix<Complex64>,
}

impl DensityMatrix {
    /// |psi><psi|.
    pub fn from_pure(psi: &StateVector) -> Self {
        let v = psi.amplitudes();
        DensityMatrix {
            num_qubits: psi.num_qubits(),
            matrix: v * v.adjoint(),
        }
    }

    /// Convex mixture of pure states. Weights must be nonnegative and sum
    /// to 1 within validation tolerance.
    pub fn mixture(parts: &[(f64, StateVector)]) -> Result<Self> {
        let n = parts
            .first()
            .map(|(_, s)| s.num_qubits())
            .ok_or(Error::NoSamples)?;
        let mut total = 0.0;
        let dim = 1 << n;
        let mut m = DMatrix::zeros(dim, dim);
        for (w, psi) in parts {
            if *w < -VALIDATION_TOL {
                return Err(Error::ParameterOutOfRange {
                    name: "mixture weight",
                    value: *w,
                    range: "[0, 1]",
                });
            }
            if psi.num_qubits() != n {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: psi.dim(),
                });
            }
            total += w;
            m += DensityMatrix::from_pure(psi).matrix * Complex64::new(*w, 0.0);
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::NotUnitTrace(Complex64::new(total, 0.0)));
        }
        Ok(DensityMatrix {
            num_qubits: n,
            matrix: m,
        })
    }

    /// Build from an explicit matrix, validating hermiticity, unit trace and
    /// positivity (eigenvalues above -1e-10).
    pub fn from_matrix(num_qubits: usize, matrix: DMatrix<Complex64>) -> Result<Self> {
        check_qubit_count(num_qubits)?;
        let dim = 1 << num_qubits;
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: matrix.nrows(),
            });
        }
        let rho = DensityMatrix { num_qubits, matrix };
        rho.validate(VALIDATION_TOL)?;
        Ok(rho)
    }

    /// Maximally mixed state I/2^n.
    pub fn maximally_mixed(num_qubits: usize) -> Result<Self> {
        check_qubit_count(num_qubits)?;
        let dim = 1 << num_qubits;
        let m = DMatrix::identity(dim, dim) / Complex64::new(dim as f64, 0.0);
        Ok(DensityMatrix {
            num_qubits,
            matrix: m,
        })
    }

    /// Internal constructor for operation outputs that are valid by
    /// construction; skips the eigenvalue check.
    pub(crate) fn from_parts_unchecked(num_qubits: usize, matrix: DMatrix<Complex64>) -> Self {
        DensityMatrix { num_qubits, matrix }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    /// tr(rho^2); 1 for pure states.
    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    /// Hermitian eigenvalues, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.matrix)
    }

    /// <target|rho|target>.
    pub fn fidelity(&self, target: &StateVector) -> Result<f64> {
        if target.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: target.dim(),
            });
        }
        let v = target.amplitudes();
        Ok((v.adjoint() * &self.matrix * v)[(0, 0)].re)
    }

    /// Expectation value of a Hermitian observable.
    pub fn expectation(&self, observable: &DMatrix<Complex64>) -> Result<f64> {
        if observable.nrows() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: observable.nrows(),
            });
        }
        Ok((observable * &self.matrix).trace().re)
    }

    pub fn tensor(&self, other: &DensityMatrix) -> Result<DensityMatrix> {
        let n = self.num_qubits + other.num_qubits;
        check_qubit_count(n)?;
        Ok(DensityMatrix {
            num_qubits: n,
            matrix: self.matrix.kronecker(&other.matrix),
        })
    }

    /// Conjugate by a unitary on the full register: U rho U^dag.
    pub fn conjugate(&self, u: &DMatrix<Complex64>) -> Result<DensityMatrix> {
        if u.nrows() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: u.nrows(),
            });
        }
        Ok(DensityMatrix {
            num_qubits: self.num_qubits,
            matrix: u * &self.matrix * u.adjoint(),
        })
    }

    /// Trace out every qubit not listed in `keep`. Kept qubits retain their
    /// relative order.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityMatrix> {
        for &q in keep {
            if q >= self.num_qubits {
                return Err(Error::QubitIndexOutOfRange {
                    index: q,
                    num_qubits: self.num_qubits,
                });
            }
        }
        let mut keep_sorted = keep.to_vec();
        keep_sorted.sort_unstable();
        keep_sorted.dedup();
        if keep_sorted.is_empty() || keep_sorted.len() == self.num_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.num_qubits,
                actual: keep_sorted.len(),
            });
        }
        let n = self.num_qubits;
        let traced: Vec<usize> = (0..n).filter(|q| !keep_sorted.contains(q)).collect();
        let kd = 1 << keep_sorted.len();
        let td = 1 << traced.len();

        // Compose a full index from kept and traced sub-indices. Qubit q
        // occupies bit (n - 1 - q) of the basis index.
        let assemble = |ki: usize, ti: usize| -> usize {
            let mut idx = 0usize;
            for (pos, &q) in keep_sorted.iter().enumerate() {
                let bit = (ki >> (keep_sorted.len() - 1 - pos)) & 1;
                idx |= bit << (n - 1 - q);
            }
            for (pos, &q) in traced.iter().enumerate() {
                let bit = (ti >> (traced.len() - 1 - pos)) & 1;
                idx |= bit << (n - 1 - q);
            }
            idx
        };

        let mut out = DMatrix::zeros(kd, kd);
        for i in 0..kd {
            for j in 0..kd {
                let mut acc = C_ZERO;
                for t in 0..td {
                    acc += self.matrix[(assemble(i, t), assemble(j, t))];
                }
                out[(i, j)] = acc;
            }
        }
        Ok(DensityMatrix {
            num_qubits: keep_sorted.len(),
            matrix: out,
        })
    }

    /// Check hermiticity, unit trace, and positivity within `tol`
    /// (eigenvalue floor is fixed at -1e-10).
    pub fn validate(&self, tol: f64) -> Result<()> {
        let herm_dev = (&self.matrix - self.matrix.adjoint()).camax();
        if herm_dev > tol {
            return Err(Error::NotHermitian(herm_dev));
        }
        let tr = self.trace();
        if (tr - C_ONE).norm() > tol {
            return Err(Error::NotUnitTrace(tr));
        }
        let min_ev = self
            .eigenvalues()
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        if min_ev < -1e-10 {
            return Err(Error::NotPositive(min_ev));
        }
        Ok(())
    }
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &DMatrix<Complex64>) -> Vec<f64> {
    let sym = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let mut evs: Vec<f64> = sym.symmetric_eigen().eigenvalues.iter().copied().collect();
    evs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    evs
}

/// Trace distance (1/2)||rho - sigma||_1 between density matrices.
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            actual: b.dim(),
        });
    }
    let diff = a.matrix() - b.matrix();
    Ok(0.5 * hermitian_eigenvalues(&diff).iter().map(|e| e.abs()).sum::<f64>())
}
