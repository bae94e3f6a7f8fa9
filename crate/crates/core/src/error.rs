use thiserror::Error;

/// Unified error type for state construction, channel application and
/// estimation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("qubit count {0} outside supported range 1..=4")]
    QubitCountOutOfRange(usize),

    #[error("qubit index {index} out of range for {num_qubits} qubits")]
    QubitIndexOutOfRange { index: usize, num_qubits: usize },

    #[error("state vector is not normalized: |norm - 1| = {0:.3e}")]
    NotNormalized(f64),

    #[error("matrix is not Hermitian: max |M - M^dag| = {0:.3e}")]
    NotHermitian(f64),

    #[error("matrix has trace {0:?}, expected 1")]
    NotUnitTrace(num_complex::Complex64),

    #[error("matrix is not positive semidefinite: min eigenvalue {0:.3e}")]
    NotPositive(f64),

    #[error("operator is not unitary: max |U U^dag - I| = {0:.3e}")]
    NotUnitary(f64),

    #[error("Kraus operators do not satisfy sum K^dag K = I: deviation {0:.3e}")]
    IncompleteKrausSet(f64),

    #[error("projector family invalid: {0}")]
    InvalidProjectorFamily(String),

    #[error("Pauli strings do not commute pairwise: {0} vs {1}")]
    NonCommutingStrings(String, String),

    #[error("parameter {name} = {value} outside valid range {range}")]
    ParameterOutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("likelihood is degenerate: {0}")]
    DegenerateLikelihood(String),

    #[error("measurement branch has vanishing probability {0:.3e}")]
    VanishingBranch(f64),

    #[error("ensemble keep probability {0:.3e} below threshold; no pairs survive")]
    NothingKept(f64),

    #[error("state has no support on the logical subspace (leakage = 1)")]
    FullLeakage,

    #[error("coherence between the extremal kets vanished: |c| = {0:.3e}")]
    NoCoherence(f64),

    #[error("numerical integration diverged at step {step} (|b| = {norm:.3e})")]
    IntegrationDiverged { step: usize, norm: f64 },

    #[error("empty sample set")]
    NoSamples,
}
