//! Dense simulation toolkit for entanglement-based clock synchronization.
//!
//! Everything here stays in the one-to-four qubit regime, so states and
//! channels are stored as explicit complex vectors and matrices. The crate
//! splits into:
//!
//! - [`states`], [`gates`], [`evolve`], [`measure`]: state vectors, density
//!   matrices, free precession under H = (omega/2) Z, and projective
//!   measurement with explicit decoherence bookkeeping.
//! - [`channels`], [`bloch`]: Kraus channels (dephasing, bit flip) and the
//!   Bloch-vector picture of the corresponding master equations.
//! - [`protocols`], [`teleport`]: the entangled-pair synchronization
//!   protocol, its product-state and transported-clock baselines, maximum
//!   likelihood offset estimation, and teleportation through a lagged pair.
//! - [`distill`]: recurrence purification of phase errors, both as closed
//!   form recursions and as a simulated two-pair circuit round.
//! - [`causal`]: measurement superoperators as projector families, with a
//!   signaling check that classifies them as causal or not.
//! - [`qec`]: repetition-code correction of precessing cat states and the
//!   decoherence-free subspace carrying a phase standard.
//!
//! Bit convention throughout: qubit 0 is the most significant bit of a
//! basis-state index, so |01> on two qubits is index 1.

pub mod bloch;
pub mod causal;
pub mod channels;
pub mod distill;
mod error;
pub mod evolve;
pub mod gates;
pub mod measure;
pub mod optim;
pub mod pauli;
pub mod protocols;
pub mod qec;
pub mod rng;
pub mod states;
pub mod teleport;

pub use error::Error;

/// Shorthand used across the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Largest register size any operation here accepts.
pub const MAX_QUBITS: usize = 4;

/// Default tolerance for validating norms, traces, hermiticity and
/// projector algebra on constructed objects.
pub const VALIDATION_TOL: f64 = 1e-12;
