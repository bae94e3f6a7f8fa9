//! Error control for precessing registers: the repetition code around the
//! n-qubit cat state (corrects single bit flips, passes phase damage
//! through untouched), and the two-qubit decoherence-free encoding that
//! rides out collective dephasing, with the phase-lock protocol built on
//! top of it.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::channels::collective_z_rotation;
use crate::gates::lift;
use crate::optim::grid_then_golden_max;
use crate::pauli::PauliOp;
use crate::rng::substream;
use crate::states::{gaussian, DensityMatrix, StateVector};
use crate::{Error, Result, MAX_QUBITS};

const TAU: f64 = 2.0 * std::f64::consts::PI;

/// Greenberger-Horne-Zeilinger-type register state with a tracked
/// accumulated relative phase (not wrapped to a principal branch).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CatState {
    pub num_qubits: usize,
    pub phase: f64,
}

impl CatState {
    pub fn new(num_qubits: usize, phase: f64) -> Result<Self> {
        if num_qubits == 0 || num_qubits > MAX_QUBITS {
            return Err(Error::QubitCountOutOfRange(num_qubits));
        }
        Ok(CatState { num_qubits, phase })
    }

    /// The register state (|0..0> + e^{i phase}|1..1>)/sqrt(2).
    pub fn state(&self) -> StateVector {
        StateVector::cat(self.num_qubits, self.phase).expect("validated at construction")
    }
}

/// Encode at phase 0 and precess every qubit for time `t`: the relative
/// phase grows n times faster than a bare qubit's.
pub fn cat_encode_evolve(num_qubits: usize, omega: f64, t: f64) -> Result<CatState> {
    CatState::new(num_qubits, num_qubits as f64 * omega * t)
}

/// Phase between the all-zeros and all-ones kets of `rho`, read off the
/// extremal coherence. Vanishing coherence has no phase to report.
pub fn cat_relative_phase(rho: &DensityMatrix) -> Result<f64> {
    let d = rho.dim();
    let c = rho.matrix()[(d - 1, 0)];
    if c.norm() < 1e-12 {
        return Err(Error::NoCoherence(c.norm()));
    }
    Ok(c.arg())
}

/// Result of a syndrome-and-correct cycle on the 3-qubit repetition code.
#[derive(Debug, Clone)]
pub struct RepetitionOutcome {
    pub corrected: DensityMatrix,
    /// Parities of qubit pairs (0,1) and (1,2).
    pub syndrome: (i8, i8),
    /// Raised when the cycle cannot have restored the input: the state
    /// arrived outside the code space, the syndrome was not sharp, or
    /// weight remains outside the code space afterwards. A phase flip is
    /// invisible here and is deliberately not flagged.
    pub miscorrected: bool,
}

fn codespace_weight(rho: &DensityMatrix) -> f64 {
    let d = rho.dim();
    (rho.matrix()[(0, 0)] + rho.matrix()[(d - 1, d - 1)]).re
}

/// Parity observable Z_i Z_j on a 3-qubit register.
fn parity_observable(i: usize, j: usize) -> DMatrix<Complex64> {
    let z = PauliOp::Z.matrix();
    let zi = lift(&z, &[i], 3).expect("fixed layout");
    let zj = lift(&z, &[j], 3).expect("fixed layout");
    zi * zj
}

/// One cycle of the 3-qubit repetition code: optionally inflict a single
/// Pauli error, measure the two parities, apply the indicated X. The two
/// parities are sharp on any code-space state hit by at most one Pauli, so
/// a blurred syndrome means the promise was broken and is flagged.
pub fn repetition_correct(
    state: &DensityMatrix,
    error: Option<(PauliOp, usize)>,
) -> Result<RepetitionOutcome> {
    if state.num_qubits() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 8,
            actual: state.dim(),
        });
    }
    let mut miscorrected = codespace_weight(state) < 1.0 - 1e-9;

    let errored = match error {
        None => state.clone(),
        Some((op, qubit)) => {
            let e = lift(&op.matrix(), &[qubit], 3)?;
            state.conjugate(&e)?
        }
    };

    let mut syndrome = [0i8; 2];
    for (k, (i, j)) in [(0usize, 1usize), (1, 2)].into_iter().enumerate() {
        let s = errored.expectation(&parity_observable(i, j))?;
        if (s.abs() - 1.0).abs() > 1e-9 {
            miscorrected = true;
        }
        syndrome[k] = if s >= 0.0 { 1 } else { -1 };
    }

    let fix_qubit = match (syndrome[0], syndrome[1]) {
        (1, 1) => None,
        (-1, 1) => Some(0),
        (-1, -1) => Some(1),
        (1, -1) => Some(2),
        _ => unreachable!("signs are always +-1"),
    };
    let corrected = match fix_qubit {
        None => errored,
        Some(q) => {
            let x = lift(&PauliOp::X.matrix(), &[q], 3)?;
            errored.conjugate(&x)?
        }
    };
    if codespace_weight(&corrected) < 1.0 - 1e-9 {
        miscorrected = true;
    }
    Ok(RepetitionOutcome {
        corrected,
        syndrome: (syndrome[0], syndrome[1]),
        miscorrected,
    })
}

/// A logical qubit destined for the two-qubit collective-dephasing-free
/// subspace.
#[derive(Debug, Clone, Copy)]
pub struct DfsLogical {
    pub a: Complex64,
    pub b: Complex64,
}

impl DfsLogical {
    pub fn new(a: Complex64, b: Complex64) -> Result<Self> {
        let norm2 = a.norm_sqr() + b.norm_sqr();
        if (norm2 - 1.0).abs() > 1e-12 {
            return Err(Error::NotNormalized((norm2.sqrt() - 1.0).abs()));
        }
        Ok(DfsLogical { a, b })
    }

    /// The phase carrier (|0> + e^{i delta}|1>)/sqrt(2) before encoding.
    pub fn phase_carrier(delta: f64) -> Self {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        DfsLogical {
            a: Complex64::new(r, 0.0),
            b: Complex64::from_polar(r, delta),
        }
    }
}

/// a|01> + b|10>: a zero-eigenvector of the collective Z generator, so
/// every collective Z rotation leaves it fixed.
pub fn dfs_encode(logical: DfsLogical) -> StateVector {
    StateVector::new(
        2,
        vec![
            Complex64::new(0.0, 0.0),
            logical.a,
            logical.b,
            Complex64::new(0.0, 0.0),
        ],
    )
    .expect("normalized by DfsLogical invariant")
}

/// Project onto span{|01>, |10>}, map |01> -> |0> and |10> -> |1>, and
/// report the weight lost outside the subspace.
pub fn dfs_decode(rho: &DensityMatrix) -> Result<(DensityMatrix, f64)> {
    if rho.num_qubits() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            actual: rho.dim(),
        });
    }
    let m = rho.matrix();
    let mut logical = DMatrix::<Complex64>::zeros(2, 2);
    for (r, i) in [(0usize, 1usize), (1, 2)] {
        for (c, j) in [(0usize, 1usize), (1, 2)] {
            logical[(r, c)] = m[(i, j)];
        }
    }
    let kept = (logical[(0, 0)] + logical[(1, 1)]).re;
    if kept < 1e-12 {
        return Err(Error::FullLeakage);
    }
    let logical = DensityMatrix::from_parts_unchecked(1, logical / Complex64::new(kept, 0.0));
    Ok((logical, 1.0 - kept))
}

/// Collective dephasing drawn fresh per carrier: one Z-rotation angle
/// applied to every qubit in transit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum CollectiveNoise {
    None,
    /// Angle uniform on [0, 2pi): the fully randomizing worst case.
    Uniform,
    /// Centered Gaussian angle with the given standard deviation.
    Gaussian { sigma: f64 },
}

impl CollectiveNoise {
    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            CollectiveNoise::None => 0.0,
            CollectiveNoise::Uniform => rng.gen_range(0.0..TAU),
            CollectiveNoise::Gaussian { sigma } => sigma * gaussian(rng),
        }
    }

    fn label(&self) -> String {
        match self {
            CollectiveNoise::None => "none".into(),
            CollectiveNoise::Uniform => "uniform".into(),
            CollectiveNoise::Gaussian { sigma } => format!("gaussian(sigma={sigma})"),
        }
    }
}

/// One phase-lock experiment. The report deliberately contains no clock
/// offset: agreeing on a phase convention is not the same problem as
/// synchronizing, and this module only ever solves the former.
#[derive(Debug, Clone, Serialize)]
pub struct PhaseLockReport {
    pub delta_true: f64,
    /// Maximum-likelihood phase on [0, 2pi).
    pub delta_hat: f64,
    pub n: usize,
    pub noise_model: String,
    pub seed: u64,
    /// Whether carriers were subspace-encoded or bare qubits.
    pub encoded: bool,
}

/// Measurement record of one carrier: rotated-basis angle and outcome.
type CarrierOutcome = (f64, i8);

/// Measure the logical carrier in the equatorial basis at angle `phi`
/// (observable cos(phi) X + sin(phi) Y) and sample the outcome.
fn measure_equatorial<R: Rng>(logical: &DensityMatrix, phi: f64, rng: &mut R) -> Result<i8> {
    let obs = PauliOp::X.matrix() * Complex64::new(phi.cos(), 0.0)
        + PauliOp::Y.matrix() * Complex64::new(phi.sin(), 0.0);
    let p_plus = 0.5 * (1.0 + logical.expectation(&obs)?);
    Ok(if rng.gen_bool(p_plus.clamp(0.0, 1.0)) {
        1
    } else {
        -1
    })
}

/// Maximum-likelihood phase from rotated-basis outcomes: maximize
/// sum ln (1 + o cos(d - phi))/2 over [0, 2pi) on a 1024-point grid with
/// golden-section refinement.
fn phase_mle(outcomes: &[CarrierOutcome]) -> Result<f64> {
    if outcomes.is_empty() {
        return Err(Error::NoSamples);
    }
    let log_lik = |d: f64| {
        outcomes
            .iter()
            .map(|&(phi, o)| {
                let p = 0.5 * (1.0 + f64::from(o) * (d - phi).cos());
                p.max(1e-300).ln()
            })
            .sum::<f64>()
    };
    let (d_hat, _) = grid_then_golden_max(log_lik, 0.0, TAU, 1024, 1e-10 * TAU);
    Ok(d_hat.rem_euclid(TAU))
}

fn run_carriers<R: Rng, F>(n: usize, rng: &mut R, mut carrier: F) -> Result<Vec<CarrierOutcome>>
where
    F: FnMut(f64, &mut R) -> Result<i8>,
{
    if n == 0 {
        return Err(Error::NoSamples);
    }
    let mut outcomes = Vec::with_capacity(n);
    for j in 0..n {
        // Alternate the two equatorial bases so the cosine's sign ambiguity
        // is broken and the likelihood peaks once per period.
        let phi = if j % 2 == 0 {
            0.0
        } else {
            std::f64::consts::FRAC_PI_2
        };
        outcomes.push((phi, carrier(phi, rng)?));
    }
    Ok(outcomes)
}

/// Send `n` subspace-encoded phase carriers at phase `delta` through
/// collective dephasing, decode, measure in alternating equatorial bases,
/// and return the maximum-likelihood phase.
pub fn phase_lock_run(
    delta: f64,
    n: usize,
    noise: CollectiveNoise,
    seed: u64,
) -> Result<PhaseLockReport> {
    let mut rng = substream(seed, "phase-lock");
    let encoded = dfs_encode(DfsLogical::phase_carrier(delta));
    let outcomes = run_carriers(n, &mut rng, |phi, rng| {
        let theta = noise.sample(rng);
        let u = collective_z_rotation(2, theta)?;
        let rho = DensityMatrix::from_pure(&encoded.apply(&u)?);
        let (logical, leakage) = dfs_decode(&rho)?;
        debug_assert!(leakage < 1e-12);
        measure_equatorial(&logical, phi, rng)
    })?;
    Ok(PhaseLockReport {
        delta_true: delta,
        delta_hat: phase_mle(&outcomes)?,
        n,
        noise_model: noise.label(),
        seed,
        encoded: true,
    })
}

/// The unprotected control: the same carriers, noise, bases and estimator,
/// but each carrier is a bare qubit whose phase the collective rotation
/// scrambles directly.
pub fn bare_phase_run(
    delta: f64,
    n: usize,
    noise: CollectiveNoise,
    seed: u64,
) -> Result<PhaseLockReport> {
    let mut rng = substream(seed, "phase-lock-bare");
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let carrier = StateVector::new(
        1,
        vec![Complex64::new(r, 0.0), Complex64::from_polar(r, delta)],
    )?;
    let outcomes = run_carriers(n, &mut rng, |phi, rng| {
        let theta = noise.sample(rng);
        let u = collective_z_rotation(1, theta)?;
        let rho = DensityMatrix::from_pure(&carrier.apply(&u)?);
        measure_equatorial(&rho, phi, rng)
    })?;
    Ok(PhaseLockReport {
        delta_true: delta,
        delta_hat: phase_mle(&outcomes)?,
        n,
        noise_model: noise.label(),
        seed,
        encoded: false,
    })
}
