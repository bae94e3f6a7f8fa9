//! Teleportation over a lagged resource pair. The sender's Bell measurement
//! leaves the receiver holding the corrected state in a rotated frame; the
//! receiver must let the qubit precess for the lag before applying the
//! Pauli correction, after which the transfer is exact.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::Serialize;

use crate::evolve::{evolve_free, FreeEvolutionParams};
use crate::gates::lift;
use crate::pauli::PauliOp;
use crate::protocols::make_flawed_pair;
use crate::states::{DensityMatrix, StateVector};
use crate::{Error, Result};

/// Bell outcomes in a fixed order with their Pauli corrections (for a
/// singlet resource).
pub const BELL_CORRECTIONS: [PauliOp; 4] = [PauliOp::I, PauliOp::Z, PauliOp::X, PauliOp::Y];

fn bell_states() -> [StateVector; 4] {
    [
        StateVector::psi_minus(),
        StateVector::psi_plus(),
        StateVector::phi_minus(),
        StateVector::phi_plus(),
    ]
}

/// One Bell-measurement branch of a teleportation run.
#[derive(Debug, Clone)]
pub struct TeleportBranch {
    /// Index into the psi-/psi+/phi-/phi+ outcome order.
    pub bell_outcome: usize,
    pub probability: f64,
    pub correction: PauliOp,
    /// Receiver's qubit right after the sender's measurement.
    pub bob_raw: StateVector,
    /// Fidelity to the input after waiting out the lag, then correcting.
    pub fidelity_after_lag: f64,
    /// Fidelity to the input when the correction is applied immediately.
    pub fidelity_skipping_lag: f64,
}

/// Sampled teleportation outcome.
#[derive(Debug, Clone, Serialize)]
pub struct TeleportOutcome {
    pub bell_outcome: usize,
    pub correction: PauliOp,
    pub probability: f64,
    pub fidelity: f64,
    #[serde(skip)]
    pub bob_state_after_lag: DensityMatrix,
}

/// All four branches of teleporting `psi` over a pair whose receiver half
/// lags by `delta_lag`. Qubit layout: 0 input, 1 sender's half, 2
/// receiver's half.
pub fn teleport_branches(
    psi: &StateVector,
    delta_lag: f64,
    omega: f64,
) -> Result<Vec<TeleportBranch>> {
    if psi.num_qubits() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            actual: psi.dim(),
        });
    }
    let resource = make_flawed_pair(delta_lag, omega);
    let joint = psi.tensor(&resource)?;
    let wait = FreeEvolutionParams {
        omega,
        duration: delta_lag,
    };
    let mut out = Vec::with_capacity(4);
    for (idx, bell) in bell_states().iter().enumerate() {
        let proj2 = bell.amplitudes() * bell.amplitudes().adjoint();
        let proj = lift(&proj2, &[0, 1], 3)?;
        let branch = proj * joint.amplitudes();
        let probability = branch.norm_squared();
        if probability < 1e-14 {
            return Err(Error::VanishingBranch(probability));
        }
        let normalized = StateVector::normalized(3, branch.iter().copied().collect())?;
        // The sender's register factors out; keep the receiver's qubit.
        let rho3 = DensityMatrix::from_pure(&normalized);
        let bob_rho = rho3.partial_trace(&[2])?;
        let bob_raw = pure_from_density(&bob_rho)?;

        let correction = BELL_CORRECTIONS[idx];
        let fix = correction.matrix();
        let waited = evolve_free(&bob_raw, wait, &[0])?;
        let fidelity_after_lag = overlap2(&waited.apply(&fix)?, psi);
        let fidelity_skipping_lag = overlap2(&bob_raw.apply(&fix)?, psi);
        out.push(TeleportBranch {
            bell_outcome: idx,
            probability,
            correction,
            bob_raw,
            fidelity_after_lag,
            fidelity_skipping_lag,
        });
    }
    Ok(out)
}

/// Run one teleportation, sampling the Bell outcome, waiting out the lag
/// and applying the correction.
pub fn teleport_with_offset(
    psi: &StateVector,
    delta_lag: f64,
    omega: f64,
    seed: u64,
) -> Result<TeleportOutcome> {
    let branches = teleport_branches(psi, delta_lag, omega)?;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut u: f64 = rng.gen();
    let mut chosen = branches.len() - 1;
    for (i, b) in branches.iter().enumerate() {
        u -= b.probability;
        if u <= 0.0 {
            chosen = i;
            break;
        }
    }
    let b = &branches[chosen];
    let wait = FreeEvolutionParams {
        omega,
        duration: delta_lag,
    };
    let waited = evolve_free(&b.bob_raw, wait, &[0])?;
    let fixed = waited.apply(&b.correction.matrix())?;
    Ok(TeleportOutcome {
        bell_outcome: b.bell_outcome,
        correction: b.correction,
        probability: b.probability,
        fidelity: b.fidelity_after_lag,
        bob_state_after_lag: DensityMatrix::from_pure(&fixed),
    })
}

fn overlap2(a: &StateVector, b: &StateVector) -> f64 {
    a.inner(b).norm_sqr()
}

/// Recover the pure state from a rank-1 density matrix.
fn pure_from_density(rho: &DensityMatrix) -> Result<StateVector> {
    if (rho.purity() - 1.0).abs() > 1e-9 {
        return Err(Error::NotPositive(rho.purity() - 1.0));
    }
    // Dominant column gives the ray.
    let m = rho.matrix();
    let mut best = 0;
    for i in 1..m.nrows() {
        if m[(i, i)].re > m[(best, best)].re {
            best = i;
        }
    }
    let col: Vec<Complex64> = m.column(best).iter().copied().collect();
    StateVector::normalized(rho.num_qubits(), col)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn random_input(seed: u64) -> StateVector {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        StateVector::random(1, &mut rng).unwrap()
    }

    #[test]
    fn branches_are_equiprobable() {
        let psi = random_input(1);
        let branches = teleport_branches(&psi, 0.4, 1.0).unwrap();
        assert_eq!(branches.len(), 4);
        for b in &branches {
            assert!((b.probability - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_lag_teleportation_is_exact() {
        for seed in 0..10 {
            let psi = random_input(seed);
            for b in teleport_branches(&psi, 0.0, 1.0).unwrap() {
                assert!((b.fidelity_after_lag - 1.0).abs() < 1e-12);
                assert!((b.fidelity_skipping_lag - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn lag_compensation_restores_unit_fidelity() {
        let omega = 1.0;
        for seed in 0..10 {
            let psi = random_input(100 + seed);
            for b in teleport_branches(&psi, 0.3 / omega, omega).unwrap() {
                assert!(
                    (b.fidelity_after_lag - 1.0).abs() < 1e-12,
                    "branch {} fidelity {}",
                    b.bell_outcome,
                    b.fidelity_after_lag
                );
            }
        }
    }

    #[test]
    fn skipping_the_lag_degrades_some_branch() {
        let omega = 1.0;
        let psi = random_input(7);
        let branches = teleport_branches(&psi, PI / (2.0 * omega), omega).unwrap();
        assert!(branches
            .iter()
            .any(|b| b.fidelity_skipping_lag < 0.999));
    }

    #[test]
    fn raw_state_is_rotated_corrected_input() {
        let (omega, lag) = (1.3, 0.45);
        let psi = random_input(21);
        let back = FreeEvolutionParams {
            omega,
            duration: -lag,
        };
        for b in teleport_branches(&psi, lag, omega).unwrap() {
            let expected =
                evolve_free(&psi.apply(&b.correction.matrix()).unwrap(), back, &[0]).unwrap();
            assert!(b.bob_raw.approx_eq_up_to_phase(&expected, 1e-10));
        }
    }

    #[test]
    fn sampled_outcome_matches_branch_table() {
        let psi = random_input(33);
        let out = teleport_with_offset(&psi, 0.2, 1.0, 99).unwrap();
        assert!((out.fidelity - 1.0).abs() < 1e-12);
        let again = teleport_with_offset(&psi, 0.2, 1.0, 99).unwrap();
        assert_eq!(out.bell_outcome, again.bell_outcome);
        // The delivered state is the input.
        let target = DensityMatrix::from_pure(&psi);
        assert!((out.bob_state_after_lag.matrix() - target.matrix()).camax() < 1e-10);
    }

    #[test]
    fn sampled_outcomes_cover_all_branches() {
        let psi = random_input(55);
        let mut seen = [false; 4];
        for seed in 0..64 {
            let out = teleport_with_offset(&psi, 0.1, 1.0, seed).unwrap();
            seen[out.bell_outcome] = true;
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn multi_qubit_input_rejected() {
        let two = StateVector::basis(2, 0).unwrap();
        assert!(teleport_branches(&two, 0.0, 1.0).is_err());
    }
}
