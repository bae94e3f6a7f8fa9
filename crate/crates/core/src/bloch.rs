//! Bloch-vector picture of a single qubit precessing at frequency omega
//! about z while coupled to Markovian noise, evolved both in closed form
//! and by fixed-step RK4 integration of the Bloch equations.
//!
//! Noise conventions: the generator is gamma (S rho S - rho) with S = Z
//! (dephasing) or S = X (bit flip), so the damped Bloch components relax
//! at rate 2 gamma.

use serde::Serialize;

use crate::states::{DensityMatrix, StateVector};
use crate::{Error, Result};
use nalgebra::DMatrix;
use num_complex::Complex64;

/// Bloch components of a single-qubit state rho = (I + x X + y Y + z Z)/2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

/// Which Pauli couples to the bath.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum NoiseKind {
    Dephasing,
    BitFlip,
}

impl BlochVector {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        BlochVector { x, y, z }
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    /// Extract (x, y, z) from a single-qubit density matrix.
    pub fn from_density(rho: &DensityMatrix) -> Result<Self> {
        if rho.num_qubits() != 1 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                actual: rho.dim(),
            });
        }
        let m = rho.matrix();
        Ok(BlochVector {
            x: 2.0 * m[(0, 1)].re,
            y: -2.0 * m[(0, 1)].im,
            z: m[(0, 0)].re - m[(1, 1)].re,
        })
    }

    pub fn from_pure(psi: &StateVector) -> Result<Self> {
        Self::from_density(&DensityMatrix::from_pure(psi))
    }

    /// Rebuild the density matrix; requires |b| <= 1.
    pub fn to_density(&self) -> Result<DensityMatrix> {
        let n = self.norm();
        if n > 1.0 + 1e-9 {
            return Err(Error::NotPositive((1.0 - n) / 2.0));
        }
        let m = DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new((1.0 + self.z) / 2.0, 0.0),
                Complex64::new(self.x / 2.0, -self.y / 2.0),
                Complex64::new(self.x / 2.0, self.y / 2.0),
                Complex64::new((1.0 - self.z) / 2.0, 0.0),
            ],
        );
        DensityMatrix::from_matrix(1, m)
    }
}

fn check_rates(omega: f64, gamma: f64) -> Result<()> {
    if !gamma.is_finite() || gamma < 0.0 {
        return Err(Error::ParameterOutOfRange {
            name: "gamma",
            value: gamma,
            range: ">= 0",
        });
    }
    if !omega.is_finite() {
        return Err(Error::ParameterOutOfRange {
            name: "omega",
            value: omega,
            range: "finite",
        });
    }
    Ok(())
}

/// Right-hand side of the Bloch equations.
pub fn bloch_derivative(b: BlochVector, omega: f64, gamma: f64, kind: NoiseKind) -> BlochVector {
    match kind {
        NoiseKind::Dephasing => BlochVector {
            x: -omega * b.y - 2.0 * gamma * b.x,
            y: omega * b.x - 2.0 * gamma * b.y,
            z: 0.0,
        },
        NoiseKind::BitFlip => BlochVector {
            x: -omega * b.y,
            y: omega * b.x - 2.0 * gamma * b.y,
            z: -2.0 * gamma * b.z,
        },
    }
}

/// exp(t M) for M = [[0, -omega], [omega, -2 gamma]], the transverse block
/// of the bit-flip generator. Eigenvalues -gamma +- mu with
/// mu^2 = gamma^2 - omega^2; the over/underdamped branches share one form
/// through cosh/cos.
fn transverse_bitflip_propagator(omega: f64, gamma: f64, t: f64) -> [[f64; 2]; 2] {
    let disc = gamma * gamma - omega * omega;
    let (c, s_over_mu) = if disc == 0.0 {
        (1.0, t)
    } else if disc > 0.0 {
        let mu = disc.sqrt();
        ((mu * t).cosh(), (mu * t).sinh() / mu)
    } else {
        let nu = (-disc).sqrt();
        ((nu * t).cos(), (nu * t).sin() / nu)
    };
    let e = (-gamma * t).exp();
    // M + gamma I = [[gamma, -omega], [omega, -gamma]].
    [
        [e * (c + s_over_mu * gamma), -e * s_over_mu * omega],
        [e * s_over_mu * omega, e * (c - s_over_mu * gamma)],
    ]
}

/// Closed-form solution of the Bloch equations at time `t`.
pub fn evolve_analytic(
    b0: BlochVector,
    omega: f64,
    gamma: f64,
    kind: NoiseKind,
    t: f64,
) -> Result<BlochVector> {
    check_rates(omega, gamma)?;
    match kind {
        NoiseKind::Dephasing => {
            // Transverse plane: rigid rotation damped by e^{-2 gamma t}.
            let e = (-2.0 * gamma * t).exp();
            let (s, c) = (omega * t).sin_cos();
            Ok(BlochVector {
                x: e * (c * b0.x - s * b0.y),
                y: e * (s * b0.x + c * b0.y),
                z: b0.z,
            })
        }
        NoiseKind::BitFlip => {
            let m = transverse_bitflip_propagator(omega, gamma, t);
            Ok(BlochVector {
                x: m[0][0] * b0.x + m[0][1] * b0.y,
                y: m[1][0] * b0.x + m[1][1] * b0.y,
                z: b0.z * (-2.0 * gamma * t).exp(),
            })
        }
    }
}

/// One classic RK4 step.
fn rk4_step(b: BlochVector, omega: f64, gamma: f64, kind: NoiseKind, dt: f64) -> BlochVector {
    let f = |s: BlochVector| bloch_derivative(s, omega, gamma, kind);
    let add = |a: BlochVector, k: BlochVector, h: f64| BlochVector {
        x: a.x + h * k.x,
        y: a.y + h * k.y,
        z: a.z + h * k.z,
    };
    let k1 = f(b);
    let k2 = f(add(b, k1, dt / 2.0));
    let k3 = f(add(b, k2, dt / 2.0));
    let k4 = f(add(b, k3, dt));
    BlochVector {
        x: b.x + dt / 6.0 * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x),
        y: b.y + dt / 6.0 * (k1.y + 2.0 * k2.y + 2.0 * k3.y + k4.y),
        z: b.z + dt / 6.0 * (k1.z + 2.0 * k2.z + 2.0 * k3.z + k4.z),
    }
}

/// Fixed-step RK4 trajectory: `num_steps + 1` samples of (t, b) covering
/// [0, t_final]. Fails if the integration leaves the Bloch ball by more
/// than 1e-6, which a valid noise model never does.
pub fn trajectory_rk4(
    b0: BlochVector,
    omega: f64,
    gamma: f64,
    kind: NoiseKind,
    t_final: f64,
    num_steps: usize,
) -> Result<Vec<(f64, BlochVector)>> {
    check_rates(omega, gamma)?;
    if num_steps == 0 || t_final < 0.0 {
        return Err(Error::ParameterOutOfRange {
            name: "t_final",
            value: t_final,
            range: ">= 0 with num_steps > 0",
        });
    }
    let dt = t_final / num_steps as f64;
    let mut out = Vec::with_capacity(num_steps + 1);
    let mut b = b0;
    out.push((0.0, b));
    for step in 1..=num_steps {
        b = rk4_step(b, omega, gamma, kind, dt);
        let n = b.norm();
        if !n.is_finite() || n > 1.0 + 1e-6 {
            return Err(Error::IntegrationDiverged { step, norm: n });
        }
        out.push((step as f64 * dt, b));
    }
    Ok(out)
}

/// Final state of `trajectory_rk4`.
pub fn evolve_rk4(
    b0: BlochVector,
    omega: f64,
    gamma: f64,
    kind: NoiseKind,
    t_final: f64,
    num_steps: usize,
) -> Result<BlochVector> {
    Ok(trajectory_rk4(b0, omega, gamma, kind, t_final, num_steps)?
        .last()
        .expect("trajectory is nonempty")
        .1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::dephasing;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn density_round_trip() {
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        for _ in 0..10 {
            let psi = StateVector::random(1, &mut rng).unwrap();
            let rho = DensityMatrix::from_pure(&psi);
            let b = BlochVector::from_density(&rho).unwrap();
            assert!((b.norm() - 1.0).abs() < 1e-12);
            let back = b.to_density().unwrap();
            assert!((back.matrix() - rho.matrix()).camax() < 1e-12);
        }
    }

    #[test]
    fn to_density_rejects_outside_ball() {
        let b = BlochVector::new(0.9, 0.9, 0.0);
        assert!(b.to_density().is_err());
    }

    #[test]
    fn zero_noise_is_pure_precession() {
        let b0 = BlochVector::new(1.0, 0.0, 0.3);
        let t = 0.77;
        let omega = 2.0;
        for kind in [NoiseKind::Dephasing, NoiseKind::BitFlip] {
            let b = evolve_analytic(b0, omega, 0.0, kind, t).unwrap();
            assert!((b.x - (omega * t).cos()).abs() < 1e-14);
            assert!((b.y - (omega * t).sin()).abs() < 1e-14);
            assert!((b.z - 0.3).abs() < 1e-14);
        }
    }

    #[test]
    fn dephasing_transverse_decay_rate() {
        let b0 = BlochVector::new(1.0, 0.0, 0.0);
        let (omega, gamma, t) = (1.3, 0.4, 2.0);
        let b = evolve_analytic(b0, omega, gamma, NoiseKind::Dephasing, t).unwrap();
        let r = (b.x * b.x + b.y * b.y).sqrt();
        assert!((r - (-2.0 * gamma * t).exp()).abs() < 1e-14);
    }

    #[test]
    fn bitflip_longitudinal_decay_and_x_freeze_at_zero_omega() {
        let b0 = BlochVector::new(0.6, 0.0, 0.8);
        let (gamma, t) = (0.5, 3.0);
        let b = evolve_analytic(b0, 0.0, gamma, NoiseKind::BitFlip, t).unwrap();
        assert!((b.x - 0.6).abs() < 1e-14);
        assert!((b.z - 0.8 * (-2.0 * gamma * t).exp()).abs() < 1e-14);
    }

    #[test]
    fn rk4_matches_analytic_both_kinds_and_damping_regimes() {
        let b0 = BlochVector::new(0.7, -0.2, 0.5);
        let cases: [(f64, f64, NoiseKind); 4] = [
            (1.0, 0.1, NoiseKind::Dephasing),
            (1.0, 0.1, NoiseKind::BitFlip),  // underdamped
            (0.2, 1.5, NoiseKind::BitFlip),  // overdamped
            (1.0, 1.0, NoiseKind::BitFlip),  // critically damped
        ];
        for (omega, gamma, kind) in cases {
            let t = 4.0;
            let steps = (t * gamma / 1e-3).ceil() as usize;
            let num = evolve_rk4(b0, omega, gamma, kind, t, steps).unwrap();
            let exact = evolve_analytic(b0, omega, gamma, kind, t).unwrap();
            let err = ((num.x - exact.x).powi(2)
                + (num.y - exact.y).powi(2)
                + (num.z - exact.z).powi(2))
            .sqrt();
            assert!(err < 1e-9, "{kind:?} omega={omega} gamma={gamma}: {err:.3e}");
        }
    }

    #[test]
    fn bloch_norm_never_grows_along_trajectory() {
        let b0 = BlochVector::new(0.0, 1.0, 0.0);
        let traj =
            trajectory_rk4(b0, 2.0, 0.3, NoiseKind::BitFlip, 10.0, 4000).unwrap();
        let mut prev = f64::INFINITY;
        for (_, b) in traj {
            let n = b.norm();
            assert!(n <= prev + 1e-12);
            prev = n;
        }
    }

    #[test]
    fn master_equation_consistent_with_kraus_episode() {
        // At omega = 0 a dephasing episode of duration t equals the channel
        // with coherence factor e^{-2 gamma t}.
        let (gamma, t) = (0.35, 1.4);
        let psi = StateVector::x_eigenstate(1);
        let b0 = BlochVector::from_pure(&psi).unwrap();
        let evolved = evolve_analytic(b0, 0.0, gamma, NoiseKind::Dephasing, t).unwrap();
        let channel = dephasing((-2.0 * gamma * t).exp()).unwrap();
        let rho = channel
            .apply(&DensityMatrix::from_pure(&psi), &[0])
            .unwrap();
        let b_chan = BlochVector::from_density(&rho).unwrap();
        assert!((evolved.x - b_chan.x).abs() < 1e-14);
        assert!((evolved.y - b_chan.y).abs() < 1e-14);
    }

    #[test]
    fn trajectory_rejects_bad_arguments() {
        let b0 = BlochVector::new(0.0, 0.0, 1.0);
        assert!(trajectory_rk4(b0, 1.0, 0.1, NoiseKind::Dephasing, 1.0, 0).is_err());
        assert!(trajectory_rk4(b0, 1.0, -0.1, NoiseKind::Dephasing, 1.0, 10).is_err());
    }
}
