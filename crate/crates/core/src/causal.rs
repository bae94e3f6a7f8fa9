//! Measurement superoperators as orthogonal projector families, and a
//! signaling check deciding whether applying one lets Alice's local unitary
//! move Bob's marginal.
//!
//! The model: a bipartite measurement apparatus acts once, implementing
//! rho -> sum_a E_a rho E_a with {E_a} a complete family of orthogonal
//! projectors. The device is causal in the A-to-B direction when Bob's
//! reduced state after the action is independent of any unitary Alice
//! applied beforehand. A complete Bell measurement passes; keeping only the
//! singlet projector and lumping the rest into one outcome does not.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::Serialize;

use crate::gates::{check_unitary, hadamard, lift, random_unitary};
use crate::pauli::{PauliOp, PauliString};
use crate::states::{trace_distance, DensityMatrix, StateVector};
use crate::{Error, Result};

/// Complete family of mutually orthogonal projectors on a bipartite
/// register of `dims.0 * dims.1` dimensions.
#[derive(Debug, Clone)]
pub struct DecoherenceSuperop {
    projectors: Vec<DMatrix<Complex64>>,
    dims: (usize, usize),
}

impl DecoherenceSuperop {
    /// Validate and wrap a projector family: each E_a Hermitian and
    /// idempotent, mutually orthogonal, summing to the identity.
    pub fn new(projectors: Vec<DMatrix<Complex64>>, dims: (usize, usize)) -> Result<Self> {
        let dim = dims.0 * dims.1;
        if !dims.0.is_power_of_two() || !dims.1.is_power_of_two() || !(2..=16).contains(&dim) {
            return Err(Error::InvalidProjectorFamily(format!(
                "unsupported dims {:?}",
                dims
            )));
        }
        if projectors.is_empty() {
            return Err(Error::InvalidProjectorFamily("empty family".into()));
        }
        let tol = crate::VALIDATION_TOL;
        let mut sum = DMatrix::<Complex64>::zeros(dim, dim);
        for (a, e) in projectors.iter().enumerate() {
            if e.nrows() != dim || e.ncols() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: e.nrows(),
                });
            }
            let herm = (e - e.adjoint()).camax();
            if herm > tol {
                return Err(Error::InvalidProjectorFamily(format!(
                    "projector {a} not Hermitian (dev {herm:.3e})"
                )));
            }
            let idem = (e * e - e).camax();
            if idem > tol {
                return Err(Error::InvalidProjectorFamily(format!(
                    "projector {a} not idempotent (dev {idem:.3e})"
                )));
            }
            for (b, f) in projectors.iter().enumerate().skip(a + 1) {
                let cross = (e * f).camax();
                if cross > tol {
                    return Err(Error::InvalidProjectorFamily(format!(
                        "projectors {a} and {b} not orthogonal (dev {cross:.3e})"
                    )));
                }
            }
            sum += e;
        }
        let completeness = (&sum - DMatrix::<Complex64>::identity(dim, dim)).camax();
        if completeness > tol {
            return Err(Error::InvalidProjectorFamily(format!(
                "family does not resolve the identity (dev {completeness:.3e})"
            )));
        }
        Ok(DecoherenceSuperop { projectors, dims })
    }

    pub fn projectors(&self) -> &[DMatrix<Complex64>] {
        &self.projectors
    }

    pub fn dims(&self) -> (usize, usize) {
        self.dims
    }

    pub fn dim(&self) -> usize {
        self.dims.0 * self.dims.1
    }

    pub fn num_outcomes(&self) -> usize {
        self.projectors.len()
    }
}

/// Named constructions used by the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SuperopKind {
    /// Two outcomes on a pair: the singlet projector and its complement.
    Sorkin,
    /// All four Bell projectors.
    BellComplete,
}

/// Build one of the named two-qubit superoperators.
pub fn make_superop(kind: SuperopKind) -> DecoherenceSuperop {
    let bells = [
        StateVector::psi_minus(),
        StateVector::psi_plus(),
        StateVector::phi_plus(),
        StateVector::phi_minus(),
    ];
    let proj = |s: &StateVector| {
        let v = s.amplitudes();
        v * v.adjoint()
    };
    match kind {
        SuperopKind::Sorkin => {
            let e1 = proj(&bells[0]);
            let e2 = DMatrix::identity(4, 4) - &e1;
            DecoherenceSuperop::new(vec![e1, e2], (2, 2)).expect("valid by construction")
        }
        SuperopKind::BellComplete => {
            let ps = bells.iter().map(proj).collect();
            DecoherenceSuperop::new(ps, (2, 2)).expect("valid by construction")
        }
    }
}

/// Measurement of a tensor-product observable A (x) B: projectors onto the
/// eigenspaces of A (x) B, grouping eigenvalue products that coincide.
pub fn product_observable_superop(
    obs_a: &DMatrix<Complex64>,
    obs_b: &DMatrix<Complex64>,
) -> Result<DecoherenceSuperop> {
    let herm_a = (obs_a - obs_a.adjoint()).camax();
    let herm_b = (obs_b - obs_b.adjoint()).camax();
    if herm_a.max(herm_b) > 1e-10 {
        return Err(Error::NotHermitian(herm_a.max(herm_b)));
    }
    let ea = hermitian_eigenprojectors(obs_a);
    let eb = hermitian_eigenprojectors(obs_b);
    // Group (a_i, b_j) pairs whose products agree within tolerance.
    let mut groups: Vec<(f64, DMatrix<Complex64>)> = Vec::new();
    for (va, pa) in &ea {
        for (vb, pb) in &eb {
            let prod = va * vb;
            let joint = pa.kronecker(pb);
            match groups.iter_mut().find(|(v, _)| (*v - prod).abs() < 1e-9) {
                Some((_, p)) => *p += joint,
                None => groups.push((prod, joint)),
            }
        }
    }
    groups.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let projectors = groups.into_iter().map(|(_, p)| p).collect();
    DecoherenceSuperop::new(projectors, (obs_a.nrows(), obs_b.nrows()))
}

/// Eigenvalue/eigenprojector pairs of a Hermitian matrix, merging
/// eigenvalues closer than 1e-9.
fn hermitian_eigenprojectors(m: &DMatrix<Complex64>) -> Vec<(f64, DMatrix<Complex64>)> {
    let sym = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = sym.symmetric_eigen();
    let mut out: Vec<(f64, DMatrix<Complex64>)> = Vec::new();
    for (k, &val) in eig.eigenvalues.iter().enumerate() {
        let v = eig.eigenvectors.column(k);
        let p = v * v.adjoint();
        match out.iter_mut().find(|(e, _)| (*e - val).abs() < 1e-9) {
            Some((_, acc)) => *acc += p,
            None => out.push((val, p)),
        }
    }
    out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    out
}

/// Joint eigenspace projectors of a set of pairwise commuting Pauli strings:
/// products of (I +- P_i)/2 over all sign patterns, zero projectors dropped.
pub fn stabilizer_product_superop(
    strings: &[PauliString],
    dims: (usize, usize),
) -> Result<DecoherenceSuperop> {
    if strings.is_empty() {
        return Err(Error::InvalidProjectorFamily("no strings given".into()));
    }
    for (i, a) in strings.iter().enumerate() {
        for b in strings.iter().skip(i + 1) {
            if !a.commutes_with(b)? {
                return Err(Error::NonCommutingStrings(a.label(), b.label()));
            }
        }
    }
    let dim = 1 << strings[0].num_qubits();
    if dim != dims.0 * dims.1 {
        return Err(Error::DimensionMismatch {
            expected: dims.0 * dims.1,
            actual: dim,
        });
    }
    let mats: Vec<_> = strings.iter().map(|s| s.matrix()).collect();
    let id = DMatrix::<Complex64>::identity(dim, dim);
    let half = Complex64::new(0.5, 0.0);
    let mut projectors = Vec::new();
    for pattern in 0..(1usize << mats.len()) {
        let mut p = id.clone();
        for (i, m) in mats.iter().enumerate() {
            let sign = if (pattern >> i) & 1 == 0 { 1.0 } else { -1.0 };
            p = (&p * half) + (&p * m) * (half * Complex64::new(sign, 0.0));
        }
        if p.camax() > 1e-9 {
            projectors.push(p);
        }
    }
    DecoherenceSuperop::new(projectors, dims)
}

/// rho -> sum_a E_a rho E_a.
pub fn apply_superop(superop: &DecoherenceSuperop, rho: &DensityMatrix) -> Result<DensityMatrix> {
    if rho.dim() != superop.dim() {
        return Err(Error::DimensionMismatch {
            expected: superop.dim(),
            actual: rho.dim(),
        });
    }
    let mut out = DMatrix::zeros(rho.dim(), rho.dim());
    for e in superop.projectors() {
        out += e * rho.matrix() * e;
    }
    Ok(DensityMatrix::from_parts_unchecked(rho.num_qubits(), out))
}

/// Bob's marginal after Alice applies `u_a` locally and the apparatus acts:
/// tr_A[ sum_a E_a (U_A (x) I) rho (U_A (x) I)^dag E_a ].
pub fn bob_marginal(
    superop: &DecoherenceSuperop,
    rho: &DensityMatrix,
    u_a: &DMatrix<Complex64>,
) -> Result<DensityMatrix> {
    let (da, _db) = superop.dims();
    if u_a.nrows() != da {
        return Err(Error::DimensionMismatch {
            expected: da,
            actual: u_a.nrows(),
        });
    }
    check_unitary(u_a, 1e-10)?;
    let n = rho.num_qubits();
    let na = da.trailing_zeros() as usize;
    let alice: Vec<usize> = (0..na).collect();
    let bob: Vec<usize> = (na..n).collect();
    let lifted = lift(u_a, &alice, n)?;
    let rotated = rho.conjugate(&lifted)?;
    let decohered = apply_superop(superop, &rotated)?;
    decohered.partial_trace(&bob)
}

/// Symmetric two-qubit Pauli twirl: (1/4) sum_s (s (x) s) rho (s (x) s).
pub fn pauli_twirl(rho: &DensityMatrix) -> Result<DensityMatrix> {
    if rho.num_qubits() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            actual: rho.dim(),
        });
    }
    let quarter = Complex64::new(0.25, 0.0);
    let mut out = DMatrix::zeros(4, 4);
    for p in PauliOp::ALL {
        let ss = p.matrix().kronecker(&p.matrix());
        out += (&ss * rho.matrix() * &ss) * quarter;
    }
    Ok(DensityMatrix::from_parts_unchecked(2, out))
}

/// Most-signaling configuration found by a causality scan.
#[derive(Debug, Clone, Serialize)]
pub struct SignalingWitness {
    /// Which side applied the unitary: "alice" or "bob".
    pub direction: String,
    /// Input product state, as basis labels per qubit (0, 1, +, i).
    pub input_labels: Vec<String>,
    /// Label of the local unitary ("X0", "H", "random-7", ...).
    pub unitary_label: String,
    /// Trace distance between the remote marginals with and without it.
    pub deviation: f64,
    #[serde(skip)]
    pub input: Option<StateVector>,
    #[serde(skip)]
    pub unitary: Option<DMatrix<Complex64>>,
}

/// Outcome of the two-direction signaling scan.
#[derive(Debug, Clone, Serialize)]
pub struct CausalityReport {
    pub a_to_b_causal: bool,
    pub b_to_a_causal: bool,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub witness: Option<SignalingWitness>,
    pub inputs_scanned: usize,
    pub unitaries_scanned: usize,
}

/// Per-qubit states whose projectors span the single-qubit operator space.
fn spanning_kets() -> Vec<(String, StateVector)> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    vec![
        ("0".into(), StateVector::basis(1, 0).unwrap()),
        ("1".into(), StateVector::basis(1, 1).unwrap()),
        ("+".into(), StateVector::x_eigenstate(1)),
        (
            "i".into(),
            StateVector::new(
                1,
                vec![Complex64::new(h, 0.0), Complex64::new(0.0, h)],
            )
            .unwrap(),
        ),
    ]
}

/// All product states over `n` qubits built from the spanning kets.
fn spanning_inputs(n: usize) -> Vec<(Vec<String>, StateVector)> {
    let kets = spanning_kets();
    let mut out: Vec<(Vec<String>, StateVector)> = vec![];
    for combo in 0..(kets.len().pow(n as u32)) {
        let mut labels = Vec::with_capacity(n);
        let mut state: Option<StateVector> = None;
        let mut c = combo;
        for _ in 0..n {
            let (label, ket) = &kets[c % kets.len()];
            c /= kets.len();
            labels.push(label.clone());
            state = Some(match state {
                None => ket.clone(),
                Some(s) => s.tensor(ket).unwrap(),
            });
        }
        out.push((labels, state.unwrap()));
    }
    out
}

/// Local unitaries scanned on one side: the Pauli strings, Hadamards, and
/// 32 seeded pseudo-random unitaries.
fn scan_unitaries(n: usize, seed: u64) -> Vec<(String, DMatrix<Complex64>)> {
    let dim = 1 << n;
    let mut out: Vec<(String, DMatrix<Complex64>)> = Vec::new();
    for combo in 0..(4usize.pow(n as u32)) {
        let mut label = String::new();
        let mut m = DMatrix::identity(1, 1);
        let mut c = combo;
        for _ in 0..n {
            let p = PauliOp::ALL[c % 4];
            c /= 4;
            label.push(p.label());
            m = m.kronecker(&p.matrix());
        }
        out.push((label, m));
    }
    let h = hadamard();
    for q in 0..n {
        out.push((format!("H{q}"), lift(&h, &[q], n).unwrap()));
    }
    if n > 1 {
        let mut all_h = DMatrix::identity(1, 1);
        for _ in 0..n {
            all_h = all_h.kronecker(&h);
        }
        out.push(("H-all".into(), all_h));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    for k in 0..32 {
        out.push((format!("random-{k}"), random_unitary(dim, &mut rng)));
    }
    out
}

/// Scan both signaling directions of a superoperator over a complete product
/// basis of inputs and a spanning set of local unitaries. The verdicts are
/// exhaustive up to `tolerance` because the remote marginal is linear in the
/// input state.
pub fn causality_check(
    superop: &DecoherenceSuperop,
    tolerance: f64,
    seed: u64,
) -> Result<CausalityReport> {
    let (da, db) = superop.dims();
    let na = da.trailing_zeros() as usize;
    let nb = db.trailing_zeros() as usize;
    let n = na + nb;
    let inputs = spanning_inputs(n);

    let mut max_dev = 0.0_f64;
    let mut witness: Option<SignalingWitness> = None;
    let mut a_to_b = true;
    let mut b_to_a = true;
    let mut unitary_count = 0;

    for (direction, side_qubits, local_n, stream) in [
        ("alice", (0..na).collect::<Vec<_>>(), na, 0u64),
        ("bob", (na..n).collect::<Vec<_>>(), nb, 1u64),
    ] {
        if local_n == 0 {
            continue;
        }
        let remote: Vec<usize> = (0..n).filter(|q| !side_qubits.contains(q)).collect();
        let unitaries = scan_unitaries(local_n, seed.wrapping_add(stream));
        unitary_count = unitaries.len();
        for (labels, input) in &inputs {
            let rho = DensityMatrix::from_pure(input);
            let baseline = apply_superop(superop, &rho)?.partial_trace(&remote)?;
            for (ulabel, u) in &unitaries {
                let lifted = lift(u, &side_qubits, n)?;
                let rotated = rho.conjugate(&lifted)?;
                let marginal = apply_superop(superop, &rotated)?.partial_trace(&remote)?;
                let dev = trace_distance(&marginal, &baseline)?;
                if dev > max_dev {
                    max_dev = dev;
                    witness = Some(SignalingWitness {
                        direction: direction.into(),
                        input_labels: labels.clone(),
                        unitary_label: ulabel.clone(),
                        deviation: dev,
                        input: Some(input.clone()),
                        unitary: Some(u.clone()),
                    });
                }
                if dev > tolerance {
                    match direction {
                        "alice" => a_to_b = false,
                        _ => b_to_a = false,
                    }
                }
            }
        }
    }

    // A causal verdict keeps no witness; an acausal one always carries the
    // maximizing configuration.
    let witness = if a_to_b && b_to_a { None } else { witness };
    Ok(CausalityReport {
        a_to_b_causal: a_to_b,
        b_to_a_causal: b_to_a,
        max_deviation: max_dev,
        tolerance,
        witness,
        inputs_scanned: inputs.len(),
        unitaries_scanned: unitary_count,
    })
}

/// Recompute the marginal deviation for a stored witness configuration.
pub fn replay_witness(
    superop: &DecoherenceSuperop,
    witness: &SignalingWitness,
) -> Result<f64> {
    let (input, unitary) = match (&witness.input, &witness.unitary) {
        (Some(i), Some(u)) => (i, u),
        _ => {
            return Err(Error::InvalidProjectorFamily(
                "witness carries no replayable state".into(),
            ))
        }
    };
    let (da, db) = superop.dims();
    let na = da.trailing_zeros() as usize;
    let nb = db.trailing_zeros() as usize;
    let n = na + nb;
    let (side_qubits, remote): (Vec<usize>, Vec<usize>) = if witness.direction == "alice" {
        ((0..na).collect(), (na..n).collect())
    } else {
        ((na..n).collect(), (0..na).collect())
    };
    let rho = DensityMatrix::from_pure(input);
    let baseline = apply_superop(superop, &rho)?.partial_trace(&remote)?;
    let lifted = lift(unitary, &side_qubits, n)?;
    let marginal = apply_superop(superop, &rho.conjugate(&lifted)?)?.partial_trace(&remote)?;
    trace_distance(&marginal, &baseline)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_density(rng: &mut ChaCha12Rng, n: usize) -> DensityMatrix {
        let a = StateVector::random(n, rng).unwrap();
        let b = StateVector::random(n, rng).unwrap();
        let w: f64 = rng.gen_range(0.0..1.0);
        DensityMatrix::mixture(&[(w, a), (1.0 - w, b)]).unwrap()
    }

    #[test]
    fn superop_validation_rejects_incomplete_family() {
        let e1 = {
            let v = StateVector::psi_minus();
            let a = v.amplitudes();
            a * a.adjoint()
        };
        let err = DecoherenceSuperop::new(vec![e1], (2, 2));
        assert!(matches!(err, Err(Error::InvalidProjectorFamily(_))));
    }

    #[test]
    fn superop_validation_rejects_non_orthogonal() {
        let p = |s: &StateVector| {
            let a = s.amplitudes();
            a * a.adjoint()
        };
        let e1 = p(&StateVector::psi_minus());
        let e2 = DMatrix::identity(4, 4) - &e1 * Complex64::new(0.5, 0.0);
        let err = DecoherenceSuperop::new(vec![e1, e2], (2, 2));
        assert!(err.is_err());
    }

    #[test]
    fn apply_superop_preserves_trace_and_positivity() {
        let mut rng = ChaCha12Rng::seed_from_u64(21);
        let s = make_superop(SuperopKind::Sorkin);
        for _ in 0..5 {
            let rho = random_density(&mut rng, 2);
            let out = apply_superop(&s, &rho).unwrap();
            out.validate(1e-10).unwrap();
        }
    }

    #[test]
    fn apply_superop_idempotent() {
        let mut rng = ChaCha12Rng::seed_from_u64(22);
        let s = make_superop(SuperopKind::BellComplete);
        let rho = random_density(&mut rng, 2);
        let once = apply_superop(&s, &rho).unwrap();
        let twice = apply_superop(&s, &once).unwrap();
        assert!((once.matrix() - twice.matrix()).camax() < 1e-12);
    }

    #[test]
    fn sorkin_on_00_keeps_state() {
        let s = make_superop(SuperopKind::Sorkin);
        let rho = DensityMatrix::from_pure(&StateVector::basis(2, 0).unwrap());
        let out = apply_superop(&s, &rho).unwrap();
        // |00> is orthogonal to the singlet, so outcome 2 fires with
        // probability 1 and the state is untouched.
        assert!((out.matrix() - rho.matrix()).camax() < 1e-14);
    }

    #[test]
    fn sorkin_witness_values_match_hand_computation() {
        let s = make_superop(SuperopKind::Sorkin);
        let rho = DensityMatrix::from_pure(&StateVector::basis(2, 0).unwrap());
        let id = DMatrix::identity(2, 2);
        let x = PauliOp::X.matrix();
        let m0 = bob_marginal(&s, &rho, &id).unwrap();
        let m1 = bob_marginal(&s, &rho, &x).unwrap();
        // Untouched: Bob still holds |0>. After Alice's flip: I/2.
        let zero = DensityMatrix::from_pure(&StateVector::basis(1, 0).unwrap());
        let mixed = DensityMatrix::maximally_mixed(1).unwrap();
        assert!((m0.matrix() - zero.matrix()).camax() < 1e-14);
        assert!((m1.matrix() - mixed.matrix()).camax() < 1e-14);
        assert!((trace_distance(&m0, &m1).unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn sorkin_flagged_acausal_with_half_deviation() {
        let s = make_superop(SuperopKind::Sorkin);
        let report = causality_check(&s, 1e-9, 1234).unwrap();
        assert!(!report.a_to_b_causal);
        assert!(!report.b_to_a_causal);
        assert!((report.max_deviation - 0.5).abs() < 1e-12);
        let w = report.witness.expect("acausal verdict carries witness");
        assert!(w.deviation > report.tolerance);
        // Replay reproduces the recorded deviation exactly.
        let dev = replay_witness(&s, &w).unwrap();
        assert!((dev - w.deviation).abs() < 1e-12);
    }

    #[test]
    fn complete_bell_measurement_is_causal() {
        let s = make_superop(SuperopKind::BellComplete);
        let report = causality_check(&s, 1e-10, 99).unwrap();
        assert!(report.a_to_b_causal && report.b_to_a_causal);
        assert!(report.max_deviation < 1e-10);
        assert!(report.witness.is_none());
    }

    #[test]
    fn zz_parity_measurement_is_causal() {
        let z = PauliOp::Z.matrix();
        let s = product_observable_superop(&z, &z).unwrap();
        // Degenerate eigenvalue products merge into two rank-2 projectors.
        assert_eq!(s.num_outcomes(), 2);
        let report = causality_check(&s, 1e-10, 7).unwrap();
        assert!(report.a_to_b_causal && report.b_to_a_causal);
    }

    #[test]
    fn random_product_observables_are_causal() {
        let mut rng = ChaCha12Rng::seed_from_u64(31);
        for _ in 0..20 {
            let mk = |rng: &mut ChaCha12Rng| {
                let g = DMatrix::from_fn(2, 2, |_, _| {
                    Complex64::new(crate::states::gaussian(rng), crate::states::gaussian(rng))
                });
                (&g + g.adjoint()) * Complex64::new(0.5, 0.0)
            };
            let a = mk(&mut rng);
            let b = mk(&mut rng);
            let s = product_observable_superop(&a, &b).unwrap();
            let report = causality_check(&s, 1e-10, 5).unwrap();
            assert!(
                report.a_to_b_causal && report.b_to_a_causal,
                "deviation {:.3e}",
                report.max_deviation
            );
        }
    }

    #[test]
    fn stabilizer_products_give_bell_projectors() {
        let xx = PauliString(vec![PauliOp::X, PauliOp::X]);
        let zz = PauliString(vec![PauliOp::Z, PauliOp::Z]);
        let s = stabilizer_product_superop(&[xx, zz], (2, 2)).unwrap();
        assert_eq!(s.num_outcomes(), 4);
        let bell = make_superop(SuperopKind::BellComplete);
        // Same family up to ordering: each projector matches one Bell
        // projector.
        for p in s.projectors() {
            let matched = bell
                .projectors()
                .iter()
                .any(|q| (p - q).camax() < 1e-12);
            assert!(matched);
        }
    }

    #[test]
    fn non_commuting_strings_rejected() {
        let xx = PauliString(vec![PauliOp::X, PauliOp::X]);
        let zi = PauliString(vec![PauliOp::Z, PauliOp::I]);
        assert!(matches!(
            stabilizer_product_superop(&[xx, zi], (2, 2)),
            Err(Error::NonCommutingStrings(_, _))
        ));
    }

    #[test]
    fn twirl_equals_bell_basis_decoherence() {
        let mut rng = ChaCha12Rng::seed_from_u64(77);
        let bell = make_superop(SuperopKind::BellComplete);
        for _ in 0..100 {
            let rho = random_density(&mut rng, 2);
            let t = pauli_twirl(&rho).unwrap();
            let d = apply_superop(&bell, &rho).unwrap();
            assert!((t.matrix() - d.matrix()).camax() < 1e-12);
        }
    }

    #[test]
    fn twirl_commutes_with_bell_projection() {
        let mut rng = ChaCha12Rng::seed_from_u64(78);
        let bell = make_superop(SuperopKind::BellComplete);
        let rho = random_density(&mut rng, 2);
        let a = apply_superop(&bell, &pauli_twirl(&rho).unwrap()).unwrap();
        let b = pauli_twirl(&apply_superop(&bell, &rho).unwrap()).unwrap();
        assert!((a.matrix() - b.matrix()).camax() < 1e-12);
    }

    #[test]
    fn verdict_invariant_under_projector_reordering() {
        let s = make_superop(SuperopKind::Sorkin);
        let reordered = DecoherenceSuperop::new(
            vec![s.projectors()[1].clone(), s.projectors()[0].clone()],
            (2, 2),
        )
        .unwrap();
        let r1 = causality_check(&s, 1e-9, 42).unwrap();
        let r2 = causality_check(&reordered, 1e-9, 42).unwrap();
        assert_eq!(r1.a_to_b_causal, r2.a_to_b_causal);
        assert!((r1.max_deviation - r2.max_deviation).abs() < 1e-12);
    }

    #[test]
    fn bob_marginal_checks_unitarity() {
        let s = make_superop(SuperopKind::Sorkin);
        let rho = DensityMatrix::maximally_mixed(2).unwrap();
        let not_u = DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(1.0, 0.0),
                Complex64::new(1.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(1.0, 0.0),
            ],
        );
        assert!(matches!(
            bob_marginal(&s, &rho, &not_u),
            Err(Error::NotUnitary(_))
        ));
    }
}
