//! The classical-independence witness and its conditional-CHSH decomposition.
//!
//! The witness is
//!
//! ```text
//! I = ⟨A0 (B0 − B1) E0 + A1 (B0 + B1) E1⟩,
//! E0 = N0 − N1 − N2 + N3,   E1 = N0 + N1 − N2 − N3.
//! ```
//!
//! Grouping by Eve's outcome `e = 2i + j` gives `I = Σ_{ij} ⟨I_CHSH^{ij} N_{ij}⟩`
//! with
//!
//! ```text
//! I_CHSH^{ij} = (−1)^{i+j} A0 (B0 − B1) + (−1)^i A1 (B0 + B1).
//! ```
//!
//! The `(−1)^i` on the second term is what makes the decomposition sum back
//! to `E1`; without it the second term would pair with the identity.

use serde::{Deserialize, Serialize};

use crate::correlations::expectation;
use crate::error::Result;
use crate::linalg::{hermitian_eig, kron, ComplexMatrix};
use crate::scenario::{CorrelationTable, QuantumStrategy, EVE_OUTCOMES};

/// Maximum of the witness over classically independent correlations.
pub const CLASSICAL_BOUND: f64 = 2.0;

/// Maximum of the witness in quantum theory, `2√2`.
pub const QUANTUM_BOUND: f64 = 2.0 * std::f64::consts::SQRT_2;

/// Coefficients of Eve's outcomes in `E0`.
pub const E0_COEFFS: [f64; EVE_OUTCOMES] = [1.0, -1.0, -1.0, 1.0];
/// Coefficients of Eve's outcomes in `E1`.
pub const E1_COEFFS: [f64; EVE_OUTCOMES] = [1.0, 1.0, -1.0, -1.0];

/// Sign of the `A0 (B0 − B1)` term in `I_CHSH^{ij}`.
pub fn a0_sign(i: usize, j: usize) -> f64 {
    if (i + j).is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Sign of the `A1 (B0 + B1)` term in `I_CHSH^{ij}`.
pub fn a1_sign(i: usize, _j: usize) -> f64 {
    if i.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// The per-outcome signs, recorded alongside every evaluation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignConvention {
    /// `(−1)^{i+j}`, indexed `[i][j]`.
    pub a0_term: [[i8; 2]; 2],
    /// `(−1)^i`, indexed `[i][j]`.
    pub a1_term: [[i8; 2]; 2],
}

impl SignConvention {
    pub fn current() -> Self {
        let grid = |f: fn(usize, usize) -> f64| [[f(0, 0) as i8, f(0, 1) as i8], [f(1, 0) as i8, f(1, 1) as i8]];
        SignConvention {
            a0_term: grid(a0_sign),
            a1_term: grid(a1_sign),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessBreakdown {
    pub total: f64,
    /// `⟨I_CHSH^{ij} N_{ij}⟩`, indexed `[i][j]`.
    pub conditional_terms: [[f64; 2]; 2],
    pub eve_sign_convention: SignConvention,
}

/// Evaluates the witness through its conditional-CHSH decomposition.
pub fn eval_witness(table: &CorrelationTable) -> WitnessBreakdown {
    let mut terms = [[0.0; 2]; 2];
    for (i, row) in terms.iter_mut().enumerate() {
        for (j, term) in row.iter_mut().enumerate() {
            let e = 2 * i + j;
            let chsh0 = expectation(table, 0, 0, e) - expectation(table, 0, 1, e);
            let chsh1 = expectation(table, 1, 0, e) + expectation(table, 1, 1, e);
            *term = a0_sign(i, j) * chsh0 + a1_sign(i, j) * chsh1;
        }
    }
    WitnessBreakdown {
        total: terms.iter().flatten().sum(),
        conditional_terms: terms,
        eve_sign_convention: SignConvention::current(),
    }
}

/// Evaluates the witness directly from `E0` and `E1`, without the decomposition.
pub fn eval_witness_direct(table: &CorrelationTable) -> f64 {
    let with = |x: usize, y: usize, coeffs: &[f64; EVE_OUTCOMES]| -> f64 {
        (0..EVE_OUTCOMES).map(|e| coeffs[e] * expectation(table, x, y, e)).sum()
    };
    with(0, 0, &E0_COEFFS) - with(0, 1, &E0_COEFFS) + with(1, 0, &E1_COEFFS) + with(1, 1, &E1_COEFFS)
}

/// `I_CHSH^{ij}` on `A ⊗ B` from Alice's and Bob's observables.
pub fn chsh_operator(i: usize, j: usize, alice: &[ComplexMatrix; 2], bob: &[ComplexMatrix; 2]) -> ComplexMatrix {
    assert!(i < 2 && j < 2, "conditional index out of range");
    let diff = &bob[0] - &bob[1];
    let sum = &bob[0] + &bob[1];
    let t0 = kron(&alice[0], &diff).scale_real(a0_sign(i, j));
    let t1 = kron(&alice[1], &sum).scale_real(a1_sign(i, j));
    &t0 + &t1
}

pub fn conditional_chsh_operator(i: usize, j: usize, strategy: &QuantumStrategy) -> ComplexMatrix {
    chsh_operator(i, j, strategy.alice_observables(), strategy.bob_observables())
}

/// Full witness operator `Σ_{ij} I_CHSH^{ij} ⊗ N_{ij}` on `(A, B, Ā, B̄)`.
pub fn witness_operator(strategy: &QuantumStrategy) -> ComplexMatrix {
    witness_operator_from(
        strategy.alice_observables(),
        strategy.bob_observables(),
        strategy.eve_povm(),
    )
}

pub fn witness_operator_from(
    alice: &[ComplexMatrix; 2],
    bob: &[ComplexMatrix; 2],
    eve: &[ComplexMatrix; EVE_OUTCOMES],
) -> ComplexMatrix {
    let mut w: Option<ComplexMatrix> = None;
    for (e, n) in eve.iter().enumerate() {
        let term = kron(&chsh_operator(e / 2, e % 2, alice, bob), n);
        match &mut w {
            Some(acc) => *acc += &term,
            None => w = Some(term),
        }
    }
    w.expect("four outcomes")
}

/// Outcome of [`quantum_bound_certificate`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundCertificate {
    pub holds: bool,
    /// Smallest eigenvalue of `2√2·𝟙 − I_CHSH^{ij}`, indexed `[i][j]`.
    pub min_eigenvalues: [[f64; 2]; 2],
    pub tolerance: f64,
}

/// Checks `2√2·𝟙 − I_CHSH^{ij} ⪰ 0` for all four `(i, j)`.
///
/// Since the `N_{ij}` are positive and sum to the identity, this bounds the
/// witness by `2√2` for every state and every Eve measurement.
pub fn quantum_bound_certificate(strategy: &QuantumStrategy, tol: f64) -> Result<BoundCertificate> {
    certify_observables(strategy.alice_observables(), strategy.bob_observables(), tol)
}

pub fn certify_observables(alice: &[ComplexMatrix; 2], bob: &[ComplexMatrix; 2], tol: f64) -> Result<BoundCertificate> {
    let mut mins = [[0.0; 2]; 2];
    for (i, row) in mins.iter_mut().enumerate() {
        for (j, slot) in row.iter_mut().enumerate() {
            let op = chsh_operator(i, j, alice, bob);
            let n = op.rows();
            let gap = &ComplexMatrix::identity(n).scale_real(QUANTUM_BOUND) - &op;
            *slot = hermitian_eig(&gap.hermitian_part())?.min();
        }
    }
    Ok(BoundCertificate {
        holds: mins.iter().flatten().all(|&m| m >= -tol),
        min_eigenvalues: mins,
        tolerance: tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::bit_example_model;
    use crate::linalg::{pauli, SubsystemDims};
    use crate::random;
    use crate::scenario::{
        bell_state, born_table, joint_state, random_strategy, reference_observables, reference_strategy,
    };
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn reference_value_is_two_root_two() {
        let w = eval_witness(&born_table(&reference_strategy()).unwrap());
        assert!((w.total - QUANTUM_BOUND).abs() < 1e-12);
        assert!((w.total - 2.8284271).abs() < 1e-7);
        for t in w.conditional_terms.iter().flatten() {
            assert!((t - QUANTUM_BOUND / 4.0).abs() < 1e-10);
        }
    }

    #[test]
    fn uniform_and_bit_example_give_zero() {
        assert_eq!(eval_witness(&CorrelationTable::uniform()).total, 0.0);
        let (_, t) = bit_example_model();
        assert_eq!(eval_witness(&t).total, 0.0);
        assert_eq!(eval_witness_direct(&t), 0.0);
    }

    #[test]
    fn sign_convention_record() {
        let s = SignConvention::current();
        assert_eq!(s.a0_term, [[1, -1], [-1, 1]]);
        assert_eq!(s.a1_term, [[1, 1], [-1, -1]]);
        // Summing the per-outcome signs reproduces E0 and E1.
        for e in 0..4 {
            assert_eq!(a0_sign(e / 2, e % 2), E0_COEFFS[e]);
            assert_eq!(a1_sign(e / 2, e % 2), E1_COEFFS[e]);
        }
    }

    #[test]
    fn conditional_operator_spectrum() {
        let s = reference_strategy();
        for i in 0..2 {
            for j in 0..2 {
                let op = conditional_chsh_operator(i, j, &s);
                let e = hermitian_eig(&op).unwrap();
                assert!((e.max() - QUANTUM_BOUND).abs() < 1e-12);
                assert!((e.min() + QUANTUM_BOUND).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn bell_states_saturate_their_conditional_operator() {
        let s = reference_strategy();
        for i in 0..2 {
            for j in 0..2 {
                let v = conditional_chsh_operator(i, j, &s).expectation(&bell_state(i, j));
                assert!((v.re - QUANTUM_BOUND).abs() < 1e-10, "({i},{j}) gave {v}");
            }
        }
    }

    #[test]
    fn commuting_observables_give_classical_operator() {
        let z = pauli::z();
        let alice = [z.clone(), z.clone()];
        let bob = [z.clone(), z.clone()];
        for i in 0..2 {
            for j in 0..2 {
                let op = chsh_operator(i, j, &alice, &bob);
                let expected = kron(&z, &z).scale_real(2.0 * a1_sign(i, j));
                assert!(op.max_abs_diff(&expected) < 1e-15);
                let e = hermitian_eig(&op).unwrap();
                assert!((e.max().abs().max(e.min().abs()) - 2.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn certificate_examples() {
        let c = quantum_bound_certificate(&reference_strategy(), 1e-9).unwrap();
        assert!(c.holds);
        for m in c.min_eigenvalues.iter().flatten() {
            assert!(m.abs() < 1e-12);
        }

        let mut rng = ChaCha8Rng::seed_from_u64(100);
        for _ in 0..100 {
            let alice = [0, 1].map(|_| random::dichotomic_observable(&mut rng, 2));
            let bob = [0, 1].map(|_| random::dichotomic_observable(&mut rng, 2));
            assert!(certify_observables(&alice, &bob, 1e-9).unwrap().holds);
        }

        let (mut alice, bob) = reference_observables();
        alice[0] = pauli::z().scale_real(0.5);
        let c = certify_observables(&alice, &bob, 1e-9).unwrap();
        assert!(c.holds);
        assert!(c.min_eigenvalues.iter().flatten().all(|&m| m > 1e-3));
    }

    #[test]
    fn operator_route_matches_table_route() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..50 {
            let s = random_strategy(&mut rng, &SubsystemDims::qubits(4)).unwrap();
            let via_table = eval_witness(&born_table(&s).unwrap()).total;
            let via_operator = witness_operator(&s).trace_product(&joint_state(&s).unwrap()).re;
            assert!((via_table - via_operator).abs() < 1e-12);
        }
    }

    fn random_table(rng: &mut ChaCha8Rng) -> CorrelationTable {
        // Arbitrary normalized (possibly signaling) table.
        let mut t = CorrelationTable::from_fn(|_, _, _, _, _| rng.gen::<f64>());
        for x in 0..2 {
            for y in 0..2 {
                let total: f64 = t.eve_marginal(x, y).iter().sum();
                for a in 0..2 {
                    for b in 0..2 {
                        for e in 0..4 {
                            t.set(x, y, a, b, e, t.get(x, y, a, b, e) / total);
                        }
                    }
                }
            }
        }
        t
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(500))]
        #[test]
        fn decomposition_matches_direct_evaluation(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let t = random_table(&mut rng);
            let w = eval_witness(&t);
            let sum: f64 = w.conditional_terms.iter().flatten().sum();
            prop_assert!((w.total - sum).abs() <= 1e-12);
            prop_assert!((w.total - eval_witness_direct(&t)).abs() <= 1e-12);
        }

        #[test]
        fn quantum_tables_respect_the_ceiling(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = random_strategy(&mut rng, &SubsystemDims::qubits(4)).unwrap();
            let w = eval_witness(&born_table(&s).unwrap());
            prop_assert!(w.total.abs() <= QUANTUM_BOUND + 1e-9);
        }

        #[test]
        fn witness_is_linear(seed in any::<u64>(), alpha in 0.0f64..=1.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let t1 = random_table(&mut rng);
            let t2 = random_table(&mut rng);
            let lhs = eval_witness(&t1.mix(&t2, alpha)).total;
            let rhs = alpha * eval_witness(&t1).total + (1.0 - alpha) * eval_witness(&t2).total;
            prop_assert!((lhs - rhs).abs() <= 1e-12);
        }
    }
}
