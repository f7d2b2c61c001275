//! Classically independent hidden-variable models and the classical bound.
//!
//! A model assigns to each hidden variable `λ` an outcome for Eve and
//! response functions for Alice and Bob that may depend on their own input
//! and on Eve's outcome, but not on each other:
//!
//! ```text
//! p(a,b,e|x,y) = Σ_λ p(λ) p(e|λ) p(a|x,e,λ) p(b|y,e,λ).
//! ```
//!
//! The set of such tables is a polytope whose vertices are deterministic
//! strategies. For a deterministic `λ` only the realized `e` ever matters,
//! so the 4·2⁸·2⁸ full strategies collapse onto 4·2²·2² = 64 distinct
//! vertices; [`exhaustive_classical_bound`] checks that reduction by brute
//! force.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correlations::{check_operational_independence, DEFAULT_OI_TOLERANCE};
use crate::error::{Error, Result};
use crate::linalg::{pauli, ComplexMatrix, SubsystemDims};
use crate::scenario::{CorrelationTable, QuantumStrategy, EVE_OUTCOMES};
use crate::witness::eval_witness;

/// A deterministic hidden-variable assignment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DeterministicStrategy {
    pub eve_outcome: usize,
    /// Alice's output, indexed `[x][e]`.
    pub alice_response: [[u8; EVE_OUTCOMES]; 2],
    /// Bob's output, indexed `[y][e]`.
    pub bob_response: [[u8; EVE_OUTCOMES]; 2],
}

impl DeterministicStrategy {
    pub fn alice(&self, x: usize) -> usize {
        self.alice_response[x][self.eve_outcome] as usize
    }

    pub fn bob(&self, y: usize) -> usize {
        self.bob_response[y][self.eve_outcome] as usize
    }

    /// Responses ignore Eve's outcome.
    pub fn is_outcome_independent(&self) -> bool {
        self.alice_response
            .iter()
            .chain(&self.bob_response)
            .all(|row| row.iter().all(|&v| v == row[0]))
    }

    fn validate(&self) -> Result<()> {
        if self.eve_outcome >= EVE_OUTCOMES {
            return Err(Error::Validation(format!(
                "eve outcome {} out of range",
                self.eve_outcome
            )));
        }
        let bits = self.alice_response.iter().chain(&self.bob_response).flatten();
        if bits.into_iter().any(|&v| v > 1) {
            return Err(Error::Validation("responses must be 0 or 1".into()));
        }
        Ok(())
    }

    /// Decodes one of the 4·2⁸·2⁸ full strategies.
    ///
    /// Bits `x·4 + e` of the Alice (Bob) word give `a(x, e)` (`b(y, e)`).
    pub fn from_index(index: usize) -> Self {
        assert!(index < FULL_STRATEGY_COUNT);
        let eve_outcome = index % EVE_OUTCOMES;
        let alice_bits = (index / EVE_OUTCOMES) % 256;
        let bob_bits = index / (EVE_OUTCOMES * 256);
        let unpack = |word: usize| -> [[u8; EVE_OUTCOMES]; 2] {
            std::array::from_fn(|x| std::array::from_fn(|e| ((word >> (x * EVE_OUTCOMES + e)) & 1) as u8))
        };
        DeterministicStrategy {
            eve_outcome,
            alice_response: unpack(alice_bits),
            bob_response: unpack(bob_bits),
        }
    }
}

/// Number of unreduced deterministic strategies, `4 · 2⁸ · 2⁸`.
pub const FULL_STRATEGY_COUNT: usize = EVE_OUTCOMES * 256 * 256;

/// One weighted component of an [`LhvModel`], as stored on disk.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LhvComponent {
    pub weight: f64,
    pub e: usize,
    pub alice_response: [[u8; EVE_OUTCOMES]; 2],
    pub bob_response: [[u8; EVE_OUTCOMES]; 2],
}

impl LhvComponent {
    pub fn strategy(&self) -> DeterministicStrategy {
        DeterministicStrategy {
            eve_outcome: self.e,
            alice_response: self.alice_response,
            bob_response: self.bob_response,
        }
    }
}

/// Convex mixture of deterministic strategies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<LhvComponent>", into = "Vec<LhvComponent>")]
pub struct LhvModel {
    components: Vec<(f64, DeterministicStrategy)>,
}

impl LhvModel {
    pub fn new(components: Vec<(f64, DeterministicStrategy)>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::Validation("hidden-variable model has no components".into()));
        }
        let mut total = 0.0;
        for (w, s) in &components {
            if !(*w >= 0.0) {
                return Err(Error::Validation(format!("negative or NaN weight {w}")));
            }
            s.validate()?;
            total += w;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Validation(format!("weights sum to {total}, expected 1")));
        }
        Ok(LhvModel { components })
    }

    pub fn deterministic(s: DeterministicStrategy) -> Self {
        LhvModel {
            components: vec![(1.0, s)],
        }
    }

    pub fn components(&self) -> &[(f64, DeterministicStrategy)] {
        &self.components
    }
}

impl TryFrom<Vec<LhvComponent>> for LhvModel {
    type Error = Error;
    fn try_from(v: Vec<LhvComponent>) -> Result<Self> {
        LhvModel::new(v.iter().map(|c| (c.weight, c.strategy())).collect())
    }
}

impl From<LhvModel> for Vec<LhvComponent> {
    fn from(m: LhvModel) -> Self {
        m.components
            .into_iter()
            .map(|(weight, s)| LhvComponent {
                weight,
                e: s.eve_outcome,
                alice_response: s.alice_response,
                bob_response: s.bob_response,
            })
            .collect()
    }
}

/// `p(a,b,e|x,y) = Σ_λ p(λ) [e = e_λ] [a = a_λ(x, e)] [b = b_λ(y, e)]`.
pub fn table_from_lhv(model: &LhvModel) -> CorrelationTable {
    let mut t = CorrelationTable::zeros();
    for (w, s) in &model.components {
        let e = s.eve_outcome;
        for x in 0..2 {
            for y in 0..2 {
                let (a, b) = (s.alice(x), s.bob(y));
                t.set(x, y, a, b, e, t.get(x, y, a, b, e) + w);
            }
        }
    }
    t
}

pub fn vertex_table(s: &DeterministicStrategy) -> CorrelationTable {
    table_from_lhv(&LhvModel::deterministic(*s))
}

pub fn vertex_value(s: &DeterministicStrategy) -> f64 {
    eval_witness(&vertex_table(s)).total
}

/// The 64 reduced vertices; responses at unrealized outcomes are 0.
pub fn enumerate_vertices() -> Vec<DeterministicStrategy> {
    let mut out = Vec::with_capacity(64);
    for e in 0..EVE_OUTCOMES {
        for fa in 0..4usize {
            for fb in 0..4usize {
                let mut s = DeterministicStrategy {
                    eve_outcome: e,
                    alice_response: [[0; EVE_OUTCOMES]; 2],
                    bob_response: [[0; EVE_OUTCOMES]; 2],
                };
                for x in 0..2 {
                    s.alice_response[x][e] = ((fa >> x) & 1) as u8;
                    s.bob_response[x][e] = ((fb >> x) & 1) as u8;
                }
                out.push(s);
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassicalBound {
    pub value: f64,
    pub argmax: DeterministicStrategy,
    /// Witness value of every vertex, in [`enumerate_vertices`] order.
    pub vertex_values: Vec<f64>,
}

/// Maximum of the witness over the 64 reduced vertices.
pub fn classical_bound() -> ClassicalBound {
    let vertices = enumerate_vertices();
    let vertex_values: Vec<f64> = vertices.iter().map(vertex_value).collect();
    let best = argmax_first(&vertex_values);
    ClassicalBound {
        value: vertex_values[best],
        argmax: vertices[best],
        vertex_values,
    }
}

fn argmax_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (k, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = k;
        }
    }
    best
}

/// Which deterministic strategies a search should consider.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum VertexFilter {
    #[default]
    All,
    /// Only strategies whose table passes the operational-independence test.
    OperationallyIndependent,
    /// Only strategies whose responses ignore Eve's outcome.
    OutcomeIndependent,
}

impl VertexFilter {
    fn accepts(self, s: &DeterministicStrategy) -> bool {
        match self {
            VertexFilter::All => true,
            VertexFilter::OutcomeIndependent => s.is_outcome_independent(),
            VertexFilter::OperationallyIndependent => {
                check_operational_independence(&vertex_table(s), DEFAULT_OI_TOLERANCE)
                    .map(|r| r.passed)
                    .unwrap_or(false)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub value: f64,
    pub argmax: DeterministicStrategy,
    /// Strategies that passed the filter and were evaluated.
    pub evaluated: usize,
    pub filter: VertexFilter,
}

/// Maximum over the reduced vertices that pass `filter`.
pub fn filtered_classical_bound(filter: VertexFilter) -> Result<SearchResult> {
    search(enumerate_vertices().into_par_iter(), filter)
}

/// Maximum over all `4·2⁸·2⁸` unreduced strategies that pass `filter`.
pub fn exhaustive_classical_bound(filter: VertexFilter) -> Result<SearchResult> {
    search(
        (0..FULL_STRATEGY_COUNT)
            .into_par_iter()
            .map(DeterministicStrategy::from_index),
        filter,
    )
}

fn search(
    strategies: impl IndexedParallelIterator<Item = DeterministicStrategy>,
    filter: VertexFilter,
) -> Result<SearchResult> {
    // Ties resolve to the lowest enumeration index.
    let best = strategies
        .enumerate()
        .filter(|(_, s)| filter.accepts(s))
        .map(|(k, s)| (vertex_value(&s), k, s, 1usize))
        .reduce_with(|l, r| {
            let count = l.3 + r.3;
            let keep_left = l.0 > r.0 || (l.0 == r.0 && l.1 < r.1);
            let w = if keep_left { l } else { r };
            (w.0, w.1, w.2, count)
        });
    let (value, _, argmax, evaluated) =
        best.ok_or_else(|| Error::Validation(format!("no strategy passes filter {filter:?}")))?;
    Ok(SearchResult {
        value,
        argmax,
        evaluated,
        filter,
    })
}

/// The two-bit example: each source sends the same uniformly random bit to
/// both of its parties, and Eve announces whether her two bits agree.
///
/// Eve's binary answer occupies outcomes 0 ("equal") and 1 ("different");
/// outcomes 2 and 3 never occur. With `λ` Alice's bit, `a = λ` and
/// `b = λ ⊕ e`, and since `e` is uniform given `λ`, the model is the uniform
/// mixture over the four deterministic strategies labelled by `(λ, e)`.
pub fn bit_example_model() -> (LhvModel, CorrelationTable) {
    let mut components = Vec::with_capacity(4);
    for lambda in 0..2u8 {
        for e in 0..2u8 {
            let s = DeterministicStrategy {
                eve_outcome: e as usize,
                alice_response: [[lambda; EVE_OUTCOMES]; 2],
                bob_response: [std::array::from_fn(|e2| lambda ^ (e2 as u8 & 1)); 2],
            };
            components.push((0.25, s));
        }
    }
    let model = LhvModel::new(components).expect("uniform weights");
    let table = table_from_lhv(&model);
    (model, table)
}

/// A quantum realization of the two-bit example.
///
/// Each source emits the classically correlated state `(|00⟩⟨00| + |11⟩⟨11|)/2`,
/// Alice and Bob read their bit with `σ_z` for either input, and Eve measures
/// the parity of `Ā B̄`: `N_0` projects on equal bits, `N_1` on different
/// bits, `N_2 = N_3 = 0`.
pub fn bit_example_strategy() -> QuantumStrategy {
    let classical_pair = ComplexMatrix::diag_real(&[0.5, 0.0, 0.0, 0.5]);
    let z = pauli::z();
    let equal = ComplexMatrix::diag_real(&[1.0, 0.0, 0.0, 1.0]);
    let differ = ComplexMatrix::diag_real(&[0.0, 1.0, 1.0, 0.0]);
    let zero = ComplexMatrix::zeros(4, 4);
    QuantumStrategy::new(
        SubsystemDims::qubits(4),
        classical_pair.clone(),
        classical_pair,
        [z.clone(), z.clone()],
        [z.clone(), z],
        [equal, differ, zero.clone(), zero],
    )
    .expect("bit example is a valid strategy")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlations::marginal_ab;
    use crate::scenario::born_table;
    use crate::witness::CLASSICAL_BOUND;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashSet;

    #[test]
    fn single_vertex_table() {
        let s = DeterministicStrategy {
            eve_outcome: 0,
            alice_response: [[0; 4]; 2],
            bob_response: [[0; 4]; 2],
        };
        let t = vertex_table(&s);
        for x in 0..2 {
            for y in 0..2 {
                assert_eq!(t.get(x, y, 0, 0, 0), 1.0);
            }
        }
        t.validate().unwrap();
    }

    #[test]
    fn sixty_four_distinct_deterministic_vertices() {
        let v = enumerate_vertices();
        assert_eq!(v.len(), 4 * 4 * 4);
        let mut seen = HashSet::new();
        for s in &v {
            let t = vertex_table(s);
            t.validate().unwrap();
            assert!(t.is_deterministic());
            let key: Vec<u64> = t.cells().iter().map(|p| p.to_bits()).collect();
            assert!(seen.insert(key), "duplicate table for {s:?}");
        }
    }

    #[test]
    fn uniform_mixture_of_vertices() {
        let v = enumerate_vertices();
        let model = LhvModel::new(v.iter().map(|s| (1.0 / 64.0, *s)).collect()).unwrap();
        let t = table_from_lhv(&model);
        t.validate().unwrap();
        for p in marginal_ab(&t).iter().flatten().flatten().flatten() {
            assert!((p - 0.25).abs() < 1e-15);
        }
        for x in 0..2 {
            for y in 0..2 {
                for p in t.eve_marginal(x, y) {
                    assert!((p - 0.25).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn classical_bound_is_two() {
        let b = classical_bound();
        assert!((b.value - CLASSICAL_BOUND).abs() <= 1e-12);
        assert!(b.vertex_values.iter().all(|&v| v <= 2.0 + 1e-12));
        assert_eq!(b.vertex_values.len(), 64);
        assert_eq!(vertex_value(&b.argmax), b.value);
    }

    #[test]
    fn outcome_independent_responses_also_reach_two() {
        let r = exhaustive_classical_bound(VertexFilter::OutcomeIndependent).unwrap();
        assert_eq!(r.evaluated, 4 * 4 * 4);
        assert!((r.value - 2.0).abs() <= 1e-12);
        assert!(r.argmax.is_outcome_independent());
    }

    #[test]
    fn oi_filter_is_a_subset() {
        let r = filtered_classical_bound(VertexFilter::OperationallyIndependent).unwrap();
        assert!(r.value <= 2.0 + 1e-12);
        assert!(r.evaluated <= 64);
    }

    #[test]
    fn exhaustive_search_agrees_with_reduction() {
        let r = exhaustive_classical_bound(VertexFilter::All).unwrap();
        assert_eq!(r.evaluated, FULL_STRATEGY_COUNT);
        assert!((r.value - classical_bound().value).abs() <= 1e-12);
        assert!((r.value - 2.0).abs() <= 1e-12);
    }

    #[test]
    fn index_decoding_covers_every_word() {
        let s = DeterministicStrategy::from_index(FULL_STRATEGY_COUNT - 1);
        assert_eq!(s.eve_outcome, 3);
        assert_eq!(s.alice_response, [[1; 4]; 2]);
        assert_eq!(s.bob_response, [[1; 4]; 2]);
        let s = DeterministicStrategy::from_index(4 * 0b0000_0010);
        assert_eq!(s.alice_response[0], [0, 1, 0, 0]);
    }

    #[test]
    fn bit_example_distribution() {
        let (model, t) = bit_example_model();
        assert_eq!(model.components().len(), 4);
        for x in 0..2 {
            for y in 0..2 {
                for a in 0..2 {
                    for b in 0..2 {
                        for e in 0..4 {
                            let expected = if e < 2 && e == a ^ b { 0.25 } else { 0.0 };
                            assert_eq!(t.get(x, y, a, b, e), expected);
                        }
                    }
                }
            }
        }
        assert_eq!(t.get(0, 0, 0, 0, 0), 0.25);
        assert_eq!(t.get(0, 0, 0, 1, 0), 0.0);
        assert_eq!(eval_witness(&t).total, 0.0);
    }

    #[test]
    fn bit_example_response_functions() {
        // Direct evaluation of the factorized form with λ ∈ {0,1},
        // p(e|λ) = 1/2, p(a|e,λ) = δ_{a,λ}, p(b|e,λ) = δ_{b⊕e,λ}.
        let (_, t) = bit_example_model();
        let delta = |p: usize, q: usize| if p == q { 1.0 } else { 0.0 };
        for x in 0..2 {
            for y in 0..2 {
                for a in 0..2 {
                    for b in 0..2 {
                        for e in 0..4 {
                            let mut p = 0.0;
                            for lambda in 0..2 {
                                let pe = if e < 2 { 0.5 } else { 0.0 };
                                p += 0.5 * pe * delta(a, lambda) * delta(b ^ (e & 1), lambda);
                            }
                            assert_eq!(t.get(x, y, a, b, e), p);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn bit_example_quantum_realization_matches() {
        let t = born_table(&bit_example_strategy()).unwrap();
        let (_, expected) = bit_example_model();
        for (p, q) in t.cells().iter().zip(expected.cells()) {
            assert!((p - q).abs() < 1e-15);
        }
    }

    #[test]
    fn model_validation() {
        let s = enumerate_vertices()[0];
        assert!(LhvModel::new(vec![(0.5, s)]).is_err());
        assert!(LhvModel::new(vec![(1.5, s), (-0.5, s)]).is_err());
        assert!(LhvModel::new(vec![]).is_err());
        let mut bad = s;
        bad.eve_outcome = 4;
        assert!(LhvModel::new(vec![(1.0, bad)]).is_err());
        let mut bad = s;
        bad.alice_response[0][0] = 2;
        assert!(LhvModel::new(vec![(1.0, bad)]).is_err());
    }

    #[test]
    fn model_json_layout() {
        let (model, _) = bit_example_model();
        let v = serde_json::to_value(&model).unwrap();
        assert_eq!(v.as_array().unwrap().len(), 4);
        assert_eq!(v[0]["weight"], serde_json::json!(0.25));
        assert_eq!(v[3]["e"], serde_json::json!(1));
        assert_eq!(v[3]["bob_response"][0], serde_json::json!([1, 0, 1, 0]));
        let back: LhvModel = serde_json::from_value(v).unwrap();
        assert_eq!(back, model);
        assert!(serde_json::from_str::<LhvModel>(
            r#"[{"weight":0.5,"e":0,"alice_response":[[0,0,0,0],[0,0,0,0]],"bob_response":[[0,0,0,0],[0,0,0,0]]}]"#
        )
        .is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn mixtures_never_beat_the_vertices(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let vertices = enumerate_vertices();
            let k = rng.gen_range(1..8);
            let raw: Vec<f64> = (0..k).map(|_| rng.gen::<f64>() + 1e-3).collect();
            let total: f64 = raw.iter().sum();
            let mut comps: Vec<(f64, DeterministicStrategy)> = raw
                .iter()
                .map(|w| (w / total, vertices[rng.gen_range(0..64)]))
                .collect();
            // Renormalize exactly onto the last weight.
            let head: f64 = comps[..k - 1].iter().map(|c| c.0).sum();
            comps[k - 1].0 = 1.0 - head;
            let model = LhvModel::new(comps.clone()).unwrap();
            let t = table_from_lhv(&model);
            prop_assert!(t.validate().is_ok());
            let value = eval_witness(&t).total;
            let average: f64 = comps.iter().map(|(w, s)| w * vertex_value(s)).sum();
            prop_assert!((value - average).abs() <= 1e-12);
            prop_assert!(value <= 2.0 + 1e-12);
        }
    }
}
