//! The weak-bilocality network: two sources, three parties, Born-rule statistics.
//!
//! Source 1 distributes a state on `A ⊗ Ā`, source 2 on `B ⊗ B̄`. Alice and
//! Bob each choose one of two dichotomic observables; Eve holds `Ā ⊗ B̄` and
//! performs a single four-outcome measurement. Internally the joint state is
//! kept in the ordering `(A, B, Ā, B̄)`, so the Born-rule operator is literally
//! `N^A ⊗ N^B ⊗ N^E`.

use std::f64::consts::FRAC_1_SQRT_2;
use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    hermitian_eig, kron, kron_all, pauli, permute_subsystems, validate_povm, ComplexMatrix, SubsystemDims, C64, TOL,
    ZERO,
};
use crate::random;

/// Largest local dimension the engine accepts.
pub const MAX_LOCAL_DIM: usize = 4;

/// Number of outcomes of Eve's measurement.
pub const EVE_OUTCOMES: usize = 4;

/// Reorders `(A, Ā, B, B̄)` into `(A, B, Ā, B̄)`.
pub const SOURCE_TO_PARTY_ORDER: [usize; 4] = [0, 2, 1, 3];

const STRATEGY_FORMAT_VERSION: u32 = 1;

/// Complete device description of the network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StrategyFile", into = "StrategyFile")]
pub struct QuantumStrategy {
    dims: SubsystemDims,
    source1: ComplexMatrix,
    source2: ComplexMatrix,
    alice: [ComplexMatrix; 2],
    bob: [ComplexMatrix; 2],
    eve: [ComplexMatrix; EVE_OUTCOMES],
}

impl QuantumStrategy {
    /// Builds a strategy and checks every invariant.
    ///
    /// `dims` lists the local dimensions of `(A, Ā, B, B̄)`.
    pub fn new(
        dims: SubsystemDims,
        source1: ComplexMatrix,
        source2: ComplexMatrix,
        alice: [ComplexMatrix; 2],
        bob: [ComplexMatrix; 2],
        eve: [ComplexMatrix; EVE_OUTCOMES],
    ) -> Result<Self> {
        let s = QuantumStrategy {
            dims,
            source1,
            source2,
            alice,
            bob,
            eve,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn dims(&self) -> &SubsystemDims {
        &self.dims
    }

    pub fn dim_a(&self) -> usize {
        self.dims.as_slice()[0]
    }

    pub fn dim_abar(&self) -> usize {
        self.dims.as_slice()[1]
    }

    pub fn dim_b(&self) -> usize {
        self.dims.as_slice()[2]
    }

    pub fn dim_bbar(&self) -> usize {
        self.dims.as_slice()[3]
    }

    /// Dimension of Eve's space `Ā ⊗ B̄`.
    pub fn dim_eve(&self) -> usize {
        self.dim_abar() * self.dim_bbar()
    }

    /// Dims in the party ordering `(A, B, Ā, B̄)`.
    pub fn party_dims(&self) -> SubsystemDims {
        self.dims
            .permuted(&SOURCE_TO_PARTY_ORDER)
            .expect("fixed permutation of four subsystems")
    }

    pub fn source1(&self) -> &ComplexMatrix {
        &self.source1
    }

    pub fn source2(&self) -> &ComplexMatrix {
        &self.source2
    }

    pub fn alice_observables(&self) -> &[ComplexMatrix; 2] {
        &self.alice
    }

    pub fn bob_observables(&self) -> &[ComplexMatrix; 2] {
        &self.bob
    }

    pub fn eve_povm(&self) -> &[ComplexMatrix; EVE_OUTCOMES] {
        &self.eve
    }

    pub fn with_sources(&self, source1: ComplexMatrix, source2: ComplexMatrix) -> Result<Self> {
        QuantumStrategy::new(
            self.dims.clone(),
            source1,
            source2,
            self.alice.clone(),
            self.bob.clone(),
            self.eve.clone(),
        )
    }

    pub fn with_observables(&self, alice: [ComplexMatrix; 2], bob: [ComplexMatrix; 2]) -> Result<Self> {
        QuantumStrategy::new(
            self.dims.clone(),
            self.source1.clone(),
            self.source2.clone(),
            alice,
            bob,
            self.eve.clone(),
        )
    }

    pub fn with_eve_povm(&self, eve: [ComplexMatrix; EVE_OUTCOMES]) -> Result<Self> {
        QuantumStrategy::new(
            self.dims.clone(),
            self.source1.clone(),
            self.source2.clone(),
            self.alice.clone(),
            self.bob.clone(),
            eve,
        )
    }

    /// True when all four observables square to the identity.
    pub fn is_projective(&self) -> bool {
        self.alice.iter().chain(&self.bob).all(is_projective_observable)
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dims.as_slice();
        if d.len() != 4 {
            return Err(Error::Config(format!(
                "strategy needs four local dimensions (A, Ā, B, B̄), got {d:?}"
            )));
        }
        if let Some(big) = d.iter().find(|&&x| x > MAX_LOCAL_DIM) {
            return Err(Error::Config(format!(
                "local dimension {big} exceeds the supported maximum {MAX_LOCAL_DIM}"
            )));
        }
        check_density_matrix("source1", &self.source1, d[0] * d[1])?;
        check_density_matrix("source2", &self.source2, d[2] * d[3])?;
        for (x, o) in self.alice.iter().enumerate() {
            check_observable(&format!("alice observable {x}"), o, d[0])?;
        }
        for (y, o) in self.bob.iter().enumerate() {
            check_observable(&format!("bob observable {y}"), o, d[2])?;
        }
        let de = d[1] * d[3];
        for (e, n) in self.eve.iter().enumerate() {
            if n.rows() != de || n.cols() != de {
                return Err(Error::Validation(format!(
                    "eve povm element {e} has shape {}x{}, expected {de}x{de}",
                    n.rows(),
                    n.cols()
                )));
            }
        }
        let diag = validate_povm(&self.eve);
        if !diag.valid {
            return Err(Error::Validation(format!(
                "eve povm invalid: {}",
                diag.issues.join("; ")
            )));
        }
        Ok(())
    }
}

/// Checks Hermiticity, unit trace and positivity of a density matrix.
pub fn check_density_matrix(name: &str, rho: &ComplexMatrix, dim: usize) -> Result<()> {
    if rho.rows() != dim || rho.cols() != dim {
        return Err(Error::Validation(format!(
            "{name} has shape {}x{}, expected {dim}x{dim}",
            rho.rows(),
            rho.cols()
        )));
    }
    let defect = rho.hermiticity_defect();
    if defect > TOL.hermiticity {
        return Err(Error::Validation(format!(
            "{name} is not Hermitian (max |ρ - ρ†| = {defect:.3e})"
        )));
    }
    let tr = rho.trace();
    if (tr - C64::new(1.0, 0.0)).norm() > TOL.normalization {
        return Err(Error::Validation(format!("{name} has trace {tr}, expected 1")));
    }
    let lo = hermitian_eig(rho)?.min();
    if lo < -TOL.psd_slack {
        return Err(Error::Validation(format!(
            "{name} is not positive semi-definite (min eigenvalue {lo:.3e})"
        )));
    }
    Ok(())
}

fn check_observable(name: &str, o: &ComplexMatrix, dim: usize) -> Result<()> {
    if o.rows() != dim || o.cols() != dim {
        return Err(Error::Validation(format!(
            "{name} has shape {}x{}, expected {dim}x{dim}",
            o.rows(),
            o.cols()
        )));
    }
    let defect = o.hermiticity_defect();
    if defect > TOL.hermiticity {
        return Err(Error::Validation(format!(
            "{name} is not Hermitian (max |O - O†| = {defect:.3e})"
        )));
    }
    let eig = hermitian_eig(o)?;
    if eig.max() > 1.0 + TOL.psd_slack || eig.min() < -1.0 - TOL.psd_slack {
        return Err(Error::Validation(format!(
            "{name} has spectrum [{:.6}, {:.6}] outside [-1, 1]",
            eig.min(),
            eig.max()
        )));
    }
    Ok(())
}

/// `‖O² − 𝟙‖_max ≤ 1e-9`.
pub fn is_projective_observable(o: &ComplexMatrix) -> bool {
    (&(o * o) - &ComplexMatrix::identity(o.rows())).max_abs() <= TOL.projective
}

/// Two-outcome POVM `{(𝟙 + O)/2, (𝟙 − O)/2}` of a ±1-valued observable.
pub fn observable_povm(o: &ComplexMatrix) -> [ComplexMatrix; 2] {
    let id = ComplexMatrix::identity(o.rows());
    [(&id + o).scale_real(0.5), (&id - o).scale_real(0.5)]
}

/// Joint density matrix on `(A, B, Ā, B̄)`.
pub fn joint_state(strategy: &QuantumStrategy) -> Result<ComplexMatrix> {
    strategy.validate()?;
    Ok(joint_state_unchecked(strategy))
}

pub(crate) fn joint_state_unchecked(strategy: &QuantumStrategy) -> ComplexMatrix {
    let product = kron(&strategy.source1, &strategy.source2);
    permute_subsystems(&product, &strategy.dims, &SOURCE_TO_PARTY_ORDER).expect("dims validated with the strategy")
}

/// Full joint distribution `p(a, b, e | x, y)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationTable {
    cells: [f64; CorrelationTable::CELLS],
}

impl CorrelationTable {
    pub const CELLS: usize = 2 * 2 * 2 * 2 * EVE_OUTCOMES;

    #[inline]
    fn index(x: usize, y: usize, a: usize, b: usize, e: usize) -> usize {
        debug_assert!(x < 2 && y < 2 && a < 2 && b < 2 && e < EVE_OUTCOMES);
        (((x * 2 + y) * 2 + a) * 2 + b) * EVE_OUTCOMES + e
    }

    pub fn zeros() -> Self {
        CorrelationTable {
            cells: [0.0; Self::CELLS],
        }
    }

    pub fn from_fn(mut f: impl FnMut(usize, usize, usize, usize, usize) -> f64) -> Self {
        let mut t = Self::zeros();
        for_each_cell(|x, y, a, b, e| t.cells[Self::index(x, y, a, b, e)] = f(x, y, a, b, e));
        t
    }

    /// `p(a, b, e | x, y) = 1/16` everywhere.
    pub fn uniform() -> Self {
        Self::from_fn(|_, _, _, _, _| 1.0 / 16.0)
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, a: usize, b: usize, e: usize) -> f64 {
        self.cells[Self::index(x, y, a, b, e)]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, a: usize, b: usize, e: usize, p: f64) {
        self.cells[Self::index(x, y, a, b, e)] = p;
    }

    pub fn cells(&self) -> &[f64; Self::CELLS] {
        &self.cells
    }

    /// `α·self + (1 − α)·other`.
    pub fn mix(&self, other: &Self, alpha: f64) -> Self {
        let mut t = Self::zeros();
        for (k, c) in t.cells.iter_mut().enumerate() {
            *c = alpha * self.cells[k] + (1.0 - alpha) * other.cells[k];
        }
        t
    }

    /// Eve's marginal `p(e | x, y)`.
    pub fn eve_marginal(&self, x: usize, y: usize) -> [f64; EVE_OUTCOMES] {
        let mut m = [0.0; EVE_OUTCOMES];
        for a in 0..2 {
            for b in 0..2 {
                for (e, slot) in m.iter_mut().enumerate() {
                    *slot += self.get(x, y, a, b, e);
                }
            }
        }
        m
    }

    /// True when every entry is exactly 0 or 1.
    pub fn is_deterministic(&self) -> bool {
        self.cells.iter().all(|&p| p == 0.0 || p == 1.0)
    }

    /// Range, normalization and Eve-marginal no-signaling checks.
    pub fn validate(&self) -> Result<()> {
        for_each_cell_result(|x, y, a, b, e| {
            let p = self.get(x, y, a, b, e);
            if !(-1e-12..=1.0 + 1e-12).contains(&p) || !p.is_finite() {
                return Err(Error::Validation(format!(
                    "p(a={a},b={b},e={e}|x={x},y={y}) = {p} outside [0, 1]"
                )));
            }
            Ok(())
        })?;
        let reference = self.eve_marginal(0, 0);
        for x in 0..2 {
            for y in 0..2 {
                let m = self.eve_marginal(x, y);
                let total: f64 = m.iter().sum();
                if (total - 1.0).abs() > TOL.normalization {
                    return Err(Error::Validation(format!(
                        "distribution for (x={x}, y={y}) sums to {total}"
                    )));
                }
                for e in 0..EVE_OUTCOMES {
                    if (m[e] - reference[e]).abs() > TOL.normalization {
                        return Err(Error::Validation(format!(
                            "Eve's marginal p(e={e}) depends on the inputs: {} at (0,0) vs {} at ({x},{y})",
                            reference[e], m[e]
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// One row per cell: `x,y,a,b,e,p`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "x,y,a,b,e,p")?;
        let mut result = Ok(());
        for_each_cell(|x, y, a, b, e| {
            if result.is_ok() {
                result = writeln!(w, "{x},{y},{a},{b},{e},{}", self.get(x, y, a, b, e));
            }
        });
        result
    }
}

/// Visits every `(x, y, a, b, e)` in row-major order.
pub fn for_each_cell(mut f: impl FnMut(usize, usize, usize, usize, usize)) {
    for x in 0..2 {
        for y in 0..2 {
            for a in 0..2 {
                for b in 0..2 {
                    for e in 0..EVE_OUTCOMES {
                        f(x, y, a, b, e);
                    }
                }
            }
        }
    }
}

fn for_each_cell_result(mut f: impl FnMut(usize, usize, usize, usize, usize) -> Result<()>) -> Result<()> {
    let mut out = Ok(());
    for_each_cell(|x, y, a, b, e| {
        if out.is_ok() {
            out = f(x, y, a, b, e);
        }
    });
    out
}

type NestedTable = [[[[[f64; EVE_OUTCOMES]; 2]; 2]; 2]; 2];

impl Serialize for CorrelationTable {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut nested: NestedTable = Default::default();
        for_each_cell(|x, y, a, b, e| nested[x][y][a][b][e] = self.get(x, y, a, b, e));
        nested.serialize(s)
    }
}

impl<'de> Deserialize<'de> for CorrelationTable {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let nested = NestedTable::deserialize(d)?;
        Ok(CorrelationTable::from_fn(|x, y, a, b, e| nested[x][y][a][b][e]))
    }
}

/// Born rule: `p(a,b,e|x,y) = Tr[(N^A_{a|x} ⊗ N^B_{b|y} ⊗ N^E_e) ρ_ABE]`.
pub fn born_table(strategy: &QuantumStrategy) -> Result<CorrelationTable> {
    let rho = joint_state(strategy)?;
    let alice = strategy.alice.each_ref().map(observable_povm);
    let bob = strategy.bob.each_ref().map(observable_povm);
    let mut table = CorrelationTable::zeros();
    for x in 0..2 {
        for y in 0..2 {
            for a in 0..2 {
                for b in 0..2 {
                    let ab = kron(&alice[x][a], &bob[y][b]);
                    for e in 0..EVE_OUTCOMES {
                        let op = kron(&ab, &strategy.eve[e]);
                        table.set(x, y, a, b, e, op.trace_product(&rho).re);
                    }
                }
            }
        }
    }
    table.validate()?;
    Ok(table)
}

/// `|φ_{i,j}⟩ = (|i j⟩ + (−1)^i |ī j̄⟩)/√2`.
pub fn bell_state(i: usize, j: usize) -> Vec<C64> {
    assert!(i < 2 && j < 2, "Bell index out of range");
    let mut v = vec![ZERO; 4];
    let sign = if i == 0 { 1.0 } else { -1.0 };
    v[2 * i + j] += C64::new(FRAC_1_SQRT_2, 0.0);
    v[2 * (1 - i) + (1 - j)] += C64::new(sign * FRAC_1_SQRT_2, 0.0);
    v
}

/// `|φ⁺⟩ = (|00⟩ + |11⟩)/√2`.
pub fn phi_plus() -> Vec<C64> {
    bell_state(0, 0)
}

/// Bell-basis measurement with `N_{2i+j} = |φ_{i,j}⟩⟨φ_{i,j}|`.
pub fn bell_povm() -> [ComplexMatrix; EVE_OUTCOMES] {
    std::array::from_fn(|k| ComplexMatrix::projector(&bell_state(k / 2, k % 2)))
}

/// Computational-basis measurement `N_{2i+j} = |i j⟩⟨i j|` on two qubits.
pub fn product_basis_povm() -> [ComplexMatrix; EVE_OUTCOMES] {
    std::array::from_fn(|k| ComplexMatrix::basis_projector(4, k))
}

/// Alice measures `σ_z`, `σ_x`; Bob measures `(σ_z ± σ_x)/√2`.
pub fn reference_observables() -> ([ComplexMatrix; 2], [ComplexMatrix; 2]) {
    let z = pauli::z();
    let x = pauli::x();
    let b0 = (&z + &x).scale_real(FRAC_1_SQRT_2);
    let b1 = (&x - &z).scale_real(FRAC_1_SQRT_2);
    ([z, x], [b0, b1])
}

/// Two `|φ⁺⟩` sources, the observables above, and a Bell-basis measurement for Eve.
pub fn reference_strategy() -> QuantumStrategy {
    let phi = ComplexMatrix::projector(&phi_plus());
    let (alice, bob) = reference_observables();
    QuantumStrategy::new(SubsystemDims::qubits(4), phi.clone(), phi, alice, bob, bell_povm())
        .expect("reference strategy is valid")
}

/// `v|φ⁺⟩⟨φ⁺| + (1 − v)𝟙/4`.
pub fn werner_state(v: f64) -> ComplexMatrix {
    let phi = ComplexMatrix::projector(&phi_plus());
    &phi.scale_real(v) + &ComplexMatrix::identity(4).scale_real((1.0 - v) / 4.0)
}

/// Reference measurements with Werner-noisy sources of visibilities `v1`, `v2`.
pub fn werner_strategy(v1: f64, v2: f64) -> Result<QuantumStrategy> {
    for (name, v) in [("v1", v1), ("v2", v2)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::Config(format!("visibility {name} = {v} outside [0, 1]")));
        }
    }
    reference_strategy().with_sources(werner_state(v1), werner_state(v2))
}

/// Haar-random pure sources, random projective observables and a random
/// rank-one basis measurement for Eve.
///
/// Eve's `dĀ·dB̄` basis vectors are assigned to outcomes round-robin.
pub fn random_strategy<R: Rng + ?Sized>(rng: &mut R, dims: &SubsystemDims) -> Result<QuantumStrategy> {
    let d = dims.as_slice();
    if d.len() != 4 {
        return Err(Error::Config(format!("expected four local dimensions, got {d:?}")));
    }
    let s1 = ComplexMatrix::projector(&random::pure_state(rng, d[0] * d[1]));
    let s2 = ComplexMatrix::projector(&random::pure_state(rng, d[2] * d[3]));
    let alice = [0, 1].map(|_| random::dichotomic_observable(rng, d[0]));
    let bob = [0, 1].map(|_| random::dichotomic_observable(rng, d[2]));
    let basis = random::basis_measurement(rng, d[1] * d[3]);
    let eve = group_round_robin(&basis);
    QuantumStrategy::new(dims.clone(), s1, s2, alice, bob, eve)
}

/// Sums a list of projectors into four outcomes, element `k` going to `k mod 4`.
pub fn group_round_robin(elements: &[ComplexMatrix]) -> [ComplexMatrix; EVE_OUTCOMES] {
    let n = elements[0].rows();
    let mut out: [ComplexMatrix; EVE_OUTCOMES] = std::array::from_fn(|_| ComplexMatrix::zeros(n, n));
    for (k, e) in elements.iter().enumerate() {
        out[k % EVE_OUTCOMES] += e;
    }
    out
}

/// On-disk layout of a strategy.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategyFile {
    #[serde(default = "default_version")]
    pub version: u32,
    pub dims: Vec<usize>,
    pub source1: ComplexMatrix,
    pub source2: ComplexMatrix,
    pub alice_observables: Vec<ComplexMatrix>,
    pub bob_observables: Vec<ComplexMatrix>,
    pub eve_povm: Vec<ComplexMatrix>,
}

fn default_version() -> u32 {
    STRATEGY_FORMAT_VERSION
}

impl TryFrom<StrategyFile> for QuantumStrategy {
    type Error = Error;

    fn try_from(f: StrategyFile) -> Result<Self> {
        if f.version != STRATEGY_FORMAT_VERSION {
            return Err(Error::Config(format!(
                "unsupported strategy format version {} (expected {STRATEGY_FORMAT_VERSION})",
                f.version
            )));
        }
        let alice: [ComplexMatrix; 2] = f
            .alice_observables
            .try_into()
            .map_err(|v: Vec<_>| Error::Config(format!("expected 2 alice observables, got {}", v.len())))?;
        let bob: [ComplexMatrix; 2] = f
            .bob_observables
            .try_into()
            .map_err(|v: Vec<_>| Error::Config(format!("expected 2 bob observables, got {}", v.len())))?;
        let eve: [ComplexMatrix; EVE_OUTCOMES] = f.eve_povm.try_into().map_err(|v: Vec<_>| {
            Error::Config(format!("expected {EVE_OUTCOMES} eve povm elements, got {}", v.len()))
        })?;
        QuantumStrategy::new(SubsystemDims::new(f.dims)?, f.source1, f.source2, alice, bob, eve)
    }
}

impl From<QuantumStrategy> for StrategyFile {
    fn from(s: QuantumStrategy) -> Self {
        StrategyFile {
            version: STRATEGY_FORMAT_VERSION,
            dims: s.dims.into(),
            source1: s.source1,
            source2: s.source2,
            alice_observables: s.alice.into(),
            bob_observables: s.bob.into(),
            eve_povm: s.eve.into(),
        }
    }
}

/// Tensor product of three party operators in the `(A, B, E)` order.
pub fn party_operator(a: &ComplexMatrix, b: &ComplexMatrix, e: &ComplexMatrix) -> ComplexMatrix {
    kron_all([a, b, e])
}
