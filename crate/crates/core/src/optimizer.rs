//! See-saw maximization of the witness over quantum strategies.
//!
//! Each iteration updates one group of devices with the rest fixed:
//!
//! 1. sources: each state becomes the leading eigenvector of its effective
//!    operator with the other source fixed;
//! 2. Eve: pairwise rotations of her measurement basis, each pair set to the
//!    exact optimum within its two-dimensional span;
//! 3. Alice: `A_x = sign(F_x)` where `I = Σ_x Tr(A_x F_x)`;
//! 4. Bob: the same with his effective operators.
//!
//! Updating the observables last keeps a random start from collapsing onto
//! commuting observables in the first sweep.
//!
//! Steps 1, 3 and 4 are exact block maximizations and step 2 never
//! decreases the objective, so the recorded values are nondecreasing.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eig, kron, partial_trace, permute_subsystems, ComplexMatrix, SubsystemDims, C64};
use crate::scenario::{
    joint_state, product_basis_povm, reference_strategy, QuantumStrategy, EVE_OUTCOMES, SOURCE_TO_PARTY_ORDER,
};
use crate::witness::{a0_sign, a1_sign, certify_observables, witness_operator};

/// Slack allowed when comparing successive objective values.
pub const MONOTONE_SLACK: f64 = 1e-10;

/// How Eve's measurement is treated during the search.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode", content = "povm")]
pub enum EveMode {
    /// Optimize over rank-one projective measurements.
    #[default]
    Optimize,
    /// Keep Eve fixed to the computational (product) basis of `Ā ⊗ B̄`.
    ProductBasis,
    /// Keep Eve fixed to the given POVM.
    Frozen(Vec<ComplexMatrix>),
}

/// Where restart 0 begins; later restarts are always random.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartMode {
    #[default]
    Random,
    Reference,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeesawConfig {
    /// Local dimensions of `(A, Ā, B, B̄)`.
    pub dims: SubsystemDims,
    pub max_iterations: usize,
    pub convergence_tol: f64,
    pub restarts: usize,
    pub seed: u64,
    pub eve: EveMode,
    pub start: StartMode,
}

impl Default for SeesawConfig {
    fn default() -> Self {
        SeesawConfig {
            dims: SubsystemDims::qubits(4),
            max_iterations: 2000,
            convergence_tol: 1e-13,
            restarts: 20,
            seed: 0x005e_e5a3,
            eve: EveMode::Optimize,
            start: StartMode::Random,
        }
    }
}

impl SeesawConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations < 1 {
            return Err(Error::Config("max_iterations must be at least 1".into()));
        }
        if !(self.convergence_tol > 0.0) {
            return Err(Error::Config(format!(
                "convergence_tol must be positive, got {}",
                self.convergence_tol
            )));
        }
        if self.restarts < 1 {
            return Err(Error::Config("restarts must be at least 1".into()));
        }
        if self.dims.len() != 4 {
            return Err(Error::Config(format!(
                "dims must list (A, Ā, B, B̄), got {:?}",
                self.dims.as_slice()
            )));
        }
        if self.eve == EveMode::ProductBasis && self.dims.as_slice()[1] * self.dims.as_slice()[3] != EVE_OUTCOMES {
            return Err(Error::Config("product-basis Eve needs qubit Ā and B̄".into()));
        }
        Ok(())
    }

    /// Seed of restart `k`.
    pub fn restart_seed(&self, k: usize) -> u64 {
        self.seed ^ (k as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeesawTrace {
    /// Witness value at the start and after every iteration.
    pub values: Vec<f64>,
    pub final_strategy: QuantumStrategy,
    pub converged: bool,
    pub seed: u64,
}

impl SeesawTrace {
    pub fn final_value(&self) -> f64 {
        *self.values.last().expect("trace has at least the initial value")
    }

    /// CSV with columns `iteration,witness`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration,witness\n");
        for (k, v) in self.values.iter().enumerate() {
            out.push_str(&format!("{k},{v}\n"));
        }
        out
    }
}

/// True iff the recorded values never drop by more than `1e-10`.
pub fn monotonicity_check(trace: &SeesawTrace) -> bool {
    values_nondecreasing(&trace.values)
}

pub fn values_nondecreasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] >= w[0] - MONOTONE_SLACK)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RestartSummary {
    pub seed: u64,
    pub final_value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// All restarts plus the best trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeesawRun {
    pub best: SeesawTrace,
    pub restarts: Vec<RestartSummary>,
    /// `2√2·𝟙 − I_CHSH^{ij} ⪰ 0` for the best strategy's observables.
    pub ceiling_certified: bool,
}

/// Runs every restart and keeps the highest final value.
pub fn seesaw_maximize(config: &SeesawConfig) -> Result<SeesawRun> {
    config.validate()?;
    let traces: Vec<SeesawTrace> = (0..config.restarts)
        .into_par_iter()
        .map(|k| {
            let seed = config.restart_seed(k);
            let start = if k == 0 && config.start == StartMode::Reference {
                reference_start(config)?
            } else {
                random_start(config, seed)?
            };
            seesaw_from(&start, config, seed)
        })
        .collect::<Result<_>>()?;

    let restarts = traces
        .iter()
        .map(|t| RestartSummary {
            seed: t.seed,
            final_value: t.final_value(),
            iterations: t.values.len() - 1,
            converged: t.converged,
        })
        .collect();
    let best = traces
        .into_iter()
        .reduce(|l, r| if r.final_value() > l.final_value() { r } else { l })
        .expect("at least one restart");
    let s = &best.final_strategy;
    let ceiling_certified = certify_observables(s.alice_observables(), s.bob_observables(), 1e-9)?.holds;
    Ok(SeesawRun {
        best,
        restarts,
        ceiling_certified,
    })
}

fn frozen_povm(config: &SeesawConfig) -> Result<Option<[ComplexMatrix; EVE_OUTCOMES]>> {
    match &config.eve {
        EveMode::Optimize => Ok(None),
        EveMode::ProductBasis => Ok(Some(product_basis_povm())),
        EveMode::Frozen(povm) => {
            let arr: [ComplexMatrix; EVE_OUTCOMES] = povm.clone().try_into().map_err(|v: Vec<_>| {
                Error::Config(format!("frozen povm needs {EVE_OUTCOMES} elements, got {}", v.len()))
            })?;
            Ok(Some(arr))
        }
    }
}

fn reference_start(config: &SeesawConfig) -> Result<QuantumStrategy> {
    if config.dims != SubsystemDims::qubits(4) {
        return Err(Error::Config("reference start needs qubit dims".into()));
    }
    let s = reference_strategy();
    match frozen_povm(config)? {
        Some(povm) => s.with_eve_povm(povm),
        None => Ok(s),
    }
}

fn random_start(config: &SeesawConfig, seed: u64) -> Result<QuantumStrategy> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = crate::scenario::random_strategy(&mut rng, &config.dims)?;
    match frozen_povm(config)? {
        Some(povm) => s.with_eve_povm(povm),
        None => Ok(s),
    }
}

/// Eve's measurement as labelled orthonormal vectors.
#[derive(Clone, Debug)]
struct EveBasis {
    vectors: Vec<Vec<C64>>,
    labels: Vec<usize>,
}

impl EveBasis {
    /// Recovers the basis from a projective POVM.
    fn from_povm(povm: &[ComplexMatrix; EVE_OUTCOMES]) -> Result<Self> {
        let mut vectors = Vec::new();
        let mut labels = Vec::new();
        for (e, n) in povm.iter().enumerate() {
            if (&(n * n) - n).max_abs() > 1e-9 {
                return Err(Error::Config(format!(
                    "Eve's element {e} is not a projector; freeze Eve to optimize the rest"
                )));
            }
            let eig = hermitian_eig(&n.hermitian_part())?;
            for (k, &lam) in eig.values.iter().enumerate() {
                if lam > 0.5 {
                    vectors.push(eig.vectors.column(k));
                    labels.push(e);
                }
            }
        }
        Ok(EveBasis { vectors, labels })
    }

    fn povm(&self) -> [ComplexMatrix; EVE_OUTCOMES] {
        let n = self.vectors[0].len();
        let mut out: [ComplexMatrix; EVE_OUTCOMES] = std::array::from_fn(|_| ComplexMatrix::zeros(n, n));
        for (v, &e) in self.vectors.iter().zip(&self.labels) {
            out[e] += &ComplexMatrix::projector(v);
        }
        out.map(|m| m.hermitian_part())
    }

    fn value(&self, effective: &[ComplexMatrix; EVE_OUTCOMES]) -> f64 {
        self.vectors
            .iter()
            .zip(&self.labels)
            .map(|(v, &e)| effective[e].expectation(v).re)
            .sum()
    }

    /// One sweep of pairwise rotations; returns the gain.
    fn sweep(&mut self, effective: &[ComplexMatrix; EVE_OUTCOMES]) -> f64 {
        let before = self.value(effective);
        let n = self.vectors.len();
        for p in 0..n {
            for q in (p + 1)..n {
                let (ep, eq) = (self.labels[p], self.labels[q]);
                if ep == eq {
                    continue;
                }
                // Within span{u_p, u_q} the pair contributes
                // Tr(K_q|span) + ⟨w|(K_p − K_q)|w⟩, maximized by the top
                // eigenvector w of the restricted difference.
                let diff = &effective[ep] - &effective[eq];
                let (up, uq) = (&self.vectors[p], &self.vectors[q]);
                let basis = [up, uq];
                let m = ComplexMatrix::from_fn(2, 2, |r, c| inner(basis[r], &diff, basis[c]));
                let current = m[(0, 0)].re;
                let eig = match hermitian_eig(&m.hermitian_part()) {
                    Ok(e) => e,
                    Err(_) => continue,
                };
                if eig.max() <= current + 1e-15 {
                    continue;
                }
                let w = eig.leading_vector();
                let new_p: Vec<C64> = up.iter().zip(uq).map(|(a, b)| w[0] * a + w[1] * b).collect();
                let new_q: Vec<C64> = up
                    .iter()
                    .zip(uq)
                    .map(|(a, b)| -w[1].conj() * a + w[0].conj() * b)
                    .collect();
                self.vectors[p] = new_p;
                self.vectors[q] = new_q;
            }
        }
        self.value(effective) - before
    }
}

/// `⟨u| M |v⟩`.
fn inner(u: &[C64], m: &ComplexMatrix, v: &[C64]) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..u.len() {
        let mut row = C64::new(0.0, 0.0);
        for j in 0..v.len() {
            row += m[(i, j)] * v[j];
        }
        acc += u[i].conj() * row;
    }
    acc
}

/// `V sign(Λ) V†` with zero eigenvalues sent to `+1`.
fn sign_observable(f: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = hermitian_eig(&f.hermitian_part())?;
    Ok(eig.map_spectrum(|x| if x >= 0.0 { 1.0 } else { -1.0 }).hermitian_part())
}

fn leading_state(k: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = hermitian_eig(&k.hermitian_part())?;
    Ok(ComplexMatrix::projector(&eig.leading_vector()).hermitian_part())
}

fn witness_value(s: &QuantumStrategy) -> f64 {
    witness_operator(s)
        .trace_product(&joint_state(s).expect("valid iterate"))
        .re
}

/// Reduced operator `Tr_{others}[op · ρ]` on the subsystems in `keep`.
fn effective(op: &ComplexMatrix, rho: &ComplexMatrix, dims: &SubsystemDims, keep: &[usize]) -> Result<ComplexMatrix> {
    Ok(partial_trace(&(op * rho), dims, keep)?.hermitian_part())
}

fn alice_step(s: &QuantumStrategy) -> Result<QuantumStrategy> {
    let rho = joint_state(s)?;
    let dims = s.party_dims();
    let bob = s.bob_observables();
    let id_a = ComplexMatrix::identity(s.dim_a());
    let diff = &bob[0] - &bob[1];
    let sum = &bob[0] + &bob[1];
    let mut alice = s.alice_observables().clone();
    for (x, slot) in alice.iter_mut().enumerate() {
        let (bob_part, sign): (&ComplexMatrix, fn(usize, usize) -> f64) =
            if x == 0 { (&diff, a0_sign) } else { (&sum, a1_sign) };
        let mut g: Option<ComplexMatrix> = None;
        for (e, n) in s.eve_povm().iter().enumerate() {
            let term = kron(bob_part, n).scale_real(sign(e / 2, e % 2));
            match &mut g {
                Some(acc) => *acc += &term,
                None => g = Some(term),
            }
        }
        let op = kron(&id_a, &g.expect("four outcomes"));
        *slot = sign_observable(&effective(&op, &rho, &dims, &[0])?)?;
    }
    s.with_observables(alice, bob.clone())
}

fn bob_step(s: &QuantumStrategy) -> Result<QuantumStrategy> {
    let rho = joint_state(s)?;
    let dims = s.party_dims();
    let alice = s.alice_observables();
    let id_b = ComplexMatrix::identity(s.dim_b());
    let mut bob = s.bob_observables().clone();
    for (y, slot) in bob.iter_mut().enumerate() {
        // B0 enters with +A0, B1 with −A0; both with +A1.
        let a0_weight = if y == 0 { 1.0 } else { -1.0 };
        let mut h: Option<ComplexMatrix> = None;
        for (e, n) in s.eve_povm().iter().enumerate() {
            let (i, j) = (e / 2, e % 2);
            let a_part = &alice[0].scale_real(a0_weight * a0_sign(i, j)) + &alice[1].scale_real(a1_sign(i, j));
            let term = kron(&kron(&a_part, &id_b), n);
            match &mut h {
                Some(acc) => *acc += &term,
                None => h = Some(term),
            }
        }
        *slot = sign_observable(&effective(&h.expect("four outcomes"), &rho, &dims, &[1])?)?;
    }
    s.with_observables(alice.clone(), bob)
}

fn eve_effective(s: &QuantumStrategy) -> Result<[ComplexMatrix; EVE_OUTCOMES]> {
    let rho = joint_state(s)?;
    let dims = s.party_dims();
    let id_e = ComplexMatrix::identity(s.dim_eve());
    let mut out = Vec::with_capacity(EVE_OUTCOMES);
    for e in 0..EVE_OUTCOMES {
        let chsh = crate::witness::conditional_chsh_operator(e / 2, e % 2, s);
        out.push(effective(&kron(&chsh, &id_e), &rho, &dims, &[2, 3])?);
    }
    Ok(out.try_into().expect("four outcomes"))
}

const EVE_SWEEPS: usize = 20;

fn eve_step(s: &QuantumStrategy, basis: &mut EveBasis) -> Result<QuantumStrategy> {
    let eff = eve_effective(s)?;
    for _ in 0..EVE_SWEEPS {
        if basis.sweep(&eff) <= 1e-14 {
            break;
        }
    }
    s.with_eve_povm(basis.povm())
}

fn source_step(s: &QuantumStrategy) -> Result<QuantumStrategy> {
    let w = witness_operator(s);
    let party_dims = s.party_dims();
    // The fixed reordering is its own inverse: (A, B, Ā, B̄) → (A, Ā, B, B̄).
    let w_src = permute_subsystems(&w, &party_dims, &SOURCE_TO_PARTY_ORDER)?;
    let dims = s.dims().clone();
    let d1 = s.dim_a() * s.dim_abar();
    let d2 = s.dim_b() * s.dim_bbar();

    let k1 = effective(&w_src, &kron(&ComplexMatrix::identity(d1), s.source2()), &dims, &[0, 1])?;
    let rho1 = leading_state(&k1)?;
    let k2 = effective(&w_src, &kron(&rho1, &ComplexMatrix::identity(d2)), &dims, &[2, 3])?;
    let rho2 = leading_state(&k2)?;
    s.with_sources(rho1, rho2)
}

/// Keeps `next` only if it does not lower the objective.
fn accept(current: (QuantumStrategy, f64), next: QuantumStrategy) -> (QuantumStrategy, f64) {
    let v = witness_value(&next);
    if v >= current.1 - 1e-12 {
        (next, v.max(current.1))
    } else {
        current
    }
}

/// Single see-saw run from `start`.
pub fn seesaw_from(start: &QuantumStrategy, config: &SeesawConfig, seed: u64) -> Result<SeesawTrace> {
    config.validate()?;
    let optimize_eve = matches!(config.eve, EveMode::Optimize);
    let mut basis = if optimize_eve {
        Some(EveBasis::from_povm(start.eve_povm())?)
    } else {
        None
    };

    let mut state = (start.clone(), witness_value(start));
    let mut values = vec![state.1];
    let mut converged = false;
    for _ in 0..config.max_iterations {
        let before = state.1;
        let next = source_step(&state.0)?;
        state = accept(state, next);
        if let Some(b) = basis.as_mut() {
            let saved = b.clone();
            let next = eve_step(&state.0, b)?;
            if witness_value(&next) >= state.1 - 1e-12 {
                state = accept(state, next);
            } else {
                *b = saved;
            }
        }
        let next = alice_step(&state.0)?;
        state = accept(state, next);
        let next = bob_step(&state.0)?;
        state = accept(state, next);
        values.push(state.1);
        if state.1 - before < config.convergence_tol {
            converged = true;
            break;
        }
    }
    Ok(SeesawTrace {
        values,
        final_strategy: state.0,
        converged,
        seed,
    })
}
