//! Classical-independence witness for the weak-bilocality quantum network.
//!
//! Two sources feed Alice, Bob and a central party Eve. Alice and Bob can be
//! operationally independent (their joint statistics factorize) while a
//! linear witness built from conditional CHSH expressions still reaches
//! `2√2`, above the value `2` reachable by any hidden-variable model in which
//! they do not influence each other. The crate provides:
//!
//! * [`linalg`]: dense complex matrices, partial traces, a Jacobi eigensolver;
//! * [`scenario`]: strategies, Born-rule correlation tables, reference devices;
//! * [`correlations`]: marginals, correlators, the operational-independence test;
//! * [`witness`]: the witness, its decomposition and the `2√2` certificate;
//! * [`classical`]: deterministic hidden-variable models and the bound `2`;
//! * [`selftest`]: conditional states, Bell fidelities, noise sweeps;
//! * [`optimizer`]: see-saw maximization over quantum strategies.

// Index loops mirror the (x, y, a, b, e) sums; `!(t > 0.0)` also rejects NaN.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod classical;
pub mod correlations;
pub mod error;
pub mod linalg;
pub mod optimizer;
pub mod random;
pub mod scenario;
pub mod selftest;
pub mod witness;

pub use classical::{DeterministicStrategy, LhvModel};
pub use correlations::IndependenceReport;
pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, SubsystemDims, Tolerances, C64, TOL};
pub use optimizer::{SeesawConfig, SeesawTrace};
pub use scenario::{CorrelationTable, QuantumStrategy};
pub use selftest::{LocalUnitaryPair, SelfTestReport};
pub use witness::{WitnessBreakdown, CLASSICAL_BOUND, QUANTUM_BOUND};
