//! Marginals, correlators and the operational-independence test.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{kron, ComplexMatrix};
use crate::scenario::{observable_povm, CorrelationTable, EVE_OUTCOMES};

/// Default tolerance for exact (simulated) tables.
pub const DEFAULT_OI_TOLERANCE: f64 = 1e-9;

/// `p(a, b | x, y)` indexed `[x][y][a][b]`.
pub type PairDistribution = [[[[f64; 2]; 2]; 2]; 2];

/// Sums Eve out of the joint table.
pub fn marginal_ab(table: &CorrelationTable) -> PairDistribution {
    let mut m = PairDistribution::default();
    for (x, mx) in m.iter_mut().enumerate() {
        for (y, mxy) in mx.iter_mut().enumerate() {
            for (a, row) in mxy.iter_mut().enumerate() {
                for (b, cell) in row.iter_mut().enumerate() {
                    *cell = (0..EVE_OUTCOMES).map(|e| table.get(x, y, a, b, e)).sum();
                }
            }
        }
    }
    m
}

/// `⟨A_x B_y N^E_e⟩ = p(0,0,e) + p(1,1,e) − p(0,1,e) − p(1,0,e)` at inputs `(x, y)`.
pub fn expectation(table: &CorrelationTable, x: usize, y: usize, e: usize) -> f64 {
    table.get(x, y, 0, 0, e) + table.get(x, y, 1, 1, e) - table.get(x, y, 0, 1, e) - table.get(x, y, 1, 0, e)
}

/// Result of [`check_operational_independence`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndependenceReport {
    /// `max |p(a,b|x,y) − p(a|x) p(b|y)|` over all cells.
    pub max_deviation: f64,
    /// `(x, y, a, b)` attaining `max_deviation`.
    pub worst_cell: [usize; 4],
    pub passed: bool,
    pub tolerance: f64,
    /// `max |p(a|x,b,y) − p(a|x)|` over cells with `p(b|y) > 0`; diagnostic only.
    pub conditional_max_deviation: f64,
}

/// Table-level test of `p(a,b|x,y) = p(a|x) p(b|y)` for every setting pair.
///
/// Marginals are taken at the same `(x, y)` as the joint cell, so the test
/// is meaningful even for tables that signal. Cells with `p(b|y) = 0` are
/// skipped by the conditional diagnostic; the joint form covers them.
pub fn check_operational_independence(table: &CorrelationTable, tol: f64) -> Result<IndependenceReport> {
    if !(tol > 0.0) {
        return Err(Error::Precondition(format!("tolerance must be positive, got {tol}")));
    }
    let pab = marginal_ab(table);
    let mut max_deviation = 0.0;
    let mut worst_cell = [0; 4];
    let mut conditional_max_deviation: f64 = 0.0;
    for x in 0..2 {
        for y in 0..2 {
            let joint = &pab[x][y];
            let pa = [joint[0][0] + joint[0][1], joint[1][0] + joint[1][1]];
            let pb = [joint[0][0] + joint[1][0], joint[0][1] + joint[1][1]];
            for a in 0..2 {
                for b in 0..2 {
                    let dev = (joint[a][b] - pa[a] * pb[b]).abs();
                    if dev > max_deviation {
                        max_deviation = dev;
                        worst_cell = [x, y, a, b];
                    }
                    if pb[b] > 0.0 {
                        let cond = joint[a][b] / pb[b];
                        conditional_max_deviation = conditional_max_deviation.max((cond - pa[a]).abs());
                    }
                }
            }
        }
    }
    Ok(IndependenceReport {
        max_deviation,
        worst_cell,
        passed: max_deviation <= tol,
        tolerance: tol,
        conditional_max_deviation,
    })
}

/// Embeds a plain two-party experiment on `ρ_AB` as a table with Eve
/// always reporting `e = 0`.
pub fn two_party_table(
    rho_ab: &ComplexMatrix,
    alice: &[ComplexMatrix; 2],
    bob: &[ComplexMatrix; 2],
) -> CorrelationTable {
    let mut t = CorrelationTable::zeros();
    for x in 0..2 {
        let na = observable_povm(&alice[x]);
        for y in 0..2 {
            let nb = observable_povm(&bob[y]);
            for a in 0..2 {
                for b in 0..2 {
                    let p = kron(&na[a], &nb[b]).trace_product(rho_ab).re;
                    t.set(x, y, a, b, 0, p);
                }
            }
        }
    }
    t
}
