//! Random operators for property tests and optimizer initialization.
//!
//! Unitaries are Haar-distributed (QR of a complex Ginibre matrix with the
//! phases of the R diagonal absorbed); pure states are Haar-random columns.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg::{ComplexMatrix, C64};

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im)
}

pub fn pure_state<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<C64> {
    let v: Vec<C64> = (0..n).map(|_| gaussian(rng)).collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / norm).collect()
}

pub fn hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
    let g = ComplexMatrix::from_fn(n, n, |_, _| gaussian(rng));
    g.hermitian_part()
}

/// Full-rank mixed state `G G† / Tr(G G†)`.
pub fn density_matrix<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
    let g = ComplexMatrix::from_fn(n, n, |_, _| gaussian(rng));
    let gg = &g * &g.adjoint();
    let tr = gg.trace().re;
    gg.scale_real(1.0 / tr).hermitian_part()
}

pub fn unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
    // Modified Gram-Schmidt on the columns of a Ginibre matrix.
    let mut cols: Vec<Vec<C64>> = (0..n).map(|_| (0..n).map(|_| gaussian(rng)).collect()).collect();
    for k in 0..n {
        for j in 0..k {
            let overlap: C64 = (0..n).map(|i| cols[j][i].conj() * cols[k][i]).sum();
            for i in 0..n {
                let c = cols[j][i];
                cols[k][i] -= overlap * c;
            }
        }
        let norm = cols[k].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in &mut cols[k] {
            *z /= norm;
        }
    }
    ComplexMatrix::from_fn(n, n, |i, j| cols[j][i])
}

/// Projective ±1-valued observable `U diag(±1) U†` with both signs present.
pub fn dichotomic_observable<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
    let u = unitary(rng, n);
    let plus = if n <= 2 { 1 } else { rng.gen_range(1..n) };
    let signs: Vec<f64> = (0..n).map(|k| if k < plus { 1.0 } else { -1.0 }).collect();
    ComplexMatrix::diag_real(&signs).conjugate_by(&u).hermitian_part()
}

/// Rank-one projective measurement: the columns of a random unitary.
pub fn basis_measurement<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<ComplexMatrix> {
    let u = unitary(rng, n);
    (0..n)
        .map(|k| ComplexMatrix::projector(&u.column(k)).hermitian_part())
        .collect()
}
