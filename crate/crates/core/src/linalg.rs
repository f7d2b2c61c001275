//! Dense complex linear algebra on small Hilbert spaces.
//!
//! Every operator in the toolkit (states, observables, POVM elements) is a
//! [`ComplexMatrix`] stored row-major. Matrices never exceed 16×16 in
//! practice, so all routines are straightforward dense loops.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::de::{self, Deserializer};
use serde::ser::{SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Numerical tolerances shared by every module.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Elementwise bound on `|M - M†|` for a matrix to count as Hermitian.
    pub hermiticity: f64,
    /// Most negative eigenvalue still accepted as positive semi-definite.
    pub psd_slack: f64,
    /// Frobenius bound on eigendecomposition reconstruction and unitarity.
    pub reconstruction: f64,
    /// Bound on trace / completeness / probability normalization errors.
    pub normalization: f64,
    /// Bound on `‖O² − 𝟙‖` for dichotomic observables.
    pub projective: f64,
}

pub const TOL: Tolerances = Tolerances {
    hermiticity: 1e-12,
    psd_slack: 1e-10,
    reconstruction: 1e-9,
    normalization: 1e-10,
    projective: 1e-9,
};

impl Default for Tolerances {
    fn default() -> Self {
        TOL
    }
}

/// Dense complex matrix in row-major order.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows * cols != data.len() {
            return Err(Error::Config(format!(
                "matrix of shape {rows}x{cols} needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(ComplexMatrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        ComplexMatrix {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        ComplexMatrix { rows, cols, data }
    }

    /// Builds a matrix from real row-major entries.
    ///
    /// Panics if `entries.len() != rows * cols`.
    pub fn from_real(rows: usize, cols: usize, entries: &[f64]) -> Self {
        assert_eq!(entries.len(), rows * cols, "entry count mismatch");
        ComplexMatrix {
            rows,
            cols,
            data: entries.iter().map(|&x| C64::new(x, 0.0)).collect(),
        }
    }

    pub fn diag_real(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n, n);
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = C64::new(v, 0.0);
        }
        m
    }

    /// Rank-one projector `|v⟩⟨v|` (not normalized).
    pub fn projector(v: &[C64]) -> Self {
        Self::from_fn(v.len(), v.len(), |i, j| v[i] * v[j].conj())
    }

    /// Computational basis projector `|k⟩⟨k|` of dimension `n`.
    pub fn basis_projector(n: usize, k: usize) -> Self {
        let mut m = Self::zeros(n, n);
        m[(k, k)] = ONE;
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Side length of a square matrix.
    pub fn dim(&self) -> usize {
        debug_assert!(self.is_square());
        self.rows
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, s: C64) -> Self {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest elementwise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `max |M - M†|` elementwise; infinite for non-square input.
    pub fn hermiticity_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol
    }

    /// `(M + M†) / 2`.
    pub fn hermitian_part(&self) -> Self {
        let adj = self.adjoint();
        (self + &adj).scale_real(0.5)
    }

    /// `Tr(self · other)` without forming the product.
    pub fn trace_product(&self, other: &Self) -> C64 {
        assert_eq!(self.cols, other.rows);
        assert_eq!(self.rows, other.cols);
        let mut acc = ZERO;
        for i in 0..self.rows {
            for k in 0..self.cols {
                acc += self[(i, k)] * other[(k, i)];
            }
        }
        acc
    }

    /// `⟨v| M |v⟩`.
    pub fn expectation(&self, v: &[C64]) -> C64 {
        assert_eq!(v.len(), self.cols);
        let mut acc = ZERO;
        for i in 0..self.rows {
            let mut row = ZERO;
            for j in 0..self.cols {
                row += self[(i, j)] * v[j];
            }
            acc += v[i].conj() * row;
        }
        acc
    }

    /// `U · self · U†`.
    pub fn conjugate_by(&self, u: &Self) -> Self {
        &(u * self) * &u.adjoint()
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:>+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl<'a> Add<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch in add");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl<'a> Sub<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch in sub");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        self.scale_real(-1.0)
    }
}

impl AddAssign<&ComplexMatrix> for ComplexMatrix {
    fn add_assign(&mut self, rhs: &ComplexMatrix) {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch in add");
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a += b;
        }
    }
}

impl<'a> Mul<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.cols, rhs.rows, "shape mismatch in mul");
        let mut out = ComplexMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                for j in 0..rhs.cols {
                    out.data[i * rhs.cols + j] += a * rhs.data[k * rhs.cols + j];
                }
            }
        }
        out
    }
}

impl Serialize for ComplexMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.rows))?;
        for i in 0..self.rows {
            let row: Vec<[f64; 2]> = (0..self.cols)
                .map(|j| {
                    let z = self[(i, j)];
                    [z.re, z.im]
                })
                .collect();
            seq.serialize_element(&row)?;
        }
        seq.end()
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let rows: Vec<Vec<[f64; 2]>> = Vec::deserialize(deserializer)?;
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        if n_rows == 0 || n_cols == 0 {
            return Err(de::Error::custom("matrix must be non-empty"));
        }
        let mut data = Vec::with_capacity(n_rows * n_cols);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n_cols {
                return Err(de::Error::custom(format!(
                    "ragged matrix: row {i} has {} entries, expected {n_cols}",
                    row.len()
                )));
            }
            data.extend(row.iter().map(|&[re, im]| C64::new(re, im)));
        }
        Ok(ComplexMatrix {
            rows: n_rows,
            cols: n_cols,
            data,
        })
    }
}

/// Local dimensions of a tensor-product Hilbert space, outermost first.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct SubsystemDims(Vec<usize>);

impl SubsystemDims {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::Config("subsystem dimension list is empty".into()));
        }
        if let Some(d) = dims.iter().find(|&&d| d < 2) {
            return Err(Error::Config(format!("subsystem dimension {d} is below 2")));
        }
        Ok(SubsystemDims(dims))
    }

    pub fn qubits(n: usize) -> Self {
        SubsystemDims(vec![2; n])
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> usize {
        self.0.iter().product()
    }

    /// Dimensions reordered so that output slot `k` holds subsystem `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        check_permutation(perm, self.len())?;
        Ok(SubsystemDims(perm.iter().map(|&p| self.0[p]).collect()))
    }

    fn check_matrix(&self, m: &ComplexMatrix) -> Result<()> {
        if !m.is_square() {
            return Err(Error::Config(format!(
                "expected a square matrix, got {}x{}",
                m.rows(),
                m.cols()
            )));
        }
        if m.rows() != self.total() {
            return Err(Error::Config(format!(
                "matrix dimension {} does not match subsystem dims {:?} (product {})",
                m.rows(),
                self.0,
                self.total()
            )));
        }
        Ok(())
    }

    /// Mixed-radix digits of a flat index, outermost subsystem first.
    fn digits(&self, mut index: usize, out: &mut [usize]) {
        for (slot, &d) in out.iter_mut().zip(&self.0).rev() {
            *slot = index % d;
            index /= d;
        }
    }
}

impl TryFrom<Vec<usize>> for SubsystemDims {
    type Error = Error;
    fn try_from(v: Vec<usize>) -> Result<Self> {
        SubsystemDims::new(v)
    }
}

impl From<SubsystemDims> for Vec<usize> {
    fn from(d: SubsystemDims) -> Vec<usize> {
        d.0
    }
}

fn check_permutation(perm: &[usize], n: usize) -> Result<()> {
    if perm.len() != n {
        return Err(Error::Config(format!(
            "permutation {perm:?} has length {}, expected {n}",
            perm.len()
        )));
    }
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n || seen[p] {
            return Err(Error::Config(format!("{perm:?} is not a permutation of 0..{n}")));
        }
        seen[p] = true;
    }
    Ok(())
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (ra, ca, rb, cb) = (a.rows, a.cols, b.rows, b.cols);
    let mut out = ComplexMatrix::zeros(ra * rb, ca * cb);
    for i in 0..ra {
        for j in 0..ca {
            let s = a[(i, j)];
            if s == ZERO {
                continue;
            }
            for k in 0..rb {
                for l in 0..cb {
                    out[(i * rb + k, j * cb + l)] = s * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Kronecker product of a list of matrices, left to right.
pub fn kron_all<'a>(factors: impl IntoIterator<Item = &'a ComplexMatrix>) -> ComplexMatrix {
    factors
        .into_iter()
        .fold(ComplexMatrix::identity(1), |acc, m| kron(&acc, m))
}

/// Kronecker product of state vectors.
pub fn kron_vec(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter().flat_map(|&x| b.iter().map(move |&y| x * y)).collect()
}

/// Traces out every subsystem not listed in `keep`.
///
/// The kept subsystems appear in the result in their original order,
/// regardless of the order of `keep`.
pub fn partial_trace(m: &ComplexMatrix, dims: &SubsystemDims, keep: &[usize]) -> Result<ComplexMatrix> {
    dims.check_matrix(m)?;
    let n = dims.len();
    let mut kept = vec![false; n];
    for &k in keep {
        if k >= n {
            return Err(Error::Config(format!(
                "subsystem index {k} out of range for {n} subsystems"
            )));
        }
        if kept[k] {
            return Err(Error::Config(format!("subsystem index {k} listed twice")));
        }
        kept[k] = true;
    }

    let full = dims.total();
    let kept_dim: usize = (0..n).filter(|&s| kept[s]).map(|s| dims.0[s]).product();

    // Split every flat index into (kept index, traced index).
    let mut split = Vec::with_capacity(full);
    let mut digits = vec![0; n];
    for idx in 0..full {
        dims.digits(idx, &mut digits);
        let (mut k, mut t) = (0, 0);
        for s in 0..n {
            if kept[s] {
                k = k * dims.0[s] + digits[s];
            } else {
                t = t * dims.0[s] + digits[s];
            }
        }
        split.push((k, t));
    }

    let mut out = ComplexMatrix::zeros(kept_dim, kept_dim);
    for i in 0..full {
        let (ki, ti) = split[i];
        for j in 0..full {
            let (kj, tj) = split[j];
            if ti == tj {
                out[(ki, kj)] += m[(i, j)];
            }
        }
    }
    Ok(out)
}

/// Reorders tensor factors: output subsystem `k` is input subsystem `perm[k]`.
///
/// Equivalent to `P m P†` for the permutation unitary `P`; the reordered
/// dimensions are `dims.permuted(perm)`.
pub fn permute_subsystems(m: &ComplexMatrix, dims: &SubsystemDims, perm: &[usize]) -> Result<ComplexMatrix> {
    dims.check_matrix(m)?;
    let map = permutation_map(dims, perm)?;
    let full = dims.total();
    let mut out = ComplexMatrix::zeros(full, full);
    for i in 0..full {
        for j in 0..full {
            out[(map[i], map[j])] = m[(i, j)];
        }
    }
    Ok(out)
}

/// Same reordering applied to a state vector.
pub fn permute_vector(v: &[C64], dims: &SubsystemDims, perm: &[usize]) -> Result<Vec<C64>> {
    if v.len() != dims.total() {
        return Err(Error::Config(format!(
            "vector length {} does not match dims {:?}",
            v.len(),
            dims.0
        )));
    }
    let map = permutation_map(dims, perm)?;
    let mut out = vec![ZERO; v.len()];
    for (i, &z) in v.iter().enumerate() {
        out[map[i]] = z;
    }
    Ok(out)
}

fn permutation_map(dims: &SubsystemDims, perm: &[usize]) -> Result<Vec<usize>> {
    let out_dims = dims.permuted(perm)?;
    let n = dims.len();
    let mut digits = vec![0; n];
    let mut map = Vec::with_capacity(dims.total());
    for idx in 0..dims.total() {
        dims.digits(idx, &mut digits);
        let mut o = 0;
        for k in 0..n {
            o = o * out_dims.0[k] + digits[perm[k]];
        }
        map.push(o);
    }
    Ok(map)
}

/// Partial transpose of the subsystems listed in `which`.
pub fn partial_transpose(m: &ComplexMatrix, dims: &SubsystemDims, which: &[usize]) -> Result<ComplexMatrix> {
    dims.check_matrix(m)?;
    let n = dims.len();
    if let Some(&bad) = which.iter().find(|&&w| w >= n) {
        return Err(Error::Config(format!("subsystem index {bad} out of range")));
    }
    let full = dims.total();
    let mut di = vec![0; n];
    let mut dj = vec![0; n];
    let mut out = ComplexMatrix::zeros(full, full);
    let flat = |d: &[usize]| d.iter().zip(&dims.0).fold(0, |acc, (&x, &r)| acc * r + x);
    for i in 0..full {
        dims.digits(i, &mut di);
        for j in 0..full {
            dims.digits(j, &mut dj);
            let (mut ti, mut tj) = (di.clone(), dj.clone());
            for &w in which {
                std::mem::swap(&mut ti[w], &mut tj[w]);
            }
            out[(flat(&ti), flat(&tj))] = m[(i, j)];
        }
    }
    Ok(out)
}

/// Eigendecomposition `M = V diag(values) V†` of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    /// Eigenvalues, descending.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors as columns, matching `values`.
    pub vectors: ComplexMatrix,
}

impl HermitianEigen {
    pub fn reconstruct(&self) -> ComplexMatrix {
        self.map_spectrum(|x| x)
    }

    /// `V f(Λ) V†`.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let fd: Vec<f64> = self.values.iter().map(|&x| f(x)).collect();
        let v = &self.vectors;
        let n = v.rows();
        ComplexMatrix::from_fn(n, n, |i, j| (0..n).map(|k| v[(i, k)] * fd[k] * v[(j, k)].conj()).sum())
    }

    pub fn max(&self) -> f64 {
        self.values[0]
    }

    pub fn min(&self) -> f64 {
        *self.values.last().expect("empty spectrum")
    }

    /// Eigenvector belonging to the largest eigenvalue.
    pub fn leading_vector(&self) -> Vec<C64> {
        self.vectors.column(0)
    }
}

const JACOBI_MAX_SWEEPS: usize = 100;

/// Cyclic complex Jacobi eigensolver for Hermitian matrices.
///
/// The Hermiticity check is relative: `max |M − M†| ≤ 1e-12 · max(1, max|M|)`.
pub fn hermitian_eig(m: &ComplexMatrix) -> Result<HermitianEigen> {
    if !m.is_square() {
        return Err(Error::Precondition(format!(
            "eigensolver needs a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    let scale = m.max_abs().max(1.0);
    let defect = m.hermiticity_defect();
    if defect > TOL.hermiticity * scale {
        return Err(Error::Precondition(format!(
            "matrix is not Hermitian (max |M - M†| = {defect:.3e})"
        )));
    }

    let n = m.rows();
    let mut a = m.hermitian_part();
    let mut v = ComplexMatrix::identity(n);
    let frob = a.frobenius_norm();

    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * frob {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                jacobi_rotate(&mut a, &mut v, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].re.total_cmp(&a[(i, i)].re));
    let values = order.iter().map(|&k| a[(k, k)].re).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    Ok(HermitianEigen { values, vectors })
}

/// Annihilates `a[p][q]` with a unitary acting on the (p, q) plane.
fn jacobi_rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let mag = apq.norm();
    if mag == 0.0 {
        return;
    }
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    // Phase that makes the off-diagonal entry real and positive.
    let phase = (apq / mag).conj();

    let theta = (aqq - app) / (2.0 * mag);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let t = if theta == 0.0 { 1.0 } else { t };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    // J = diag(1, phase) · R(c, s); columns p and q.
    let jpp = C64::new(c, 0.0);
    let jpq = C64::new(s, 0.0);
    let jqp = phase * -s;
    let jqq = phase * c;

    let n = a.rows();
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * jpp + akq * jqp;
        a[(k, q)] = akp * jpq + akq * jqq;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = jpp.conj() * apk + jqp.conj() * aqk;
        a[(q, k)] = jpq.conj() * apk + jqq.conj() * aqk;
    }
    a[(p, q)] = ZERO;
    a[(q, p)] = ZERO;
    a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = C64::new(a[(q, q)].re, 0.0);

    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * jpp + vkq * jqp;
        v[(k, q)] = vkp * jpq + vkq * jqq;
    }
}

/// Sum of absolute eigenvalues of a Hermitian matrix.
pub fn trace_norm(m: &ComplexMatrix) -> Result<f64> {
    Ok(hermitian_eig(m)?.values.iter().map(|x| x.abs()).sum())
}

pub fn min_eigenvalue(m: &ComplexMatrix) -> Result<f64> {
    Ok(hermitian_eig(m)?.min())
}

/// Outcome of [`validate_povm`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PovmDiagnostics {
    pub valid: bool,
    /// Smallest eigenvalue of each element (NaN when it could not be computed).
    pub min_eigenvalues: Vec<f64>,
    /// `max |Σ N_e − 𝟙|` elementwise.
    pub completeness_error: f64,
    pub issues: Vec<String>,
}

/// Checks positivity of each element and completeness `Σ N_e = 𝟙`.
pub fn validate_povm(elements: &[ComplexMatrix]) -> PovmDiagnostics {
    let mut issues = Vec::new();
    let Some(first) = elements.first() else {
        return PovmDiagnostics {
            valid: false,
            min_eigenvalues: vec![],
            completeness_error: f64::INFINITY,
            issues: vec!["empty POVM".into()],
        };
    };
    let n = first.rows();
    let mut min_eigenvalues = Vec::with_capacity(elements.len());
    let mut sum = ComplexMatrix::zeros(n, n);
    let mut shapes_ok = true;
    for (k, e) in elements.iter().enumerate() {
        if e.rows() != n || e.cols() != n {
            issues.push(format!(
                "element {k} has shape {}x{}, expected {n}x{n}",
                e.rows(),
                e.cols()
            ));
            shapes_ok = false;
            min_eigenvalues.push(f64::NAN);
            continue;
        }
        sum += e;
        match hermitian_eig(e) {
            Ok(eig) => {
                let lo = eig.min();
                if lo < -TOL.psd_slack {
                    issues.push(format!("element {k} is not PSD (min eigenvalue {lo:.3e})"));
                }
                min_eigenvalues.push(lo);
            }
            Err(err) => {
                issues.push(format!("element {k}: {err}"));
                min_eigenvalues.push(f64::NAN);
            }
        }
    }
    let completeness_error = if shapes_ok {
        sum.max_abs_diff(&ComplexMatrix::identity(n))
    } else {
        f64::INFINITY
    };
    if completeness_error > TOL.normalization {
        issues.push(format!(
            "elements do not sum to identity (max deviation {completeness_error:.3e})"
        ));
    }
    PovmDiagnostics {
        valid: issues.is_empty(),
        min_eigenvalues,
        completeness_error,
        issues,
    }
}

/// Pauli matrices and other fixed operators.
pub mod pauli {
    use super::{ComplexMatrix, C64};

    pub fn x() -> ComplexMatrix {
        ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0])
    }

    pub fn y() -> ComplexMatrix {
        ComplexMatrix::new(
            2,
            2,
            vec![
                C64::new(0.0, 0.0),
                C64::new(0.0, -1.0),
                C64::new(0.0, 1.0),
                C64::new(0.0, 0.0),
            ],
        )
        .expect("2x2")
    }

    pub fn z() -> ComplexMatrix {
        ComplexMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, -1.0])
    }
}
