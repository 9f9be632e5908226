//! Dense complex matrices and the small set of factorizations used across the crate.
//!
//! Storage is row-major. Products go through `matrixmultiply::zgemm`; Hermitian
//! eigenproblems go to faer, Schur forms and determinants to nalgebra.

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub};

use matrixmultiply::CGemmOption;
use nalgebra::DMatrix;
use num_complex::Complex64;

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CMat {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMat { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for col in 0..cols {
                data.push(f(r, col));
            }
        }
        CMat { rows, cols, data }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Self {
        assert_eq!(data.len(), rows * cols, "data length does not match shape");
        CMat { rows, cols, data }
    }

    /// Build from nested rows of real parts.
    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let cols = rows.first().map_or(0, |x| x.len());
        Self::from_fn(r, cols, |i, j| C64::new(rows[i][j], 0.0))
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Self {
        let r = rows.len();
        let cols = rows.first().map_or(0, |x| x.len());
        Self::from_fn(r, cols, |i, j| rows[i][j])
    }

    pub fn diag(values: &[C64]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n, n);
        for (i, v) in values.iter().enumerate() {
            m.data[i * n + i] = *v;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dim(&self) -> usize {
        debug_assert_eq!(self.rows, self.cols);
        self.rows
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn row(&self, r: usize) -> &[C64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, col: usize) -> Vec<C64> {
        (0..self.rows).map(|r| self[(r, col)]).collect()
    }

    pub fn matmul(&self, other: &CMat) -> CMat {
        assert_eq!(self.cols, other.rows, "inner dimensions differ");
        let mut out = CMat::zeros(self.rows, other.cols);
        if self.rows == 0 || other.cols == 0 || self.cols == 0 {
            return out;
        }
        // SAFETY: Complex64 is repr(C) with layout [re, im], matching [f64; 2].
        unsafe {
            matrixmultiply::zgemm(
                CGemmOption::Standard,
                CGemmOption::Standard,
                self.rows,
                self.cols,
                other.cols,
                [1.0, 0.0],
                self.data.as_ptr() as *const [f64; 2],
                self.cols as isize,
                1,
                other.data.as_ptr() as *const [f64; 2],
                other.cols as isize,
                1,
                [0.0, 0.0],
                out.data.as_mut_ptr() as *mut [f64; 2],
                out.cols as isize,
                1,
            );
        }
        out
    }

    pub fn matvec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|r| self.row(r).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn adjoint(&self) -> CMat {
        CMat::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> CMat {
        CMat::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn scale(&self, s: C64) -> CMat {
        CMat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|x| x * s).collect() }
    }

    pub fn scale_real(&self, s: f64) -> CMat {
        self.scale(C64::new(s, 0.0))
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn kron(&self, other: &CMat) -> CMat {
        let (r2, c2) = (other.rows, other.cols);
        CMat::from_fn(self.rows * r2, self.cols * c2, |i, j| {
            self[(i / r2, j / c2)] * other[(i % r2, j % c2)]
        })
    }

    pub fn commutator(&self, other: &CMat) -> CMat {
        &self.matmul(other) - &other.matmul(self)
    }

    pub fn anticommutator(&self, other: &CMat) -> CMat {
        &self.matmul(other) + &other.matmul(self)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }

    /// Maximum absolute column sum.
    pub fn norm_1(&self) -> f64 {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self[(i, j)].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|x| x.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Cheap upper bound on the spectral norm: min(‖A‖_F, sqrt(‖A‖_1 ‖A‖_∞)).
    pub fn spectral_norm_upper(&self) -> f64 {
        self.frobenius_norm().min((self.norm_1() * self.norm_inf()).sqrt())
    }

    /// Exact spectral norm via the largest eigenvalue of A†A.
    pub fn spectral_norm(&self) -> f64 {
        if self.data.is_empty() {
            return 0.0;
        }
        let upper = self.spectral_norm_upper();
        if upper == 0.0 {
            return 0.0;
        }
        // Rescale so tiny residuals keep full relative precision.
        let a = self.scale_real(1.0 / upper);
        let gram = if a.rows >= a.cols { a.adjoint().matmul(&a) } else { a.matmul(&a.adjoint()) };
        let (vals, _) = eigh(&gram);
        let top = vals.iter().cloned().fold(0.0, f64::max);
        top.max(0.0).sqrt() * upper
    }

    /// Spectral norm for pass/fail decisions: exact up to `exact_limit`, otherwise
    /// the certified upper bound is returned unless it exceeds `tol`, in which
    /// case the exact value is computed anyway.
    pub fn residual_norm(&self, tol: f64) -> f64 {
        const EXACT_LIMIT: usize = 64;
        if self.rows.max(self.cols) <= EXACT_LIMIT {
            return self.spectral_norm();
        }
        let upper = self.spectral_norm_upper();
        if upper < tol {
            upper
        } else {
            self.spectral_norm()
        }
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.rows == self.cols && (self - &self.adjoint()).max_abs() <= tol
    }

    pub fn unitarity_defect(&self) -> f64 {
        (&self.adjoint().matmul(self) - &CMat::identity(self.cols)).max_abs()
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.rows == self.cols && self.unitarity_defect() <= tol
    }

    pub fn powi(&self, mut e: u64) -> CMat {
        let mut base = self.clone();
        let mut acc = CMat::identity(self.rows);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.matmul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.matmul(&base);
            }
        }
        acc
    }

    pub fn to_nalgebra(&self) -> DMatrix<C64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    pub fn from_nalgebra(m: &DMatrix<C64>) -> CMat {
        CMat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
    }
}

impl Index<(usize, usize)> for CMat {
    type Output = C64;
    fn index(&self, (r, col): (usize, usize)) -> &C64 {
        &self.data[r * self.cols + col]
    }
}

impl IndexMut<(usize, usize)> for CMat {
    fn index_mut(&mut self, (r, col): (usize, usize)) -> &mut C64 {
        &mut self.data[r * self.cols + col]
    }
}

impl<'a> Add<&'a CMat> for &'a CMat {
    type Output = CMat;
    fn add(self, rhs: &CMat) -> CMat {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl<'a> Sub<&'a CMat> for &'a CMat {
    type Output = CMat;
    fn sub(self, rhs: &CMat) -> CMat {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl AddAssign<&CMat> for CMat {
    fn add_assign(&mut self, rhs: &CMat) {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a += b;
        }
    }
}

impl<'a> Mul<&'a CMat> for &'a CMat {
    type Output = CMat;
    fn mul(self, rhs: &CMat) -> CMat {
        self.matmul(rhs)
    }
}

impl Neg for &CMat {
    type Output = CMat;
    fn neg(self) -> CMat {
        self.scale_real(-1.0)
    }
}

/// Eigen-decomposition of a Hermitian matrix: ascending eigenvalues and the
/// matrix whose columns are the eigenvectors. Only the lower triangle is read.
pub fn eigh(h: &CMat) -> (Vec<f64>, CMat) {
    let n = h.dim();
    if n == 0 {
        return (Vec::new(), CMat::zeros(0, 0));
    }
    let m = faer::Mat::<C64>::from_fn(n, n, |i, j| h[(i, j)]);
    let eig = m.self_adjoint_eigen(faer::Side::Lower).expect("Hermitian eigensolver converges");
    let (u, s) = (eig.U(), eig.S());
    let vals = (0..n).map(|i| s[i].re).collect();
    (vals, CMat::from_fn(n, n, |i, j| u[(i, j)]))
}

/// exp(−i·θ·H) for Hermitian H.
pub fn expm_herm(h: &CMat, theta: f64) -> CMat {
    let (vals, v) = eigh(h);
    let phases: Vec<C64> = vals.iter().map(|e| C64::from_polar(1.0, -theta * e)).collect();
    let n = h.dim();
    let scaled = CMat::from_fn(n, n, |i, j| v[(i, j)] * phases[j]);
    scaled.matmul(&v.adjoint())
}

/// Complex Schur decomposition A = Q T Q†.
pub fn schur(a: &CMat) -> (CMat, CMat) {
    let (q, t) = nalgebra::Schur::new(a.to_nalgebra()).unpack();
    (CMat::from_nalgebra(&q), CMat::from_nalgebra(&t))
}

/// Eigenvalues of a general square matrix (diagonal of its Schur form).
pub fn eigvals(a: &CMat) -> Vec<C64> {
    let (_, t) = schur(a);
    (0..t.dim()).map(|i| t[(i, i)]).collect()
}

/// Eigenphases in (−π, π] of a unitary matrix, sorted ascending.
pub fn eigenphases(u: &CMat) -> Vec<f64> {
    let mut ph: Vec<f64> = eigvals(u).iter().map(|z| principal_arg(*z)).collect();
    ph.sort_by(f64::total_cmp);
    ph
}

/// Argument mapped into (−π, π].
pub fn principal_arg(z: C64) -> f64 {
    let a = z.arg();
    if a <= -std::f64::consts::PI {
        a + 2.0 * std::f64::consts::PI
    } else {
        a
    }
}

/// Hermitian H with exp(−iH) = U, eigenphases taken in (−π, π].
///
/// Uses the Schur form, which is diagonal for normal matrices up to rounding.
pub fn log_unitary_generator(u: &CMat) -> CMat {
    let (q, t) = schur(u);
    let n = u.dim();
    // Phases within rounding of −π are moved to +π so a degenerate −1
    // eigenspace is never split across the branch cut.
    let phases: Vec<f64> = (0..n)
        .map(|i| {
            let a = principal_arg(t[(i, i)]);
            if a < -std::f64::consts::PI + 1e-9 {
                a + 2.0 * std::f64::consts::PI
            } else {
                a
            }
        })
        .collect();
    // U = Q diag(e^{iφ}) Q†  ⇒  H = −Q diag(φ) Q†.
    let scaled = CMat::from_fn(n, n, |i, j| q[(i, j)] * (-phases[j]));
    let h = scaled.matmul(&q.adjoint());
    CMat::from_fn(n, n, |i, j| 0.5 * (h[(i, j)] + h[(j, i)].conj()))
}

pub fn determinant(a: &CMat) -> C64 {
    match a.dim() {
        0 => ONE,
        1 => a[(0, 0)],
        2 => a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)],
        _ => a.to_nalgebra().determinant(),
    }
}

pub fn vec_norm(v: &[C64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn vec_sub_norm(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}

/// |⟨a|b⟩|² for normalized vectors.
pub fn fidelity(a: &[C64], b: &[C64]) -> f64 {
    inner(a, b).norm_sqr()
}

pub fn pauli_x() -> CMat {
    CMat::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])
}

pub fn pauli_y() -> CMat {
    CMat::from_rows(&[vec![ZERO, -I], vec![I, ZERO]])
}

pub fn pauli_z() -> CMat {
    CMat::from_real_rows(&[&[1.0, 0.0], &[0.0, -1.0]])
}
