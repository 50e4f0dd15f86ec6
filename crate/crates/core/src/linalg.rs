//! Dense complex linear algebra.
//!
//! A small owned matrix type plus the handful of factorizations the rest of
//! the crate needs: singular values and the smallest singular triplet,
//! eigenvalues of general and Hermitian matrices, and linear solves. The
//! kernels come from `faer` built without its thread pool, so every call is
//! sequential and bitwise reproducible on a given machine.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use faer::Mat;
use thiserror::Error;

/// Complex double precision scalar.
pub type C64 = num_complex::Complex64;

/// Imaginary unit.
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix has a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix has no entries")]
    Empty,
    #[error("eigenvalue iteration did not converge for a matrix of order {order}")]
    EigenNoConvergence { order: usize },
    #[error("singular value iteration did not converge for a {rows}x{cols} matrix")]
    SvdNoConvergence { rows: usize, cols: usize },
    #[error("matrix is numerically singular")]
    Singular,
}

/// Owned dense complex matrix.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    inner: Mat<C64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows(), self.cols())?;
        for i in 0..self.rows() {
            write!(f, "  ")?;
            for j in 0..self.cols() {
                let z = self.get(i, j);
                write!(f, "{:+.6e}{:+.6e}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl ComplexMatrix {
    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Self { inner: Mat::from_fn(rows, cols, f) }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |_, _| C64::new(0.0, 0.0))
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) })
    }

    /// Row-major construction. Fails on ragged input.
    pub fn from_rows<R: AsRef<[C64]>>(rows: &[R]) -> Result<Self, LinalgError> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.as_ref().len());
        if let Some(bad) = rows.iter().position(|r| r.as_ref().len() != ncols) {
            return Err(LinalgError::DimensionMismatch(format!(
                "row {bad} has {} entries, expected {ncols}",
                rows[bad].as_ref().len()
            )));
        }
        Ok(Self::from_fn(nrows, ncols, |i, j| rows[i].as_ref()[j]))
    }

    pub fn from_real_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self, LinalgError> {
        let c: Vec<Vec<C64>> = rows
            .iter()
            .map(|r| r.as_ref().iter().map(|&x| C64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&c)
    }

    /// Column-major construction from a flat slice.
    pub fn from_col_major(rows: usize, cols: usize, data: &[C64]) -> Result<Self, LinalgError> {
        if data.len() != rows * cols {
            return Err(LinalgError::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self::from_fn(rows, cols, |i, j| data[j * rows + i]))
    }

    pub fn from_diag(d: &[C64]) -> Self {
        let n = d.len();
        Self::from_fn(n, n, |i, j| if i == j { d[i] } else { C64::new(0.0, 0.0) })
    }

    pub fn from_real_diag(d: &[f64]) -> Self {
        let c: Vec<C64> = d.iter().map(|&x| C64::new(x, 0.0)).collect();
        Self::from_diag(&c)
    }

    /// `[[a, b], [c, d]]` from four blocks of compatible sizes.
    pub fn block2x2(
        a: &ComplexMatrix,
        b: &ComplexMatrix,
        c: &ComplexMatrix,
        d: &ComplexMatrix,
    ) -> Result<Self, LinalgError> {
        if a.rows() != b.rows() || c.rows() != d.rows() || a.cols() != c.cols() || b.cols() != d.cols() {
            return Err(LinalgError::DimensionMismatch(format!(
                "blocks {}x{}, {}x{}, {}x{}, {}x{} do not tile",
                a.rows(),
                a.cols(),
                b.rows(),
                b.cols(),
                c.rows(),
                c.cols(),
                d.rows(),
                d.cols()
            )));
        }
        let (r0, c0) = (a.rows(), a.cols());
        Ok(Self::from_fn(r0 + c.rows(), c0 + b.cols(), |i, j| match (i < r0, j < c0) {
            (true, true) => a.get(i, j),
            (true, false) => b.get(i, j - c0),
            (false, true) => c.get(i - r0, j),
            (false, false) => d.get(i - r0, j - c0),
        }))
    }

    /// `[self, other]`.
    pub fn hstack(&self, other: &ComplexMatrix) -> Result<Self, LinalgError> {
        if self.rows() != other.rows() {
            return Err(LinalgError::DimensionMismatch(format!(
                "cannot place a {}-row block beside a {}-row block",
                other.rows(),
                self.rows()
            )));
        }
        let c0 = self.cols();
        Ok(Self::from_fn(self.rows(), c0 + other.cols(), |i, j| {
            if j < c0 {
                self.get(i, j)
            } else {
                other.get(i, j - c0)
            }
        }))
    }

    pub fn rows(&self) -> usize {
        self.inner.nrows()
    }

    pub fn cols(&self) -> usize {
        self.inner.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.inner[(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.inner[(i, j)] = v;
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols(), self.rows(), |i, j| self.get(j, i).conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols(), self.rows(), |i, j| self.get(j, i))
    }

    pub fn scale(&self, s: C64) -> Self {
        Self::from_fn(self.rows(), self.cols(), |i, j| s * self.get(i, j))
    }

    /// `self + s I`. Panics if not square.
    pub fn shift(&self, s: C64) -> Self {
        assert!(self.is_square(), "shift of a non-square matrix");
        Self::from_fn(self.rows(), self.cols(), |i, j| {
            if i == j {
                self.get(i, j) + s
            } else {
                self.get(i, j)
            }
        })
    }

    pub fn try_mul(&self, rhs: &ComplexMatrix) -> Result<Self, LinalgError> {
        if self.cols() != rhs.rows() {
            return Err(LinalgError::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows(),
                self.cols(),
                rhs.rows(),
                rhs.cols()
            )));
        }
        Ok(Self { inner: &self.inner * &rhs.inner })
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.cols(), "vector length mismatch");
        (0..self.rows())
            .map(|i| (0..self.cols()).map(|j| self.get(i, j) * v[j]).sum())
            .collect()
    }

    pub fn norm_fro(&self) -> f64 {
        self.inner.norm_l2()
    }

    /// Largest column sum.
    pub fn norm_one(&self) -> f64 {
        (0..self.cols())
            .map(|j| (0..self.rows()).map(|i| self.get(i, j).norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Spectral norm.
    pub fn norm2(&self) -> Result<f64, LinalgError> {
        Ok(singular_values(self)?.first().copied().unwrap_or(0.0))
    }

    pub fn max_abs(&self) -> f64 {
        let mut m: f64 = 0.0;
        for j in 0..self.cols() {
            for i in 0..self.rows() {
                m = m.max(self.get(i, j).norm());
            }
        }
        m
    }

    /// Every imaginary part is at most `tol` times the largest entry.
    pub fn is_real(&self, tol: f64) -> bool {
        let s = self.max_abs();
        (0..self.cols()).all(|j| (0..self.rows()).all(|i| self.get(i, j).im.abs() <= tol * s))
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        if !self.is_square() {
            return false;
        }
        let s = self.max_abs();
        (0..self.rows()).all(|i| (0..=i).all(|j| (self.get(i, j) - self.get(j, i).conj()).norm() <= tol * s))
    }

    pub fn validate_finite(&self) -> Result<(), LinalgError> {
        for j in 0..self.cols() {
            for i in 0..self.rows() {
                let z = self.get(i, j);
                if !z.re.is_finite() || !z.im.is_finite() {
                    return Err(LinalgError::NonFinite { row: i, col: j });
                }
            }
        }
        Ok(())
    }

    /// Entries in row-major order.
    pub fn to_rows(&self) -> Vec<Vec<C64>> {
        (0..self.rows()).map(|i| (0..self.cols()).map(|j| self.get(i, j)).collect()).collect()
    }

    pub fn as_faer(&self) -> &Mat<C64> {
        &self.inner
    }

    pub fn from_faer(inner: Mat<C64>) -> Self {
        Self { inner }
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows(), self.cols()), (rhs.rows(), rhs.cols()), "dimension mismatch in add");
        ComplexMatrix { inner: &self.inner + &rhs.inner }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows(), self.cols()), (rhs.rows(), rhs.cols()), "dimension mismatch in sub");
        ComplexMatrix { inner: &self.inner - &rhs.inner }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.try_mul(rhs).expect("dimension mismatch in mul")
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        self.scale(C64::new(-1.0, 0.0))
    }
}

/// Smallest singular value with its left and right singular vectors.
///
/// `sigma_next` is the next singular value up when there is one, used to
/// flag points where `sigma` is not simple.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularTriplet {
    pub sigma: f64,
    pub u: Vec<C64>,
    pub v: Vec<C64>,
    pub sigma_next: Option<f64>,
}

fn check_nonempty(m: &ComplexMatrix) -> Result<(), LinalgError> {
    if m.rows() == 0 || m.cols() == 0 {
        return Err(LinalgError::Empty);
    }
    m.validate_finite()
}

/// Singular values in nonincreasing order.
pub fn singular_values(m: &ComplexMatrix) -> Result<Vec<f64>, LinalgError> {
    check_nonempty(m)?;
    m.inner
        .singular_values()
        .map_err(|_| LinalgError::SvdNoConvergence { rows: m.rows(), cols: m.cols() })
}

/// Smallest of the `min(rows, cols)` singular values, with vectors.
pub fn smallest_singular_triplet(m: &ComplexMatrix) -> Result<SingularTriplet, LinalgError> {
    check_nonempty(m)?;
    let svd = m
        .inner
        .thin_svd()
        .map_err(|_| LinalgError::SvdNoConvergence { rows: m.rows(), cols: m.cols() })?;
    let k = m.rows().min(m.cols());
    let s = svd.S().column_vector();
    let sigma = s[k - 1].re;
    let sigma_next = if k >= 2 { Some(s[k - 2].re) } else { None };
    let u = (0..m.rows()).map(|i| svd.U()[(i, k - 1)]).collect();
    let v = (0..m.cols()).map(|i| svd.V()[(i, k - 1)]).collect();
    Ok(SingularTriplet { sigma, u, v, sigma_next })
}

/// 2-norm condition number; infinite when the smallest singular value is zero.
pub fn cond2(m: &ComplexMatrix) -> Result<f64, LinalgError> {
    let s = singular_values(m)?;
    let smin = *s.last().unwrap();
    Ok(if smin == 0.0 { f64::INFINITY } else { s[0] / smin })
}

/// Multiset of eigenvalues.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Spectrum {
    pub values: Vec<C64>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Largest real part.
    pub fn abscissa(&self) -> f64 {
        self.values.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest modulus.
    pub fn radius(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn min_modulus(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min)
    }

    /// Whether some eigenvalue lies within `tol` of `z`.
    pub fn contains(&self, z: C64, tol: f64) -> bool {
        self.values.iter().any(|w| (w - z).norm() <= tol)
    }

    /// Multiset comparison: pairs the two spectra greedily by distance and
    /// checks every pair is within `tol`.
    pub fn matches(&self, other: &Spectrum, tol: f64) -> bool {
        if self.len() != other.len() {
            return false;
        }
        let n = self.len();
        let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(n * n);
        for (i, a) in self.values.iter().enumerate() {
            for (j, b) in other.values.iter().enumerate() {
                pairs.push(((a - b).norm(), i, j));
            }
        }
        pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut used_a = vec![false; n];
        let mut used_b = vec![false; n];
        let mut matched = 0;
        for (d, i, j) in pairs {
            if used_a[i] || used_b[j] {
                continue;
            }
            if d > tol {
                return false;
            }
            used_a[i] = true;
            used_b[j] = true;
            matched += 1;
            if matched == n {
                break;
            }
        }
        matched == n
    }
}

/// Eigenvalues of a general square matrix.
pub fn eigenvalues(m: &ComplexMatrix) -> Result<Spectrum, LinalgError> {
    check_nonempty(m)?;
    if !m.is_square() {
        return Err(LinalgError::DimensionMismatch(format!(
            "eigenvalues of a {}x{} matrix",
            m.rows(),
            m.cols()
        )));
    }
    let values = m
        .inner
        .eigenvalues()
        .map_err(|_| LinalgError::EigenNoConvergence { order: m.rows() })?;
    Ok(Spectrum { values })
}

/// Eigenvalues of a Hermitian matrix in nondecreasing order. Only the lower
/// triangle is read.
pub fn hermitian_eigenvalues(m: &ComplexMatrix) -> Result<Vec<f64>, LinalgError> {
    check_nonempty(m)?;
    if !m.is_square() {
        return Err(LinalgError::DimensionMismatch(format!(
            "eigenvalues of a {}x{} matrix",
            m.rows(),
            m.cols()
        )));
    }
    m.inner
        .self_adjoint_eigenvalues(faer::Side::Lower)
        .map_err(|_| LinalgError::EigenNoConvergence { order: m.rows() })
}

/// `‖AA* − A*A‖_F ≤ tol ‖A‖_F²`.
pub fn is_normal(a: &ComplexMatrix, tol: f64) -> bool {
    let ah = a.adjoint();
    let c = &(a * &ah) - &(&ah * a);
    let s = a.norm_fro();
    c.norm_fro() <= tol * s * s
}

/// Solves `A X = B` by LU with partial pivoting.
pub fn solve(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix, LinalgError> {
    check_nonempty(a)?;
    if !a.is_square() || a.rows() != b.rows() {
        return Err(LinalgError::DimensionMismatch(format!(
            "solve with a {}x{} matrix and a {}x{} right-hand side",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    let s = singular_values(a)?;
    if *s.last().unwrap() <= f64::EPSILON * s[0] {
        return Err(LinalgError::Singular);
    }
    use faer::linalg::solvers::Solve;
    let lu = a.inner.partial_piv_lu();
    Ok(ComplexMatrix { inner: lu.solve(&b.inner) })
}

pub fn determinant(a: &ComplexMatrix) -> Result<C64, LinalgError> {
    check_nonempty(a)?;
    if !a.is_square() {
        return Err(LinalgError::DimensionMismatch("determinant of a non-square matrix".into()));
    }
    Ok(a.inner.determinant())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn diagonal_triplet() {
        let m = ComplexMatrix::from_real_diag(&[3.0, 1.0]);
        let t = smallest_singular_triplet(&m).unwrap();
        assert_relative_eq!(t.sigma, 1.0, epsilon = 1e-15);
        assert_relative_eq!(t.u[1].norm(), 1.0, epsilon = 1e-15);
        assert_relative_eq!(t.v[1].norm(), 1.0, epsilon = 1e-15);
        assert_eq!(t.sigma_next, Some(3.0));
    }

    #[test]
    fn wide_row_triplet() {
        let m = ComplexMatrix::from_real_rows(&[[2.0, 1.0]]).unwrap();
        let t = smallest_singular_triplet(&m).unwrap();
        assert_relative_eq!(t.sigma, 5f64.sqrt(), epsilon = 1e-14);
        let phase = t.v[0] / t.v[0].norm();
        assert_relative_eq!((t.v[0] / phase).re, 2.0 / 5f64.sqrt(), epsilon = 1e-14);
        assert_relative_eq!((t.v[1] / phase).re, 1.0 / 5f64.sqrt(), epsilon = 1e-14);
        assert_eq!(t.sigma_next, None);
    }

    #[test]
    fn nilpotent_eigenvalues() {
        let m = ComplexMatrix::from_real_rows(&[[0.0, 1.0], [0.0, 0.0]]).unwrap();
        let s = eigenvalues(&m).unwrap();
        assert!(s.values.iter().all(|z| z.norm() <= 1e-14));
    }

    #[test]
    fn non_finite_is_rejected() {
        let m = ComplexMatrix::from_real_rows(&[[1.0, f64::NAN], [0.0, 1.0]]).unwrap();
        assert_eq!(smallest_singular_triplet(&m), Err(LinalgError::NonFinite { row: 0, col: 1 }));
        assert!(matches!(eigenvalues(&m), Err(LinalgError::NonFinite { .. })));
    }

    #[test]
    fn ragged_rows_are_rejected() {
        let r = ComplexMatrix::from_rows(&[vec![c(1.0, 0.0)], vec![c(1.0, 0.0), c(2.0, 0.0)]]);
        assert!(matches!(r, Err(LinalgError::DimensionMismatch(_))));
    }

    #[test]
    fn block_assembly() {
        let a = ComplexMatrix::from_real_diag(&[1.0]);
        let b = ComplexMatrix::from_real_diag(&[2.0]);
        let m = ComplexMatrix::block2x2(&a, &b, &b, &a).unwrap();
        assert_eq!(m.to_rows()[0], vec![c(1.0, 0.0), c(2.0, 0.0)]);
        assert_eq!(m.to_rows()[1], vec![c(2.0, 0.0), c(1.0, 0.0)]);
    }

    #[test]
    fn spectrum_matching_respects_multiplicity() {
        let a = Spectrum { values: vec![c(1.0, 0.0), c(1.0, 0.0), c(2.0, 0.0)] };
        let b = Spectrum { values: vec![c(1.0, 0.0), c(2.0, 0.0), c(2.0, 0.0)] };
        assert!(!a.matches(&b, 1e-12));
        assert!(a.matches(&a.clone(), 0.0));
    }

    #[test]
    fn solve_and_determinant() {
        let a = ComplexMatrix::from_rows(&[[c(2.0, 1.0), c(0.0, 1.0)], [c(1.0, 0.0), c(3.0, 0.0)]]).unwrap();
        let x = solve(&a, &ComplexMatrix::identity(2)).unwrap();
        let p = &a * &x;
        assert!((&p - &ComplexMatrix::identity(2)).norm_fro() < 1e-14);
        let d = determinant(&a).unwrap();
        assert!((d - c(6.0, 2.0)).norm() < 1e-14);
    }

    #[test]
    fn normality() {
        assert!(is_normal(&ComplexMatrix::from_real_diag(&[1.0, -2.0]), 1e-14));
        let j = ComplexMatrix::from_real_rows(&[[0.0, 1.0], [0.0, 0.0]]).unwrap();
        assert!(!is_normal(&j, 1e-14));
    }
}
