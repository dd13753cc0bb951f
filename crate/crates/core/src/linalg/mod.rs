//! Dense matrices over the real or complex field, factorizations, and seeded
//! Haar sampling.
//!
//! Every matrix stores complex entries; a [`Field::Real`] tag guarantees that
//! all imaginary parts are exactly zero. Factorizations of real-tagged
//! matrices run in real arithmetic so that results stay real bit-for-bit.

mod decomp;
mod random;

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex;

pub use decomp::{
    column_space, haar_unitary, herm_eig, modified_gram_schmidt, numerical_rank, op_norm, polar_unitary, svd, HermEig,
    Svd,
};
pub use random::RngState;

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

/// Ground field of a matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Field {
    Real,
    Complex,
}

impl Field {
    /// Smallest field containing both.
    pub fn join(self, other: Field) -> Field {
        if self == Field::Complex || other == Field::Complex {
            Field::Complex
        } else {
            Field::Real
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Field::Real => "real",
            Field::Complex => "complex",
        }
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A field-tagged scalar.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Scalar {
    field: Field,
    value: C64,
}

impl Scalar {
    pub fn real(x: f64) -> Self {
        Scalar { field: Field::Real, value: C64::new(x, 0.0) }
    }

    pub fn complex(re: f64, im: f64) -> Self {
        Scalar { field: Field::Complex, value: C64::new(re, im) }
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn value(&self) -> C64 {
        self.value
    }

    pub fn re(&self) -> f64 {
        self.value.re
    }

    pub fn im(&self) -> f64 {
        self.value.im
    }
}

/// Comparison thresholds used by every predicate and factorization.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerance {
    /// Entrywise and value comparisons.
    pub eq_tol: f64,
    /// Relative singular-value cutoff for numerical rank.
    pub rank_tol: f64,
    /// Eigenvalue clustering radius around 0 and 1.
    pub cluster_tol: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { eq_tol: 1e-9, rank_tol: 1e-8, cluster_tol: 1e-8 }
    }
}

impl Tolerance {
    pub fn new(eq_tol: f64, rank_tol: f64, cluster_tol: f64) -> Result<Self> {
        let tol = Tolerance { eq_tol, rank_tol, cluster_tol };
        tol.validate()?;
        Ok(tol)
    }

    /// All tolerances must lie in `(0, 1e-2)`.
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("eq_tol", self.eq_tol), ("rank_tol", self.rank_tol), ("cluster_tol", self.cluster_tol)] {
            if !(v > 0.0 && v < 1e-2) {
                return Err(Error::Domain(format!("{name} = {v} must lie in (0, 1e-2)")));
            }
        }
        Ok(())
    }
}

/// Dense row/column matrix with a field tag.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    field: Field,
    data: DMatrix<C64>,
}

impl Matrix {
    /// Wraps complex data; real-tagged input has its imaginary parts dropped.
    pub fn from_complex(field: Field, mut data: DMatrix<C64>) -> Self {
        if field == Field::Real {
            data.iter_mut().for_each(|z| z.im = 0.0);
        }
        Matrix { field, data }
    }

    pub fn from_real(data: &DMatrix<f64>) -> Self {
        Matrix { field: Field::Real, data: data.map(|x| C64::new(x, 0.0)) }
    }

    pub fn from_row_slice_real(rows: usize, cols: usize, entries: &[f64]) -> Self {
        Self::from_real(&DMatrix::from_row_slice(rows, cols, entries))
    }

    pub fn from_row_slice(field: Field, rows: usize, cols: usize, entries: &[C64]) -> Self {
        Self::from_complex(field, DMatrix::from_row_slice(rows, cols, entries))
    }

    pub fn zeros(field: Field, rows: usize, cols: usize) -> Self {
        Matrix { field, data: DMatrix::zeros(rows, cols) }
    }

    pub fn identity(field: Field, d: usize) -> Self {
        Matrix { field, data: DMatrix::identity(d, d) }
    }

    pub fn from_diagonal_real(field: Field, diag: &[f64]) -> Self {
        let d = diag.len();
        let mut data = DMatrix::zeros(d, d);
        for (i, &x) in diag.iter().enumerate() {
            data[(i, i)] = C64::new(x, 0.0);
        }
        Matrix { field, data }
    }

    /// Block-diagonal matrix from square or rectangular blocks.
    pub fn block_diag(field: Field, blocks: &[Matrix]) -> Self {
        let rows = blocks.iter().map(Matrix::rows).sum();
        let cols = blocks.iter().map(Matrix::cols).sum();
        let mut out = DMatrix::zeros(rows, cols);
        let (mut r0, mut c0) = (0, 0);
        for b in blocks {
            out.view_mut((r0, c0), (b.rows(), b.cols())).copy_from(&b.data);
            r0 += b.rows();
            c0 += b.cols();
        }
        Matrix::from_complex(field, out)
    }

    /// Horizontal concatenation; the field is the join of all parts.
    pub fn hstack(rows: usize, parts: &[&Matrix]) -> Result<Self> {
        let mut field = Field::Real;
        let mut cols = 0;
        for p in parts {
            if p.rows() != rows {
                return Err(Error::Dimension(format!("hstack: expected {rows} rows, got {}", p.rows())));
            }
            field = field.join(p.field);
            cols += p.cols();
        }
        let mut out = DMatrix::zeros(rows, cols);
        let mut c0 = 0;
        for p in parts {
            out.view_mut((0, c0), (rows, p.cols())).copy_from(&p.data);
            c0 += p.cols();
        }
        Ok(Matrix { field, data: out })
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn cols(&self) -> usize {
        self.data.ncols()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.data.shape()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn is_empty(&self) -> bool {
        self.rows() == 0 || self.cols() == 0
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[(i, j)]
    }

    pub fn scalar(&self, i: usize, j: usize) -> Scalar {
        Scalar { field: self.field, value: self.data[(i, j)] }
    }

    pub fn inner(&self) -> &DMatrix<C64> {
        &self.data
    }

    pub fn into_inner(self) -> DMatrix<C64> {
        self.data
    }

    /// Real part as an `f64` matrix; `None` unless real-tagged.
    pub fn to_real(&self) -> Option<DMatrix<f64>> {
        match self.field {
            Field::Real => Some(self.data.map(|z| z.re)),
            Field::Complex => None,
        }
    }

    /// Same entries, tagged with the join of the current and requested field.
    pub fn promote(&self, field: Field) -> Matrix {
        Matrix { field: self.field.join(field), data: self.data.clone() }
    }

    pub fn adjoint(&self) -> Matrix {
        Matrix { field: self.field, data: self.data.adjoint() }
    }

    /// Entrywise complex conjugate; the identity on real matrices.
    pub fn conj(&self) -> Matrix {
        match self.field {
            Field::Real => self.clone(),
            Field::Complex => Matrix { field: self.field, data: self.data.map(|z| z.conj()) },
        }
    }

    pub fn scale(&self, s: f64) -> Matrix {
        Matrix { field: self.field, data: self.data.map(|z| z * s) }
    }

    /// Multiplication by a complex scalar; a non-real factor promotes to complex.
    pub fn scale_complex(&self, s: C64) -> Matrix {
        let field = if s.im == 0.0 { self.field } else { Field::Complex };
        Matrix::from_complex(field, self.data.map(|z| z * s))
    }

    pub fn trace(&self) -> C64 {
        self.data.trace()
    }

    pub fn column(&self, j: usize) -> Matrix {
        Matrix { field: self.field, data: self.data.columns(j, 1).into_owned() }
    }

    pub fn columns(&self, start: usize, count: usize) -> Matrix {
        Matrix { field: self.field, data: self.data.columns(start, count).into_owned() }
    }

    /// Columns at the given indices, in order.
    pub fn select_columns(&self, idx: &[usize]) -> Matrix {
        Matrix { field: self.field, data: self.data.select_columns(idx) }
    }

    pub fn view(&self, start: (usize, usize), shape: (usize, usize)) -> Matrix {
        Matrix { field: self.field, data: self.data.view(start, shape).into_owned() }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `self · other` with a dimension check.
    pub fn try_mul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols() != other.rows() {
            return Err(Error::Dimension(format!("cannot multiply {:?} by {:?}", self.shape(), other.shape())));
        }
        Ok(Matrix::from_complex(self.field.join(other.field), &self.data * &other.data))
    }

    pub fn try_sub(&self, other: &Matrix) -> Result<Matrix> {
        self.check_same_shape(other)?;
        Ok(Matrix::from_complex(self.field.join(other.field), &self.data - &other.data))
    }

    pub fn try_add(&self, other: &Matrix) -> Result<Matrix> {
        self.check_same_shape(other)?;
        Ok(Matrix::from_complex(self.field.join(other.field), &self.data + &other.data))
    }

    fn check_same_shape(&self, other: &Matrix) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::Dimension(format!("shape mismatch {:?} vs {:?}", self.shape(), other.shape())));
        }
        Ok(())
    }

    /// `‖A* A − I‖` in operator norm.
    pub fn unitarity_residual(&self) -> f64 {
        let gram = &self.adjoint() * self;
        let eye = Matrix::identity(self.field, self.cols());
        op_norm(&(&gram - &eye)).unwrap_or(0.0)
    }
}

impl Mul for &Matrix {
    type Output = Matrix;

    fn mul(self, rhs: &Matrix) -> Matrix {
        self.try_mul(rhs).expect("matrix product dimension mismatch")
    }
}

impl Sub for &Matrix {
    type Output = Matrix;

    fn sub(self, rhs: &Matrix) -> Matrix {
        self.try_sub(rhs).expect("matrix difference shape mismatch")
    }
}

impl Add for &Matrix {
    type Output = Matrix;

    fn add(self, rhs: &Matrix) -> Matrix {
        self.try_add(rhs).expect("matrix sum shape mismatch")
    }
}

impl Neg for &Matrix {
    type Output = Matrix;

    fn neg(self) -> Matrix {
        Matrix { field: self.field, data: -&self.data }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn real_tag_drops_imaginary_parts() {
        let m = Matrix::from_row_slice(Field::Real, 1, 2, &[C64::new(1.0, 2.0), C64::new(0.0, -3.0)]);
        assert!(m.inner().iter().all(|z| z.im == 0.0));
        assert_eq!(m.scalar(0, 0), Scalar::real(1.0));
    }

    #[test]
    fn products_join_fields() {
        let a = Matrix::identity(Field::Real, 2);
        let b = Matrix::identity(Field::Complex, 2);
        assert_eq!((&a * &b).field(), Field::Complex);
        assert_eq!((&a * &a).field(), Field::Real);
        assert_eq!(a.scale_complex(C64::new(0.0, 1.0)).field(), Field::Complex);
    }

    #[test]
    fn tolerance_bounds() {
        assert!(Tolerance::default().validate().is_ok());
        assert!(Tolerance::new(0.0, 1e-8, 1e-8).is_err());
        assert!(Tolerance::new(1e-9, 0.5, 1e-8).is_err());
    }

    #[test]
    fn block_diag_places_blocks() {
        let s = Matrix::from_row_slice_real(1, 1, &[2.0]);
        let t = Matrix::from_row_slice_real(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let m = Matrix::block_diag(Field::Real, &[s, t]);
        assert_eq!(m.shape(), (3, 3));
        assert_eq!(m.get(0, 0).re, 2.0);
        assert_eq!(m.get(2, 1).re, 3.0);
        assert_eq!(m.get(0, 2).re, 0.0);
    }
}
