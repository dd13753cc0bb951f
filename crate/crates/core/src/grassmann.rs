//! Subspaces, orthogonal projections, the gap metric and principal angles.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::linalg::{column_space, herm_eig, numerical_rank, op_norm, svd, Field, Matrix, Tolerance};

/// Subspace of a `d`-dimensional space, stored as an orthonormal basis.
#[derive(Clone, Debug, PartialEq)]
pub struct Subspace {
    basis: Matrix,
}

impl Subspace {
    /// Wraps a basis after checking `B*B ≈ I` within `eq_tol`.
    pub fn new(basis: Matrix, tol: &Tolerance) -> Result<Self> {
        if basis.cols() > basis.rows() {
            return Err(Error::Invalid(format!(
                "{} basis vectors in a {}-dimensional space",
                basis.cols(),
                basis.rows()
            )));
        }
        if basis.cols() > 0 {
            let res = basis.unitarity_residual();
            if res > tol.eq_tol {
                return Err(Error::Invalid(format!("basis is not orthonormal (residual {res:.3e})")));
            }
        }
        Ok(Subspace { basis })
    }

    pub(crate) fn from_orthonormal(basis: Matrix) -> Self {
        Subspace { basis }
    }

    /// Span of arbitrary columns, orthonormalized with a rank-revealing SVD.
    pub fn span(vectors: &Matrix, tol: &Tolerance) -> Result<Self> {
        Ok(Subspace { basis: column_space(vectors, tol)? })
    }

    pub fn zero(field: Field, d: usize) -> Self {
        Subspace { basis: Matrix::zeros(field, d, 0) }
    }

    pub fn full(field: Field, d: usize) -> Self {
        Subspace { basis: Matrix::identity(field, d) }
    }

    /// `span{e_i : i ∈ idx}`.
    pub fn coordinate(field: Field, d: usize, idx: &[usize]) -> Self {
        Subspace { basis: Matrix::identity(field, d).select_columns(idx) }
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.rows()
    }

    pub fn dim(&self) -> usize {
        self.basis.cols()
    }

    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    pub fn field(&self) -> Field {
        self.basis.field()
    }

    fn check_ambient(&self, other: &Subspace) -> Result<()> {
        if self.ambient_dim() != other.ambient_dim() {
            return Err(Error::Dimension(format!(
                "subspaces live in dimensions {} and {}",
                self.ambient_dim(),
                other.ambient_dim()
            )));
        }
        Ok(())
    }

    /// `S₁ + S₂`: column space of the concatenated bases.
    pub fn sum(&self, other: &Subspace, tol: &Tolerance) -> Result<Subspace> {
        self.check_ambient(other)?;
        let stacked = Matrix::hstack(self.ambient_dim(), &[&self.basis, &other.basis])?;
        Subspace::span(&stacked, tol)
    }

    /// Sum of any number of subspaces of a `d`-dimensional space.
    pub fn sum_all(field: Field, d: usize, parts: &[&Subspace], tol: &Tolerance) -> Result<Subspace> {
        let bases: Vec<&Matrix> = parts.iter().map(|s| &s.basis).collect();
        if parts.iter().any(|s| s.ambient_dim() != d) {
            return Err(Error::Dimension("subspaces of different ambient dimensions".into()));
        }
        let stacked = Matrix::hstack(d, &bases)?;
        if stacked.cols() == 0 {
            return Ok(Subspace::zero(field, d));
        }
        Subspace::span(&stacked.promote(field), tol)
    }

    /// Orthogonal complement, read off the spectrum of `I − BB*`.
    pub fn complement(&self, tol: &Tolerance) -> Result<Subspace> {
        let d = self.ambient_dim();
        if self.dim() == 0 {
            return Ok(Subspace::full(self.field(), d));
        }
        if self.dim() == d {
            return Ok(Subspace::zero(self.field(), d));
        }
        let proj = &Matrix::identity(self.field(), d) - &(&self.basis * &self.basis.adjoint());
        let eig = herm_eig(&proj, tol)?;
        let k = eig.values.iter().filter(|&&v| v > 0.5).count();
        Ok(Subspace { basis: eig.vectors.columns(0, k) })
    }

    /// `S₁ ∩ S₂ = (S₁^⊥ + S₂^⊥)^⊥`.
    pub fn intersection(&self, other: &Subspace, tol: &Tolerance) -> Result<Subspace> {
        self.check_ambient(other)?;
        let c1 = self.complement(tol)?;
        let c2 = other.complement(tol)?;
        c1.sum(&c2, tol)?.complement(tol)
    }

    /// Intersection of several subspaces by the same De Morgan route.
    pub fn intersection_all(field: Field, d: usize, parts: &[&Subspace], tol: &Tolerance) -> Result<Subspace> {
        let comps = parts.iter().map(|s| s.complement(tol)).collect::<Result<Vec<_>>>()?;
        let refs: Vec<&Subspace> = comps.iter().collect();
        Subspace::sum_all(field, d, &refs, tol)?.complement(tol)
    }

    /// Largest principal-angle sine between two subspaces of any dimensions,
    /// i.e. the gap between their projections.
    pub fn distance(&self, other: &Subspace) -> Result<f64> {
        gap(&Projection::from_subspace(self), &Projection::from_subspace(other))
    }
}

/// Orthogonal projection (Hermitian idempotent) of rank `n` on a `d`-dimensional space.
#[derive(Clone, Debug, PartialEq)]
pub struct Projection {
    mat: Matrix,
    rank: usize,
}

impl Projection {
    /// Validates `P* = P`, `P² = P` (operator norm within `eq_tol`) and that every
    /// eigenvalue lies within `cluster_tol` of 0 or 1.
    pub fn new(mat: Matrix, tol: &Tolerance) -> Result<Self> {
        if !mat.is_square() || mat.is_empty() {
            return Err(Error::Invalid(format!("projection must be square and nonempty, got {:?}", mat.shape())));
        }
        let asym = op_norm(&(&mat - &mat.adjoint()))?;
        if asym > tol.eq_tol {
            return Err(Error::Invalid(format!("not Hermitian (‖P − P*‖ = {asym:.3e})")));
        }
        let idem = op_norm(&(&(&mat * &mat) - &mat))?;
        if idem > tol.eq_tol {
            return Err(Error::Invalid(format!("not idempotent (‖P² − P‖ = {idem:.3e})")));
        }
        let rank = spectral_rank(&mat, tol)?;
        Ok(Projection { mat, rank })
    }

    pub(crate) fn from_parts_unchecked(mat: Matrix, rank: usize) -> Self {
        Projection { mat, rank }
    }

    /// `B·B*` for the orthonormal basis `B` of `S`.
    pub fn from_subspace(s: &Subspace) -> Self {
        let b = s.basis();
        let mat = if s.dim() == 0 { Matrix::zeros(b.field(), b.rows(), b.rows()) } else { b * &b.adjoint() };
        Projection { mat, rank: s.dim() }
    }

    pub fn zero(field: Field, d: usize) -> Self {
        Projection { mat: Matrix::zeros(field, d, d), rank: 0 }
    }

    pub fn identity(field: Field, d: usize) -> Self {
        Projection { mat: Matrix::identity(field, d), rank: d }
    }

    /// Diagonal 0/1 projection onto the listed coordinates.
    pub fn coordinate(field: Field, d: usize, idx: &[usize]) -> Self {
        Projection::from_subspace(&Subspace::coordinate(field, d, idx))
    }

    pub fn dim(&self) -> usize {
        self.mat.rows()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn matrix(&self) -> &Matrix {
        &self.mat
    }

    pub fn into_matrix(self) -> Matrix {
        self.mat
    }

    pub fn field(&self) -> Field {
        self.mat.field()
    }

    /// Image of `P` as a subspace: eigenvectors of the eigenvalue-1 cluster.
    pub fn range(&self, tol: &Tolerance) -> Result<Subspace> {
        let eig = herm_eig(&self.mat, tol)?;
        if let Some(bad) = eig.values.iter().find(|&&v| v.abs() > tol.cluster_tol && (v - 1.0).abs() > tol.cluster_tol)
        {
            return Err(Error::Invalid(format!("eigenvalue {bad:.6} is not near 0 or 1")));
        }
        let k = eig.values.iter().filter(|&&v| v > 0.5).count();
        Ok(Subspace::from_orthonormal(eig.vectors.columns(0, k)))
    }

    /// Kernel of `P`, i.e. the range of `I − P`.
    pub fn kernel(&self, tol: &Tolerance) -> Result<Subspace> {
        self.complement().range(tol)
    }

    /// `I − P`.
    pub fn complement(&self) -> Projection {
        let eye = Matrix::identity(self.field(), self.dim());
        Projection { mat: &eye - &self.mat, rank: self.dim() - self.rank }
    }

    /// `U P U*`; `u` must be unitary (orthogonal).
    pub fn conjugate_by(&self, u: &Matrix) -> Projection {
        Projection { mat: &(u * &self.mat) * &u.adjoint(), rank: self.rank }
    }

    /// Entrywise complex conjugate.
    pub fn conj(&self) -> Projection {
        Projection { mat: self.mat.conj(), rank: self.rank }
    }

    pub fn promote(&self, field: Field) -> Projection {
        Projection { mat: self.mat.promote(field), rank: self.rank }
    }
}

fn spectral_rank(mat: &Matrix, tol: &Tolerance) -> Result<usize> {
    let eig = herm_eig(mat, tol)?;
    if let Some(bad) = eig.values.iter().find(|&&v| v.abs() > tol.cluster_tol && (v - 1.0).abs() > tol.cluster_tol) {
        return Err(Error::Invalid(format!("eigenvalue {bad:.6} is not near 0 or 1")));
    }
    Ok(eig.values.iter().filter(|&&v| v > 0.5).count())
}

fn check_same_dim(p: &Projection, q: &Projection) -> Result<()> {
    if p.dim() != q.dim() {
        return Err(Error::Dimension(format!("projections act on dimensions {} and {}", p.dim(), q.dim())));
    }
    Ok(())
}

fn check_same_rank(p: &Projection, q: &Projection) -> Result<()> {
    check_same_dim(p, q)?;
    if p.rank() != q.rank() {
        return Err(Error::Unsupported(format!("projections have ranks {} and {}", p.rank(), q.rank())));
    }
    Ok(())
}

/// Gap metric `‖P − Q‖`. Ranks may differ.
pub fn gap(p: &Projection, q: &Projection) -> Result<f64> {
    check_same_dim(p, q)?;
    Ok(op_norm(&(p.matrix() - q.matrix()))?.min(1.0))
}

/// Principal angles between the ranges of two equal-rank projections, ascending.
#[derive(Clone, Debug, PartialEq)]
pub struct PrincipalAngles {
    angles: Vec<f64>,
}

impl PrincipalAngles {
    /// Sorts ascending and clamps into `[0, π/2]`.
    pub fn new(mut angles: Vec<f64>) -> Self {
        for a in angles.iter_mut() {
            *a = a.clamp(0.0, FRAC_PI_2);
        }
        angles.sort_by(f64::total_cmp);
        PrincipalAngles { angles }
    }

    pub fn radians(&self) -> &[f64] {
        &self.angles
    }

    pub fn degrees(&self) -> Vec<f64> {
        self.angles.iter().map(|a| a.to_degrees()).collect()
    }

    pub fn sines(&self) -> Vec<f64> {
        self.angles.iter().map(|a| a.sin()).collect()
    }

    pub fn largest(&self) -> f64 {
        self.angles.last().copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }
}

/// Principal angles from the cosines `σᵢ(B_P* B_Q)` and the sines
/// `σᵢ((I − Q) B_P)`: angles below `π/4` are read from the sines, the rest
/// from the cosines, so both ends of `[0, π/2]` stay accurate.
pub fn principal_angles(p: &Projection, q: &Projection, tol: &Tolerance) -> Result<PrincipalAngles> {
    check_same_rank(p, q)?;
    if p.rank() == 0 {
        return Ok(PrincipalAngles::new(Vec::new()));
    }
    let bp = p.range(tol)?;
    let bq = q.range(tol)?;
    let cosines = svd(&(&bp.basis().adjoint() * bq.basis()))?.sigma;
    let mut sines = svd(&(q.complement().matrix() * bp.basis()))?.sigma;
    sines.reverse();
    let angles = cosines
        .iter()
        .zip(&sines)
        .map(|(&c, &s)| if c * c >= 0.5 { s.clamp(0.0, 1.0).asin() } else { c.clamp(0.0, 1.0).acos() })
        .collect();
    Ok(PrincipalAngles::new(angles))
}

/// `PQ = 0`, tested as `‖PQ‖ ≤ eq_tol`.
pub fn are_orthogonal(p: &Projection, q: &Projection, tol: &Tolerance) -> Result<bool> {
    check_same_dim(p, q)?;
    Ok(op_norm(&(p.matrix() * q.matrix()))? <= tol.eq_tol)
}

/// Adjacency of equal-rank projections: `P ≠ Q` and `rank(P − Q) = 2`.
pub fn are_adjacent(p: &Projection, q: &Projection, tol: &Tolerance) -> Result<bool> {
    check_same_rank(p, q)?;
    let diff = p.matrix() - q.matrix();
    if op_norm(&diff)? <= tol.eq_tol {
        return Ok(false);
    }
    Ok(numerical_rank(&diff, tol) == 2)
}

/// Complementarity at `dim H = 2n`: `Im P + Im Q = H`, decided by
/// `‖(I − P) − Q‖ < 1`.
pub fn are_complementary(p: &Projection, q: &Projection, tol: &Tolerance) -> Result<bool> {
    check_same_rank(p, q)?;
    if p.dim() != 2 * p.rank() {
        return Err(Error::Unsupported(format!(
            "complementarity needs dim = 2·rank, got dim {} and rank {}",
            p.dim(),
            p.rank()
        )));
    }
    Ok(gap(&p.complement(), q)? < 1.0 - tol.eq_tol)
}

/// `dim(Im P + Im Q)`, used to cross-check the complementarity criterion.
pub fn sum_dimension(p: &Projection, q: &Projection, tol: &Tolerance) -> Result<usize> {
    check_same_dim(p, q)?;
    Ok(p.range(tol)?.sum(&q.range(tol)?, tol)?.dim())
}
