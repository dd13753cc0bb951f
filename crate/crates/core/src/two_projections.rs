//! Joint canonical form of two equal-rank projections.
//!
//! Every pair `P, Q` of rank-`n` projections is unitarily similar to a direct
//! sum of
//!
//! * a `p`-dimensional block where both act as the identity (`Im P ∩ Im Q`),
//! * `r` two-dimensional blocks where `P = diag(1, 0)` and `Q = diag(0, 1)`,
//! * two-dimensional blocks where `P = S = diag(1, 0)` and `Q = T(d_j)` with
//!   `0 < d_j < 1`,
//! * a zero block.
//!
//! [`canonical_form`] computes the unitary `W` realizing this and [`assemble`]
//! rebuilds the pair from it.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::grassmann::{PrincipalAngles, Projection, Subspace};
use crate::linalg::{herm_eig, modified_gram_schmidt, op_norm, Field, Matrix, Tolerance};

/// Sign of the off-diagonal entries in `[[1/2, ±1/2], [±1/2, α]]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

/// The matrix `A_α = [[1/2, ±1/2], [±1/2, α]]`.
pub fn a_alpha(alpha: f64, sign: Sign) -> Matrix {
    let off = match sign {
        Sign::Plus => 0.5,
        Sign::Minus => -0.5,
    };
    Matrix::from_row_slice_real(2, 2, &[0.5, off, off, alpha])
}

/// Closed form `‖A_α‖ = (α + 1/2 + √(α² − α + 5/4)) / 2` on `−1/2 ≤ α ≤ 1/2`.
///
/// The value is at least `1/√2`, with equality only at `α = −1/2`.
pub fn norm_2x2(alpha: f64, _sign: Sign) -> Result<f64> {
    if !(-0.5..=0.5).contains(&alpha) {
        return Err(Error::Domain(format!("alpha = {alpha} outside [-1/2, 1/2]")));
    }
    Ok((alpha + 0.5 + (alpha * alpha - alpha + 1.25).sqrt()) / 2.0)
}

/// One of the two-dimensional building blocks: `S` or `T(d)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TwoByTwoBlock {
    S,
    T(f64),
}

impl TwoByTwoBlock {
    pub fn matrix(self) -> Result<Matrix> {
        match self {
            TwoByTwoBlock::S => Ok(block_s()),
            TwoByTwoBlock::T(d) => block_t(d),
        }
    }
}

/// `S = diag(1, 0)`.
pub fn block_s() -> Matrix {
    Matrix::from_diagonal_real(Field::Real, &[1.0, 0.0])
}

/// `T(d) = [[d, √(d(1−d))], [√(d(1−d)), 1−d]]`, the projection onto `(√d, √(1−d))`.
pub fn block_t(d: f64) -> Result<Matrix> {
    if !(0.0..=1.0).contains(&d) {
        return Err(Error::Domain(format!("d = {d} outside [0, 1]")));
    }
    let off = (d * (1.0 - d)).sqrt();
    Ok(Matrix::from_row_slice_real(2, 2, &[d, off, off, 1.0 - d]))
}

/// Output of [`canonical_form`].
///
/// Columns of `w` are laid out as: `p` intersection vectors, then `r` pairs
/// `(x, y)` with `x ∈ Im P ∩ Ker Q`, `y ∈ Ker P ∩ Im Q`, then one pair per
/// generic parameter `d_j` (in the order of `ds`), then the remaining columns.
#[derive(Clone, Debug)]
pub struct CanonicalPair {
    w: Matrix,
    p: usize,
    r: usize,
    ds: Vec<f64>,
    n: usize,
}

impl CanonicalPair {
    /// Checks the block-count and parameter invariants and unitarity of `w`.
    pub fn new(w: Matrix, p: usize, r: usize, ds: Vec<f64>, n: usize, tol: &Tolerance) -> Result<Self> {
        let d = w.rows();
        if !w.is_square() {
            return Err(Error::Invalid(format!("W must be square, got {:?}", w.shape())));
        }
        if p + r + ds.len() != n {
            return Err(Error::Invalid(format!("p + r + len(ds) = {} differs from n = {n}", p + r + ds.len())));
        }
        if p + 2 * (r + ds.len()) > d {
            return Err(Error::Invalid(format!(
                "blocks need {} dimensions, only {d} available",
                p + 2 * (r + ds.len())
            )));
        }
        if let Some(bad) = ds.iter().find(|&&x| !(x > tol.cluster_tol && x < 1.0 - tol.cluster_tol)) {
            return Err(Error::Invalid(format!("generic parameter {bad} not strictly inside (0, 1)")));
        }
        let res = w.unitarity_residual();
        if res > 10.0 * d as f64 * tol.eq_tol {
            return Err(Error::Invalid(format!("W is not unitary (residual {res:.3e})")));
        }
        Ok(CanonicalPair { w, p, r, ds, n })
    }

    pub fn w(&self) -> &Matrix {
        &self.w
    }

    /// `dim(Im P ∩ Im Q)`.
    pub fn p(&self) -> usize {
        self.p
    }

    /// `dim(Im P ∩ Ker Q) = dim(Ker P ∩ Im Q)`.
    pub fn r(&self) -> usize {
        self.r
    }

    pub fn ds(&self) -> &[f64] {
        &self.ds
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.w.rows()
    }

    pub fn field(&self) -> Field {
        self.w.field()
    }

    pub fn intersection_columns(&self) -> Vec<usize> {
        (0..self.p).collect()
    }

    /// `(x, y)` column pairs of the norm-one blocks.
    pub fn norm_one_pairs(&self) -> Vec<(usize, usize)> {
        (0..self.r).map(|i| (self.p + 2 * i, self.p + 2 * i + 1)).collect()
    }

    /// `(x, y)` column pairs of the generic blocks, aligned with `ds`.
    pub fn generic_pairs(&self) -> Vec<(usize, usize)> {
        let base = self.p + 2 * self.r;
        (0..self.ds.len()).map(|j| (base + 2 * j, base + 2 * j + 1)).collect()
    }

    pub fn leftover_columns(&self) -> Vec<usize> {
        (self.p + 2 * (self.r + self.ds.len())..self.d()).collect()
    }

    /// Block templates of `W*PW` and `W*QW`.
    pub fn templates(&self) -> Result<(Matrix, Matrix)> {
        let f = Field::Real;
        let mut pb = vec![Matrix::identity(f, self.p)];
        let mut qb = vec![Matrix::identity(f, self.p)];
        for _ in 0..self.r {
            pb.push(block_s());
            qb.push(Matrix::from_diagonal_real(f, &[0.0, 1.0]));
        }
        for &dj in &self.ds {
            pb.push(block_s());
            qb.push(block_t(dj)?);
        }
        let rest = self.leftover_columns().len();
        pb.push(Matrix::zeros(f, rest, rest));
        qb.push(Matrix::zeros(f, rest, rest));
        Ok((Matrix::block_diag(f, &pb), Matrix::block_diag(f, &qb)))
    }

    /// Gap read from the block data: 1 if `r > 0`, else `max √(1 − d_j)`.
    pub fn gap(&self) -> f64 {
        if self.r > 0 {
            return 1.0;
        }
        self.ds.iter().map(|&x| (1.0 - x).sqrt()).fold(0.0, f64::max)
    }

    /// `0` (×p), `π/2` (×r), and `arccos √d_j`.
    pub fn principal_angles(&self) -> PrincipalAngles {
        let mut a = vec![0.0; self.p];
        a.extend(std::iter::repeat_n(FRAC_PI_2, self.r));
        a.extend(self.ds.iter().map(|&x| x.sqrt().acos()));
        PrincipalAngles::new(a)
    }
}

fn check_pair(p: &Projection, q: &Projection) -> Result<()> {
    if p.dim() != q.dim() {
        return Err(Error::Dimension(format!("projections act on dimensions {} and {}", p.dim(), q.dim())));
    }
    if p.rank() != q.rank() {
        return Err(Error::Unsupported(format!("unequal ranks {} and {}", p.rank(), q.rank())));
    }
    Ok(())
}

/// Canonical form of a pair of equal-rank projections.
///
/// Diagonalizes the compression `C = B_P* Q B_P` of `Q` to `Im P`. Eigenvalues
/// within `cluster_tol` of 1 give `Im P ∩ Im Q`; those within `cluster_tol` of 0
/// give `Im P ∩ Ker Q`, paired with a basis of `Ker P ∩ Im Q`; each interior
/// eigenvalue `d_j` with eigenvector `x_j` gives the partner
/// `y_j = (Q x_j − d_j x_j) / √(d_j(1 − d_j))`.
pub fn canonical_form(p: &Projection, q: &Projection, tol: &Tolerance) -> Result<CanonicalPair> {
    check_pair(p, q)?;
    let n = p.rank();
    let d = p.dim();
    let field = p.field().join(q.field());
    if n == 0 {
        return CanonicalPair::new(Matrix::identity(field, d), 0, 0, Vec::new(), 0, tol);
    }

    let bp = p.range(tol)?.basis().promote(field);
    let qm = q.matrix().promote(field);
    let compression = &(&bp.adjoint() * &qm) * &bp;
    let eig = herm_eig(&compression, tol)?;

    let (mut hi, mut lo, mut mid) = (Vec::new(), Vec::new(), Vec::new());
    for (i, &v) in eig.values.iter().enumerate() {
        if v >= 1.0 - tol.cluster_tol {
            hi.push(i);
        } else if v <= tol.cluster_tol {
            lo.push(i);
        } else {
            mid.push(i);
        }
    }
    let x_all = &bp * &eig.vectors;

    // Partners for the norm-one blocks: Ker P ∩ Im Q from the compression of P to Im Q.
    let y_lo = if lo.is_empty() {
        Matrix::zeros(field, d, 0)
    } else {
        let bq = q.range(tol)?.basis().promote(field);
        let pm = p.matrix().promote(field);
        let comp_q = &(&bq.adjoint() * &pm) * &bq;
        let eq = herm_eig(&comp_q, tol)?;
        let zero_idx: Vec<usize> = (0..eq.values.len()).filter(|&i| eq.values[i] <= tol.cluster_tol).collect();
        if zero_idx.len() != lo.len() {
            return Err(Error::Structure(format!(
                "dim(Im P ∩ Ker Q) = {} but dim(Ker P ∩ Im Q) = {}",
                lo.len(),
                zero_idx.len()
            )));
        }
        &bq * &eq.vectors.select_columns(&zero_idx)
    };

    let mut cols: Vec<Matrix> = hi.iter().map(|&i| x_all.column(i)).collect();
    for (k, &i) in lo.iter().enumerate() {
        cols.push(x_all.column(i));
        cols.push(y_lo.column(k));
    }
    let mut ds = Vec::with_capacity(mid.len());
    for &i in &mid {
        let dj = eig.values[i];
        let x = x_all.column(i);
        let qx = &qm * &x;
        let y = (&qx - &x.scale(dj)).scale(1.0 / (dj * (1.0 - dj)).sqrt());
        cols.push(x);
        cols.push(y);
        ds.push(dj);
    }

    let refs: Vec<&Matrix> = cols.iter().collect();
    let emitted = Matrix::hstack(d, &refs)?;
    let emitted = Matrix::from_complex(field, modified_gram_schmidt(emitted.inner()));
    let leftover = Subspace::from_orthonormal(emitted.clone()).complement(tol)?;
    let w = Matrix::hstack(d, &[&emitted, leftover.basis()])?;
    if w.cols() != d {
        return Err(Error::Structure(format!("canonical basis has {} columns in dimension {d}", w.cols())));
    }
    CanonicalPair::new(w, hi.len(), lo.len(), ds, n, tol)
}

/// Rebuilds `(P, Q) = (W·E·W*, W·F·W*)` from canonical data.
pub fn assemble(c: &CanonicalPair) -> Result<(Projection, Projection)> {
    let (e, f) = c.templates()?;
    let w = c.w();
    let pm = &(w * &e.promote(w.field())) * &w.adjoint();
    let qm = &(w * &f.promote(w.field())) * &w.adjoint();
    Ok((Projection::from_parts_unchecked(pm, c.n()), Projection::from_parts_unchecked(qm, c.n())))
}

/// Largest entry error of `assemble(c)` against `(P, Q)`, in operator norm.
pub fn reconstruction_residual(c: &CanonicalPair, p: &Projection, q: &Projection) -> Result<f64> {
    let (pa, qa) = assemble(c)?;
    Ok(op_norm(&(pa.matrix() - p.matrix()))?.max(op_norm(&(qa.matrix() - q.matrix()))?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grassmann::gap;
    use crate::linalg::{haar_unitary, RngState};

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    #[test]
    fn norm_2x2_examples() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((norm_2x2(-0.5, Sign::Plus).unwrap() - s).abs() < 1e-15);
        assert!((norm_2x2(0.5, Sign::Plus).unwrap() - 1.0).abs() < 1e-15);
        let golden = (1.0 + 5f64.sqrt()) / 4.0;
        assert!((norm_2x2(0.0, Sign::Minus).unwrap() - golden).abs() < 1e-15);
        assert!((op_norm(&a_alpha(0.0, Sign::Plus)).unwrap() - golden).abs() < 1e-14);
        assert!(matches!(norm_2x2(0.6, Sign::Plus), Err(Error::Domain(_))));
    }

    #[test]
    fn block_t_examples() {
        assert_eq!(block_t(1.0).unwrap(), block_s());
        assert_eq!(block_t(0.0).unwrap(), Matrix::from_diagonal_real(Field::Real, &[0.0, 1.0]));
        let half = block_t(0.5).unwrap();
        assert!((&half - &Matrix::from_row_slice_real(2, 2, &[0.5, 0.5, 0.5, 0.5])).max_abs() < 1e-16);
        assert!(block_t(1.5).is_err());
        let t = block_t(0.3).unwrap();
        assert!(Projection::new(t, &tol()).is_ok());
    }

    #[test]
    fn equal_projections_are_all_intersection() {
        let p = Projection::coordinate(Field::Real, 5, &[0, 2, 3]);
        let c = canonical_form(&p, &p, &tol()).unwrap();
        assert_eq!((c.p(), c.r(), c.ds().len()), (3, 0, 0));
    }

    #[test]
    fn orthogonal_pair_is_all_norm_one_blocks() {
        let p = Projection::coordinate(Field::Complex, 4, &[0, 1]);
        let q = Projection::coordinate(Field::Complex, 4, &[2, 3]);
        let c = canonical_form(&p, &q, &tol()).unwrap();
        assert_eq!((c.p(), c.r(), c.ds().len()), (0, 2, 0));
        assert_eq!(c.gap(), 1.0);
    }

    #[test]
    fn single_generic_block() {
        let p = Projection::coordinate(Field::Real, 3, &[0]);
        let qm = Matrix::block_diag(Field::Real, &[block_t(0.25).unwrap(), Matrix::zeros(Field::Real, 1, 1)]);
        let q = Projection::new(qm, &tol()).unwrap();
        let c = canonical_form(&p, &q, &tol()).unwrap();
        assert_eq!((c.p(), c.r()), (0, 0));
        assert_eq!(c.ds().len(), 1);
        assert!((c.ds()[0] - 0.25).abs() < 1e-14);
        assert!(reconstruction_residual(&c, &p, &q).unwrap() < 1e-13);
    }

    #[test]
    fn assemble_examples() {
        let f = Field::Real;
        let c = CanonicalPair::new(Matrix::identity(f, 3), 1, 0, vec![], 1, &tol()).unwrap();
        let (p, q) = assemble(&c).unwrap();
        assert_eq!(p.matrix(), &Matrix::from_diagonal_real(f, &[1.0, 0.0, 0.0]));
        assert_eq!(p, q);

        let c = CanonicalPair::new(Matrix::identity(f, 2), 0, 1, vec![], 1, &tol()).unwrap();
        let (p, q) = assemble(&c).unwrap();
        assert_eq!(q.matrix(), &Matrix::from_diagonal_real(f, &[0.0, 1.0]));
        assert!((gap(&p, &q).unwrap() - 1.0).abs() < 1e-15);

        let c = CanonicalPair::new(Matrix::identity(f, 2), 0, 0, vec![0.25], 1, &tol()).unwrap();
        let (p, q) = assemble(&c).unwrap();
        assert!((gap(&p, &q).unwrap() - 0.75f64.sqrt()).abs() < 1e-14);
        assert!((c.gap() - 0.75f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn invalid_canonical_data_rejected() {
        let f = Field::Real;
        assert!(CanonicalPair::new(Matrix::identity(f, 2), 0, 0, vec![1.0], 1, &tol()).is_err());
        assert!(CanonicalPair::new(Matrix::identity(f, 3), 0, 2, vec![], 2, &tol()).is_err());
        assert!(CanonicalPair::new(Matrix::identity(f, 4), 1, 0, vec![], 2, &tol()).is_err());
    }

    #[test]
    fn unequal_ranks_rejected() {
        let p = Projection::coordinate(Field::Real, 4, &[0]);
        let q = Projection::coordinate(Field::Real, 4, &[1, 2]);
        assert!(matches!(canonical_form(&p, &q, &tol()), Err(Error::Unsupported(_))));
    }

    #[test]
    fn mixed_regime_round_trip() {
        // p = 1, r = 1, ds = (0.7, 0.2), conjugated by a Haar unitary in dimension 9.
        let mut rng = RngState::new(21);
        let f = Field::Complex;
        let w = haar_unitary(9, f, &mut rng).unwrap();
        let c0 = CanonicalPair::new(w, 1, 1, vec![0.7, 0.2], 4, &tol()).unwrap();
        let (p, q) = assemble(&c0).unwrap();
        let c = canonical_form(&p, &q, &tol()).unwrap();
        assert_eq!((c.p(), c.r()), (1, 1));
        assert!((c.ds()[0] - 0.7).abs() < 1e-12 && (c.ds()[1] - 0.2).abs() < 1e-12);
        assert!(reconstruction_residual(&c, &p, &q).unwrap() < 90.0 * tol().eq_tol);
    }
}
