use faer::{Mat, MatRef, Side};
use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};

use super::{Field, Matrix, RngState, Tolerance, C64};
use crate::error::{Error, Result};

/// Hermitian eigendecomposition with eigenvalues in descending order.
#[derive(Clone, Debug)]
pub struct HermEig {
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors, one column per entry of `values`.
    pub vectors: Matrix,
}

/// Thin singular value decomposition `M = U · diag(σ) · V*`.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: Matrix,
    /// Descending, non-negative.
    pub sigma: Vec<f64>,
    pub v: Matrix,
}

fn ensure_nonempty(m: &Matrix, what: &str) -> Result<()> {
    if m.is_empty() {
        return Err(Error::Dimension(format!("{what} of an empty {:?} matrix", m.shape())));
    }
    Ok(())
}

fn faer_real(m: &DMatrix<C64>) -> Mat<f64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)].re)
}

fn faer_complex(m: &DMatrix<C64>) -> Mat<C64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn from_faer_real(m: MatRef<'_, f64>) -> DMatrix<C64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| C64::new(m[(i, j)], 0.0))
}

fn from_faer_complex(m: MatRef<'_, C64>) -> DMatrix<C64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn no_convergence<E: std::fmt::Debug>(what: &str) -> impl FnOnce(E) -> Error + '_ {
    move |e| Error::Invalid(format!("{what} did not converge: {e:?}"))
}

fn singular_values(m: &Matrix) -> Result<Vec<f64>> {
    let mut sv = match m.field() {
        Field::Real => faer_real(m.inner()).singular_values().map_err(no_convergence("SVD"))?,
        Field::Complex => faer_complex(m.inner()).singular_values().map_err(no_convergence("SVD"))?,
    };
    sv.sort_by(|a, b| b.total_cmp(a));
    Ok(sv)
}

/// Largest singular value.
pub fn op_norm(m: &Matrix) -> Result<f64> {
    ensure_nonempty(m, "operator norm")?;
    Ok(singular_values(m)?.first().copied().unwrap_or(0.0))
}

/// Thin SVD, singular values sorted descending (ties keep backend order).
pub fn svd(m: &Matrix) -> Result<Svd> {
    ensure_nonempty(m, "SVD")?;
    let field = m.field();
    let (u, sigma, v) = match field {
        Field::Real => {
            let s = faer_real(m.inner()).thin_svd().map_err(no_convergence("SVD"))?;
            let sv = s.S().column_vector();
            (from_faer_real(s.U()), (0..sv.nrows()).map(|i| sv[i]).collect::<Vec<_>>(), from_faer_real(s.V()))
        }
        Field::Complex => {
            let s = faer_complex(m.inner()).thin_svd().map_err(no_convergence("SVD"))?;
            let sv = s.S().column_vector();
            (from_faer_complex(s.U()), (0..sv.nrows()).map(|i| sv[i].re).collect::<Vec<_>>(), from_faer_complex(s.V()))
        }
    };
    let (u, v) = (Matrix::from_complex(field, u), Matrix::from_complex(field, v));
    let mut order: Vec<usize> = (0..sigma.len()).collect();
    order.sort_by(|&a, &b| sigma[b].total_cmp(&sigma[a]));
    let sigma_sorted = order.iter().map(|&i| sigma[i]).collect();
    Ok(Svd { u: u.select_columns(&order), sigma: sigma_sorted, v: v.select_columns(&order) })
}

/// Number of singular values above `rank_tol · σ_max`, or above `rank_tol`
/// itself when `σ_max < rank_tol`.
pub fn numerical_rank(m: &Matrix, tol: &Tolerance) -> usize {
    if m.is_empty() {
        return 0;
    }
    // The backend only fails to converge on non-finite input.
    let sv = singular_values(m).expect("SVD of a finite matrix converges");
    let smax = sv.first().copied().unwrap_or(0.0);
    let cutoff = if smax < tol.rank_tol { tol.rank_tol } else { tol.rank_tol * smax };
    sv.iter().filter(|&&s| s > cutoff).count()
}

/// Hermitian eigendecomposition. Eigenvalues come back descending; eigenvectors
/// of eigenvalues closer than `cluster_tol` are re-orthonormalized together.
pub fn herm_eig(m: &Matrix, tol: &Tolerance) -> Result<HermEig> {
    ensure_nonempty(m, "eigendecomposition")?;
    if !m.is_square() {
        return Err(Error::Dimension(format!("eigendecomposition of non-square {:?}", m.shape())));
    }
    let asym = (m - &m.adjoint()).max_abs();
    if asym > tol.eq_tol * m.max_abs().max(1.0) {
        return Err(Error::NotHermitian(asym));
    }
    let field = m.field();
    let sym = (m + &m.adjoint()).scale(0.5);
    let (values, vectors): (Vec<f64>, DMatrix<C64>) = match field {
        Field::Real => {
            let e = faer_real(sym.inner())
                .self_adjoint_eigen(Side::Lower)
                .map_err(no_convergence("eigenvalue iteration"))?;
            let ev = e.S().column_vector();
            ((0..ev.nrows()).map(|i| ev[i]).collect(), from_faer_real(e.U()))
        }
        Field::Complex => {
            let e = faer_complex(sym.inner())
                .self_adjoint_eigen(Side::Lower)
                .map_err(no_convergence("eigenvalue iteration"))?;
            let ev = e.S().column_vector();
            ((0..ev.nrows()).map(|i| ev[i].re).collect(), from_faer_complex(e.U()))
        }
    };
    let vectors = Matrix::from_complex(field, vectors);

    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let values: Vec<f64> = order.iter().map(|&i| values[i]).collect();
    let mut vectors = vectors.select_columns(&order).into_inner();

    let mut start = 0;
    while start < values.len() {
        let mut end = start + 1;
        while end < values.len() && values[end - 1] - values[end] <= tol.cluster_tol {
            end += 1;
        }
        if end - start > 1 {
            let block = vectors.columns(start, end - start).into_owned();
            let ortho = modified_gram_schmidt(&block);
            vectors.columns_mut(start, end - start).copy_from(&ortho);
        }
        start = end;
    }
    for j in 0..vectors.ncols() {
        fix_phase(&mut vectors, j);
    }
    Ok(HermEig { values, vectors: Matrix::from_complex(field, vectors) })
}

/// Rotates column `j` so that its leading dominant entry is real positive.
fn fix_phase(v: &mut DMatrix<C64>, j: usize) {
    let col = v.column(j);
    let max = col.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return;
    }
    let lead = col.iter().find(|z| z.norm() >= max * (1.0 - 1e-8)).copied().expect("nonzero column");
    let phase = lead.conj() / lead.norm();
    v.column_mut(j).iter_mut().for_each(|z| *z *= phase);
}

/// Two passes of modified Gram–Schmidt over the columns, in order.
pub fn modified_gram_schmidt(a: &DMatrix<C64>) -> DMatrix<C64> {
    let mut q = a.clone();
    for _ in 0..2 {
        for j in 0..q.ncols() {
            for i in 0..j {
                let qi = q.column(i).into_owned();
                let proj = qi.dotc(&q.column(j));
                let mut cj = q.column_mut(j);
                cj.axpy(-proj, &qi, C64::new(1.0, 0.0));
            }
            let norm = q.column(j).norm();
            if norm > 0.0 {
                q.column_mut(j).unscale_mut(norm);
            }
        }
    }
    q
}

/// Orthonormal basis (as columns) of the column space of `m`, with the rank
/// decided by [`numerical_rank`]'s cutoff.
pub fn column_space(m: &Matrix, tol: &Tolerance) -> Result<Matrix> {
    if m.cols() == 0 || m.rows() == 0 {
        return Ok(Matrix::zeros(m.field(), m.rows(), 0));
    }
    let s = svd(m)?;
    let smax = s.sigma.first().copied().unwrap_or(0.0);
    let cutoff = if smax < tol.rank_tol { tol.rank_tol } else { tol.rank_tol * smax };
    let rank = s.sigma.iter().filter(|&&x| x > cutoff).count();
    Ok(s.u.columns(0, rank))
}

/// Nearest unitary (orthogonal) matrix in the polar decomposition `M = W·H`.
pub fn polar_unitary(m: &Matrix) -> Result<Matrix> {
    if !m.is_square() {
        return Err(Error::Dimension(format!("polar factor of non-square {:?}", m.shape())));
    }
    let s = svd(m)?;
    Ok(&s.u * &s.v.adjoint())
}

/// Haar-distributed unitary (complex) or orthogonal (real) `d × d` matrix:
/// QR of a standard Gaussian matrix with the phases of `diag(R)` moved into `Q`.
pub fn haar_unitary(d: usize, field: Field, rng: &mut RngState) -> Result<Matrix> {
    if d == 0 {
        return Err(Error::Dimension("Haar sample needs d >= 1".into()));
    }
    let g = match field {
        Field::Real => DMatrix::from_fn(d, d, |_, _| {
            let x: f64 = StandardNormal.sample(rng.inner_mut());
            C64::new(x, 0.0)
        }),
        Field::Complex => {
            let s = std::f64::consts::FRAC_1_SQRT_2;
            DMatrix::from_fn(d, d, |_, _| {
                let re: f64 = StandardNormal.sample(rng.inner_mut());
                let im: f64 = StandardNormal.sample(rng.inner_mut());
                C64::new(re * s, im * s)
            })
        }
    };
    let (q, r) = match field {
        Field::Real => {
            let qr = g.map(|z| z.re).qr();
            (qr.q().map(|x| C64::new(x, 0.0)), qr.r().map(|x| C64::new(x, 0.0)))
        }
        Field::Complex => {
            let qr = g.qr();
            (qr.q(), qr.r())
        }
    };
    let mut q = q;
    for j in 0..d {
        let rjj = r[(j, j)];
        let n = rjj.norm();
        let phase = if n > 0.0 { rjj / n } else { C64::new(1.0, 0.0) };
        q.column_mut(j).iter_mut().for_each(|z| *z *= phase);
    }
    Ok(Matrix::from_complex(field, q))
}
