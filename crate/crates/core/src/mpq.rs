//! The set `M(P, Q)` of rank-`n` projections within gap `1/√2` of both `P` and `Q`.
//!
//! When `‖P − Q‖ = 1` every member has, in the canonical frame of the pair,
//! the form `[[½I_r, ½U, 0], [½U*, ½I_r, 0], [0, 0, R₁]]` with `U` unitary
//! (orthogonal) and `R₁` a member of `M(P₁, Q₁)` for the remaining blocks.
//! For orthogonal `P, Q` this reduces to `R₁ = 0`, so `M(P, Q)` is a copy of
//! the unitary group.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};

use crate::error::{Error, Result};
use crate::grassmann::{are_orthogonal, gap, Projection};
use crate::instances::random_hermitian;
use crate::linalg::{haar_unitary, herm_eig, op_norm, Field, Matrix, RngState, Tolerance, C64};
use crate::two_projections::{block_s, block_t, canonical_form, CanonicalPair};

/// Radius `1/√2` defining `M(P, Q)`.
pub const RADIUS: f64 = FRAC_1_SQRT_2;

/// A member of `M(P, Q)` with its parameters.
#[derive(Clone, Debug)]
pub struct MpqElement {
    pub r: Projection,
    /// `r × r` unitary parameter (empty when the pair has no norm-one blocks).
    pub u: Matrix,
    /// Block of `R` on the complement of the norm-one blocks, in the canonical
    /// frame; `None` when that block has rank 0.
    pub residual: Option<Projection>,
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

/// `‖R − P‖ ≤ 1/√2 + eq_tol` and `‖R − Q‖ ≤ 1/√2 + eq_tol`.
pub fn mpq_contains(r: &Projection, p: &Projection, q: &Projection, tol: &Tolerance) -> Result<bool> {
    check_pair(p, q)?;
    check_pair(r, p)?;
    Ok(gap(r, p)? <= RADIUS + tol.eq_tol && gap(r, q)? <= RADIUS + tol.eq_tol)
}

/// Builds `W · M · W*`, where `M` carries `I_p`, the `½[[I, U], [U*, I]]` coupling
/// on the norm-one pairs, and `generic(d_j)` on each generic block.
fn build_in_frame(c: &CanonicalPair, u: &Matrix, generic: impl Fn(f64) -> Result<Matrix>) -> Result<Matrix> {
    let d = c.d();
    let field = c.field().join(u.field());
    let mut m = nalgebra::DMatrix::<C64>::zeros(d, d);
    for i in c.intersection_columns() {
        m[(i, i)] = C64::new(1.0, 0.0);
    }
    let pairs = c.norm_one_pairs();
    for (i, &(xi, yi)) in pairs.iter().enumerate() {
        m[(xi, xi)] = C64::new(0.5, 0.0);
        m[(yi, yi)] = C64::new(0.5, 0.0);
        for (j, &(_, yj)) in pairs.iter().enumerate() {
            let uij = u.get(i, j) * 0.5;
            m[(xi, yj)] = uij;
            m[(yj, xi)] = uij.conj();
        }
    }
    for (&dj, &(x, y)) in c.ds().iter().zip(c.generic_pairs().iter()) {
        let b = generic(dj)?;
        m[(x, x)] = b.get(0, 0);
        m[(x, y)] = b.get(0, 1);
        m[(y, x)] = b.get(1, 0);
        m[(y, y)] = b.get(1, 1);
    }
    let w = c.w().promote(field);
    Ok(&(&w * &Matrix::from_complex(field, m)) * &w.adjoint())
}

fn residual_block(c: &CanonicalPair, r: &Matrix) -> Matrix {
    let pair_cols: Vec<usize> = c.norm_one_pairs().iter().flat_map(|&(x, y)| [x, y]).collect();
    let rest: Vec<usize> = (0..c.d()).filter(|i| !pair_cols.contains(i)).collect();
    let b3 = c.w().select_columns(&rest);
    &(&b3.adjoint() * r) * &b3
}

/// `R = ½[[I, U], [U*, I]] ⊕ 0` for orthogonal `P, Q`, in the canonical frame of
/// the pair (so that [`mpq_extract`] returns the same `U`).
pub fn mpq_construct_orthogonal(p: &Projection, q: &Projection, u: &Matrix, tol: &Tolerance) -> Result<MpqElement> {
    check_pair(p, q)?;
    if !are_orthogonal(p, q, tol)? {
        return Err(Error::Precondition("P and Q are not orthogonal".into()));
    }
    let n = p.rank();
    if u.shape() != (n, n) {
        return Err(Error::Dimension(format!("U must be {n}×{n}, got {:?}", u.shape())));
    }
    let res = u.unitarity_residual();
    if n > 0 && res > 10.0 * n as f64 * tol.eq_tol {
        return Err(Error::Invalid(format!("U is not unitary (residual {res:.3e})")));
    }
    let c = canonical_form(p, q, tol)?;
    let r = build_in_frame(&c, u, |_| Err(Error::Structure("orthogonal pair has a generic block".into())))?;
    Ok(MpqElement { r: Projection::from_parts_unchecked(r, n), u: u.clone(), residual: None })
}

/// A member of `M(P, Q)` for any pair: `I_p` on the intersection, a Haar-random
/// coupling `½[[I, U], [U*, I]]` on the norm-one blocks, and
/// `T((1 + √d_j)/2)` against `S, T(d_j)` on each generic block, which puts both
/// block distances at `√(2 − 2√d_j)/2`.
pub fn mpq_sample(p: &Projection, q: &Projection, rng: &mut RngState, tol: &Tolerance) -> Result<MpqElement> {
    check_pair(p, q)?;
    let c = canonical_form(p, q, tol)?;
    let field = c.field();
    let u = if c.r() > 0 { haar_unitary(c.r(), field, rng)? } else { Matrix::zeros(field, 0, 0) };
    let rm = build_in_frame(&c, &u, |dj| block_t((1.0 + dj.sqrt()) / 2.0))?;
    let residual = if c.r() < c.n() {
        Some(Projection::from_parts_unchecked(residual_block(&c, &rm), c.n() - c.r()))
    } else {
        None
    };
    Ok(MpqElement { r: Projection::from_parts_unchecked(rm, c.n()), u, residual })
}

/// Reads the parameters of `R ∈ M(P, Q)` for a pair with `‖P − Q‖ = 1`.
///
/// In the canonical frame, `U = 2·R₁₂`; the diagonal blocks must be `½I_r`,
/// the coupling to the rest must vanish and `U` must be unitary, all within
/// `100·d·eq_tol`. Anything else contradicts the structure of `M(P, Q)` and is
/// reported as [`Error::Structure`].
pub fn mpq_extract(r: &Projection, p: &Projection, q: &Projection, tol: &Tolerance) -> Result<MpqElement> {
    let (elem, residual) = extract_with_residual(r, p, q, tol)?;
    let limit = 100.0 * p.dim() as f64 * tol.eq_tol;
    if residual > limit {
        return Err(Error::Structure(format!(
            "member of M(P,Q) deviates from the block form by {residual:.3e} (limit {limit:.3e})"
        )));
    }
    Ok(elem)
}

/// Like [`mpq_extract`] but returns the structural residual instead of
/// failing on it.
pub fn extract_with_residual(
    r: &Projection,
    p: &Projection,
    q: &Projection,
    tol: &Tolerance,
) -> Result<(MpqElement, f64)> {
    check_pair(p, q)?;
    let g = gap(p, q)?;
    if (g - 1.0).abs() > tol.eq_tol {
        return Err(Error::Precondition(format!("‖P − Q‖ = {g:.12} is not 1")));
    }
    if !mpq_contains(r, p, q, tol)? {
        return Err(Error::Precondition("R is not in M(P, Q)".into()));
    }
    let c = canonical_form(p, q, tol)?;
    let field = c.field().join(r.field());
    let rm = r.matrix().promote(field);
    let w = c.w().promote(field);
    let pairs = c.norm_one_pairs();
    let xs = w.select_columns(&pairs.iter().map(|&(x, _)| x).collect::<Vec<_>>());
    let ys = w.select_columns(&pairs.iter().map(|&(_, y)| y).collect::<Vec<_>>());
    let pair_cols: Vec<usize> = pairs.iter().flat_map(|&(x, y)| [x, y]).collect();
    let rest: Vec<usize> = (0..c.d()).filter(|i| !pair_cols.contains(i)).collect();
    let b3 = w.select_columns(&rest);

    let nr = pairs.len();
    let half = Matrix::identity(field, nr).scale(0.5);
    let r11 = &(&xs.adjoint() * &rm) * &xs;
    let r22 = &(&ys.adjoint() * &rm) * &ys;
    let u = (&(&xs.adjoint() * &rm) * &ys).scale(2.0);
    let mut residual = op_norm(&(&r11 - &half))?.max(op_norm(&(&r22 - &half))?).max(u.unitarity_residual());
    if !rest.is_empty() {
        let xy = Matrix::hstack(c.d(), &[&xs, &ys])?;
        residual = residual.max(op_norm(&(&(&xy.adjoint() * &rm) * &b3))?);
    }

    let n1 = c.n() - nr;
    let residual_proj = if n1 > 0 {
        let r1 = &(&b3.adjoint() * &rm) * &b3;
        let r1 = Projection::new(r1, tol)
            .map_err(|e| Error::Structure(format!("residual block is not a projection: {e}")))?;
        let p1 = Projection::from_parts_unchecked(&(&b3.adjoint() * &p.matrix().promote(field)) * &b3, n1);
        let q1 = Projection::from_parts_unchecked(&(&b3.adjoint() * &q.matrix().promote(field)) * &b3, n1);
        if r1.rank() != n1 || !mpq_contains(&r1, &p1, &q1, tol)? {
            return Err(Error::Structure("residual block is not a member of M(P₁, Q₁)".into()));
        }
        Some(r1)
    } else {
        None
    };
    Ok((MpqElement { r: r.clone(), u, residual: residual_proj }, residual))
}

/// `R` with its distances to `S` and to `T(d)`, both computed as operator norms.
#[derive(Clone, Debug)]
pub struct Witness {
    pub r: Matrix,
    pub gap_s: f64,
    pub gap_t: f64,
}

fn witness_for(d: f64, r: Matrix) -> Result<Witness> {
    let t = block_t(d)?;
    let gap_s = op_norm(&(&block_s() - &r))?;
    let gap_t = op_norm(&(&t - &r))?;
    Ok(Witness { r, gap_s, gap_t })
}

/// `R = T(1/2)`: at distance exactly `1/√2` from `S` and
/// `√(1 − 2√((1−d)d))/√2` from `T(d)`.
pub fn mpq_witness_boundary(d: f64) -> Result<Witness> {
    if !(0.0..=1.0).contains(&d) {
        return Err(Error::Domain(format!("d = {d} outside [0, 1]")));
    }
    witness_for(d, block_t(0.5)?)
}

/// `R = T((1 + √d)/2)`: equidistant from `S` and `T(d)` at `√(2 − 2√d)/2`.
pub fn mpq_witness_interior(d: f64) -> Result<Witness> {
    if !(0.0..=1.0).contains(&d) {
        return Err(Error::Domain(format!("d = {d} outside [0, 1]")));
    }
    witness_for(d, block_t((1.0 + d.sqrt()) / 2.0)?)
}

/// Closed form of `‖T(d) − T(1/2)‖`.
pub fn boundary_gap_t(d: f64) -> f64 {
    (1.0 - 2.0 * ((1.0 - d) * d).sqrt()).max(0.0).sqrt() / 2f64.sqrt()
}

/// Closed form of `‖S − T((1+√d)/2)‖ = ‖T(d) − T((1+√d)/2)‖`.
pub fn interior_gap(d: f64) -> f64 {
    (2.0 - 2.0 * d.sqrt()).max(0.0).sqrt() / 2.0
}

/// `R = T(1/2 − ε)`, just outside the ball around `S`.
#[derive(Clone, Debug)]
pub struct OutsideWitness {
    pub witness: Witness,
    /// `‖S − R‖ > 1/√2`.
    pub outside_s: bool,
    /// `‖T(d) − R‖ < 1/√2`; false means `eps` was too large for this `d`.
    pub inside_t: bool,
}

pub fn mpq_witness_outside(d: f64, eps: f64) -> Result<OutsideWitness> {
    if !(0.0..1.0).contains(&d) {
        return Err(Error::Domain(format!("d = {d} outside [0, 1)")));
    }
    if !(0.0..=0.5).contains(&eps) {
        return Err(Error::Domain(format!("eps = {eps} outside [0, 1/2]")));
    }
    let witness = witness_for(d, block_t(0.5 - eps)?)?;
    Ok(OutsideWitness { outside_s: witness.gap_s > RADIUS, inside_t: witness.gap_t < RADIUS, witness })
}

/// Largest `ε ∈ (0, 1/2]` (to bisection precision) such that
/// `‖T(d) − T(1/2 − ε̃)‖ < 1/√2` for every `0 < ε̃ < ε`, found numerically.
pub fn outside_threshold(d: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&d) {
        return Err(Error::Domain(format!("d = {d} outside [0, 1)")));
    }
    if mpq_witness_outside(d, 0.5)?.inside_t {
        return Ok(0.5);
    }
    let (mut lo, mut hi) = (0.0f64, 0.5f64);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if mid > 0.0 && mpq_witness_outside(d, mid)?.inside_t {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Angle of the line `(√x, √(1−x))`; the gap between `T(a)` and `T(b)` is
/// `|sin(angle(a) − angle(b))|`.
pub fn line_angle(x: f64) -> f64 {
    x.clamp(0.0, 1.0).sqrt().acos()
}

/// Candidate members of `M(P, Q)` found without using its structure: perturb
/// `base` by `ε·H` (Hermitian `H`, `ε` log-uniform in `[1e-13, 1e-3]`), round to
/// the nearest rank-`n` projection, and keep the result only if it passes
/// [`mpq_contains`]. Returns the accepted projection and its `ε`.
pub fn rejection_sample(
    base: &Projection,
    p: &Projection,
    q: &Projection,
    rng: &mut RngState,
    tol: &Tolerance,
    max_attempts: usize,
) -> Result<Option<(Projection, f64)>> {
    check_pair(p, q)?;
    let d = p.dim();
    let n = p.rank();
    let field = base.field().join(p.field()).join(q.field());
    for _ in 0..max_attempts {
        let eps = 10f64.powf(rng.uniform(-13.0, -3.0));
        let h = random_hermitian(d, field, rng);
        let perturbed = base.matrix().promote(field).try_add(&h.scale(eps))?;
        let eig = herm_eig(&perturbed, tol)?;
        let top = eig.vectors.columns(0, n);
        let cand = Projection::from_parts_unchecked(&top * &top.adjoint(), n);
        if mpq_contains(&cand, p, q, tol)? {
            return Ok(Some((cand, eps)));
        }
    }
    Ok(None)
}

/// `ε* = 1/2 − cos²(angle(d) + π/4)` for `d > 1/2`, and `1/2` otherwise.
pub fn outside_threshold_closed_form(d: f64) -> f64 {
    let a = line_angle(d);
    if a >= FRAC_PI_4 {
        0.5
    } else {
        0.5 - (a + FRAC_PI_4).cos().powi(2)
    }
}

impl MpqElement {
    pub fn field(&self) -> Field {
        self.r.field()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Field;

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    #[test]
    fn contains_examples() {
        let p = Projection::coordinate(Field::Real, 2, &[0]);
        let q = Projection::coordinate(Field::Real, 2, &[1]);
        let r = Projection::new(Matrix::from_row_slice_real(2, 2, &[0.5, 0.5, 0.5, 0.5]), &tol()).unwrap();
        assert!(mpq_contains(&r, &p, &q, &tol()).unwrap());
        assert!(!mpq_contains(&p, &p, &q, &tol()).unwrap());

        let s = Projection::new(block_s(), &tol()).unwrap();
        let t0 = Projection::new(block_t(0.0).unwrap(), &tol()).unwrap();
        let out = Projection::new(block_t(0.49).unwrap(), &tol()).unwrap();
        assert!(!mpq_contains(&out, &s, &t0, &tol()).unwrap());
    }

    #[test]
    fn construct_orthogonal_examples() {
        let p = Projection::coordinate(Field::Real, 2, &[0]);
        let q = Projection::coordinate(Field::Real, 2, &[1]);
        for (u, off) in [(1.0, 0.5), (-1.0, -0.5)] {
            let um = Matrix::from_row_slice_real(1, 1, &[u]);
            let e = mpq_construct_orthogonal(&p, &q, &um, &tol()).unwrap();
            let want = Matrix::from_row_slice_real(2, 2, &[0.5, off, off, 0.5]);
            assert!((e.r.matrix() - &want).max_abs() < 1e-12);
            assert!((gap(&e.r, &p).unwrap() - RADIUS).abs() < 1e-12);
            assert!((gap(&e.r, &q).unwrap() - RADIUS).abs() < 1e-12);
            let back = mpq_extract(&e.r, &p, &q, &tol()).unwrap();
            assert!((back.u.get(0, 0).re - u).abs() < 1e-12);
        }
    }

    #[test]
    fn extract_reads_the_off_diagonal_block() {
        let p = Projection::coordinate(Field::Real, 2, &[0]);
        let q = Projection::coordinate(Field::Real, 2, &[1]);
        let r = Projection::new(Matrix::from_row_slice_real(2, 2, &[0.5, -0.5, -0.5, 0.5]), &tol()).unwrap();
        let e = mpq_extract(&r, &p, &q, &tol()).unwrap();
        assert!((e.u.get(0, 0).re + 1.0).abs() < 1e-12);
        assert!(e.residual.is_none());
    }

    #[test]
    fn extract_rejects_non_members_and_small_gaps() {
        let p = Projection::coordinate(Field::Real, 2, &[0]);
        let q = Projection::coordinate(Field::Real, 2, &[1]);
        assert!(matches!(mpq_extract(&p, &p, &q, &tol()), Err(Error::Precondition(_))));
        let t = Projection::new(block_t(0.3).unwrap(), &tol()).unwrap();
        let r = Projection::new(block_t(0.6).unwrap(), &tol()).unwrap();
        assert!(matches!(mpq_extract(&r, &p, &t, &tol()), Err(Error::Precondition(_))));
    }

    #[test]
    fn sample_examples() {
        let mut rng = RngState::new(1);
        let p = Projection::coordinate(Field::Complex, 3, &[0, 1]);
        let e = mpq_sample(&p, &p, &mut rng, &tol()).unwrap();
        assert!(gap(&e.r, &p).unwrap() < 1e-12);

        let p = Projection::coordinate(Field::Complex, 2, &[0]);
        let q = Projection::coordinate(Field::Complex, 2, &[1]);
        let e = mpq_sample(&p, &q, &mut rng, &tol()).unwrap();
        assert!((e.u.get(0, 0).norm() - 1.0).abs() < 1e-12);
        assert!((e.r.matrix().get(0, 1).norm() - 0.5).abs() < 1e-12);

        let s =
            Projection::new(Matrix::block_diag(Field::Real, &[block_s(), Matrix::zeros(Field::Real, 1, 1)]), &tol())
                .unwrap();
        let t = Projection::new(
            Matrix::block_diag(Field::Real, &[block_t(0.25).unwrap(), Matrix::zeros(Field::Real, 1, 1)]),
            &tol(),
        )
        .unwrap();
        let e = mpq_sample(&s, &t, &mut rng, &tol()).unwrap();
        let want = Matrix::block_diag(Field::Real, &[block_t(0.75).unwrap(), Matrix::zeros(Field::Real, 1, 1)]);
        assert!((e.r.matrix() - &want).max_abs() < 1e-12);
        assert!((gap(&e.r, &s).unwrap() - 0.5).abs() < 1e-12);
        assert!((gap(&e.r, &t).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn boundary_witness_examples() {
        let w = mpq_witness_boundary(0.0).unwrap();
        assert!((w.gap_s - RADIUS).abs() < 1e-12);
        assert!((w.gap_t - RADIUS).abs() < 1e-12);
        let w = mpq_witness_boundary(0.5).unwrap();
        assert!(w.gap_t < 1e-12);
        // √(1 − 2·√0.1875)/√2, evaluated independently of the helper.
        let want = (1.0 - 2.0 * 0.1875f64.sqrt()).sqrt() / 2f64.sqrt();
        let w = mpq_witness_boundary(0.25).unwrap();
        assert!((w.gap_t - want).abs() < 1e-12);
        assert!((want - 0.25882).abs() < 1e-5);
    }

    #[test]
    fn outside_witness_examples() {
        let w = mpq_witness_outside(0.0, 0.01).unwrap();
        assert!(w.outside_s && w.witness.gap_s > RADIUS);
        let w = mpq_witness_outside(0.3, 0.0).unwrap();
        assert!((w.witness.gap_s - RADIUS).abs() < 1e-12);
        assert!(!w.outside_s || w.witness.gap_s - RADIUS < 1e-15);
        let w = mpq_witness_outside(0.5, 0.01).unwrap();
        assert!(w.inside_t);
    }

    #[test]
    fn threshold_matches_angle_formula() {
        for d in [0.0, 0.2, 0.5, 0.6, 0.9, 0.99] {
            let got = outside_threshold(d).unwrap();
            let want = outside_threshold_closed_form(d);
            assert!((got - want).abs() < 1e-9, "d = {d}: {got} vs {want}");
            assert!(got > 0.0);
        }
    }
}
