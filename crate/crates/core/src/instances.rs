//! Seeded random instances: subspaces, projections, and pairs with a
//! prescribed gap regime (built from canonical data, so the regime holds by
//! construction rather than by chance).

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::grassmann::{Projection, Subspace};
use crate::linalg::{haar_unitary, Field, Matrix, RngState, Tolerance, C64};
use crate::two_projections::{assemble, CanonicalPair};

/// Haar-random `k`-dimensional subspace of a `d`-dimensional space.
pub fn random_subspace(d: usize, k: usize, field: Field, rng: &mut RngState) -> Result<Subspace> {
    if k > d {
        return Err(Error::Dimension(format!("cannot draw a {k}-dim subspace of dimension {d}")));
    }
    if k == 0 {
        return Ok(Subspace::zero(field, d));
    }
    let u = haar_unitary(d, field, rng)?;
    Subspace::new(u.columns(0, k), &Tolerance::default())
}

pub fn random_projection(d: usize, n: usize, field: Field, rng: &mut RngState) -> Result<Projection> {
    Ok(Projection::from_subspace(&random_subspace(d, n, field, rng)?))
}

/// Random Hermitian matrix with standard Gaussian entries (GOE/GUE scaling).
pub fn random_hermitian(d: usize, field: Field, rng: &mut RngState) -> Matrix {
    let g = DMatrix::from_fn(d, d, |_, _| {
        let re: f64 = StandardNormal.sample(rng.inner_mut());
        let im: f64 = match field {
            Field::Real => 0.0,
            Field::Complex => StandardNormal.sample(rng.inner_mut()),
        };
        C64::new(re, im)
    });
    let m = Matrix::from_complex(field, g);
    (&m + &m.adjoint()).scale(0.5)
}

/// Gap regime of a generated pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GapRegime {
    /// `‖P − Q‖ < 1`.
    Lt1,
    /// `‖P − Q‖ = 1` but `PQ ≠ 0`.
    Eq1,
    /// `PQ = 0`.
    Orthogonal,
    /// `rank(P − Q) = 2`.
    Adjacent,
}

impl GapRegime {
    pub const ALL: [GapRegime; 4] = [GapRegime::Lt1, GapRegime::Eq1, GapRegime::Orthogonal, GapRegime::Adjacent];

    pub fn name(self) -> &'static str {
        match self {
            GapRegime::Lt1 => "lt1",
            GapRegime::Eq1 => "eq1",
            GapRegime::Orthogonal => "orthogonal",
            GapRegime::Adjacent => "adjacent",
        }
    }

    /// Whether a rank-`n` pair of this regime fits in dimension `d`.
    pub fn feasible(self, d: usize, n: usize) -> bool {
        if n == 0 || n > d {
            return false;
        }
        match self {
            GapRegime::Lt1 => true,
            GapRegime::Eq1 => n >= 2 && d > n,
            GapRegime::Orthogonal => d >= 2 * n,
            GapRegime::Adjacent => d > n,
        }
    }
}

impl fmt::Display for GapRegime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GapRegime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        GapRegime::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| Error::Domain(format!("unknown gap regime '{s}'")))
    }
}

/// A generated pair with the canonical data it was assembled from.
#[derive(Clone, Debug)]
pub struct GeneratedPair {
    pub p: Projection,
    pub q: Projection,
    pub truth: CanonicalPair,
}

fn generic_params(count: usize, rng: &mut RngState) -> Vec<f64> {
    let mut ds: Vec<f64> = (0..count).map(|_| rng.uniform(0.05, 0.95)).collect();
    ds.sort_by(|a, b| b.total_cmp(a));
    ds
}

/// Rank-`n` pair in dimension `d` from the requested regime, conjugated by a
/// Haar unitary.
pub fn random_pair(d: usize, n: usize, field: Field, regime: GapRegime, rng: &mut RngState) -> Result<GeneratedPair> {
    if !regime.feasible(d, n) {
        return Err(Error::Precondition(format!("regime {regime} is infeasible for d = {d}, n = {n}")));
    }
    let (p, r, g) = match regime {
        GapRegime::Lt1 => {
            let gmax = n.min(d - n);
            let g = rng.int_inclusive(gmax.min(1), gmax);
            (n - g, 0, g)
        }
        GapRegime::Eq1 => {
            let r = rng.int_inclusive(1, (n - 1).min(d - n));
            let gmax = (n - r).min(d - n - r);
            let g = rng.int_inclusive(0, gmax);
            (n - r - g, r, g)
        }
        GapRegime::Orthogonal => (0, n, 0),
        GapRegime::Adjacent => (n - 1, 0, 1),
    };
    let ds = generic_params(g, rng);
    let w = haar_unitary(d, field, rng)?;
    let truth = CanonicalPair::new(w, p, r, ds, n, &Tolerance::default())?;
    let (p, q) = assemble(&truth)?;
    Ok(GeneratedPair { p, q, truth })
}

/// Pair of independent Haar-random rank-`n` projections.
pub fn independent_pair(d: usize, n: usize, field: Field, rng: &mut RngState) -> Result<(Projection, Projection)> {
    Ok((random_projection(d, n, field, rng)?, random_projection(d, n, field, rng)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grassmann::{are_adjacent, are_orthogonal, gap};

    #[test]
    fn regimes_hold_by_construction() {
        let tol = Tolerance::default();
        let mut rng = RngState::new(8);
        for field in [Field::Real, Field::Complex] {
            let pr = random_pair(6, 3, field, GapRegime::Lt1, &mut rng).unwrap();
            assert!(gap(&pr.p, &pr.q).unwrap() < 1.0 - 1e-3);
            let pr = random_pair(6, 3, field, GapRegime::Eq1, &mut rng).unwrap();
            assert!((gap(&pr.p, &pr.q).unwrap() - 1.0).abs() < 1e-10);
            assert!(!are_orthogonal(&pr.p, &pr.q, &tol).unwrap());
            let pr = random_pair(6, 3, field, GapRegime::Orthogonal, &mut rng).unwrap();
            assert!(are_orthogonal(&pr.p, &pr.q, &tol).unwrap());
            let pr = random_pair(6, 3, field, GapRegime::Adjacent, &mut rng).unwrap();
            assert!(are_adjacent(&pr.p, &pr.q, &tol).unwrap());
        }
    }

    #[test]
    fn infeasible_regimes_rejected() {
        let mut rng = RngState::new(0);
        assert!(random_pair(3, 2, Field::Real, GapRegime::Orthogonal, &mut rng).is_err());
        assert!(random_pair(3, 1, Field::Real, GapRegime::Eq1, &mut rng).is_err());
        assert!(random_pair(2, 2, Field::Real, GapRegime::Adjacent, &mut rng).is_err());
    }

    #[test]
    fn regime_names_round_trip() {
        for r in GapRegime::ALL {
            assert_eq!(r.name().parse::<GapRegime>().unwrap(), r);
        }
    }
}
