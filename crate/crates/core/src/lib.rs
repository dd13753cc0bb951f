//! Numerical geometry of Grassmann spaces of rank-n orthogonal projections.
//!
//! The crate covers the gap metric and principal angles, the joint canonical
//! form of two equal-rank projections, the set `M(P, Q)` of projections within
//! `1/√2` of both `P` and `Q`, adjacency through double top-sets, and the
//! reconstruction of the unitary or antiunitary operator behind a gap-metric
//! isometry (including the complement form `P ↦ U(I − P)U*` at `dim H = 2n`).
//!
//! Real and complex spaces share every code path; the ground field is carried
//! as a [`Field`] tag on each [`Matrix`].

pub mod error;
pub mod grassmann;
pub mod instances;
pub mod linalg;
pub mod mpq;
pub mod ortho_lattice;
pub mod two_projections;
pub mod verify;
pub mod wigner;

pub use error::{Error, Result};
pub use grassmann::{
    are_adjacent, are_complementary, are_orthogonal, gap, principal_angles, PrincipalAngles, Projection, Subspace,
};
pub use linalg::{
    haar_unitary, herm_eig, numerical_rank, op_norm, svd, Field, Matrix, RngState, Scalar, Tolerance, C64,
};
pub use two_projections::{assemble, canonical_form, CanonicalPair};
