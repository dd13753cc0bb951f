//! Top-sets `𝒜^⊤ = {T ∈ P_n(H) : TA = 0 for all A ∈ 𝒜}` and the
//! characterization of adjacency through double top-sets.
//!
//! A top-set is stored as its carrier subspace `K = (Σ Im A)^⊥`: it consists of
//! all rank-`n` projections with range inside `K`, so it is nonempty exactly
//! when `dim K ≥ n`.

use crate::error::{Error, Result};
use crate::grassmann::{are_adjacent, gap, Projection, Subspace};
use crate::instances::random_projection;
use crate::linalg::{op_norm, Field, RngState, Tolerance};

#[derive(Clone, Debug)]
pub struct TopSetDescriptor {
    pub carrier: Subspace,
    pub n: usize,
}

impl TopSetDescriptor {
    pub fn nonempty(&self) -> bool {
        self.carrier.dim() >= self.n
    }

    /// `T ∈ 𝒜^⊤`, tested as `‖T A‖ ≤ eq_tol` against the carrier's complement.
    pub fn contains(&self, t: &Projection, tol: &Tolerance) -> Result<bool> {
        if t.rank() != self.n || t.dim() != self.carrier.ambient_dim() {
            return Ok(false);
        }
        let outside = Projection::from_subspace(&self.carrier).complement();
        Ok(op_norm(&(t.matrix() * outside.matrix()))? <= tol.eq_tol)
    }
}

/// Carrier of `𝒜^⊤` in a `d`-dimensional space. An empty family gives the
/// whole space.
pub fn top_set(d: usize, field: Field, family: &[Projection], n: usize, tol: &Tolerance) -> Result<TopSetDescriptor> {
    if n == 0 {
        return Err(Error::Domain("top-sets are taken in P_n with n >= 1".into()));
    }
    let ranges = family
        .iter()
        .map(|a| {
            if a.dim() != d {
                return Err(Error::Dimension(format!(
                    "projection of dimension {} in a family of dimension {d}",
                    a.dim()
                )));
            }
            a.range(tol)
        })
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<&Subspace> = ranges.iter().collect();
    let field = family.iter().fold(field, |f, a| f.join(a.field()));
    let carrier = Subspace::sum_all(field, d, &refs, tol)?.complement(tol)?;
    Ok(TopSetDescriptor { carrier, n })
}

/// Size class of `({R} ∪ {P, Q}^⊤)^⊤`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DoubleTopKind {
    Empty,
    Unique,
    Infinite,
}

impl DoubleTopKind {
    pub fn name(self) -> &'static str {
        match self {
            DoubleTopKind::Empty => "empty",
            DoubleTopKind::Unique => "unique",
            DoubleTopKind::Infinite => "infinite",
        }
    }
}

#[derive(Clone, Debug)]
pub struct DoubleTopResult {
    pub kind: DoubleTopKind,
    /// The single member when `kind` is `Unique`.
    pub witness: Option<Projection>,
    /// Dimension of the subspace left free for the range of a member.
    pub free_dim: usize,
}

fn check_tops_dims(p: &Projection, q: &Projection) -> Result<()> {
    if p.dim() != q.dim() {
        return Err(Error::Dimension(format!("projections act on dimensions {} and {}", p.dim(), q.dim())));
    }
    if p.rank() != q.rank() {
        return Err(Error::Unsupported(format!("unequal ranks {} and {}", p.rank(), q.rank())));
    }
    let (d, n) = (p.dim(), p.rank());
    if d < 2 * n + 1 {
        return Err(Error::Precondition(format!("need dim >= 2n + 1, got dim {d} with n = {n}")));
    }
    Ok(())
}

/// Classifies `({R} ∪ {P, Q}^⊤)^⊤`.
///
/// A member `T` must annihilate `R` and every rank-`n` projection supported in
/// the carrier `K` of `{P, Q}^⊤`, so `Ker T ⊇ K + Im R` when `{P, Q}^⊤` is
/// nonempty and `Ker T ⊇ Im R` otherwise. With `m` the dimension of the
/// orthogonal complement of that constraint, `m < n` leaves nothing, `m = n`
/// exactly one projection, and `m > n` infinitely many.
pub fn double_top_classify(r: &Projection, p: &Projection, q: &Projection, tol: &Tolerance) -> Result<DoubleTopResult> {
    check_tops_dims(p, q)?;
    let (d, n) = (p.dim(), p.rank());
    if r.dim() != d || r.rank() != n {
        return Err(Error::Dimension(format!("R must be a rank-{n} projection on dimension {d}")));
    }
    let field = p.field().join(q.field()).join(r.field());
    let top = top_set(d, field, &[p.clone(), q.clone()], n, tol)?;
    let range_r = r.range(tol)?;
    let constraint = if top.nonempty() {
        if top.contains(r, tol)? {
            return Err(Error::Precondition("R lies in {P, Q}^⊤".into()));
        }
        top.carrier.sum(&range_r, tol)?
    } else {
        range_r
    };
    let free = constraint.complement(tol)?;
    let m = free.dim();
    let (kind, witness) = match m.cmp(&n) {
        std::cmp::Ordering::Less => (DoubleTopKind::Empty, None),
        std::cmp::Ordering::Equal => (DoubleTopKind::Unique, Some(Projection::from_subspace(&free))),
        std::cmp::Ordering::Greater => (DoubleTopKind::Infinite, None),
    };
    Ok(DoubleTopResult { kind, witness, free_dim: m })
}

/// The deterministic refuting choice for non-adjacent pairs: a rank-one
/// projection onto a unit vector of `W = Im P + Im Q` plus a rank-`(n−1)`
/// projection inside `W^⊥`. When `{P, Q}^⊤` is empty any `R` works; `P` is used.
pub fn refuting_witness(p: &Projection, q: &Projection, tol: &Tolerance) -> Result<Projection> {
    check_tops_dims(p, q)?;
    let (d, n) = (p.dim(), p.rank());
    let field = p.field().join(q.field());
    let top = top_set(d, field, &[p.clone(), q.clone()], n, tol)?;
    if !top.nonempty() {
        return Ok(p.clone());
    }
    let w = top.carrier.complement(tol)?;
    let e1 = w.basis().column(0);
    let rest = top.carrier.basis().columns(0, n - 1);
    let basis = crate::linalg::Matrix::hstack(d, &[&e1, &rest])?;
    Ok(Projection::from_subspace(&Subspace::new(basis, tol)?))
}

/// Evidence gathered by [`adjacency_by_tops`].
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TopsHistogram {
    pub empty: usize,
    pub unique: usize,
    pub infinite: usize,
}

impl TopsHistogram {
    fn record(&mut self, kind: DoubleTopKind) {
        match kind {
            DoubleTopKind::Empty => self.empty += 1,
            DoubleTopKind::Unique => self.unique += 1,
            DoubleTopKind::Infinite => self.infinite += 1,
        }
    }
}

#[derive(Clone, Debug)]
pub struct TopsVerdict {
    pub adjacent: bool,
    /// Classification of the deterministic witness.
    pub witness_kind: DoubleTopKind,
    pub histogram: TopsHistogram,
}

/// Adjacency decided through double top-sets: `P, Q` are adjacent iff no
/// `R ∉ {P, Q}^⊤` makes `({R} ∪ {P, Q}^⊤)^⊤` infinite. Tests the deterministic
/// witness of [`refuting_witness`] and `samples` Haar-random ranges.
pub fn adjacency_by_tops(
    p: &Projection,
    q: &Projection,
    samples: usize,
    rng: &mut RngState,
    tol: &Tolerance,
) -> Result<TopsVerdict> {
    check_tops_dims(p, q)?;
    let (d, n) = (p.dim(), p.rank());
    if n < 2 {
        return Err(Error::Precondition(format!("need n >= 2, got {n}")));
    }
    if gap(p, q)? <= tol.eq_tol {
        return Err(Error::Precondition("P and Q coincide".into()));
    }
    let field = p.field().join(q.field());
    let mut histogram = TopsHistogram::default();
    let witness_kind = double_top_classify(&refuting_witness(p, q, tol)?, p, q, tol)?.kind;
    histogram.record(witness_kind);

    let top = top_set(d, field, &[p.clone(), q.clone()], n, tol)?;
    for _ in 0..samples {
        let r = random_projection(d, n, field, rng)?;
        if top.nonempty() && top.contains(&r, tol)? {
            continue;
        }
        histogram.record(double_top_classify(&r, p, q, tol)?.kind);
    }
    Ok(TopsVerdict { adjacent: histogram.infinite == 0, witness_kind, histogram })
}

/// Agreement check between the two adjacency criteria for one pair.
pub fn tops_agree_with_rank(
    p: &Projection,
    q: &Projection,
    samples: usize,
    rng: &mut RngState,
    tol: &Tolerance,
) -> Result<(bool, TopsVerdict)> {
    let verdict = adjacency_by_tops(p, q, samples, rng, tol)?;
    Ok((verdict.adjacent == are_adjacent(p, q, tol)?, verdict))
}
