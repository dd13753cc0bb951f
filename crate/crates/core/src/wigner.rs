//! Recovery of the operator behind a gap-metric isometry of `P_n(H)`.
//!
//! An isometry is either `P ↦ UPU*` with `U` unitary or antiunitary, or, only
//! when `dim H = 2n`, `P ↦ U(I − P)U*`. [`recover`] rebuilds `U` from oracle
//! queries alone: each line `ℓ` is mapped by intersecting the images of
//! rank-`n` subspaces through `ℓ`, relative scales come from the lines through
//! `e₁ + e_j`, and one complex probe separates linear from conjugate-linear
//! action. At `dim H = 2n` both forms are fitted and the better one is kept.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grassmann::{are_adjacent, are_orthogonal, gap, Projection, Subspace};
use crate::instances::{independent_pair, random_pair, random_projection, GapRegime};
use crate::linalg::{haar_unitary, herm_eig, op_norm, polar_unitary, svd, Field, Matrix, RngState, Tolerance, C64};

/// Retries per line after the first attempt.
pub const MAX_RETRIES: usize = 5;
/// Size of the validation set used for residuals.
pub const VALIDATION_SIZE: usize = 20;
/// A fit whose residual exceeds this is neither unitary nor antiunitary.
pub const CLASSIFICATION_LIMIT: f64 = 1e-6;

const STREAM_LINES: u64 = 0x6c69_6e65;
const STREAM_VALIDATION: u64 = 0x7661_6c69;
const STREAM_STRICT: u64 = 0x7374_7269;
const STREAM_ADHOC: u64 = 0x6164_686f;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Kind {
    Unitary,
    Antiunitary,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Form {
    Standard,
    Complement,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Unitary => "unitary",
            Kind::Antiunitary => "antiunitary",
        }
    }
}

impl Form {
    pub fn name(self) -> &'static str {
        match self {
            Form::Standard => "standard",
            Form::Complement => "complement",
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl fmt::Display for Form {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Kind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unitary" | "orthogonal" => Ok(Kind::Unitary),
            "antiunitary" => Ok(Kind::Antiunitary),
            _ => Err(Error::Domain(format!("unknown kind '{s}'"))),
        }
    }
}

impl FromStr for Form {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standard" => Ok(Form::Standard),
            "complement" => Ok(Form::Complement),
            _ => Err(Error::Domain(format!("unknown form '{s}'"))),
        }
    }
}

/// A map `P_n(H) → P_n(H)` available only through queries.
pub trait IsometryOracle {
    fn dim(&self) -> usize;
    fn rank(&self) -> usize;
    fn field(&self) -> Field;
    fn query(&mut self, p: &Projection) -> Result<Projection>;
}

/// An explicit symmetry `P ↦ U σ(P) U*` or `P ↦ U (I − σ(P)) U*`, where `σ` is
/// the identity or entrywise conjugation.
#[derive(Clone, Debug)]
pub struct Symmetry {
    u: Matrix,
    n: usize,
    kind: Kind,
    form: Form,
}

impl Symmetry {
    pub fn new(u: Matrix, n: usize, kind: Kind, form: Form, tol: &Tolerance) -> Result<Self> {
        if !u.is_square() || u.is_empty() {
            return Err(Error::Invalid(format!("U must be square and nonempty, got {:?}", u.shape())));
        }
        let d = u.rows();
        let res = u.unitarity_residual();
        if res > 10.0 * d as f64 * tol.eq_tol {
            return Err(Error::Invalid(format!("U is not unitary (‖U*U − I‖ = {res:.3e})")));
        }
        if n == 0 || n > d {
            return Err(Error::Domain(format!("rank {n} is out of range for dimension {d}")));
        }
        if form == Form::Complement && d != 2 * n {
            return Err(Error::Precondition(format!("the complement form needs dim = 2n, got dim {d} with n = {n}")));
        }
        if kind == Kind::Antiunitary && u.field() != Field::Complex {
            return Err(Error::Precondition("antiunitary symmetries need the complex field".into()));
        }
        Ok(Symmetry { u, n, kind, form })
    }

    pub fn u(&self) -> &Matrix {
        &self.u
    }

    pub fn dim(&self) -> usize {
        self.u.rows()
    }

    pub fn rank(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> Kind {
        self.kind
    }

    pub fn form(&self) -> Form {
        self.form
    }

    pub fn field(&self) -> Field {
        self.u.field()
    }

    pub fn apply(&self, p: &Projection) -> Result<Projection> {
        if p.dim() != self.dim() || p.rank() != self.n {
            return Err(Error::Dimension(format!(
                "expected a rank-{} projection on dimension {}, got rank {} on dimension {}",
                self.n,
                self.dim(),
                p.rank(),
                p.dim()
            )));
        }
        let mut base = p.promote(self.field());
        if self.kind == Kind::Antiunitary {
            base = base.conj();
        }
        if self.form == Form::Complement {
            base = base.complement();
        }
        Ok(base.conjugate_by(&self.u))
    }
}

/// Oracle computing a [`Symmetry`] exactly.
#[derive(Clone, Debug)]
pub struct MatrixOracle {
    symmetry: Symmetry,
}

impl MatrixOracle {
    pub fn symmetry(&self) -> &Symmetry {
        &self.symmetry
    }
}

impl IsometryOracle for MatrixOracle {
    fn dim(&self) -> usize {
        self.symmetry.dim()
    }

    fn rank(&self) -> usize {
        self.symmetry.rank()
    }

    fn field(&self) -> Field {
        self.symmetry.field()
    }

    fn query(&mut self, p: &Projection) -> Result<Projection> {
        self.symmetry.apply(p)
    }
}

pub fn make_oracle(u: &Matrix, n: usize, kind: Kind, form: Form, tol: &Tolerance) -> Result<MatrixOracle> {
    Ok(MatrixOracle { symmetry: Symmetry::new(u.clone(), n, kind, form, tol)? })
}

/// Counts queries and fails once an optional budget is spent.
#[derive(Clone, Debug)]
pub struct Budgeted<O> {
    inner: O,
    budget: Option<usize>,
    used: usize,
}

impl<O: IsometryOracle> Budgeted<O> {
    pub fn new(inner: O, budget: Option<usize>) -> Self {
        Budgeted { inner, budget, used: 0 }
    }

    pub fn used(&self) -> usize {
        self.used
    }

    pub fn into_inner(self) -> O {
        self.inner
    }
}

impl<O: IsometryOracle> IsometryOracle for Budgeted<O> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn rank(&self) -> usize {
        self.inner.rank()
    }

    fn field(&self) -> Field {
        self.inner.field()
    }

    fn query(&mut self, p: &Projection) -> Result<Projection> {
        if let Some(b) = self.budget {
            if self.used >= b {
                return Err(Error::BudgetExhausted(b));
            }
        }
        self.used += 1;
        self.inner.query(p)
    }
}

/// Returns a wrong image for the first query: a rank-`n` projection that
/// shares a kernel vector of the true image, hence sits at gap 1 from it.
#[derive(Clone, Debug)]
pub struct Corrupted<O> {
    inner: O,
    fired: bool,
}

impl<O: IsometryOracle> Corrupted<O> {
    pub fn new(inner: O) -> Self {
        Corrupted { inner, fired: false }
    }
}

impl<O: IsometryOracle> IsometryOracle for Corrupted<O> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn rank(&self) -> usize {
        self.inner.rank()
    }

    fn field(&self) -> Field {
        self.inner.field()
    }

    fn query(&mut self, p: &Projection) -> Result<Projection> {
        let image = self.inner.query(p)?;
        if self.fired {
            return Ok(image);
        }
        self.fired = true;
        let tol = Tolerance::default();
        let (d, n) = (image.dim(), image.rank());
        let eig = herm_eig(image.matrix(), &tol)?;
        // Columns 0..n span the image, n..d its kernel.
        let from_kernel = (d - n).min(n);
        let mut idx: Vec<usize> = (n..n + from_kernel).collect();
        idx.extend(0..n - from_kernel);
        let basis = eig.vectors.select_columns(&idx);
        Ok(Projection::from_subspace(&Subspace::new(basis, &tol)?))
    }
}

/// Minimal `k` with `k·n − (k−1)·d ≤ 1`: that many generic rank-`n` subspaces
/// through a line meet in the line alone.
pub fn covering_count(d: usize, n: usize) -> usize {
    (d - 1).div_ceil(d - n)
}

fn check_dims(d: usize, n: usize) -> Result<()> {
    if n == 0 || n >= d {
        return Err(Error::Domain(format!("recovery needs 1 <= n < d, got d = {d}, n = {n}")));
    }
    Ok(())
}

/// `k + 1` rank-`n` projections whose ranges contain the unit vector `v`, with
/// Haar-random complements inside `v^⊥`.
fn covering_projections(
    v: &Matrix,
    n: usize,
    field: Field,
    rng: &mut RngState,
    tol: &Tolerance,
) -> Result<Vec<Projection>> {
    let d = v.rows();
    let count = covering_count(d, n) + 1;
    let line = Subspace::new(v.clone(), tol)?;
    if n == 1 {
        return Ok(vec![Projection::from_subspace(&line); count]);
    }
    let perp = line.complement(tol)?;
    (0..count)
        .map(|_| {
            let h = haar_unitary(d - 1, field, rng)?;
            let extra = perp.basis() * &h.columns(0, n - 1);
            let basis = Matrix::hstack(d, &[v, &extra])?;
            Ok(Projection::from_subspace(&Subspace::new(basis, tol)?))
        })
        .collect()
}

/// Lines probed by [`recover`], in order: `e_j`, then `(e₁ + e_j)/√2` for
/// `j ≥ 2`, then `(e₁ + i·e₂)/√2` over the complex field.
fn probe_lines(d: usize, field: Field) -> Vec<Matrix> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let unit = |entries: &[(usize, C64)]| {
        let mut m = Matrix::zeros(field, d, 1).into_inner();
        for &(i, z) in entries {
            m[(i, 0)] = z;
        }
        Matrix::from_complex(field, m)
    };
    let one = C64::new(1.0, 0.0);
    let mut lines: Vec<Matrix> = (0..d).map(|j| unit(&[(j, one)])).collect();
    lines.extend((1..d).map(|j| unit(&[(0, one * s), (j, one * s)])));
    if field == Field::Complex {
        lines.push(unit(&[(0, one * s), (1, C64::new(0.0, s))]));
    }
    lines
}

/// Every projection [`recover`] may query for an oracle with this shape and
/// seed: each line's covering sets for all retry attempts, then the
/// validation set. Deterministic and free of duplicates.
#[derive(Clone, Debug)]
struct QueryPlan {
    d: usize,
    n: usize,
    field: Field,
    seed: u64,
    lines: Vec<Matrix>,
}

impl QueryPlan {
    fn new(d: usize, n: usize, field: Field, seed: u64) -> Result<Self> {
        check_dims(d, n)?;
        Ok(QueryPlan { d, n, field, seed, lines: probe_lines(d, field) })
    }

    fn covering(&self, line: usize, attempt: usize, tol: &Tolerance) -> Result<Vec<Projection>> {
        let mut rng = RngState::derive(self.seed, STREAM_LINES, (line * (MAX_RETRIES + 1) + attempt) as u64);
        covering_projections(&self.lines[line], self.n, self.field, &mut rng, tol)
    }

    fn validation(&self) -> Result<Vec<Projection>> {
        (0..VALIDATION_SIZE)
            .map(|i| {
                let mut rng = RngState::derive(self.seed, STREAM_VALIDATION, i as u64);
                random_projection(self.d, self.n, self.field, &mut rng)
            })
            .collect()
    }
}

fn same_projection(a: &Projection, b: &Projection) -> bool {
    a.dim() == b.dim() && (a.matrix() - b.matrix()).max_abs() <= 1e-12
}

/// Deterministic list of every projection [`recover`] can query for the given
/// shape and seed, including all retry attempts and, over the complex field,
/// the phase probe.
pub fn query_set(d: usize, n: usize, field: Field, seed: u64) -> Result<Vec<Projection>> {
    let tol = Tolerance::default();
    let plan = QueryPlan::new(d, n, field, seed)?;
    let mut out: Vec<Projection> = Vec::new();
    let mut push = |p: Projection| {
        if !out.iter().any(|q| same_projection(q, &p)) {
            out.push(p);
        }
    };
    for line in 0..plan.lines.len() {
        for attempt in 0..=MAX_RETRIES {
            plan.covering(line, attempt, &tol)?.into_iter().for_each(&mut push);
        }
    }
    plan.validation()?.into_iter().for_each(&mut push);
    Ok(out)
}

/// Answers repeated queries from a cache so each distinct projection reaches
/// the oracle once, whichever hypothesis asks.
struct Memo<'a> {
    oracle: &'a mut dyn IsometryOracle,
    entries: Vec<(Projection, Projection)>,
}

impl<'a> Memo<'a> {
    fn new(oracle: &'a mut dyn IsometryOracle) -> Self {
        Memo { oracle, entries: Vec::new() }
    }

    fn query(&mut self, p: &Projection) -> Result<Projection> {
        if let Some((_, img)) = self.entries.iter().find(|(q, _)| same_projection(q, p)) {
            return Ok(img.clone());
        }
        let img = self.oracle.query(p)?;
        if img.dim() != p.dim() || img.rank() != p.rank() {
            return Err(Error::OracleInconsistency(format!(
                "oracle returned rank {} on dimension {} for a rank-{} query on dimension {}",
                img.rank(),
                img.dim(),
                p.rank(),
                p.dim()
            )));
        }
        self.entries.push((p.clone(), img.clone()));
        Ok(img)
    }
}

fn view(form: Form, image: &Projection) -> Projection {
    match form {
        Form::Standard => image.clone(),
        Form::Complement => image.complement(),
    }
}

/// Intersects the ranges; the last one is the redundant check. Returns the
/// unit vector of the line and whether the intersection really was a line.
/// On failure the vector is the best least-squares line (top eigenvector of
/// `Σ Pᵢ`), so a wrong hypothesis still yields a measurable fit.
fn fit_line(images: &[Projection], field: Field, tol: &Tolerance) -> Result<(Matrix, bool)> {
    let d = images[0].dim();
    let ranges = images.iter().map(|p| p.range(tol)).collect::<Result<Vec<_>>>()?;
    let refs: Vec<&Subspace> = ranges.iter().collect();
    let head = Subspace::intersection_all(field, d, &refs[..refs.len() - 1], tol)?;
    if head.dim() == 1 {
        let all = Subspace::intersection_all(field, d, &refs, tol)?;
        if all.dim() == 1 {
            return Ok((all.basis().clone(), true));
        }
    }
    let sum = images.iter().fold(Matrix::zeros(field, d, d), |acc, p| &acc + &p.matrix().promote(field));
    let eig = herm_eig(&sum, tol)?;
    Ok((eig.vectors.column(0), false))
}

fn hypothesis_line(
    memo: &mut Memo,
    plan: &QueryPlan,
    form: Form,
    line: usize,
    tol: &Tolerance,
) -> Result<(Matrix, bool)> {
    let mut last = None;
    for attempt in 0..=MAX_RETRIES {
        let images = plan
            .covering(line, attempt, tol)?
            .iter()
            .map(|p| memo.query(p).map(|img| view(form, &img)))
            .collect::<Result<Vec<_>>>()?;
        let (v, ok) = fit_line(&images, plan.field, tol)?;
        if ok {
            return Ok((v, true));
        }
        last = Some(v);
    }
    Ok((last.expect("at least one attempt"), false))
}

/// Image of the line `ℓ` under the oracle's standard form, from covering
/// subspaces drawn with `seed`. Fails with an oracle-inconsistency error when
/// no attempt produces a 1-dimensional intersection.
pub fn line_image(oracle: &mut dyn IsometryOracle, line: &Subspace, seed: u64, tol: &Tolerance) -> Result<Subspace> {
    let (d, n) = (oracle.dim(), oracle.rank());
    check_dims(d, n)?;
    if line.dim() != 1 || line.ambient_dim() != d {
        return Err(Error::Dimension(format!("expected a line in dimension {d}")));
    }
    let field = oracle.field().join(line.field());
    let v = line.basis().promote(field);
    let mut memo = Memo::new(oracle);
    for attempt in 0..=MAX_RETRIES {
        let mut rng = RngState::derive(seed, STREAM_ADHOC, attempt as u64);
        let images = covering_projections(&v, n, field, &mut rng, tol)?
            .iter()
            .map(|p| memo.query(p))
            .collect::<Result<Vec<_>>>()?;
        let (w, ok) = fit_line(&images, field, tol)?;
        if ok {
            return Subspace::new(w, tol);
        }
    }
    Err(Error::OracleInconsistency(format!("no 1-dimensional line image after {} attempts", MAX_RETRIES + 1)))
}

fn inner(a: &Matrix, b: &Matrix) -> C64 {
    (&a.adjoint() * b).get(0, 0)
}

/// Coefficients `(α, β)` of the least-squares fit `α·a + β·b ≈ w`.
fn two_term_fit(a: &Matrix, b: &Matrix, w: &Matrix) -> Result<(C64, C64)> {
    let d = a.rows();
    let basis = Matrix::hstack(d, &[a, b])?;
    let s = svd(&basis)?;
    let smax = s.sigma[0];
    let rhs = &s.u.adjoint() * w;
    let mut coef = [C64::new(0.0, 0.0); 2];
    for (k, &sk) in s.sigma.iter().enumerate() {
        if sk > 1e-12 * smax {
            let scaled = rhs.get(k, 0) / sk;
            for (i, c) in coef.iter_mut().enumerate() {
                *c += s.v.get(i, k) * scaled;
            }
        }
    }
    Ok((coef[0], coef[1]))
}

/// Multiplies by a global phase so the first significant entry of the first
/// column is real and positive.
fn fix_global_phase(u: &Matrix) -> Matrix {
    let lead = (0..u.rows()).map(|i| u.get(i, 0)).find(|z| z.norm() > 1e-6);
    match lead {
        Some(z) => u.scale_complex(z.conj() / z.norm()),
        None => u.clone(),
    }
}

#[derive(Clone, Debug)]
struct Fit {
    symmetry: Symmetry,
    residual: f64,
}

fn fit_hypothesis(
    memo: &mut Memo,
    plan: &QueryPlan,
    form: Form,
    validation: &[Projection],
    tol: &Tolerance,
) -> Result<Fit> {
    let (d, n, field) = (plan.d, plan.n, plan.field);
    let mut us = Vec::with_capacity(d);
    for j in 0..d {
        us.push(hypothesis_line(memo, plan, form, j, tol)?.0);
    }
    let mut cs = vec![C64::new(1.0, 0.0)];
    for j in 1..d {
        let (w, _) = hypothesis_line(memo, plan, form, d + j - 1, tol)?;
        let (alpha, beta) = two_term_fit(&us[0], &us[j], &w)?;
        cs.push(if alpha.norm() > 1e-12 { beta / alpha } else { C64::new(1.0, 0.0) });
    }
    let kind = match field {
        Field::Real => Kind::Unitary,
        Field::Complex => {
            let (probe, _) = hypothesis_line(memo, plan, form, 2 * d - 1, tol)?;
            let i_c2 = cs[1] * C64::new(0.0, 1.0);
            let linear = &us[0] + &us[1].scale_complex(i_c2);
            let conjugate = &us[0] - &us[1].scale_complex(i_c2);
            let overlap = |v: &Matrix| inner(&probe, v).norm() / v.frobenius_norm().max(f64::MIN_POSITIVE);
            if overlap(&conjugate) > overlap(&linear) {
                Kind::Antiunitary
            } else {
                Kind::Unitary
            }
        }
    };
    let cols: Vec<Matrix> = us.iter().zip(&cs).map(|(u, c)| u.scale_complex(*c)).collect();
    let refs: Vec<&Matrix> = cols.iter().collect();
    let raw = Matrix::hstack(d, &refs)?;
    let u = fix_global_phase(&polar_unitary(&raw)?);
    let symmetry = Symmetry::new(u, n, kind, form, tol)?;
    let mut residual: f64 = 0.0;
    for p in validation {
        let observed = memo.query(p)?;
        let predicted = symmetry.apply(p)?;
        residual = residual.max(gap(&observed, &predicted)?);
    }
    Ok(Fit { symmetry, residual })
}

#[derive(Clone, Copy, Debug, Default)]
pub struct RecoverOptions {
    pub seed: u64,
    /// Runs [`verify_isometry_properties`] on 10 pairs before fitting.
    pub strict: bool,
}

/// Outcome of [`recover`].
#[derive(Clone, Debug)]
pub struct RecoveredSymmetry {
    pub u: Matrix,
    pub rank: usize,
    pub kind: Kind,
    pub form: Form,
    /// Largest validation gap between the oracle and the recovered action.
    pub residual: f64,
    /// Residual of the losing hypothesis, when two were fitted.
    pub rejected_residual: Option<f64>,
}

impl RecoveredSymmetry {
    /// The recovered action `P ↦ U σ(P) U*` (or its complement form).
    pub fn symmetry(&self) -> Symmetry {
        Symmetry { u: self.u.clone(), n: self.rank, kind: self.kind, form: self.form }
    }
}

/// Reconstructs `U`, its kind and, at `dim H = 2n`, the form of the isometry.
pub fn recover(oracle: &mut dyn IsometryOracle, tol: &Tolerance, opts: RecoverOptions) -> Result<RecoveredSymmetry> {
    let (d, n, field) = (oracle.dim(), oracle.rank(), oracle.field());
    let plan = QueryPlan::new(d, n, field, opts.seed)?;
    if opts.strict {
        let mut rng = RngState::derive(opts.seed, STREAM_STRICT, 0);
        let report = verify_isometry_properties(oracle, 10, &mut rng, tol)?;
        if report.max_violation() > CLASSIFICATION_LIMIT {
            return Err(Error::OracleInconsistency(format!(
                "oracle violates isometry properties by {:.3e}",
                report.max_violation()
            )));
        }
    }
    let forms: &[Form] = if d == 2 * n { &[Form::Standard, Form::Complement] } else { &[Form::Standard] };
    let validation = plan.validation()?;
    let mut memo = Memo::new(oracle);
    let mut fits = Vec::with_capacity(forms.len());
    for &form in forms {
        fits.push(fit_hypothesis(&mut memo, &plan, form, &validation, tol)?);
    }
    // At d = 2 the complement map is itself a standard symmetry and both fits
    // succeed; report the standard one rather than whichever rounds lower.
    let best = if fits[0].residual <= CLASSIFICATION_LIMIT {
        0
    } else {
        (1..fits.len()).fold(0, |b, i| if fits[i].residual < fits[b].residual { i } else { b })
    };
    let rejected_residual = (0..fits.len()).find(|&i| i != best).map(|i| fits[i].residual);
    let winner = &fits[best];
    if winner.residual > CLASSIFICATION_LIMIT {
        let all: Vec<String> = fits.iter().map(|f| format!("{} {:.3e}", f.symmetry.form, f.residual)).collect();
        return Err(Error::Classification(format!(
            "no hypothesis fits within {CLASSIFICATION_LIMIT:e}: {}",
            all.join(", ")
        )));
    }
    Ok(RecoveredSymmetry {
        u: winner.symmetry.u.clone(),
        rank: n,
        kind: winner.symmetry.kind,
        form: winner.symmetry.form,
        residual: winner.residual,
        rejected_residual,
    })
}

/// Largest observed deviations of an oracle from the structure an isometry
/// must preserve.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct IsometryReport {
    pub pairs: usize,
    /// `|‖φP − φQ‖ − ‖P − Q‖|`.
    pub gap: f64,
    /// `|‖φPφQ‖ − ‖PQ‖|` over pairs where either side is orthogonal.
    pub orthogonality: f64,
    /// Difference of the third singular values of `P − Q` and `φP − φQ` over
    /// pairs where either side is adjacent.
    pub adjacency: f64,
    /// `|‖(I − φP) − φQ‖ − ‖(I − P) − Q‖|`, only at `dim H = 2n`.
    pub complementarity: Option<f64>,
    /// Pairs where a predicate holds on one side but not the other.
    pub mismatches: usize,
}

impl IsometryReport {
    pub fn max_violation(&self) -> f64 {
        let worst = self.gap.max(self.orthogonality).max(self.adjacency).max(self.complementarity.unwrap_or(0.0));
        if self.mismatches > 0 {
            worst.max(1.0)
        } else {
            worst
        }
    }
}

fn third_singular_value(m: &Matrix) -> Result<f64> {
    Ok(svd(m)?.sigma.get(2).copied().unwrap_or(0.0))
}

#[derive(Clone, Copy)]
enum PairShape {
    Same,
    Regime(GapRegime),
    Independent,
}

/// Samples pairs of assorted shapes (identical, gap < 1, gap 1, orthogonal,
/// adjacent, independent) and measures how far the oracle bends the gap,
/// orthogonality, adjacency and, at `dim H = 2n`, complementarity.
pub fn verify_isometry_properties(
    oracle: &mut dyn IsometryOracle,
    trials: usize,
    rng: &mut RngState,
    tol: &Tolerance,
) -> Result<IsometryReport> {
    let (d, n, field) = (oracle.dim(), oracle.rank(), oracle.field());
    let mut shapes = vec![PairShape::Same];
    shapes.extend(GapRegime::ALL.into_iter().filter(|r| r.feasible(d, n)).map(PairShape::Regime));
    shapes.push(PairShape::Independent);
    let half = d == 2 * n;
    let mut report = IsometryReport { complementarity: half.then_some(0.0), ..Default::default() };
    for t in 0..trials {
        let (p, q) = match shapes[t % shapes.len()] {
            PairShape::Same => {
                let p = random_projection(d, n, field, rng)?;
                (p.clone(), p)
            }
            PairShape::Regime(r) => {
                let g = random_pair(d, n, field, r, rng)?;
                (g.p, g.q)
            }
            PairShape::Independent => independent_pair(d, n, field, rng)?,
        };
        let fp = oracle.query(&p)?;
        let fq = oracle.query(&q)?;
        report.pairs += 1;
        report.gap = report.gap.max((gap(&fp, &fq)? - gap(&p, &q)?).abs());

        let (orth, forth) = (are_orthogonal(&p, &q, tol)?, are_orthogonal(&fp, &fq, tol)?);
        if orth || forth {
            let before = op_norm(&(p.matrix() * q.matrix()))?;
            let after = op_norm(&(fp.matrix() * fq.matrix()))?;
            report.orthogonality = report.orthogonality.max((after - before).abs());
        }
        let (adj, fadj) = (are_adjacent(&p, &q, tol)?, are_adjacent(&fp, &fq, tol)?);
        if adj || fadj {
            let before = third_singular_value(&(p.matrix() - q.matrix()))?;
            let after = third_singular_value(&(fp.matrix() - fq.matrix()))?;
            report.adjacency = report.adjacency.max((after - before).abs());
        }
        let mut mismatch = orth != forth || adj != fadj;
        if half {
            let before = gap(&p.complement(), &q)?;
            let after = gap(&fp.complement(), &fq)?;
            let c = report.complementarity.get_or_insert(0.0);
            *c = c.max((after - before).abs());
            mismatch |= (before < 1.0 - tol.eq_tol) != (after < 1.0 - tol.eq_tol);
        }
        if mismatch {
            report.mismatches += 1;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    fn oracle(d: usize, n: usize, field: Field, kind: Kind, form: Form, seed: u64) -> MatrixOracle {
        let u = haar_unitary(d, field, &mut RngState::new(seed)).unwrap();
        make_oracle(&u, n, kind, form, &tol()).unwrap()
    }

    fn max_action_gap(a: &Symmetry, b: &Symmetry, field: Field, seed: u64) -> f64 {
        let mut rng = RngState::new(seed);
        (0..20)
            .map(|_| {
                let p = random_projection(a.dim(), a.rank(), field, &mut rng).unwrap();
                gap(&a.apply(&p).unwrap(), &b.apply(&p).unwrap()).unwrap()
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn make_oracle_examples() {
        let f = Field::Complex;
        let id = Matrix::identity(f, 4);
        let p = random_projection(4, 2, f, &mut RngState::new(1)).unwrap();
        let mut o = make_oracle(&id, 2, Kind::Unitary, Form::Standard, &tol()).unwrap();
        assert!(gap(&o.query(&p).unwrap(), &p).unwrap() < 1e-14);
        let mut o = make_oracle(&id, 2, Kind::Unitary, Form::Complement, &tol()).unwrap();
        assert!(gap(&o.query(&p).unwrap(), &p.complement()).unwrap() < 1e-14);
        let mut o = make_oracle(&id, 2, Kind::Antiunitary, Form::Standard, &tol()).unwrap();
        assert!(gap(&o.query(&p).unwrap(), &p.conj()).unwrap() < 1e-14);
        let real = Projection::coordinate(f, 4, &[0, 1]);
        assert!(gap(&o.query(&real).unwrap(), &real).unwrap() < 1e-14);

        assert!(make_oracle(&Matrix::identity(f, 5), 2, Kind::Unitary, Form::Complement, &tol()).is_err());
        let r = Matrix::identity(Field::Real, 4);
        assert!(make_oracle(&r, 2, Kind::Antiunitary, Form::Standard, &tol()).is_err());
        assert!(make_oracle(&Matrix::identity(f, 3).scale(2.0), 1, Kind::Unitary, Form::Standard, &tol()).is_err());
    }

    #[test]
    fn line_image_examples() {
        let f = Field::Complex;
        let mut o = make_oracle(&Matrix::identity(f, 5), 2, Kind::Unitary, Form::Standard, &tol()).unwrap();
        let line = Subspace::coordinate(f, 5, &[2]);
        assert!(line_image(&mut o, &line, 0, &tol()).unwrap().distance(&line).unwrap() < 1e-10);

        let mut o = oracle(5, 3, f, Kind::Unitary, Form::Standard, 3);
        let e1 = Subspace::coordinate(f, 5, &[0]);
        let expected = Subspace::new(o.symmetry().u().column(0), &tol()).unwrap();
        assert!(line_image(&mut o, &e1, 7, &tol()).unwrap().distance(&expected).unwrap() < 1e-10);

        let mut o = make_oracle(&Matrix::identity(f, 4), 2, Kind::Unitary, Form::Complement, &tol()).unwrap();
        assert!(matches!(
            line_image(&mut o, &Subspace::coordinate(f, 4, &[0]), 0, &tol()),
            Err(Error::OracleInconsistency(_))
        ));
    }

    #[test]
    fn covering_count_is_minimal() {
        for d in 2..10 {
            for n in 1..d {
                let k = covering_count(d, n);
                assert!(k * n <= 1 + (k - 1) * d);
                assert!(k == 1 || (k - 1) * n > 1 + (k - 2) * d);
            }
        }
    }

    #[test]
    fn recover_haar_standard() {
        let f = Field::Complex;
        let mut o = oracle(5, 2, f, Kind::Unitary, Form::Standard, 11);
        let truth = o.symmetry().clone();
        let rec = recover(&mut o, &tol(), RecoverOptions::default()).unwrap();
        assert_eq!((rec.kind, rec.form), (Kind::Unitary, Form::Standard));
        assert!(rec.residual < 1e-7);
        assert!(rec.u.unitarity_residual() < 1e-10);
        assert!(max_action_gap(&rec.symmetry(), &truth, f, 99) < 1e-7);
    }

    #[test]
    fn recover_complement_identity() {
        let mut o =
            make_oracle(&Matrix::identity(Field::Complex, 4), 2, Kind::Unitary, Form::Complement, &tol()).unwrap();
        let rec = recover(&mut o, &tol(), RecoverOptions::default()).unwrap();
        assert_eq!(rec.form, Form::Complement);
        assert!(rec.residual < 1e-10);
        assert!(rec.rejected_residual.unwrap() > 0.1);
    }

    #[test]
    fn recover_conjugation() {
        let mut o =
            make_oracle(&Matrix::identity(Field::Complex, 5), 2, Kind::Antiunitary, Form::Standard, &tol()).unwrap();
        let rec = recover(&mut o, &tol(), RecoverOptions::default()).unwrap();
        assert_eq!((rec.kind, rec.form), (Kind::Antiunitary, Form::Standard));
        assert!(rec.residual < 1e-10);
    }

    #[test]
    fn recover_real_and_mixed_configurations() {
        let cases = [
            (3, 1, Field::Real, Kind::Unitary, Form::Standard),
            (6, 3, Field::Real, Kind::Unitary, Form::Complement),
            (6, 3, Field::Complex, Kind::Antiunitary, Form::Complement),
            (7, 6, Field::Complex, Kind::Unitary, Form::Standard),
        ];
        for (i, &(d, n, f, kind, form)) in cases.iter().enumerate() {
            let mut o = oracle(d, n, f, kind, form, 40 + i as u64);
            let truth = o.symmetry().clone();
            let rec = recover(&mut o, &tol(), RecoverOptions { seed: 5, strict: true }).unwrap();
            assert_eq!((rec.kind, rec.form), (kind, form), "case {i}");
            assert!(max_action_gap(&rec.symmetry(), &truth, f, 7) < 1e-7, "case {i}");
        }
    }

    #[test]
    fn two_dimensional_complement_is_reported_standard() {
        for f in [Field::Real, Field::Complex] {
            let mut o = make_oracle(&Matrix::identity(f, 2), 1, Kind::Unitary, Form::Complement, &tol()).unwrap();
            let rec = recover(&mut o, &tol(), RecoverOptions::default()).unwrap();
            assert_eq!(rec.form, Form::Standard);
            assert!(rec.residual < 1e-12 && rec.rejected_residual.unwrap() < 1e-12);
            let p = Projection::coordinate(f, 2, &[0]);
            let image = rec.symmetry().apply(&p).unwrap();
            assert!(gap(&image, &Projection::coordinate(f, 2, &[1])).unwrap() < 1e-12);
        }
    }

    #[test]
    fn recover_rejects_non_isometries() {
        let mut o = Corrupted::new(oracle(5, 2, Field::Real, Kind::Unitary, Form::Standard, 2));
        assert!(recover(&mut o, &tol(), RecoverOptions { seed: 0, strict: true }).is_err());
    }

    #[test]
    fn budget_is_enforced() {
        let o = oracle(4, 1, Field::Real, Kind::Unitary, Form::Standard, 1);
        let mut b = Budgeted::new(o, Some(3));
        assert!(matches!(recover(&mut b, &tol(), RecoverOptions::default()), Err(Error::BudgetExhausted(3))));
    }

    #[test]
    fn query_set_properties() {
        for field in [Field::Real, Field::Complex] {
            let a = query_set(5, 2, field, 3).unwrap();
            let b = query_set(5, 2, field, 3).unwrap();
            assert_eq!(a, b);
            assert!(a.len() >= 5 + 4 + 1 + 20);
            assert!(a.iter().all(|p| p.rank() == 2 && p.dim() == 5));
            assert!(a.iter().all(|p| Projection::new(p.matrix().clone(), &tol()).is_ok()));
        }
    }

    #[test]
    fn query_set_covers_recover() {
        let set = query_set(4, 2, Field::Complex, 9).unwrap();
        struct Recording {
            inner: MatrixOracle,
            seen: Vec<Projection>,
        }
        impl IsometryOracle for Recording {
            fn dim(&self) -> usize {
                self.inner.dim()
            }
            fn rank(&self) -> usize {
                self.inner.rank()
            }
            fn field(&self) -> Field {
                self.inner.field()
            }
            fn query(&mut self, p: &Projection) -> Result<Projection> {
                self.seen.push(p.clone());
                self.inner.query(p)
            }
        }
        let mut o =
            Recording { inner: oracle(4, 2, Field::Complex, Kind::Unitary, Form::Complement, 4), seen: Vec::new() };
        recover(&mut o, &tol(), RecoverOptions { seed: 9, strict: false }).unwrap();
        assert!(o.seen.iter().all(|p| set.iter().any(|q| same_projection(p, q))));
    }

    #[test]
    fn isometry_reports() {
        let mut rng = RngState::new(0);
        for form in [Form::Standard, Form::Complement] {
            let mut o = oracle(6, 3, Field::Complex, Kind::Antiunitary, form, 8);
            let r = verify_isometry_properties(&mut o, 30, &mut rng, &tol()).unwrap();
            assert!(r.max_violation() < 1e-9, "{r:?}");
            assert!(r.complementarity.is_some());
        }
        let mut o = Corrupted::new(oracle(5, 2, Field::Real, Kind::Unitary, Form::Standard, 8));
        let r = verify_isometry_properties(&mut o, 10, &mut rng, &tol()).unwrap();
        assert!(r.max_violation() > 0.1);
    }
}
