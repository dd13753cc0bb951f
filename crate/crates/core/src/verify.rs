//! Seeded property suites over every module, with one deterministic report
//! line per property.
//!
//! Each trial draws from its own stream `RngState::derive(seed, check, trial)`,
//! so results do not depend on evaluation order. Reports contain no timing
//! information and are byte-identical for a fixed seed.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grassmann::{are_adjacent, are_orthogonal, gap, principal_angles, Projection, Subspace};
use crate::instances::{independent_pair, random_hermitian, random_pair, random_projection, GapRegime};
use crate::linalg::{haar_unitary, herm_eig, numerical_rank, op_norm, svd, Field, Matrix, RngState, Tolerance};
use crate::mpq::{
    extract_with_residual, mpq_construct_orthogonal, mpq_contains, mpq_sample, mpq_witness_outside, outside_threshold,
    outside_threshold_closed_form, rejection_sample,
};
use crate::ortho_lattice::{adjacency_by_tops, double_top_classify, top_set, DoubleTopKind};
use crate::two_projections::{a_alpha, block_s, block_t, canonical_form, norm_2x2, reconstruction_residual, Sign};
use crate::wigner::{
    make_oracle, recover, verify_isometry_properties, Corrupted, Form, IsometryOracle, Kind, RecoverOptions,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    All,
    Metric,
    Canon,
    Mpq,
    Tops,
    Wigner,
}

impl Suite {
    pub const PARTS: [Suite; 5] = [Suite::Metric, Suite::Canon, Suite::Mpq, Suite::Tops, Suite::Wigner];

    pub fn name(self) -> &'static str {
        match self {
            Suite::All => "all",
            Suite::Metric => "metric",
            Suite::Canon => "canon",
            Suite::Mpq => "mpq",
            Suite::Tops => "tops",
            Suite::Wigner => "wigner",
        }
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        std::iter::once(Suite::All)
            .chain(Suite::PARTS)
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::Domain(format!("unknown suite '{s}'")))
    }
}

/// Acceptance rule of a check: the worst value must stay at most, or at
/// least, the bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Bound {
    AtMost(f64),
    AtLeast(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub trials: usize,
    /// Largest (for `AtMost`) or smallest (for `AtLeast`) observed value.
    pub value: f64,
    pub bound: Bound,
    pub error: Option<String>,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.error.is_none()
            && match self.bound {
                Bound::AtMost(t) => self.value <= t,
                Bound::AtLeast(t) => self.value >= t,
            }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed() { "PASS" } else { "FAIL" };
        write!(f, "{verdict} {} trials={}", self.name, self.trials)?;
        match self.bound {
            Bound::AtMost(t) => write!(f, " max_dev={:.3e} tol={t:.3e}", self.value)?,
            Bound::AtLeast(t) => write!(f, " min_value={:.3e} bound={t:.3e}", self.value)?,
        }
        if let Some(e) = &self.error {
            write!(f, " error=\"{e}\"")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Line {
    Check(Check),
    Note(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub header: String,
    pub lines: Vec<Line>,
}

impl Report {
    pub fn checks(&self) -> impl Iterator<Item = &Check> {
        self.lines.iter().filter_map(|l| match l {
            Line::Check(c) => Some(c),
            Line::Note(_) => None,
        })
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks().find(|c| c.name == name)
    }

    pub fn passed(&self) -> bool {
        self.checks().all(Check::passed)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.header);
        out.push('\n');
        for line in &self.lines {
            match line {
                Line::Check(c) => out.push_str(&c.to_string()),
                Line::Note(n) => {
                    out.push_str("  ");
                    out.push_str(n);
                }
            }
            out.push('\n');
        }
        let failed = self.checks().filter(|c| !c.passed()).count();
        out.push_str(&format!("SUMMARY passed={} failed={failed}\n", self.checks().count() - failed));
        out
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Overrides the default number of trials of every randomized check.
    pub trials: Option<usize>,
    /// Wraps the generated isometry oracles so their first answer is wrong;
    /// the wigner suite must then fail.
    pub inject_fault: bool,
}

/// Runs a suite and collects its report.
pub fn run(suite: Suite, opts: VerifyOptions, tol: &Tolerance) -> Report {
    let header = format!(
        "grasskit verify suite={} seed={} eq_tol={:e} rank_tol={:e} cluster_tol={:e}",
        suite.name(),
        opts.seed,
        tol.eq_tol,
        tol.rank_tol,
        tol.cluster_tol
    );
    let mut r = Runner { opts, tol: *tol, lines: Vec::new() };
    let parts: Vec<Suite> = if suite == Suite::All { Suite::PARTS.to_vec() } else { vec![suite] };
    for part in parts {
        match part {
            Suite::Metric => metric_suite(&mut r),
            Suite::Canon => canon_suite(&mut r),
            Suite::Mpq => mpq_suite(&mut r),
            Suite::Tops => tops_suite(&mut r),
            Suite::Wigner => wigner_suite(&mut r),
            Suite::All => unreachable!(),
        }
    }
    Report { header, lines: r.lines }
}

/// FNV-1a, used to give each check its own random stream.
fn stream_id(name: &str) -> u64 {
    name.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

struct Runner {
    opts: VerifyOptions,
    tol: Tolerance,
    lines: Vec<Line>,
}

impl Runner {
    fn trials(&self, default: usize) -> usize {
        self.opts.trials.unwrap_or(default)
    }

    fn note(&mut self, s: String) {
        self.lines.push(Line::Note(s));
    }

    /// Runs `trials` trials, each yielding one optional value per spec (`None`
    /// when the property does not apply to that trial), and records one check
    /// per spec. The first error aborts the loop and fails every spec.
    fn multi<F>(&mut self, trials: usize, specs: &[(&str, Bound)], mut f: F)
    where
        F: FnMut(usize, &mut RngState, &Tolerance) -> Result<Vec<Option<f64>>>,
    {
        let stream = stream_id(specs[0].0);
        let mut worst: Vec<f64> = specs
            .iter()
            .map(|(_, b)| match b {
                Bound::AtMost(_) => 0.0,
                Bound::AtLeast(_) => f64::INFINITY,
            })
            .collect();
        let mut counts = vec![0usize; specs.len()];
        let mut error = None;
        for t in 0..trials {
            let mut rng = RngState::derive(self.opts.seed, stream, t as u64);
            match f(t, &mut rng, &self.tol) {
                Ok(values) => {
                    for (i, v) in values.into_iter().enumerate() {
                        let Some(v) = v else { continue };
                        counts[i] += 1;
                        worst[i] = match specs[i].1 {
                            Bound::AtMost(_) if v.is_nan() || v > worst[i] => {
                                if v.is_nan() {
                                    f64::INFINITY
                                } else {
                                    v
                                }
                            }
                            Bound::AtLeast(_) if v.is_nan() || v < worst[i] => {
                                if v.is_nan() {
                                    f64::NEG_INFINITY
                                } else {
                                    v
                                }
                            }
                            _ => worst[i],
                        };
                    }
                }
                Err(e) => {
                    error = Some(format!("trial {t}: {e}"));
                    break;
                }
            }
        }
        for (i, (name, bound)) in specs.iter().enumerate() {
            self.lines.push(Line::Check(Check {
                name: name.to_string(),
                trials: counts[i],
                value: worst[i],
                bound: *bound,
                error: error.clone(),
            }));
        }
    }

    fn single<F>(&mut self, name: &str, trials: usize, bound: Bound, mut f: F)
    where
        F: FnMut(usize, &mut RngState, &Tolerance) -> Result<f64>,
    {
        self.multi(trials, &[(name, bound)], |t, rng, tol| Ok(vec![Some(f(t, rng, tol)?)]));
    }
}

fn field_of(t: usize) -> Field {
    if t.is_multiple_of(2) {
        Field::Real
    } else {
        Field::Complex
    }
}

fn flag(bad: bool) -> f64 {
    if bad {
        1.0
    } else {
        0.0
    }
}

/// `(d, n)` with `dmin ≤ d ≤ dmax`, `1 ≤ n < d` and `keep(d, n)`.
fn draw_dims(rng: &mut RngState, dmin: usize, dmax: usize, keep: impl Fn(usize, usize) -> bool) -> (usize, usize) {
    loop {
        let d = rng.int_inclusive(dmin.max(2), dmax);
        let n = rng.int_inclusive(1, d - 1);
        if keep(d, n) {
            return (d, n);
        }
    }
}

fn regime_pair(regime: GapRegime, field: Field, dmax: usize, rng: &mut RngState) -> Result<(Projection, Projection)> {
    let (d, n) = draw_dims(rng, 2, dmax, |d, n| regime.feasible(d, n));
    let g = random_pair(d, n, field, regime, rng)?;
    Ok((g.p, g.q))
}

/// Cycles through every gap regime and an independent Haar pair.
fn mixed_pair(t: usize, field: Field, dmax: usize, rng: &mut RngState) -> Result<(Projection, Projection)> {
    match GapRegime::ALL.get(t % 5) {
        Some(&regime) => regime_pair(regime, field, dmax, rng),
        None => {
            let (d, n) = draw_dims(rng, 2, dmax, |_, _| true);
            independent_pair(d, n, field, rng)
        }
    }
}

fn metric_suite(r: &mut Runner) {
    r.single("linalg.op_norm_vs_eig", r.trials(100), Bound::AtMost(1e-8), |t, rng, tol| {
        let d = rng.int_inclusive(1, 12);
        let h = random_hermitian(d, field_of(t), rng);
        let eig = herm_eig(&h, tol)?;
        let top = eig.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        Ok((op_norm(&h)? - top).abs())
    });

    let d = 12;
    r.single(
        "linalg.factorization_residual",
        r.trials(100),
        Bound::AtMost(10.0 * d as f64 * r.tol.eq_tol),
        |t, rng, tol| {
            let field = field_of(t);
            let h = random_hermitian(d, field, rng);
            let eig = herm_eig(&h, tol)?;
            let rebuilt = &(&eig.vectors * &Matrix::from_diagonal_real(field, &eig.values)) * &eig.vectors.adjoint();
            let m = &h * &haar_unitary(d, field, rng)?;
            let s = svd(&m)?;
            let rebuilt_svd = &(&s.u * &Matrix::from_diagonal_real(field, &s.sigma)) * &s.v.adjoint();
            Ok(op_norm(&(&rebuilt - &h))?.max(op_norm(&(&rebuilt_svd - &m))?))
        },
    );

    r.single("linalg.haar_unitarity", r.trials(32), Bound::AtMost(1e-8), |t, rng, _| {
        Ok(haar_unitary(t % 32 + 1, field_of(t / 32), rng)?.unitarity_residual())
    });

    r.single("linalg.rank_invariance", r.trials(100), Bound::AtMost(0.0), |t, rng, tol| {
        let field = field_of(t);
        let d = rng.int_inclusive(2, 10);
        let k = rng.int_inclusive(1, d);
        let s: Vec<f64> = (0..k).map(|_| rng.uniform(0.1, 10.0)).collect();
        let a = &(&haar_unitary(d, field, rng)?.columns(0, k) * &Matrix::from_diagonal_real(field, &s))
            * &haar_unitary(d, field, rng)?.columns(0, k).adjoint();
        let moved = &(&haar_unitary(d, field, rng)? * &a) * &haar_unitary(d, field, rng)?;
        Ok(flag(numerical_rank(&a, tol) != numerical_rank(&moved, tol)))
    });

    r.single("metric.axioms", r.trials(200), Bound::AtMost(1e-12), |t, rng, _| {
        let field = field_of(t);
        let (d, n) = draw_dims(rng, 2, 10, |_, _| true);
        let p = random_projection(d, n, field, rng)?;
        let q = random_projection(d, n, field, rng)?;
        let s = random_projection(d, n, field, rng)?;
        let symmetry = (gap(&p, &q)? - gap(&q, &p)?).abs();
        let triangle = (gap(&p, &s)? - gap(&p, &q)? - gap(&q, &s)?).max(0.0);
        Ok(symmetry.max(triangle).max(gap(&p, &p)?))
    });

    r.single("metric.rank_one_identity", r.trials(200), Bound::AtMost(1e-10), |t, rng, _| {
        let field = field_of(t);
        let d = rng.int_inclusive(2, 8);
        let p = random_projection(d, 1, field, rng)?;
        let q = random_projection(d, 1, field, rng)?;
        let tr = (p.matrix() * q.matrix()).trace().re;
        Ok((gap(&p, &q)? - (1.0 - tr).max(0.0).sqrt()).abs())
    });

    r.multi(
        r.trials(200),
        &[("metric.doubling", Bound::AtMost(1e-8)), ("metric.largest_angle", Bound::AtMost(1e-8))],
        |t, rng, tol| {
            let (p, q) = mixed_pair(t, field_of(t / 5), 10, rng)?;
            let angles = principal_angles(&p, &q, tol)?;
            let cut = 1e-6;
            let mut expected: Vec<f64> = angles.sines().into_iter().filter(|&s| s > cut).flat_map(|s| [s, s]).collect();
            expected.sort_by(|a, b| b.total_cmp(a));
            let observed: Vec<f64> = svd(&(p.matrix() - q.matrix()))?.sigma.into_iter().filter(|&s| s > cut).collect();
            let doubling = if expected.len() != observed.len() {
                1.0
            } else {
                expected.iter().zip(&observed).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
            };
            let largest = (gap(&p, &q)? - angles.largest().sin()).abs();
            Ok(vec![Some(doubling), Some(largest)])
        },
    );

    r.single("metric.unitary_invariance", r.trials(200), Bound::AtMost(1e-10), |t, rng, _| {
        let field = field_of(t / 5);
        let (p, q) = mixed_pair(t, field, 10, rng)?;
        let u = haar_unitary(p.dim(), field, rng)?;
        Ok((gap(&p.conjugate_by(&u), &q.conjugate_by(&u))? - gap(&p, &q)?).abs())
    });

    r.single("metric.orthogonal_gap_one", r.trials(200), Bound::AtMost(1e-10), |t, rng, tol| {
        let (p, q) = regime_pair(GapRegime::Orthogonal, field_of(t), 10, rng)?;
        Ok((gap(&p, &q)? - 1.0).abs() + flag(!are_orthogonal(&p, &q, tol)?))
    });

    r.single("metric.gap_one_not_orthogonal", r.trials(100), Bound::AtMost(1e-10), |t, rng, tol| {
        let (p, q) = regime_pair(GapRegime::Eq1, field_of(t), 10, rng)?;
        Ok((gap(&p, &q)? - 1.0).abs() + flag(are_orthogonal(&p, &q, tol)?))
    });

    r.single("metric.complement_isometry", r.trials(200), Bound::AtMost(1e-12), |t, rng, _| {
        let (p, q) = mixed_pair(t, field_of(t / 5), 10, rng)?;
        Ok((gap(&p.complement(), &q.complement())? - gap(&p, &q)?).abs())
    });
}

fn canon_suite(r: &mut Runner) {
    let points = 1000;
    r.single("canon.norm_2x2_grid", points, Bound::AtMost(1e-12), |t, _, _| {
        if t > 0 {
            return Ok(0.0);
        }
        let mut dev: f64 = 0.0;
        let mut prev = f64::NEG_INFINITY;
        let mut ordered = true;
        for i in 0..points {
            let alpha = -0.5 + i as f64 / (points - 1) as f64;
            for sign in [Sign::Plus, Sign::Minus] {
                let exact = op_norm(&a_alpha(alpha, sign))?;
                dev = dev.max((norm_2x2(alpha, sign)? - exact).abs());
                if sign == Sign::Plus {
                    ordered &= exact > prev && (i == 0 || exact > FRAC_1_SQRT_2);
                    prev = exact;
                }
            }
        }
        let at_min = (op_norm(&a_alpha(-0.5, Sign::Plus))? - FRAC_1_SQRT_2).abs();
        Ok(dev.max(at_min) + flag(!ordered))
    });

    let regimes = [GapRegime::Lt1, GapRegime::Eq1, GapRegime::Orthogonal, GapRegime::Adjacent];
    r.multi(
        r.trials(200),
        &[
            ("canon.round_trip_ratio", Bound::AtMost(1.0)),
            ("canon.block_counts", Bound::AtMost(0.0)),
            ("canon.gap_from_blocks", Bound::AtMost(1e-8)),
            ("canon.angles_from_blocks", Bound::AtMost(1e-7)),
        ],
        |t, rng, tol| {
            let regime = regimes[t % regimes.len()];
            let field = field_of(t / regimes.len());
            let (d, n) = draw_dims(rng, 2, 12, |d, n| regime.feasible(d, n));
            let g = random_pair(d, n, field, regime, rng)?;
            let c = canonical_form(&g.p, &g.q, tol)?;
            let ratio = reconstruction_residual(&c, &g.p, &g.q)? / (10.0 * d as f64 * tol.eq_tol);
            let counts = flag(c.p() != g.truth.p() || c.r() != g.truth.r() || c.ds().len() != g.truth.ds().len());
            let gap_dev = (c.gap() - gap(&g.p, &g.q)?).abs();
            let from_blocks = c.principal_angles();
            let direct = principal_angles(&g.p, &g.q, tol)?;
            let angle_dev = from_blocks
                .radians()
                .iter()
                .zip(direct.radians())
                .fold(flag(from_blocks.len() != direct.len()), |m, (a, b)| m.max((a - b).abs()));
            Ok(vec![Some(ratio), Some(counts), Some(gap_dev), Some(angle_dev)])
        },
    );

    r.single("canon.unitary_equivariance", r.trials(100), Bound::AtMost(1e-8), |t, rng, tol| {
        let field = field_of(t / 5);
        let (p, q) = mixed_pair(t, field, 12, rng)?;
        let u = haar_unitary(p.dim(), field, rng)?;
        let a = canonical_form(&p, &q, tol)?;
        let b = canonical_form(&p.conjugate_by(&u), &q.conjugate_by(&u), tol)?;
        if a.p() != b.p() || a.r() != b.r() || a.ds().len() != b.ds().len() {
            return Ok(1.0);
        }
        Ok(a.ds().iter().zip(b.ds()).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())))
    });
}

fn mpq_suite(r: &mut Runner) {
    let grid = 100;
    r.single("mpq.block_identities", grid, Bound::AtMost(1e-10), |t, _, _| {
        let d = t as f64 / (grid - 1) as f64;
        let s = block_s();
        let half = block_t(0.5)?;
        let td = block_t(d)?;
        let mid = block_t((1.0 + d.sqrt()) / 2.0)?;
        let boundary = (1.0 - 2.0 * ((1.0 - d) * d).sqrt()).max(0.0).sqrt() / 2f64.sqrt();
        let interior = (2.0 - 2.0 * d.sqrt()).max(0.0).sqrt() / 2.0;
        Ok((op_norm(&(&s - &half))? - FRAC_1_SQRT_2)
            .abs()
            .max((op_norm(&(&td - &half))? - boundary).abs())
            .max((op_norm(&(&s - &mid))? - interior).abs())
            .max((op_norm(&(&td - &mid))? - interior).abs()))
    });

    r.multi(
        grid - 1,
        &[("mpq.outside_witness", Bound::AtMost(0.0)), ("mpq.threshold_closed_form", Bound::AtMost(1e-10))],
        |t, _, _| {
            let d = t as f64 / (grid - 1) as f64;
            let threshold = outside_threshold(d)?;
            let w = mpq_witness_outside(d, threshold / 2.0)?;
            let found = threshold > 0.0 && w.outside_s && w.inside_t;
            Ok(vec![Some(flag(!found)), Some((threshold - outside_threshold_closed_form(d)).abs())])
        },
    );

    r.single("mpq.nonempty", r.trials(200), Bound::AtMost(0.0), |t, rng, tol| {
        let (p, q) = mixed_pair(t, field_of(t / 5), 12, rng)?;
        let m = mpq_sample(&p, &q, rng, tol)?;
        Ok(flag(!mpq_contains(&m.r, &p, &q, tol)?))
    });

    let orthogonal_small = |t: usize, rng: &mut RngState| -> Result<(Projection, Projection)> {
        let (d, n) = draw_dims(rng, 2, 10, |d, n| n <= 4 && d >= 2 * n);
        let g = random_pair(d, n, field_of(t), GapRegime::Orthogonal, rng)?;
        Ok((g.p, g.q))
    };

    r.multi(
        r.trials(50),
        &[
            ("mpq.constructed_gaps", Bound::AtMost(1e-10)),
            ("mpq.extract_unitary", Bound::AtMost(1e-8)),
            ("mpq.extract_round_trip", Bound::AtMost(1e-8)),
        ],
        |t, rng, tol| {
            let (p, q) = orthogonal_small(t, rng)?;
            let u = haar_unitary(p.rank(), p.field(), rng)?;
            let m = mpq_construct_orthogonal(&p, &q, &u, tol)?;
            let gaps = (gap(&m.r, &p)? - FRAC_1_SQRT_2).abs().max((gap(&m.r, &q)? - FRAC_1_SQRT_2).abs());
            let (back, _) = extract_with_residual(&m.r, &p, &q, tol)?;
            let sampled = mpq_sample(&p, &q, rng, tol)?;
            let (sampled_back, _) = extract_with_residual(&sampled.r, &p, &q, tol)?;
            let unitarity = back.u.unitarity_residual().max(sampled_back.u.unitarity_residual());
            Ok(vec![Some(gaps), Some(unitarity), Some((&back.u - &u).max_abs())])
        },
    );

    let mut largest_eps: f64 = 0.0;
    r.single("mpq.exhaustive_structure_ratio", r.trials(50), Bound::AtMost(1.0), |t, rng, tol| {
        let (p, q) = if t % 2 == 0 {
            orthogonal_small(t / 2, rng)?
        } else {
            regime_pair(GapRegime::Eq1, field_of(t / 2), 10, rng)?
        };
        let base = mpq_sample(&p, &q, rng, tol)?.r;
        let (cand, eps) = rejection_sample(&base, &p, &q, rng, tol, 500)?
            .ok_or_else(|| Error::Invalid("rejection sampler accepted no candidate".into()))?;
        largest_eps = largest_eps.max(eps);
        let (_, residual) = extract_with_residual(&cand, &p, &q, tol)?;
        Ok(residual / (100.0 * p.dim() as f64 * tol.eq_tol))
    });
    r.note(format!("rejection sampler: largest accepted perturbation eps={largest_eps:.3e}"));

    r.single("mpq.equivariance", r.trials(100), Bound::AtMost(0.0), |t, rng, tol| {
        let field = field_of(t / 5);
        let (p, q) = mixed_pair(t, field, 10, rng)?;
        let cand = if t % 2 == 0 {
            mpq_sample(&p, &q, rng, tol)?.r
        } else {
            random_projection(p.dim(), p.rank(), field, rng)?
        };
        let u = haar_unitary(p.dim(), field, rng)?;
        let before = mpq_contains(&cand, &p, &q, tol)?;
        let after = mpq_contains(&cand.conjugate_by(&u), &p.conjugate_by(&u), &q.conjugate_by(&u), tol)?;
        Ok(flag(before != after))
    });
}

fn tops_suite(r: &mut Runner) {
    let non_adjacent = [GapRegime::Lt1, GapRegime::Eq1, GapRegime::Orthogonal];
    r.multi(
        r.trials(200),
        &[("tops.equivalence", Bound::AtMost(0.0)), ("tops.deterministic_refutation", Bound::AtMost(0.0))],
        |t, rng, tol| {
            let field = field_of(t / 2);
            let (d, n) = draw_dims(rng, 5, 11, |d, n| (2..=4).contains(&n) && d > 2 * n);
            let (p, q) = if t % 2 == 0 {
                let g = random_pair(d, n, field, GapRegime::Adjacent, rng)?;
                (g.p, g.q)
            } else {
                match non_adjacent.get((t / 2) % 4) {
                    Some(&regime) => {
                        let g = random_pair(d, n, field, regime, rng)?;
                        (g.p, g.q)
                    }
                    None => independent_pair(d, n, field, rng)?,
                }
            };
            let verdict = adjacency_by_tops(&p, &q, 64, rng, tol)?;
            let adjacent = are_adjacent(&p, &q, tol)?;
            let refuted = (!adjacent).then(|| flag(verdict.witness_kind != DoubleTopKind::Infinite));
            Ok(vec![Some(flag(verdict.adjacent != adjacent)), refuted])
        },
    );

    r.single("tops.unique_witness", r.trials(100), Bound::AtMost(1e-8), |t, rng, tol| {
        let field = field_of(t / 5);
        let (d, n) = draw_dims(rng, 6, 11, |d, n| (2..=3).contains(&n) && d >= 3 * n);
        let (p, q) = match GapRegime::ALL.get(t % 5) {
            Some(&regime) => {
                let g = random_pair(d, n, field, regime, rng)?;
                (g.p, g.q)
            }
            None => independent_pair(d, n, field, rng)?,
        };
        let top = top_set(d, field, &[p.clone(), q.clone()], n, tol)?;
        let k = &top.carrier;
        let w = k.complement(tol)?;
        // dim(K + Im R) = d − n forces a unique member.
        let from_w = w.dim() - n;
        let from_k = n - from_w;
        let wb = w.basis() * &haar_unitary(w.dim(), field, rng)?.columns(0, from_w);
        let kb = if from_k > 0 {
            k.basis() * &haar_unitary(k.dim(), field, rng)?.columns(0, from_k)
        } else {
            Matrix::zeros(field, d, 0)
        };
        let rr = Projection::from_subspace(&Subspace::new(Matrix::hstack(d, &[&wb, &kb])?, tol)?);
        let res = double_top_classify(&rr, &p, &q, tol)?;
        let Some(tw) = res.witness else { return Ok(1.0) };
        let kproj = Projection::from_subspace(k);
        Ok(op_norm(&(tw.matrix() * kproj.matrix()))?.max(op_norm(&(tw.matrix() * rr.matrix()))?))
    });

    r.single("tops.carrier_equivariance", r.trials(100), Bound::AtMost(1e-8), |t, rng, tol| {
        let field = field_of(t / 5);
        let (d, n) = draw_dims(rng, 3, 11, |d, n| d > 2 * n);
        let (p, q) = match GapRegime::ALL.get(t % 5).filter(|r| r.feasible(d, n)) {
            Some(&regime) => {
                let g = random_pair(d, n, field, regime, rng)?;
                (g.p, g.q)
            }
            None => independent_pair(d, n, field, rng)?,
        };
        let u = haar_unitary(d, field, rng)?;
        let before = top_set(d, field, &[p.clone(), q.clone()], n, tol)?.carrier;
        let after = top_set(d, field, &[p.conjugate_by(&u), q.conjugate_by(&u)], n, tol)?.carrier;
        let moved = Subspace::new(&u * before.basis(), tol)?;
        if moved.dim() != after.dim() {
            return Ok(1.0);
        }
        moved.distance(&after)
    });
}

/// One generated isometry for the recovery suite.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WignerConfig {
    pub d: usize,
    pub n: usize,
    pub field: Field,
    pub kind: Kind,
    pub form: Form,
}

/// Every valid configuration with `3 ≤ d ≤ 8`: all complement-form ones
/// first, then the standard-form ones picked at an even stride, `count` total.
pub fn wigner_configs(count: usize) -> Vec<WignerConfig> {
    let variants = [(Field::Real, Kind::Unitary), (Field::Complex, Kind::Unitary), (Field::Complex, Kind::Antiunitary)];
    let mut complement = Vec::new();
    let mut standard = Vec::new();
    for d in 3..=8 {
        for n in 1..d {
            for &(field, kind) in &variants {
                standard.push(WignerConfig { d, n, field, kind, form: Form::Standard });
                if d == 2 * n {
                    complement.push(WignerConfig { d, n, field, kind, form: Form::Complement });
                }
            }
        }
    }
    let extra = count.saturating_sub(complement.len()).min(standard.len());
    let picked = (0..extra).map(|i| standard[i * standard.len() / extra]);
    complement.into_iter().chain(picked).take(count).collect()
}

fn config_oracle(
    c: &WignerConfig,
    seed: u64,
    index: usize,
    fault: bool,
    tol: &Tolerance,
) -> Result<Box<dyn IsometryOracle>> {
    let mut rng = RngState::derive(seed, stream_id("wigner.oracle"), index as u64);
    let u = haar_unitary(c.d, c.field, &mut rng)?;
    let oracle = make_oracle(&u, c.n, c.kind, c.form, tol)?;
    Ok(if fault { Box::new(Corrupted::new(oracle)) } else { Box::new(oracle) })
}

fn wigner_suite(r: &mut Runner) {
    let configs = wigner_configs(r.trials(50));
    let (seed, fault) = (r.opts.seed, r.opts.inject_fault);
    let mut notes = Vec::new();
    r.multi(
        configs.len(),
        &[
            ("wigner.kind_form", Bound::AtMost(0.0)),
            ("wigner.residual", Bound::AtMost(1e-7)),
            ("wigner.action", Bound::AtMost(1e-7)),
            ("wigner.rejected_hypothesis", Bound::AtLeast(0.1)),
        ],
        |i, _, tol| {
            let c = &configs[i];
            let mut oracle = config_oracle(c, seed, i, fault, tol)?;
            let rec = recover(oracle.as_mut(), tol, RecoverOptions { seed, strict: false })?;
            let action = rec.symmetry();
            let mut fresh = RngState::derive(seed, stream_id("wigner.fresh"), i as u64);
            let mut dev: f64 = 0.0;
            for _ in 0..20 {
                let p = random_projection(c.d, c.n, c.field, &mut fresh)?;
                dev = dev.max(gap(&oracle.query(&p)?, &action.apply(&p)?)?);
            }
            let rejected = rec.rejected_residual.map_or("-".to_string(), |x| format!("{x:.3e}"));
            notes.push(format!(
                "config {i:02} d={} n={} field={} kind={} form={} -> kind={} form={} residual={:.3e} rejected={rejected} action={dev:.3e}",
                c.d, c.n, c.field, c.kind, c.form, rec.kind, rec.form, rec.residual
            ));
            let mismatch = flag(rec.kind != c.kind || rec.form != c.form);
            Ok(vec![Some(mismatch), Some(rec.residual), Some(dev), rec.rejected_residual])
        },
    );
    for n in notes {
        r.note(n);
    }

    r.single("wigner.structure", configs.len(), Bound::AtMost(1e-9), |i, rng, tol| {
        let c = &configs[i];
        let mut oracle = config_oracle(c, seed, i, fault, tol)?;
        Ok(verify_isometry_properties(oracle.as_mut(), 100, rng, tol)?.max_violation())
    });

    r.single("wigner.corruption_detected", configs.len().min(5), Bound::AtLeast(0.1), |i, rng, tol| {
        let c = &configs[i];
        let mut oracle = config_oracle(c, seed, i, true, tol)?;
        Ok(verify_isometry_properties(oracle.as_mut(), 10, rng, tol)?.max_violation())
    });
}
