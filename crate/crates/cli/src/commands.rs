use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use grasskit::instances::{independent_pair, random_pair, random_projection, GapRegime};
use grasskit::mpq::{
    boundary_gap_t, interior_gap, mpq_contains, mpq_extract, mpq_sample, mpq_witness_boundary, mpq_witness_interior,
    mpq_witness_outside, outside_threshold_closed_form,
};
use grasskit::ortho_lattice::adjacency_by_tops;
use grasskit::verify::{self, Suite, VerifyOptions};
use grasskit::wigner::{make_oracle, query_set, recover, Form, IsometryOracle, Kind, RecoverOptions};
use grasskit::{
    canonical_form, gap, haar_unitary, numerical_rank, principal_angles, svd, Error, Field, Matrix, Projection,
    RngState, Tolerance,
};
use serde::Serialize;

use crate::error::CliError;
use crate::io::{read_json, read_matrix, to_json, write_json, write_matrix, MatrixFile, OracleTableFile};
use crate::table::{build_table, TableOracle};

#[derive(Debug, Parser)]
#[command(name = "grasskit", version, about = "Gap-metric geometry of Grassmann spaces")]
pub struct Cli {
    #[command(flatten)]
    pub tol: TolArgs,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct TolArgs {
    /// Equality tolerance for matrix comparisons.
    #[arg(long, global = true, default_value = "1e-9")]
    pub eq_tol: f64,
    /// Relative cutoff for numerical rank.
    #[arg(long, global = true, default_value = "1e-8")]
    pub rank_tol: f64,
    /// Eigenvalues closer than this share an eigenspace.
    #[arg(long, global = true, default_value = "1e-8")]
    pub cluster_tol: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FieldArg {
    Real,
    Complex,
}

impl From<FieldArg> for Field {
    fn from(f: FieldArg) -> Field {
        match f {
            FieldArg::Real => Field::Real,
            FieldArg::Complex => Field::Complex,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Rank,
    Tops,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Gap ‖P − Q‖ with principal angles and the sine-doubling cross-check.
    Gap(PairArgs),
    /// Principal angles between the ranges of two projections.
    Angles(PairArgs),
    /// Joint canonical form of two equal-rank projections.
    Canon {
        #[command(flatten)]
        pair: PairArgs,
        /// Write the unitary frame W to this file.
        #[arg(long)]
        emit_w: Option<PathBuf>,
    },
    /// Projections within 1/√2 of both P and Q.
    Mpq {
        #[command(subcommand)]
        command: MpqCommand,
    },
    /// Decide whether rank(P − Q) = 2.
    Adjacent {
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long, value_enum, default_value_t = Method::Rank)]
        method: Method,
        /// Random projections classified by the tops method.
        #[arg(long, default_value_t = 64)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Recover the unitary or antiunitary operator behind a gap isometry.
    Recover(RecoverArgs),
    /// Every projection `recover` may query for a shape and seed.
    QuerySet {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum, default_value_t = FieldArg::Complex)]
        field: FieldArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tabulate an explicit symmetry on the query set.
    MakeTable {
        #[command(flatten)]
        symmetry: SymmetryArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Random instances.
    Gen {
        #[command(subcommand)]
        what: GenCommand,
    },
    /// Run the property suites.
    Verify {
        #[arg(long, default_value = "all")]
        suite: Suite,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Override the number of trials of every randomized check.
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
}

#[derive(Debug, Args)]
pub struct PairArgs {
    pub p: PathBuf,
    pub q: PathBuf,
}

#[derive(Debug, Args)]
pub struct SymmetryArgs {
    /// Unitary (or orthogonal) matrix U.
    #[arg(long)]
    pub from_u: PathBuf,
    #[arg(long, default_value = "unitary")]
    pub kind: Kind,
    #[arg(long, default_value = "standard")]
    pub form: Form,
    /// Rank of the projections the symmetry acts on; defaults to d/2 for the
    /// complement form and 1 otherwise.
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Debug, Args)]
pub struct RecoverArgs {
    #[command(flatten)]
    pub symmetry: Option<SymmetryArgs>,
    /// Oracle table produced by `make-table` or an external tool.
    #[arg(long, conflicts_with = "from_u")]
    pub table: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Largest accepted action residual.
    #[arg(long, default_value = "1e-7")]
    pub tol: f64,
    /// Check isometry properties on random pairs before fitting. Issues
    /// queries outside the query set.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Subcommand)]
pub enum MpqCommand {
    /// Write a member of M(P, Q).
    Sample {
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Membership test for R.
    Check {
        #[command(flatten)]
        pair: PairArgs,
        r: PathBuf,
    },
    /// Read the unitary parameter of R for a pair at gap 1.
    Extract {
        #[command(flatten)]
        pair: PairArgs,
        r: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Gaps of the explicit 2×2 witnesses against S and T(d).
    Witness {
        #[arg(long)]
        d: f64,
        #[arg(long)]
        eps: Option<f64>,
    },
}

#[derive(Debug, Subcommand)]
pub enum GenCommand {
    /// Haar-random rank-n projection.
    Projection {
        #[command(flatten)]
        shape: GenShape,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Pair of rank-n projections, optionally from a gap regime.
    Pair {
        #[command(flatten)]
        shape: GenShape,
        #[arg(long)]
        gap_regime: Option<GapRegime>,
        #[arg(long)]
        out_p: PathBuf,
        #[arg(long)]
        out_q: PathBuf,
    },
    /// Haar-random unitary (orthogonal over the reals).
    Unitary {
        #[arg(long)]
        d: usize,
        #[arg(long, value_enum, default_value_t = FieldArg::Complex)]
        field: FieldArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct GenShape {
    #[arg(long)]
    pub d: usize,
    #[arg(long)]
    pub n: usize,
    #[arg(long, value_enum, default_value_t = FieldArg::Complex)]
    pub field: FieldArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn nums(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|&x| num(x)).collect();
    format!("[{}]", parts.join(", "))
}

fn header(out: &mut dyn Write, command: &str, tol: &Tolerance) -> Result<(), CliError> {
    line(
        out,
        format!(
            "# grasskit {command} eq_tol={:e} rank_tol={:e} cluster_tol={:e}",
            tol.eq_tol, tol.rank_tol, tol.cluster_tol
        ),
    )
}

fn line(out: &mut dyn Write, s: impl AsRef<str>) -> Result<(), CliError> {
    writeln!(out, "{}", s.as_ref()).map_err(|e| CliError::Io(format!("cannot write output: {e}")))
}

#[derive(Serialize)]
struct TolJson {
    eq_tol: f64,
    rank_tol: f64,
    cluster_tol: f64,
}

impl From<&Tolerance> for TolJson {
    fn from(t: &Tolerance) -> Self {
        TolJson { eq_tol: t.eq_tol, rank_tol: t.rank_tol, cluster_tol: t.cluster_tol }
    }
}

fn read_projection(path: &Path, tol: &Tolerance) -> Result<Projection, CliError> {
    let m = read_matrix(path)?;
    Projection::new(m, tol).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))
}

fn read_pair(pair: &PairArgs, tol: &Tolerance) -> Result<(Projection, Projection), CliError> {
    let p = read_projection(&pair.p, tol)?;
    let q = read_projection(&pair.q, tol)?;
    if p.dim() != q.dim() {
        return Err(CliError::Invalid(format!("projections act on dimensions {} and {}", p.dim(), q.dim())));
    }
    Ok((p, q))
}

fn emit_matrix(out: &mut dyn Write, path: Option<&Path>, m: &Matrix) -> Result<(), CliError> {
    match path {
        Some(path) => write_matrix(path, m),
        None => line(out, to_json(&MatrixFile::from_matrix(m))?),
    }
}

/// Largest deviation between the nonzero singular values of `P − Q` and the
/// sines of the nonzero principal angles, each listed twice.
fn doubling_deviation(p: &Projection, q: &Projection, sines: &[f64], tol: &Tolerance) -> Result<f64, CliError> {
    let sigma = svd(&(p.matrix() - q.matrix()))?.sigma;
    let nonzero: Vec<f64> = sigma.into_iter().filter(|&s| s > tol.rank_tol).collect();
    let mut doubled: Vec<f64> = sines.iter().filter(|&&s| s > tol.rank_tol).flat_map(|&s| [s, s]).collect();
    doubled.sort_by(|a, b| b.total_cmp(a));
    if nonzero.len() != doubled.len() {
        return Ok(1.0);
    }
    Ok(nonzero.iter().zip(&doubled).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
}

fn cmd_metric(out: &mut dyn Write, name: &str, pair: &PairArgs, tol: &Tolerance) -> Result<(), CliError> {
    let (p, q) = read_pair(pair, tol)?;
    let g = gap(&p, &q)?;
    let angles = principal_angles(&p, &q, tol)?;
    let dev = doubling_deviation(&p, &q, &angles.sines(), tol)?;
    header(out, name, tol)?;
    line(out, format!("gap {}", num(g)))?;
    line(out, format!("angles_rad {}", nums(angles.radians())))?;
    line(out, format!("angles_deg {}", nums(&angles.degrees())))?;
    line(out, format!("sin_largest_angle {}", num(angles.largest().sin())))?;
    line(out, format!("doubling_max_dev {}", num(dev)))
}

#[derive(Serialize)]
struct CanonJson {
    p: usize,
    r: usize,
    ds: Vec<f64>,
    d: usize,
    n: usize,
    gap: f64,
    w: Option<String>,
    tol: TolJson,
}

fn cmd_canon(out: &mut dyn Write, pair: &PairArgs, emit_w: Option<&Path>, tol: &Tolerance) -> Result<(), CliError> {
    let (p, q) = read_pair(pair, tol)?;
    let c = canonical_form(&p, &q, tol)?;
    if let Some(path) = emit_w {
        write_matrix(path, c.w())?;
    }
    let json = CanonJson {
        p: c.p(),
        r: c.r(),
        ds: c.ds().to_vec(),
        d: c.d(),
        n: c.n(),
        gap: c.gap(),
        w: emit_w.map(|p| p.display().to_string()),
        tol: tol.into(),
    };
    line(out, to_json(&json)?)
}

fn cmd_mpq(out: &mut dyn Write, command: &MpqCommand, tol: &Tolerance) -> Result<(), CliError> {
    match command {
        MpqCommand::Sample { pair, seed, out: path } => {
            let (p, q) = read_pair(pair, tol)?;
            let elem = mpq_sample(&p, &q, &mut RngState::new(*seed), tol)?;
            if path.is_some() {
                header(out, "mpq sample", tol)?;
                line(out, format!("gap_p {}", num(gap(&elem.r, &p)?)))?;
                line(out, format!("gap_q {}", num(gap(&elem.r, &q)?)))?;
            }
            emit_matrix(out, path.as_deref(), elem.r.matrix())
        }
        MpqCommand::Check { pair, r } => {
            let (p, q) = read_pair(pair, tol)?;
            let r = read_projection(r, tol)?;
            let member = mpq_contains(&r, &p, &q, tol)?;
            header(out, "mpq check", tol)?;
            line(out, format!("member: {member}"))?;
            line(out, format!("gap_p {}", num(gap(&r, &p)?)))?;
            line(out, format!("gap_q {}", num(gap(&r, &q)?)))
        }
        MpqCommand::Extract { pair, r, out: path } => {
            let (p, q) = read_pair(pair, tol)?;
            let r = read_projection(r, tol)?;
            let elem = mpq_extract(&r, &p, &q, tol)?;
            header(out, "mpq extract", tol)?;
            line(out, format!("r {}", elem.u.rows()))?;
            line(out, format!("unitarity_residual {}", num(elem.u.unitarity_residual())))?;
            emit_matrix(out, path.as_deref(), &elem.u)
        }
        MpqCommand::Witness { d, eps } => {
            let (d, eps) = (*d, *eps);
            header(out, "mpq witness", tol)?;
            let b = mpq_witness_boundary(d)?;
            line(
                out,
                format!(
                    "boundary gap_s {} gap_t {} closed_form_t {}",
                    num(b.gap_s),
                    num(b.gap_t),
                    num(boundary_gap_t(d))
                ),
            )?;
            let i = mpq_witness_interior(d)?;
            line(
                out,
                format!("interior gap_s {} gap_t {} closed_form {}", num(i.gap_s), num(i.gap_t), num(interior_gap(d))),
            )?;
            if let Some(eps) = eps {
                let w = mpq_witness_outside(d, eps)?;
                line(
                    out,
                    format!("outside eps {} gap_s {} gap_t {}", num(eps), num(w.witness.gap_s), num(w.witness.gap_t)),
                )?;
                line(out, format!("outside_s {} inside_t {}", w.outside_s, w.inside_t))?;
                line(out, format!("eps_threshold {}", num(outside_threshold_closed_form(d))))?;
            }
            Ok(())
        }
    }
}

fn cmd_adjacent(
    out: &mut dyn Write,
    pair: &PairArgs,
    method: Method,
    samples: usize,
    seed: u64,
    tol: &Tolerance,
) -> Result<(), CliError> {
    let (p, q) = read_pair(pair, tol)?;
    if p.rank() != q.rank() {
        return Err(Error::Unsupported(format!("unequal ranks {} and {}", p.rank(), q.rank())).into());
    }
    match method {
        Method::Rank => {
            let rank = numerical_rank(&(p.matrix() - q.matrix()), tol);
            header(out, "adjacent --method rank", tol)?;
            line(out, format!("adjacent {}", rank == 2))?;
            line(out, format!("rank_diff {rank}"))
        }
        Method::Tops => {
            let v = adjacency_by_tops(&p, &q, samples, &mut RngState::new(seed), tol)?;
            header(out, "adjacent --method tops", tol)?;
            line(out, format!("adjacent {}", v.adjacent))?;
            line(out, format!("witness {}", v.witness_kind.name()))?;
            let h = v.histogram;
            line(out, format!("histogram empty={} unique={} infinite={}", h.empty, h.unique, h.infinite))
        }
    }
}

fn symmetry_oracle(args: &SymmetryArgs, tol: &Tolerance) -> Result<impl IsometryOracle, CliError> {
    let u = read_matrix(&args.from_u)?;
    if !u.is_square() {
        return Err(CliError::Invalid(format!("U has shape {:?}", u.shape())));
    }
    let d = u.rows();
    let n = args.n.unwrap_or(if args.form == Form::Complement { d / 2 } else { 1 });
    Ok(make_oracle(&u, n, args.kind, args.form, tol)?)
}

#[derive(Serialize)]
struct RecoverJson {
    kind: String,
    form: String,
    rank: usize,
    residual: f64,
    rejected_residual: Option<f64>,
    u: MatrixFile,
    tol: TolJson,
}

fn cmd_recover(out: &mut dyn Write, args: &RecoverArgs, tol: &Tolerance) -> Result<(), CliError> {
    let mut oracle: Box<dyn IsometryOracle> = match (&args.symmetry, &args.table) {
        (_, Some(path)) => Box::new(TableOracle::from_file(&read_json::<OracleTableFile>(path)?, tol)?),
        (Some(sym), None) => Box::new(symmetry_oracle(sym, tol)?),
        (None, None) => return Err(CliError::Parse("recover needs --from-u or --table".into())),
    };
    let opts = RecoverOptions { seed: args.seed, strict: args.strict };
    let rec = match recover(oracle.as_mut(), tol, opts) {
        Err(Error::TableMiss(m)) => {
            line(out, to_json(&MatrixFile::from_matrix(&m))?)?;
            return Err(Error::TableMiss(m).into());
        }
        other => other?,
    };
    let json = RecoverJson {
        kind: rec.kind.to_string(),
        form: rec.form.to_string(),
        rank: rec.rank,
        residual: rec.residual,
        rejected_residual: rec.rejected_residual,
        u: MatrixFile::from_matrix(&rec.u),
        tol: tol.into(),
    };
    line(out, to_json(&json)?)?;
    if rec.residual < args.tol {
        Ok(())
    } else {
        Err(Error::Classification(format!("residual {:.3e} exceeds {:.3e}", rec.residual, args.tol)).into())
    }
}

#[derive(Serialize)]
struct QuerySetJson {
    d: usize,
    n: usize,
    field: String,
    seed: u64,
    queries: Vec<MatrixFile>,
}

fn cmd_gen(out: &mut dyn Write, what: &GenCommand, tol: &Tolerance) -> Result<(), CliError> {
    match what {
        GenCommand::Projection { shape, out: path } => {
            let mut rng = RngState::new(shape.seed);
            let p = random_projection(shape.d, shape.n, shape.field.into(), &mut rng)?;
            emit_matrix(out, path.as_deref(), p.matrix())
        }
        GenCommand::Pair { shape, gap_regime, out_p, out_q } => {
            let mut rng = RngState::new(shape.seed);
            let field = shape.field.into();
            let (p, q) = match gap_regime {
                Some(regime) => {
                    let g = random_pair(shape.d, shape.n, field, *regime, &mut rng)?;
                    (g.p, g.q)
                }
                None => independent_pair(shape.d, shape.n, field, &mut rng)?,
            };
            write_matrix(out_p, p.matrix())?;
            write_matrix(out_q, q.matrix())?;
            header(out, "gen pair", tol)?;
            line(out, format!("regime {}", gap_regime.map_or("independent".to_string(), |r| r.to_string())))?;
            line(out, format!("gap {}", num(gap(&p, &q)?)))
        }
        GenCommand::Unitary { d, field, seed, out: path } => {
            let u = haar_unitary(*d, (*field).into(), &mut RngState::new(*seed))?;
            emit_matrix(out, path.as_deref(), &u)
        }
    }
}

/// Executes one parsed command, writing its report to `out`.
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let tol = Tolerance::new(cli.tol.eq_tol, cli.tol.rank_tol, cli.tol.cluster_tol)
        .map_err(|e| CliError::Parse(e.to_string()))?;
    let tol = &tol;
    match &cli.command {
        Command::Gap(pair) => cmd_metric(out, "gap", pair, tol),
        Command::Angles(pair) => cmd_metric(out, "angles", pair, tol),
        Command::Canon { pair, emit_w } => cmd_canon(out, pair, emit_w.as_deref(), tol),
        Command::Mpq { command } => cmd_mpq(out, command, tol),
        Command::Adjacent { pair, method, samples, seed } => cmd_adjacent(out, pair, *method, *samples, *seed, tol),
        Command::Recover(args) => cmd_recover(out, args, tol),
        Command::QuerySet { d, n, field, seed, out: path } => {
            let field: Field = (*field).into();
            let queries = query_set(*d, *n, field, *seed)?;
            let json = QuerySetJson {
                d: *d,
                n: *n,
                field: field.to_string(),
                seed: *seed,
                queries: queries.iter().map(|p| MatrixFile::from_matrix(p.matrix())).collect(),
            };
            match path {
                Some(path) => write_json(path, &json),
                None => line(out, to_json(&json)?),
            }
        }
        Command::MakeTable { symmetry, seed, out: path } => {
            let mut oracle = symmetry_oracle(symmetry, tol)?;
            let inputs = query_set(oracle.dim(), oracle.rank(), oracle.field(), *seed)?;
            let table = build_table(&mut oracle, &inputs)?;
            write_json(path, &table)?;
            header(out, "make-table", tol)?;
            line(out, format!("pairs {}", table.pairs.len()))
        }
        Command::Gen { what } => cmd_gen(out, what, tol),
        Command::Verify { suite, seed, trials, inject_fault } => {
            let opts = VerifyOptions { seed: *seed, trials: *trials, inject_fault: *inject_fault };
            let report = verify::run(*suite, opts, tol);
            write!(out, "{}", report.render()).map_err(|e| CliError::Io(format!("cannot write output: {e}")))?;
            if report.passed() {
                Ok(())
            } else {
                Err(CliError::Failed("verification failed".into()))
            }
        }
    }
}
