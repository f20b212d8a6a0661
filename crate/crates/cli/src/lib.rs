//! Command-line front end for `l2transform`.
//!
//! Every command reads JSON expression documents (see [`doc`]) from files or
//! from standard input (`-`) and writes one line of JSON to standard output.
//! Failures write `{"code":…,"kind":…,"message":…}` to standard error.
//!
//! | exit | meaning                                                   |
//! |------|-----------------------------------------------------------|
//! | 0    | success                                                   |
//! | 2    | usage, schema or precondition error                       |
//! | 3    | numerical failure (divergent integral, quadrature, overflow) |
//! | 4    | impulse content with no function-valued inverse           |

pub mod doc;
pub mod report;

use std::io::Read;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use l2transform::convolution::{convolve_numeric, convolve_symbolic, star_power};
use l2transform::order::{check_bound, classify_exact, estimate_rate, linspace};
use l2transform::pde::{
    family_b_transform_check, family_c_transform_check, log_grid, residual, solve, Coefficient,
    Family, PdeProblem, SeriesSolution, SignConvention, DEFAULT_TRUNCATION,
};
use l2transform::quadrature::{l2_quadrature, l2_quadrature_sigma, Integrand, QuadratureConfig};
use l2transform::transform::{forward, inverse, partial_fractions};
use l2transform::{Error, GExpr, LPoly, Rational, SExpr};
use serde::Serialize;

use doc::{parse_expr, parse_rational, Expr, ExprDocument, Kind, RatStr, SchemaError};
use report::*;

pub const EXIT_OK: i32 = 0;
pub const EXIT_PRECONDITION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_IMPULSE: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "l2t", version, about = "Exact L2-transform toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Forward transform of a gexpr document.
    Transform { expr: PathBuf },
    /// Inverse transform of an sexpr document.
    Invert { expr: PathBuf },
    /// Symbolic L2 convolution f ⋆ g.
    Convolve { f: PathBuf, g: PathBuf },
    /// Numerical convolution by quadrature of the defining integral at t.
    ConvolveNum {
        f: PathBuf,
        g: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        t: f64,
    },
    /// n-fold star power.
    Starpow {
        f: PathBuf,
        #[arg(long)]
        n: u32,
    },
    /// Adaptive quadrature of the transform integral at s (or at σ = s²).
    Quad {
        expr: PathBuf,
        #[arg(long, allow_hyphen_values = true, required_unless_present = "sigma")]
        s: Option<f64>,
        #[arg(long, allow_hyphen_values = true, conflicts_with = "s")]
        sigma: Option<f64>,
        #[arg(long)]
        rel_tol: Option<f64>,
        #[arg(long)]
        abs_tol: Option<f64>,
    },
    /// Evaluate a document at a point (x, σ or t by kind).
    Eval {
        expr: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        at: f64,
    },
    /// (1/x)·d/dx of a gexpr.
    DeltaX { expr: PathBuf },
    /// 2·d/dσ of an sexpr.
    DeltaS { expr: PathBuf },
    /// σ times an sexpr.
    MulSigma { expr: PathBuf },
    /// Exact limit of a gexpr as x → 0+.
    Limit0 { expr: PathBuf },
    /// Sum of two documents of the same kind.
    Add { a: PathBuf, b: PathBuf },
    /// Product of two documents of the same kind.
    Mul { a: PathBuf, b: PathBuf },
    /// Partial fractions of Π (σ−a)^(−m), one `--pole a:m` per factor.
    PartialFractions {
        #[arg(long = "pole", value_name = "A:M", allow_hyphen_values = true)]
        poles: Vec<String>,
    },
    /// Truncated series solution of a PDE family.
    Solve {
        #[command(flatten)]
        problem: ProblemArgs,
        /// Evaluate u at x,t (repeatable).
        #[arg(long = "at", value_name = "X,T")]
        at: Vec<String>,
    },
    /// Residual report on a grid, with a finite-difference cross-check.
    Residual {
        #[command(flatten)]
        problem: ProblemArgs,
        /// x0,x1,nx,t0,t1,nt (log-spaced).
        #[arg(long, default_value = "0.1,2,10,0.5,2,10")]
        grid: String,
    },
    /// Exact check of the transform-domain ODE for families B and C.
    OdeCheck {
        #[command(flatten)]
        problem: ProblemArgs,
    },
    /// Exact growth classification of a gexpr.
    Classify { expr: PathBuf },
    /// Sampled growth-rate estimate of a gexpr or of a series solution (`@u`).
    Estimate {
        source: String,
        #[command(flatten)]
        sampling: SamplingArgs,
    },
    /// Check lower ≤ upper on samples; each side is a gexpr path or `@u`.
    BoundCheck {
        #[arg(long)]
        lower: String,
        #[arg(long)]
        upper: String,
        #[command(flatten)]
        sampling: SamplingArgs,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum FamilyArg {
    #[value(name = "A", alias = "a")]
    A,
    #[value(name = "B", alias = "b")]
    B,
    #[value(name = "C", alias = "c")]
    C,
    #[value(name = "D", alias = "d")]
    D,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ConventionArg {
    Paper,
    Derived,
}

#[derive(Args, Debug, Clone)]
pub struct ProblemArgs {
    #[arg(long, value_enum)]
    pub family: Option<FamilyArg>,
    /// lpoly document for M = f/g (B, D) or H = g/f (C).
    #[arg(long)]
    pub ratio: Option<PathBuf>,
    /// lpoly document for the antiderivative of the ratio, instead of --ratio.
    #[arg(long, conflicts_with = "ratio")]
    pub antiderivative: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_TRUNCATION)]
    pub n: u32,
    #[arg(long, value_enum, default_value = "derived")]
    pub convention: ConventionArg,
}

#[derive(Args, Debug, Clone)]
pub struct SamplingArgs {
    /// lo,hi,count evenly spaced sample points.
    #[arg(long, default_value = "2,6,64")]
    pub range: String,
    /// Time at which a series solution is sampled.
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub t: f64,
    /// Constant added to a series solution before sampling.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub shift: f64,
    #[command(flatten)]
    pub problem: ProblemArgs,
}

/// Exit code plus the text for each stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Schema(#[from] SchemaError),
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{0}")]
    Usage(String),
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Core(Error::DivergentIntegral { .. })
            | CliError::Core(Error::QuadratureFailure(_))
            | CliError::Core(Error::Overflow { .. }) => EXIT_NUMERICAL,
            CliError::Core(Error::ImpulseContent(_)) => EXIT_IMPULSE,
            _ => EXIT_PRECONDITION,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Schema(_) => "SchemaError",
            CliError::Usage(_) => "UsageError",
            CliError::Io { .. } => "IoError",
            CliError::Core(e) => match e {
                Error::Overflow { .. } => "Overflow",
                Error::Domain(_) => "Domain",
                Error::ImpulseContent(_) => "ImpulseContent",
                Error::PolynomialContent => "PolynomialContent",
                Error::DivergentIntegral { .. } => "DivergentIntegral",
                Error::QuadratureFailure(_) => "QuadratureFailure",
                Error::GridDomain { .. } => "GridDomain",
                Error::NonPositiveSample { .. } => "NonPositiveSample",
                Error::InvalidInput(_) => "InvalidInput",
            },
        }
    }

    pub fn report(&self) -> ErrorReport {
        let (field, line, column) = match self {
            CliError::Schema(s) => (s.field.clone(), s.line, s.column),
            _ => (None, None, None),
        };
        ErrorReport { code: self.code(), kind: self.kind(), message: self.to_string(), field, line, column }
    }
}

type CliResult<T> = Result<T, CliError>;

/// Reads inputs, caching standard input so `-` may appear more than once.
struct Inputs<'a> {
    stdin: &'a mut dyn Read,
    cached: Option<String>,
}

impl Inputs<'_> {
    fn text(&mut self, path: &std::path::Path) -> CliResult<String> {
        if path.as_os_str() == "-" {
            if self.cached.is_none() {
                let mut s = String::new();
                self.stdin
                    .read_to_string(&mut s)
                    .map_err(|e| CliError::Io { path: "-".into(), message: e.to_string() })?;
                self.cached = Some(s);
            }
            return Ok(self.cached.clone().unwrap());
        }
        std::fs::read_to_string(path).map_err(|e| CliError::Io { path: path.display().to_string(), message: e.to_string() })
    }

    fn expr(&mut self, path: &std::path::Path) -> CliResult<Expr> {
        Ok(parse_expr(&self.text(path)?)?)
    }

    fn gexpr(&mut self, path: &std::path::Path) -> CliResult<GExpr> {
        match self.expr(path)? {
            Expr::G(g) => Ok(g),
            other => Err(wrong_kind(Kind::Gexpr, other.kind())),
        }
    }

    fn sexpr(&mut self, path: &std::path::Path) -> CliResult<SExpr> {
        match self.expr(path)? {
            Expr::S(s) => Ok(s),
            other => Err(wrong_kind(Kind::Sexpr, other.kind())),
        }
    }

    fn lpoly(&mut self, path: &std::path::Path) -> CliResult<LPoly> {
        match self.expr(path)? {
            Expr::L(p) => Ok(p),
            other => Err(wrong_kind(Kind::Lpoly, other.kind())),
        }
    }
}

fn wrong_kind(want: Kind, got: Kind) -> CliError {
    CliError::Schema(SchemaError {
        line: None,
        column: None,
        field: Some("kind".into()),
        message: format!("expected a {want} document, got {got}"),
    })
}

/// Runs one command line (including the program name) to completion.
pub fn run<I, T>(args: I, stdin: &mut dyn Read) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                return Outcome { code: EXIT_OK, stdout: e.to_string(), stderr: String::new() };
            }
            return failure(&CliError::Usage(e.to_string().trim_end().to_string()));
        }
    };
    let mut inputs = Inputs { stdin, cached: None };
    match execute(&cli.command, &mut inputs) {
        Ok(out) => Outcome { code: EXIT_OK, stdout: out + "\n", stderr: String::new() },
        Err(e) => failure(&e),
    }
}

fn failure(e: &CliError) -> Outcome {
    Outcome { code: e.code(), stdout: String::new(), stderr: to_json(&e.report()) + "\n" }
}

fn doc_json(e: &Expr) -> String {
    doc::serialize(&ExprDocument::from_expr(e))
}

fn json<T: Serialize>(v: &T) -> CliResult<String> {
    Ok(to_json(v))
}

fn execute(cmd: &Command, io: &mut Inputs<'_>) -> CliResult<String> {
    match cmd {
        Command::Transform { expr } => Ok(doc_json(&Expr::S(forward(&io.gexpr(expr)?)))),
        Command::Invert { expr } => Ok(doc_json(&Expr::G(inverse(&io.sexpr(expr)?)?))),
        Command::Convolve { f, g } => {
            let (f, g) = (io.gexpr(f)?, io.gexpr(g)?);
            Ok(doc_json(&Expr::G(convolve_symbolic(&f, &g))))
        }
        Command::ConvolveNum { f, g, t } => {
            let (f, g) = (io.gexpr(f)?, io.gexpr(g)?);
            let (fc, gc) = (f.compile(), g.compile());
            // Surface overflow as an error instead of a silent NaN.
            let failed = std::cell::RefCell::new(None);
            let eval = |c: &l2transform::expr::CompiledGExpr, x: f64| {
                c.evaluate(x).unwrap_or_else(|e| {
                    failed.borrow_mut().get_or_insert(e);
                    f64::NAN
                })
            };
            let value = convolve_numeric(|x| eval(&fc, x), |x| eval(&gc, x), *t, &QuadratureConfig::default());
            if let Some(e) = failed.into_inner() {
                return Err(e.into());
            }
            let symbolic = convolve_symbolic(&f, &g).evaluate(*t)?;
            json(&NumericConvolution { t: Real(*t), value: Real(value?), symbolic: Real(symbolic) })
        }
        Command::Starpow { f, n } => Ok(doc_json(&Expr::G(star_power(&io.gexpr(f)?, *n)?))),
        Command::Quad { expr, s, sigma, rel_tol, abs_tol } => {
            let e = io.gexpr(expr)?;
            let base = QuadratureConfig::default();
            let cfg = QuadratureConfig {
                rel_tol: rel_tol.unwrap_or(base.rel_tol),
                abs_tol: abs_tol.unwrap_or(base.abs_tol),
                ..base
            };
            let (s, value) = match (s, sigma) {
                (Some(s), _) => (*s, l2_quadrature(Integrand::Expr(&e), *s, &cfg)?),
                (None, Some(sigma)) => (sigma.sqrt(), l2_quadrature_sigma(Integrand::Expr(&e), *sigma, &cfg)?),
                (None, None) => return Err(CliError::Usage("quad needs --s or --sigma".into())),
            };
            let sigma = sigma.unwrap_or(s * s);
            json(&Quadrature { s: Real(s), sigma: Real(sigma), value: Real(value), symbolic: Real(forward(&e).evaluate(sigma)) })
        }
        Command::Eval { expr, at } => {
            let value = match io.expr(expr)? {
                Expr::G(g) => g.evaluate(*at)?,
                Expr::S(s) => s.evaluate(*at),
                Expr::L(p) => p.eval(*at),
            };
            json(&Evaluation { at: Real(*at), value: Real(value) })
        }
        Command::DeltaX { expr } => Ok(doc_json(&Expr::G(io.gexpr(expr)?.delta_x()))),
        Command::DeltaS { expr } => Ok(doc_json(&Expr::S(io.sexpr(expr)?.delta_s()))),
        Command::MulSigma { expr } => Ok(doc_json(&Expr::S(io.sexpr(expr)?.mul_sigma()?))),
        Command::Limit0 { expr } => json(&Scalar { value: RatStr(io.gexpr(expr)?.limit_at_zero()) }),
        Command::Add { a, b } => binary(io, a, b, false),
        Command::Mul { a, b } => binary(io, a, b, true),
        Command::PartialFractions { poles } => {
            let factors = poles.iter().map(|p| parse_pole(p)).collect::<CliResult<Vec<_>>>()?;
            Ok(doc_json(&Expr::S(partial_fractions(&factors))))
        }
        Command::Solve { problem, at } => {
            let u = build_solution(io, problem)?;
            let mut values = Vec::new();
            for spec in at {
                let v = parse_floats(spec, 2, "--at")?;
                values.push(PointValue { x: Real(v[0]), t: Real(v[1]), u: Real(u.value(v[0], v[1])?) });
            }
            json(&Solution::new(&u, values))
        }
        Command::Residual { problem, grid } => {
            let u = build_solution(io, problem)?;
            let g = parse_floats(grid, 6, "--grid")?;
            let count = |v: f64, name: &str| -> CliResult<usize> {
                if v >= 1.0 && v.fract() == 0.0 && v <= 10_000.0 {
                    Ok(v as usize)
                } else {
                    Err(CliError::Usage(format!("--grid {name} must be a positive integer")))
                }
            };
            let (nx, nt) = (count(g[2], "nx")?, count(g[5], "nt")?);
            let points = log_grid(g[0], g[1], nx, g[3], g[4], nt)?;
            let report = residual(&u.problem, &u, &points)?;
            let grid = Grid { x0: Real(g[0]), x1: Real(g[1]), nx, t0: Real(g[3]), t1: Real(g[4]), nt, spacing: "log" };
            json(&Residual::new(&report, grid))
        }
        Command::OdeCheck { problem } => {
            let p = build_problem(io, problem)?;
            let check = match (p.family, &p.coefficient) {
                (Family::B, Some(_)) => family_b_transform_check(&p.ratio(), problem.n)?,
                (Family::C, Some(c)) => family_c_transform_check(c, problem.n, p.convention)?,
                _ => return Err(CliError::Usage("ode-check supports families B and C".into())),
            };
            json(&OdeCheck::new(p.family.to_string(), p.convention.to_string(), problem.n, &check))
        }
        Command::Classify { expr } => json(&Growth::from(&classify_exact(&io.gexpr(expr)?))),
        Command::Estimate { source, sampling } => {
            let xs = parse_range(&sampling.range)?;
            let f = Sampler::new(io, source, sampling)?;
            let report = estimate_rate(|x| f.eval(x), &xs);
            f.check()?;
            json(&Growth::from(&report?))
        }
        Command::BoundCheck { lower, upper, sampling } => {
            let xs = parse_range(&sampling.range)?;
            let lo = Sampler::new(io, lower, sampling)?;
            let hi = Sampler::new(io, upper, sampling)?;
            let holds = check_bound(|x| lo.eval(x), |x| hi.eval(x), &xs);
            lo.check()?;
            hi.check()?;
            json(&BoundCheck { holds: holds?, samples: xs.len(), range: [Real(xs[0]), Real(xs[xs.len() - 1])] })
        }
    }
}

fn binary(io: &mut Inputs<'_>, a: &std::path::Path, b: &std::path::Path, product: bool) -> CliResult<String> {
    let out = match (io.expr(a)?, io.expr(b)?) {
        (Expr::G(x), Expr::G(y)) => Expr::G(if product { x.multiply(&y) } else { x.add(&y) }),
        (Expr::S(x), Expr::S(y)) => Expr::S(if product { x.multiply(&y) } else { x.add(&y) }),
        (Expr::L(x), Expr::L(y)) => Expr::L(if product { &x * &y } else { &x + &y }),
        (x, y) => return Err(wrong_kind(x.kind(), y.kind())),
    };
    Ok(doc_json(&out))
}

fn parse_pole(spec: &str) -> CliResult<(Rational, u32)> {
    let bad = || CliError::Usage(format!("--pole expects A:M with A rational and M ≥ 1, got {spec:?}"));
    let (a, m) = spec.split_once(':').ok_or_else(bad)?;
    let a = parse_rational(a).map_err(|_| bad())?;
    let m: u32 = m.parse().map_err(|_| bad())?;
    if m == 0 {
        return Err(bad());
    }
    Ok((a, m))
}

fn parse_floats(spec: &str, n: usize, flag: &str) -> CliResult<Vec<f64>> {
    let v: Vec<f64> = spec
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Usage(format!("{flag} expects {n} comma-separated numbers, got {spec:?}")))?;
    if v.len() != n || v.iter().any(|x| !x.is_finite()) {
        return Err(CliError::Usage(format!("{flag} expects {n} comma-separated finite numbers, got {spec:?}")));
    }
    Ok(v)
}

fn parse_range(spec: &str) -> CliResult<Vec<f64>> {
    let v = parse_floats(spec, 3, "--range")?;
    if v[2] < 1.0 || v[2].fract() != 0.0 || v[2] > 1e6 {
        return Err(CliError::Usage("--range count must be a positive integer".into()));
    }
    Ok(linspace(v[0], v[1], v[2] as usize))
}

fn build_problem(io: &mut Inputs<'_>, args: &ProblemArgs) -> CliResult<PdeProblem> {
    let family = match args.family {
        Some(FamilyArg::A) => Family::A,
        Some(FamilyArg::B) => Family::B,
        Some(FamilyArg::C) => Family::C,
        Some(FamilyArg::D) => Family::D,
        None => return Err(CliError::Usage("--family is required".into())),
    };
    let convention = match args.convention {
        ConventionArg::Paper => SignConvention::PaperLiteral,
        ConventionArg::Derived => SignConvention::Derived,
    };
    let coefficient = match (&args.ratio, &args.antiderivative) {
        (Some(p), _) => Some(Coefficient::Ratio(io.lpoly(p)?)),
        (None, Some(p)) => Some(Coefficient::Antiderivative(io.lpoly(p)?)),
        (None, None) => None,
    };
    match (family, coefficient) {
        (Family::A, None) => Ok(PdeProblem { convention, ..PdeProblem::family_a() }),
        (Family::A, Some(_)) => Err(Error::InvalidInput("family A carries no coefficient ratio".into()).into()),
        (f, None) => Err(CliError::Usage(format!("family {f} needs --ratio or --antiderivative"))),
        (f, Some(c)) => Ok(PdeProblem::new(f, c, convention)?),
    }
}

fn build_solution(io: &mut Inputs<'_>, args: &ProblemArgs) -> CliResult<SeriesSolution> {
    let p = build_problem(io, args)?;
    Ok(solve(&p, args.n)?)
}

/// A sampled function: a gexpr, or `u(x, t) + shift` for a series solution.
enum Sampler {
    Expr(l2transform::expr::CompiledGExpr, std::cell::RefCell<Option<Error>>),
    Series(Box<SeriesSolution>, f64, f64, std::cell::RefCell<Option<Error>>),
}

impl Sampler {
    fn new(io: &mut Inputs<'_>, source: &str, s: &SamplingArgs) -> CliResult<Self> {
        if source == "@u" {
            let u = build_solution(io, &s.problem)?;
            return Ok(Sampler::Series(Box::new(u), s.t, s.shift, Default::default()));
        }
        Ok(Sampler::Expr(io.gexpr(std::path::Path::new(source))?.compile(), Default::default()))
    }

    fn eval(&self, x: f64) -> f64 {
        let (r, slot) = match self {
            Sampler::Expr(c, slot) => (c.evaluate(x), slot),
            Sampler::Series(u, t, shift, slot) => (u.value(x, *t).map(|v| v + shift), slot),
        };
        r.unwrap_or_else(|e| {
            slot.borrow_mut().get_or_insert(e);
            f64::NAN
        })
    }

    fn check(&self) -> CliResult<()> {
        let slot = match self {
            Sampler::Expr(_, s) | Sampler::Series(_, _, _, s) => s,
        };
        match slot.borrow_mut().take() {
            Some(e) => Err(e.into()),
            None => Ok(()),
        }
    }
}
