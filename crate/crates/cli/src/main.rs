//! `maxsym` — generate, transform, and check linear ODEs of maximal symmetry.
//!
//! Exit codes: 0 success, 1 check failure, 2 usage error, 3 resource abort.

mod report;
mod suites;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use maxsym_core::itergen::{
    generate_maxsym_budgeted, phi_n, ItergenError, DEFAULT_TERM_BUDGET,
};
use maxsym_core::numeval::{
    parse_fnspec, residual, sample_points, source_q_from, NumericError,
};
use maxsym_core::solbasis::{
    basis_from_u_anchored, basis_from_uv, factorial_product, wronskian_numeric,
};
use maxsym_core::xform::{map_canonical_solution, EquivalenceMap};

use report::ReportFormat;
use suites::{run_suite, Suite};

/// Prints a line to stdout, exiting quietly if the reader closed the pipe.
macro_rules! outln {
    ($($arg:tt)*) => {{
        use std::io::Write;
        let mut out = std::io::stdout().lock();
        if let Err(e) = writeln!(out, $($arg)*) {
            if e.kind() == std::io::ErrorKind::BrokenPipe {
                std::process::exit(0);
            }
            eprintln!("error: cannot write to stdout: {e}");
            std::process::exit(1);
        }
    }};
}

/// As `outln!` but without the trailing newline.
macro_rules! out {
    ($($arg:tt)*) => {{
        use std::io::Write;
        let mut out = std::io::stdout().lock();
        if let Err(e) = write!(out, $($arg)*) {
            if e.kind() == std::io::ErrorKind::BrokenPipe {
                std::process::exit(0);
            }
            eprintln!("error: cannot write to stdout: {e}");
            std::process::exit(1);
        }
    }};
}

/// Orders above this need `--force`; expression growth makes them expensive.
const ORDER_SOFT_CAP: u32 = 30;
/// Acceptance threshold for relative residuals of constructed bases.
const RESIDUAL_GATE: f64 = 1e-8;

#[derive(Parser)]
#[command(
    name = "maxsym",
    version,
    about = "Linear ODEs of maximal symmetry: generation, transformation, and checking"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the order-n equation of maximal symmetry in normal form
    Generate(GenerateArgs),
    /// Run a named verification suite over the engine's identities
    Verify(VerifyArgs),
    /// Construct a solution basis from closed-form data and check it
    Basis(BasisArgs),
    /// Evaluate the relative residual of a trial solution
    Residual(ResidualArgs),
    /// Map a canonical power solution through a change of variables
    Transform(TransformArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Var {
    /// Coefficients as differential polynomials in the source term q
    Q,
    /// Coefficients as Laurent polynomials in the operator symbol r
    R,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum EquationFormat {
    Text,
    Latex,
    Json,
}

#[derive(Args)]
struct GenerateArgs {
    /// Equation order n (n >= 2)
    #[arg(short = 'n', long, value_parser = clap::value_parser!(u32).range(2..))]
    order: u32,
    /// Variable the coefficients are expressed in
    #[arg(long, value_enum, default_value_t = Var::Q)]
    var: Var,
    /// Output rendering
    #[arg(long, value_enum, default_value_t = EquationFormat::Text)]
    format: EquationFormat,
    /// Proceed past the order soft cap
    #[arg(long)]
    force: bool,
    /// Also write the JSON form to this path
    #[arg(long)]
    json_out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Which identity family to exercise
    #[arg(long, value_enum, default_value_t = Suite::All)]
    suite: Suite,
    /// Largest order used by order-indexed checks
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u32).range(2..))]
    max_order: u32,
    /// Report rendering
    #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
    format: ReportFormat,
}

#[derive(Args)]
struct BasisArgs {
    /// Equation order n
    #[arg(short = 'n', long, value_parser = clap::value_parser!(u32).range(1..=30))]
    order: u32,
    /// Generating solution u as a function spec, e.g. `exp`, `cos:2`, `poly:1,0,1`
    #[arg(long)]
    u: String,
    /// Optional independent second solution v; selects the two-function family
    #[arg(long)]
    v: Option<String>,
    /// Domain endpoints
    #[arg(long, default_value = "0,1", value_parser = parse_interval, allow_hyphen_values = true)]
    interval: Interval,
    /// Anchor of the quadrature primitive (defaults to the left endpoint)
    #[arg(long, allow_negative_numbers = true)]
    x0: Option<f64>,
    /// Number of interior sample points for the residual check
    #[arg(long, default_value_t = 20)]
    points: usize,
}

#[derive(Args)]
struct ResidualArgs {
    /// Equation order n
    #[arg(short = 'n', long, value_parser = clap::value_parser!(u32).range(2..=30))]
    order: u32,
    /// Coefficient function q as a function spec
    #[arg(long)]
    q: String,
    /// Trial solution y as a function spec
    #[arg(long)]
    y: String,
    /// Domain endpoints
    #[arg(long, default_value = "0,1", value_parser = parse_interval, allow_hyphen_values = true)]
    interval: Interval,
    /// Number of interior sample points
    #[arg(long, default_value_t = 20)]
    points: usize,
    /// Pass/fail threshold on the relative residual
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
}

#[derive(Args)]
struct TransformArgs {
    /// Equation order n
    #[arg(short = 'n', long, value_parser = clap::value_parser!(u32).range(2..=30))]
    order: u32,
    /// Transformation data u as a function spec
    #[arg(long)]
    u: String,
    /// Scale factor of the dependent-variable change
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    lambda: f64,
    /// Index of the canonical power solution w^k (0 <= k < n)
    #[arg(short, long)]
    k: u32,
    /// Evaluation point
    #[arg(short, long, allow_negative_numbers = true)]
    x: f64,
    /// Domain endpoints
    #[arg(long, default_value = "0,1", value_parser = parse_interval, allow_hyphen_values = true)]
    interval: Interval,
    /// Anchor of the change of independent variable
    #[arg(long, allow_negative_numbers = true)]
    x0: Option<f64>,
}

#[derive(Clone, Copy, Debug)]
struct Interval(f64, f64);

fn parse_interval(s: &str) -> Result<Interval, String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| "expected two comma-separated endpoints, e.g. 0,1".to_string())?;
    let lo: f64 = a
        .trim()
        .parse()
        .map_err(|_| format!("`{}` is not a number", a.trim()))?;
    let hi: f64 = b
        .trim()
        .parse()
        .map_err(|_| format!("`{}` is not a number", b.trim()))?;
    if !lo.is_finite() || !hi.is_finite() || lo >= hi {
        return Err(format!("endpoints must be finite with a < b, got {lo},{hi}"));
    }
    Ok(Interval(lo, hi))
}

/// A command outcome that should terminate the process with a nonzero code.
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }

    /// A failure already reported on stdout; only sets the exit code.
    fn silent(code: i32) -> Self {
        Failure {
            code,
            message: String::new(),
        }
    }
}

fn engine_failure(e: ItergenError) -> Failure {
    let code = match e {
        ItergenError::TermBudgetExceeded { .. } => 3,
        _ => 1,
    };
    Failure::new(code, e.to_string())
}

fn numeric_failure(e: NumericError) -> Failure {
    let code = match e {
        NumericError::BadFnSpec { .. } => 2,
        _ => 1,
    };
    Failure::new(code, e.to_string())
}

fn run_generate(args: GenerateArgs) -> Result<(), Failure> {
    if args.order > ORDER_SOFT_CAP && !args.force {
        return Err(Failure::new(
            3,
            format!(
                "order {} exceeds the soft cap of {ORDER_SOFT_CAP}; pass --force to proceed",
                args.order
            ),
        ));
    }
    let form = match args.var {
        Var::Q => generate_maxsym_budgeted(args.order, DEFAULT_TERM_BUDGET),
        Var::R => phi_n(args.order),
    }
    .map_err(engine_failure)?;
    match args.format {
        EquationFormat::Text => outln!("{}", form.to_text()),
        EquationFormat::Latex => outln!("{}", form.to_latex()),
        EquationFormat::Json => outln!(
            "{}",
            serde_json::to_string_pretty(&form.to_json()).expect("JSON document serializes")
        ),
    }
    if let Some(path) = &args.json_out {
        let mut doc =
            serde_json::to_string_pretty(&form.to_json()).expect("JSON document serializes");
        doc.push('\n');
        std::fs::write(path, doc)
            .map_err(|e| Failure::new(1, format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

fn run_verify(args: VerifyArgs) -> Result<(), Failure> {
    let report = run_suite(args.suite, args.max_order);
    match args.format {
        ReportFormat::Text => out!("{}", report.render_text()),
        ReportFormat::Json => outln!(
            "{}",
            serde_json::to_string_pretty(&report.to_json()).expect("JSON document serializes")
        ),
    }
    if report.all_passed() {
        Ok(())
    } else {
        Err(Failure::silent(1))
    }
}

fn run_basis(args: BasisArgs) -> Result<(), Failure> {
    let interval = (args.interval.0, args.interval.1);
    let u = parse_fnspec(&args.u, interval).map_err(numeric_failure)?;
    let n = args.order;
    let basis = match &args.v {
        Some(vspec) => {
            let v = parse_fnspec(vspec, interval).map_err(numeric_failure)?;
            basis_from_uv(&u, &v, n).map_err(numeric_failure)?
        }
        None => {
            let x0 = args.x0.unwrap_or(interval.0);
            basis_from_u_anchored(&u, n, x0).map_err(numeric_failure)?
        }
    };
    outln!("order: {n}");
    outln!("provenance: {:?}", basis.provenance());
    outln!("interval: [{}, {}]", interval.0, interval.1);
    for (k, entry) in basis.entries().iter().enumerate() {
        outln!("entry {k}: {}", entry.label());
    }
    let reference = factorial_product(n);
    for &x in &sample_points(interval, 3) {
        let w = wronskian_numeric(&basis, x).map_err(numeric_failure)?;
        outln!("wronskian at x = {x:.6}: {w:.6e} (prod j! = {reference})");
    }
    if n >= 2 {
        let q = source_q_from(&u).map_err(numeric_failure)?;
        let ode = generate_maxsym_budgeted(n, DEFAULT_TERM_BUDGET).map_err(engine_failure)?;
        let pts = sample_points(interval, args.points.max(1));
        let worst = basis.max_residual(&ode, &q, &pts).map_err(numeric_failure)?;
        outln!("residual: {worst:.3e} (tolerance {RESIDUAL_GATE:.0e})");
        if worst > RESIDUAL_GATE {
            outln!("fail");
            return Err(Failure::silent(1));
        }
    }
    outln!("pass");
    Ok(())
}

fn run_residual(args: ResidualArgs) -> Result<(), Failure> {
    if args.tol <= 0.0 || !args.tol.is_finite() {
        return Err(Failure::new(
            2,
            format!("tolerance must be a positive number, got {}", args.tol),
        ));
    }
    let interval = (args.interval.0, args.interval.1);
    let q = parse_fnspec(&args.q, interval).map_err(numeric_failure)?;
    let y = parse_fnspec(&args.y, interval).map_err(numeric_failure)?;
    let ode = generate_maxsym_budgeted(args.order, DEFAULT_TERM_BUDGET).map_err(engine_failure)?;
    let pts = sample_points(interval, args.points.max(1));
    let worst = residual(&ode, &q, &y, &pts).map_err(numeric_failure)?;
    outln!("residual: {worst:.6e}");
    outln!("tolerance: {:.6e}", args.tol);
    if worst <= args.tol {
        outln!("pass");
        Ok(())
    } else {
        outln!("fail");
        Err(Failure::silent(1))
    }
}

fn run_transform(args: TransformArgs) -> Result<(), Failure> {
    let interval = (args.interval.0, args.interval.1);
    let u = parse_fnspec(&args.u, interval).map_err(numeric_failure)?;
    let map = match args.x0 {
        Some(x0) => EquivalenceMap::with_anchor(args.order, args.lambda, u, x0),
        None => EquivalenceMap::new(args.order, args.lambda, u),
    }
    .map_err(numeric_failure)?;
    let value = map_canonical_solution(&map, args.k, args.x).map_err(numeric_failure)?;
    outln!("{value}");
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Generate(args) => run_generate(args),
        Command::Verify(args) => run_verify(args),
        Command::Basis(args) => run_basis(args),
        Command::Residual(args) => run_residual(args),
        Command::Transform(args) => run_transform(args),
    };
    if let Err(failure) = outcome {
        if !failure.message.is_empty() {
            eprintln!("error: {}", failure.message);
        }
        std::process::exit(failure.code);
    }
}
