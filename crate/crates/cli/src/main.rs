use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use smoothmod::kfun::{self, Options};
use smoothmod::verify::{self, report, Config, CorpusEntry, Suite, Summary};
use smoothmod::{minimax, moduli, BSplineKernel, CertifiedValue, Error, Method, PeriodicFunction};

const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_TOLERANCE: u8 = 3;
const EXIT_EVAL: u8 = 4;
const EXIT_INCONCLUSIVE: u8 = 5;

#[derive(Parser)]
#[command(name = "smoothmod", version, about = "B-spline moduli of smoothness, K-functionals and best approximation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute one quantity; prints `value lo hi method`.
    Compute(ComputeArgs),
    /// Run a verification suite and write reports.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Quantity {
    W2,
    W2star,
    Omega2,
    Eminus1,
    K2,
    Ktilde2,
    Ck,
    Crossover,
}

#[derive(clap::Args)]
struct ComputeArgs {
    quantity: Quantity,
    /// JSON function file or `builtin:NAME`.
    #[arg(long = "fn", value_name = "SPEC")]
    function: Option<String>,
    #[arg(long)]
    h: Option<f64>,
    /// Second step of `ktilde2` (default: the pair h/8, h/(4√3) for the given h).
    #[arg(long)]
    h2: Option<f64>,
    #[arg(long)]
    k: Option<u32>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Trigonometric degree of the K-functional search space.
    #[arg(long)]
    degree: Option<usize>,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Both,
}

#[derive(clap::Args)]
struct VerifyArgs {
    /// lemma1, lemma2, theorem1, theorem2, theorem3, jackson, bernstein, kfun, sharpness or all.
    suite: String,
    /// JSON corpus file (default: the builtin corpus).
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long, default_value = "reports")]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Both)]
    format: Format,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Verdict tolerance.
    #[arg(long, default_value_t = report::DEFAULT_ABS_TOL)]
    tol: f64,
}

enum Failure {
    Usage(String),
    Eval(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(_)
            | Error::Format(_)
            | Error::UnknownSuite(_)
            | Error::UnknownCheck(_)
            | Error::MissingParam { .. }
            | Error::EmptyCorpus => Failure::Usage(e.to_string()),
            _ => Failure::Eval(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Compute(a) => compute(&a),
        Command::Verify(a) => verify(&a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Eval(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_EVAL)
        }
    }
}

fn load_function(spec: &str) -> Result<PeriodicFunction, Failure> {
    if let Some(name) = spec.strip_prefix("builtin:") {
        return Ok(verify::builtin(name)?);
    }
    let text = fs::read_to_string(spec).map_err(|e| Failure::Usage(format!("{spec}: {e}")))?;
    verify::parse_function(&text).map_err(|e| Failure::Usage(format!("{spec}: {e}")))
}

fn need<T: Copy>(v: Option<T>, flag: &str) -> Result<T, Failure> {
    v.ok_or_else(|| Failure::Usage(format!("missing --{flag}")))
}

fn print_value(v: &CertifiedValue) {
    println!("{} {} {} {}", v.mid(), v.lo, v.hi, v.method);
}

fn compute(a: &ComputeArgs) -> Result<u8, Failure> {
    if !(a.tol > 0.0) {
        return Err(Failure::Usage("--tol must be positive".into()));
    }
    let f = || -> Result<PeriodicFunction, Failure> { load_function(&need(a.function.as_deref(), "fn")?.to_string()) };
    let h = || need(a.h, "h");
    let k = || need(a.k, "k");
    let opts = Options { degree: a.degree, tol: a.tol, check_convergence: true };
    let value = match a.quantity {
        Quantity::Crossover => Ok(CertifiedValue::point(verify::crossover_alpha(), Method::Exact).widen(1e-12)),
        Quantity::Ck => Ok(CertifiedValue::point(BSplineKernel::new(h()?, k()?)?.second_moment_constant(), Method::Exact)),
        Quantity::W2 => moduli::w2(&f()?, h()?, k()?, a.tol),
        Quantity::W2star => moduli::w2_star(&f()?, h()?, k()?, a.tol),
        Quantity::Omega2 => moduli::omega2(&f()?, h()?, a.tol),
        Quantity::Eminus1 => minimax::best_approx_error(&f()?, need(a.n, "n")?, a.tol),
        Quantity::K2 => kfun::k2_estimate_with(&f()?, h()?, &opts).map(|e| e.value),
        Quantity::Ktilde2 => {
            let h = h()?;
            let (h1, h2) = match a.h2 {
                Some(h2) => (h, h2),
                None => (h / 8.0, h / (4.0 * 3f64.sqrt())),
            };
            kfun::ktilde2_estimate_with(&f()?, h1, h2, &opts).map(|e| e.value)
        }
    };
    match value {
        Ok(v) => {
            print_value(&v);
            Ok(0)
        }
        Err(Error::ToleranceNotMet { best, requested }) => {
            print_value(&best);
            eprintln!("tolerance {requested:e} not met");
            Ok(EXIT_TOLERANCE)
        }
        Err(e) => Err(e.into()),
    }
}

fn load_corpus(path: &Option<PathBuf>) -> Result<Vec<CorpusEntry>, Failure> {
    match path {
        None => Ok(verify::default_corpus()),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?;
            verify::parse_corpus(&text).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))
        }
    }
}

fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure::Eval(format!("{}: {e}", path.display())))
}

fn verify(a: &VerifyArgs) -> Result<u8, Failure> {
    let suite: Suite = a.suite.parse()?;
    if !(a.tol >= 0.0) {
        return Err(Failure::Usage("--tol must be nonnegative".into()));
    }
    let corpus = load_corpus(&a.corpus)?;
    let config = Config { abs_tol: a.tol, seed: a.seed };
    let reports = verify::run_suite(suite, &corpus, &config)?;

    fs::create_dir_all(&a.out).map_err(|e| Failure::Usage(format!("{}: {e}", a.out.display())))?;
    if a.format != Format::Csv {
        write(&a.out.join(format!("{suite}.json")), &report::to_json(&reports)?)?;
    }
    if a.format != Format::Json {
        write(&a.out.join(format!("{suite}.csv")), &report::to_csv(&reports)?)?;
    }

    print!("{}", verify::summary_table(&reports));
    let s = Summary::of(&reports);
    println!("total {}: {} pass, {} fail, {} inconclusive", s.total(), s.pass, s.fail, s.inconclusive);
    Ok(if s.fail > 0 {
        EXIT_FAIL
    } else if s.inconclusive > 0 {
        EXIT_INCONCLUSIVE
    } else {
        0
    })
}
