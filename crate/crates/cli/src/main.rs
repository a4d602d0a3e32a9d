use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use mtower::decompose;
use mtower::io::{self, DecompositionJson, TupleFile};
use mtower::linalg::Rng;
use mtower::selfcheck::{self, SelfCheckConfig, SuiteStatus};
use mtower::tower::{self, TailIndex, TowerPresentation};
use mtower::{Error, MatrixTuple, Tolerances};

const EXIT_PROPERTY: u8 = 1;
const EXIT_PARSE: u8 = 2;
const EXIT_NUMERIC: u8 = 3;
const EXIT_SHAPE: u8 = 4;
const EXIT_VALIDATION: u8 = 5;

#[derive(Parser)]
#[command(name = "mtower", version, about = "Decompose matrix tuples and analyze tower presentations")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct GlobalArgs {
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Relative singular-value cutoff for rank decisions.
    #[arg(long, global = true)]
    tol_rank: Option<f64>,
    /// Absolute tolerance for matrix equality.
    #[arg(long, global = true)]
    tol_eq: Option<f64>,
    /// Monte-Carlo sample count.
    #[arg(long, global = true, default_value_t = 2048)]
    samples: usize,
    /// Degree cap (selfcheck) or largest degree (tower builders).
    #[arg(long, global = true)]
    max_degree: Option<usize>,
    /// Emit JSON on stdout (the only output format).
    #[arg(long, global = true)]
    json: bool,
    /// Suppress diagnostics on stderr.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Prime decomposition of a tuple file.
    Decompose { input: Option<PathBuf> },
    /// Unitary equivalence of two tuple files, with a witness.
    Equiv { left: PathBuf, right: PathBuf },
    /// Whether two tuple files share no irreducible class.
    Disjoint { left: PathBuf, right: PathBuf },
    /// Whether the first tuple is equivalent to a summand of the second.
    Subordinate { left: PathBuf, right: PathBuf },
    /// Tower presentation algorithms.
    #[command(subcommand)]
    Tower(TowerCommand),
    /// Run the seeded property suites.
    Selfcheck {
        /// Print a generated composite tuple file with its ground truth instead.
        #[arg(long)]
        emit_composite: bool,
        /// Run only suites whose name contains this string.
        #[arg(long)]
        only: Option<String>,
    },
}

#[derive(Subcommand)]
enum TowerCommand {
    /// Height, tails, vanishing classes and classification.
    Analyze { input: Option<PathBuf> },
    /// Class set of the tail subtower T[N].
    Tail {
        /// Tail index, a positive integer or `inf`.
        #[arg(long)]
        n: String,
        input: Option<PathBuf>,
    },
    /// Regular, singular or not solid.
    Classify { input: Option<PathBuf> },
    /// Closedness test against the distinguished class.
    ClosedTest { input: Option<PathBuf> },
    /// Print a built-in example presentation.
    Example {
        which: Example,
        /// Number of scale indices per degree.
        #[arg(long, default_value_t = 2)]
        depth: u32,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Example {
    ExmClo,
    NonOne,
}

#[derive(Serialize)]
struct RunReport<'a> {
    command: Vec<String>,
    seed: u64,
    tolerances: &'a Tolerances,
    result: Value,
    warnings: Vec<String>,
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Parse(_) => EXIT_PARSE,
            Error::InvalidShape(_) | Error::LabelMismatch { .. } | Error::NotUnitary { .. } => EXIT_SHAPE,
            Error::DecompositionFailed(_)
            | Error::InvalidDecomposition(_)
            | Error::InternalInconsistency(_)
            | Error::NotHermitian { .. }
            | Error::NotSeparable(_) => EXIT_NUMERIC,
            Error::NotFound(_) | Error::EmptyTower | Error::ThetaRequired | Error::Unsupported(_) => EXIT_VALIDATION,
        };
        Failure { code, message: e.to_string() }
    }
}

/// What a command produced: a wrapped result, or a raw document meant to be
/// piped into another command.
enum Output {
    Report { result: Value, warnings: Vec<String>, failed: bool },
    Raw(Value),
}

impl Output {
    fn report(result: impl Serialize) -> Self {
        Output::Report { result: to_value(result), warnings: Vec::new(), failed: false }
    }
}

fn to_value(v: impl Serialize) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

fn read_input(path: Option<&PathBuf>) -> Result<String, Failure> {
    let mut text = String::new();
    let outcome = match path {
        Some(p) => std::fs::File::open(p).and_then(|mut f| f.read_to_string(&mut text)),
        None => std::io::stdin().read_to_string(&mut text),
    };
    outcome.map_err(|e| Failure {
        code: EXIT_PARSE,
        message: format!("cannot read {}: {e}", path.map_or("stdin".into(), |p| p.display().to_string())),
    })?;
    Ok(text)
}

fn read_tuple(path: Option<&PathBuf>) -> Result<MatrixTuple, Failure> {
    Ok(io::read_tuple(&read_input(path)?)?)
}

fn read_valid_presentation(path: Option<&PathBuf>) -> Result<TowerPresentation, Failure> {
    let p = io::read_presentation(&read_input(path)?)?;
    let diagnostics = p.validate();
    if !diagnostics.is_empty() {
        let lines: Vec<String> = diagnostics.iter().map(ToString::to_string).collect();
        return Err(Failure {
            code: EXIT_VALIDATION,
            message: format!("invalid presentation:\n  {}", lines.join("\n  ")),
        });
    }
    Ok(p)
}

fn tolerances(global: &GlobalArgs) -> Result<Tolerances, Failure> {
    let mut tol = Tolerances::default();
    if let Some(r) = global.tol_rank {
        tol.rank_rel = r;
    }
    if let Some(e) = global.tol_eq {
        tol.eq_abs = e;
    }
    tol.validate()?;
    Ok(tol)
}

fn parse_tail_index(s: &str) -> Result<TailIndex, Failure> {
    if matches!(s, "inf" | "infinity") {
        return Ok(TailIndex::Infinity);
    }
    match s.parse::<u32>() {
        Ok(n) if n >= 1 => Ok(TailIndex::Finite(n)),
        _ => Err(Failure { code: EXIT_VALIDATION, message: format!("--n must be a positive integer or inf, got {s}") }),
    }
}

fn pair(left: &PathBuf, right: &PathBuf) -> Result<(MatrixTuple, MatrixTuple), Failure> {
    Ok((read_tuple(Some(left))?, read_tuple(Some(right))?))
}

fn tower_command(cmd: &TowerCommand, global: &GlobalArgs) -> Result<Output, Failure> {
    let with_warnings = |p: &TowerPresentation, result: Value| -> Result<Output, Failure> {
        Ok(Output::Report { result, warnings: p.flag_warnings()?, failed: false })
    };
    match cmd {
        TowerCommand::Analyze { input } => {
            let p = read_valid_presentation(input.as_ref())?;
            with_warnings(&p, to_value(p.analyze()?))
        }
        TowerCommand::Tail { n, input } => {
            let index = parse_tail_index(n)?;
            let p = read_valid_presentation(input.as_ref())?;
            let classes = p.tail_subtower(index)?;
            with_warnings(&p, json!({ "n": index, "classes": classes }))
        }
        TowerCommand::Classify { input } => {
            let p = read_valid_presentation(input.as_ref())?;
            with_warnings(&p, to_value(p.classify()?))
        }
        TowerCommand::ClosedTest { input } => {
            let p = read_valid_presentation(input.as_ref())?;
            with_warnings(&p, to_value(p.closedness_test()?))
        }
        TowerCommand::Example { which, depth } => {
            let max_degree = global.max_degree.unwrap_or(6);
            let max_degree = u32::try_from(max_degree)
                .map_err(|_| Failure { code: EXIT_VALIDATION, message: "max degree out of range".into() })?;
            let p = match which {
                Example::ExmClo => tower::build_example_clo(max_degree, *depth)?,
                Example::NonOne => tower::build_non_one(max_degree, *depth)?,
            };
            Ok(Output::Raw(to_value(p)))
        }
    }
}

fn execute(cli: &Cli, tol: &Tolerances) -> Result<Output, Failure> {
    let g = &cli.global;
    match &cli.command {
        Command::Decompose { input } => {
            let x = read_tuple(input.as_ref())?;
            let mut rng = Rng::new(g.seed);
            let dec = decompose::decompose(&x, &mut rng, tol)?;
            let residual = dec.reconstruction_residual(&x)?;
            Ok(Output::report(DecompositionJson::new(&dec, residual)))
        }
        Command::Equiv { left, right } => {
            let (x, y) = pair(left, right)?;
            let eq = decompose::are_equivalent_with(&x, &y, &mut Rng::new(g.seed), tol)?;
            let witness = eq.witness.as_ref().map(io::matrix_to_json);
            Ok(Output::report(json!({ "equivalent": eq.equivalent, "witness": witness })))
        }
        Command::Disjoint { left, right } => {
            let (x, y) = pair(left, right)?;
            let disjoint = decompose::are_disjoint_with(&x, &y, &mut Rng::new(g.seed), tol)?;
            Ok(Output::report(json!({ "disjoint": disjoint })))
        }
        Command::Subordinate { left, right } => {
            let (x, y) = pair(left, right)?;
            let subordinate = decompose::is_subordinate_with(&x, &y, &mut Rng::new(g.seed), tol)?;
            Ok(Output::report(json!({ "subordinate": subordinate })))
        }
        Command::Tower(cmd) => tower_command(cmd, g),
        Command::Selfcheck { emit_composite: true, .. } => {
            let file: TupleFile = selfcheck::emit_composite(g.seed, g.max_degree.unwrap_or(12), tol);
            Ok(Output::Raw(to_value(file)))
        }
        Command::Selfcheck { emit_composite: false, only } => {
            let config = SelfCheckConfig {
                seed: g.seed,
                max_degree: g.max_degree.unwrap_or(12),
                samples: g.samples,
                tolerances: *tol,
            };
            let report = selfcheck::run_selected(&config, |name| only.as_deref().is_none_or(|o| name.contains(o)));
            if !g.quiet {
                for s in &report.suites {
                    let status = match s.status {
                        SuiteStatus::Pass => "PASS",
                        SuiteStatus::Fail => "FAIL",
                        SuiteStatus::Skipped => "SKIP",
                    };
                    eprintln!("{status} {} ({} cases, {} failures)", s.name, s.cases, s.failures);
                    for m in &s.messages {
                        eprintln!("     {m}");
                    }
                }
            }
            Ok(Output::Report { failed: !report.passed, result: to_value(&report), warnings: Vec::new() })
        }
    }
}

fn main() -> ExitCode {
    let start = Instant::now();
    let cli = Cli::parse();
    let quiet = cli.global.quiet;
    let outcome = tolerances(&cli.global).and_then(|tol| execute(&cli, &tol).map(|out| (tol, out)));
    let code = match outcome {
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
        Ok((_, Output::Raw(doc))) => {
            println!("{}", serde_json::to_string_pretty(&doc).expect("json value prints"));
            0
        }
        Ok((tol, Output::Report { result, warnings, failed })) => {
            if !quiet {
                for w in &warnings {
                    eprintln!("warning: {w}");
                }
            }
            let report = RunReport {
                command: std::env::args().skip(1).collect(),
                seed: cli.global.seed,
                tolerances: &tol,
                result,
                warnings,
            };
            println!("{}", serde_json::to_string_pretty(&report).expect("json value prints"));
            if failed {
                EXIT_PROPERTY
            } else {
                0
            }
        }
    };
    if !quiet {
        eprintln!("wall time: {:.3} s", start.elapsed().as_secs_f64());
    }
    ExitCode::from(code)
}
