//! `dclp`: evaluate, transform, validate and enumerate distributional
//! clause programs, and run the bundled experiments.
//!
//! Results go to stdout as JSON (`"schema": 1`) or CSV; diagnostics go to
//! stderr. Exit codes: 1 for unreadable, unparsable or invalid input, 2 for
//! inference errors, 3 when no sample was accepted.

mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use dclp::engine::{self, Convergence, Estimate, Mode, OracleOptions, SamplerConfig};
use dclp::experiments::{self, Experiment, ExperimentOptions};
use dclp::magic::{pmagic, seed};
use dclp::validate::validate;
use dclp::{parse_atom, parse_evidence_lines, parse_program, parse_term, Atom, Evidence, Program, Term};

#[derive(Parser)]
#[command(name = "dclp", version, about = "Probabilistic inference for distributional clause programs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate p(query | evidence) by sampling.
    Evaluate(EvaluateArgs),
    /// Print the probabilistic magic transformation of a program.
    Transform(TransformArgs),
    /// Check a program for syntax and stratification errors.
    Validate {
        program: PathBuf,
    },
    /// Compute p(query | evidence) exactly by enumerating worlds.
    Oracle(OracleArgs),
    /// Run a named parameter sweep and print it as a table.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct QueryArgs {
    /// Ground query atom, e.g. "dist_eq(~(nballs), 3)".
    #[arg(long)]
    query: String,
    /// Evidence file of `+atom.` and `-atom.` lines.
    #[arg(long)]
    evidence: Option<PathBuf>,
    /// Random variable whose posterior is reported; repeatable.
    #[arg(long = "track")]
    track: Vec<String>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct EvaluateArgs {
    program: PathBuf,
    #[command(flatten)]
    q: QueryArgs,
    #[arg(long, default_value_t = 1000)]
    samples: u64,
    /// Lookahead depth; 0 disables the lookahead.
    #[arg(long, default_value_t = 0)]
    depth: u32,
    #[arg(long, default_value = "lw", value_parser = parse_mode)]
    method: Mode,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    out: Format,
    /// `fixed`, or `stderr:TAU` to stop once the standard error is below TAU.
    #[arg(long, default_value = "fixed", value_parser = parse_convergence)]
    convergence: Convergence,
    /// Also append the result as a CSV row to this file.
    #[arg(long)]
    append: Option<PathBuf>,
}

#[derive(Args)]
struct TransformArgs {
    program: PathBuf,
    /// Seed the transformation with this query.
    #[arg(long)]
    query: Option<String>,
    /// Seed the transformation with the atoms of this evidence file.
    #[arg(long)]
    evidence: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    program: PathBuf,
    #[command(flatten)]
    q: QueryArgs,
    /// Enumerate Poisson variables over 0..=N only.
    #[arg(long)]
    truncate: Option<i64>,
    #[arg(long, default_value_t = 10_000_000)]
    max_worlds: u64,
    /// Enumerate the seeded transformation instead of the program.
    #[arg(long)]
    transformed: bool,
}

#[derive(Args)]
struct ExperimentArgs {
    /// nogreen-sweep, urn-uniform or urn-poisson.
    #[arg(value_parser = parse_experiment)]
    name: Experiment,
    /// Samples per run; defaults to 200, 20000 and 100000 respectively.
    #[arg(long)]
    samples: Option<u64>,
    #[arg(long, default_value_t = 5)]
    repeats: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Method to sweep; repeatable.
    #[arg(long = "method", value_parser = parse_mode)]
    methods: Vec<Mode>,
    /// Lookahead depths for nogreen-sweep, e.g. 1,2,3.
    #[arg(long, value_delimiter = ',')]
    depths: Vec<u32>,
    /// Observed draw counts for nogreen-sweep.
    #[arg(long, value_delimiter = ',')]
    draws: Vec<u32>,
    /// Lookahead depth for the urn experiments.
    #[arg(long, default_value_t = 0)]
    depth: u32,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    out: Format,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    s.parse()
}

fn parse_experiment(s: &str) -> Result<Experiment, String> {
    s.parse()
}

fn parse_convergence(s: &str) -> Result<Convergence, String> {
    if s == "fixed" {
        return Ok(Convergence::Fixed);
    }
    let tau = s
        .strip_prefix("stderr:")
        .and_then(|t| t.parse::<f64>().ok())
        .filter(|t| *t > 0.0)
        .ok_or_else(|| format!("expected `fixed` or `stderr:TAU` with TAU > 0, got `{s}`"))?;
    Ok(Convergence::StderrBelow(tau))
}

/// A failure together with its exit code.
#[derive(Debug)]
enum Failure {
    Input(String),
    Runtime(String),
    NoAcceptedSamples,
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 1,
            Failure::Runtime(_) => 2,
            Failure::NoAcceptedSamples => 3,
        }
    }
}

impl From<engine::EngineError> for Failure {
    fn from(e: engine::EngineError) -> Failure {
        Failure::Runtime(e.to_string())
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn load_program(path: &Path) -> Result<Program, Failure> {
    parse_program(&read(path)?).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

/// Parses and validates. Warnings are left to the `validate` command.
fn load_valid_program(path: &Path) -> Result<Program, Failure> {
    let p = load_program(path)?;
    let report = validate(&p);
    if !report.is_valid() {
        return Err(Failure::Input(format!("{}: {}", path.display(), report.errors.join("; "))));
    }
    Ok(p)
}

fn load_evidence(path: Option<&Path>) -> Result<Evidence, Failure> {
    let Some(path) = path else { return Ok(Evidence::default()) };
    let items = parse_evidence_lines(&read(path)?).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    Evidence::new(items).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn load_query(src: &str) -> Result<Atom, Failure> {
    let q = parse_atom(src).map_err(|e| Failure::Input(format!("query: {e}")))?;
    if !q.is_ground() {
        return Err(Failure::Input(format!("query `{q}` is not ground")));
    }
    Ok(q)
}

fn load_track(src: &[String]) -> Result<Vec<Term>, Failure> {
    src.iter().map(|s| parse_term(s).map_err(|e| Failure::Input(format!("--track {s}: {e}")))).collect()
}

/// Writes to stdout; a reader that went away (`| head`) is not an error.
fn emit(text: &str) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    if let Err(e) = out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
        if e.kind() != std::io::ErrorKind::BrokenPipe {
            eprintln!("error: stdout: {e}");
        }
    }
}

fn print_json(v: &serde_json::Value) {
    emit(&format!("{}\n", serde_json::to_string_pretty(v).expect("JSON values serialize")));
}

fn evaluate(args: &EvaluateArgs) -> Result<(), Failure> {
    let p = load_valid_program(&args.program)?;
    let q = load_query(&args.q.query)?;
    let e = load_evidence(args.q.evidence.as_deref())?;
    let cfg = SamplerConfig {
        mode: args.method,
        depth: args.depth,
        max_samples: args.samples,
        seed: args.seed,
        convergence: args.convergence,
        workers: args.workers,
        track: load_track(&args.q.track)?,
        ..Default::default()
    };
    let start = Instant::now();
    let ev = engine::evaluate(&p, &q, &e, &cfg)?;
    let result = report::RunResult::new(&ev, start.elapsed(), args, &cfg);
    match args.out {
        Format::Json => print_json(&result.to_json()),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(std::io::stdout());
            result.write_csv(&mut w, true).map_err(|e| Failure::Runtime(e.to_string()))?;
        }
    }
    if let Some(path) = &args.append {
        report::append_csv(path, &result).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
    }
    match ev.estimate {
        Estimate::Value(_) => Ok(()),
        Estimate::NoAcceptedSamples => Err(Failure::NoAcceptedSamples),
    }
}

fn transform(args: &TransformArgs) -> Result<(), Failure> {
    let p = load_program(&args.program)?;
    let q = args.query.as_deref().map(load_query).transpose()?;
    let e = load_evidence(args.evidence.as_deref())?;
    let t = seed(&pmagic(&p), q.as_ref(), &e);
    emit(&t.to_program().to_string());
    Ok(())
}

fn validate_cmd(path: &Path) -> Result<(), Failure> {
    let p = load_program(path)?;
    let r = validate(&p);
    for w in &r.warnings {
        eprintln!("warning: {w}");
    }
    print_json(&report::validation_json(&r));
    if r.is_valid() {
        Ok(())
    } else {
        Err(Failure::Input(r.errors.join("; ")))
    }
}

fn oracle(args: &OracleArgs) -> Result<(), Failure> {
    let p = load_valid_program(&args.program)?;
    let q = load_query(&args.q.query)?;
    let e = load_evidence(args.q.evidence.as_deref())?;
    let opts = OracleOptions {
        transformed: args.transformed,
        truncate: args.truncate,
        max_worlds: args.max_worlds,
        track: load_track(&args.q.track)?,
        ..Default::default()
    };
    let r = engine::exact_enumerate(&p, &q, &e, &opts)?;
    print_json(&report::oracle_json(&r));
    Ok(())
}

fn experiment(args: &ExperimentArgs) -> Result<(), Failure> {
    let opts = ExperimentOptions {
        samples: args.samples,
        repeats: args.repeats,
        seed: args.seed,
        workers: args.workers,
        methods: args.methods.clone(),
        depths: args.depths.clone(),
        draws: args.draws.clone(),
        depth: args.depth,
    };
    if opts.repeats == 0 {
        return Err(Failure::Input("--repeats must be at least 1".into()));
    }
    let table = experiments::run(args.name, &opts)?;
    match args.out {
        Format::Csv => {
            report::write_table(std::io::stdout(), &table).map_err(|e| Failure::Runtime(e.to_string()))?
        }
        Format::Json => print_json(&report::table_json(args.name, &table)),
    }
    Ok(())
}

fn main() -> ExitCode {
    // clap exits with 2 on usage errors, which is reserved for inference
    // errors here
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match &cli.command {
        Command::Evaluate(a) => evaluate(a),
        Command::Transform(a) => transform(a),
        Command::Validate { program } => validate_cmd(program),
        Command::Oracle(a) => oracle(a),
        Command::Experiment(a) => experiment(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Input(m) | Failure::Runtime(m) => eprintln!("error: {m}"),
                Failure::NoAcceptedSamples => eprintln!("error: no sample was accepted"),
            }
            ExitCode::from(f.code())
        }
    }
}
