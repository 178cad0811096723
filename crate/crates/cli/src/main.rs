//! Command-line front end: one subcommand per scenario plus law building and re-export.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use renewlab::report::{dist_build, reexport, run_scenario, Format, RunConfig, RunStatus, Scenario};
use renewlab::Error;

const EXIT_USAGE: u8 = 1;
const EXIT_INVARIANT: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(name = "renewlab", version, about = "Exact lattice experiments for heavy-tailed renewal processes")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build the step law and write it with its header and tail check.
    DistBuild(RunArgs),
    /// Renewal mass with residual accounting.
    Renewal(RunArgs),
    /// Renewal ratio against the strong renewal prediction.
    SrtRatio(RunArgs),
    /// Negligibility profiles of the configured functionals.
    AnScan(RunArgs),
    /// Local large-deviation ratios.
    LldScan(RunArgs),
    /// Paired functional profiles on a counterexample law.
    Counterexample(RunArgs),
    /// Ratios between the plain and tilde functionals.
    AppendixDiag(RunArgs),
    /// Re-export a JSON report in another format.
    Export(ExportArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `run.out`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for every sampling path; overrides `run.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    threads: Option<usize>,
    /// Renewal convergence tolerance; overrides `conv_engine.tolerance`.
    #[arg(long)]
    tolerance: Option<f64>,
}

#[derive(Args)]
struct ExportArgs {
    /// A JSON report written by a previous run.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum)]
    format: FormatArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }
    }
}

fn exit_for(e: &Error) -> u8 {
    match e {
        Error::Io(_) | Error::Serialization(_) => EXIT_IO,
        Error::Numerical(_) | Error::Invariant(_) => EXIT_INVARIANT,
        Error::Domain(_)
        | Error::Unsupported(_)
        | Error::Construction(_)
        | Error::SpanMismatch(..)
        | Error::Config(_) => EXIT_USAGE,
    }
}

fn load(args: &RunArgs, scenario: Option<Scenario>) -> renewlab::Result<(RunConfig, PathBuf)> {
    let text = std::fs::read_to_string(&args.config)?;
    let mut cfg = RunConfig::parse(&text)?;
    if let Some(s) = scenario {
        cfg.run.scenario = s;
    }
    if args.seed.is_some() {
        cfg.run.seed = args.seed;
    }
    if let Some(t) = args.tolerance {
        if !(t > 0.0) {
            return Err(Error::Config(format!("--tolerance must be positive, got {t}")));
        }
        cfg.conv_engine.tolerance = t;
    }
    if let Some(o) = &args.out {
        cfg.run.out = Some(o.clone());
    }
    // A law build never samples, so only the scan subcommands need the full check.
    if scenario.is_some() {
        cfg.validate()?;
    }
    let out = cfg.run.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    Ok((cfg, out))
}

fn set_threads(n: Option<usize>) -> renewlab::Result<()> {
    if let Some(n) = n {
        if n == 0 {
            return Err(Error::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    Ok(())
}

fn list(files: &[PathBuf]) {
    for f in files {
        println!("{}", f.display());
    }
}

fn run(cmd: Cmd) -> renewlab::Result<u8> {
    let (args, scenario) = match cmd {
        Cmd::Export(a) => {
            let out = a.out.unwrap_or_else(|| a.input.parent().unwrap_or(Path::new(".")).to_path_buf());
            list(&reexport(&a.input, a.format.into(), &out)?);
            return Ok(0);
        }
        Cmd::DistBuild(a) => {
            set_threads(a.threads)?;
            let (cfg, out) = load(&a, None)?;
            list(&dist_build(&cfg, &out)?);
            return Ok(0);
        }
        Cmd::Renewal(a) => (a, Scenario::RenewalScan),
        Cmd::SrtRatio(a) => (a, Scenario::SrtRatio),
        Cmd::AnScan(a) => (a, Scenario::AnScan),
        Cmd::LldScan(a) => (a, Scenario::LldScan),
        Cmd::Counterexample(a) => (a, Scenario::CounterexampleDemo),
        Cmd::AppendixDiag(a) => (a, Scenario::AppendixDiag),
    };
    set_threads(args.threads)?;
    let (cfg, out) = load(&args, Some(scenario))?;
    let outcome = run_scenario(&cfg, &out)?;
    list(&outcome.files);
    for (k, v) in &outcome.doc.notes {
        eprintln!("{k} = {v}");
    }
    if let RunStatus::InvariantViolation(v) = &outcome.status {
        for m in v {
            eprintln!("invariant violated: {m}");
        }
    }
    Ok(outcome.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(EXIT_USAGE);
        }
        Err(e) => e.exit(),
    };
    match run(cli.cmd) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_for(&e))
        }
    }
}
