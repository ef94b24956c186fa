use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use corrgeo::report::{parse_measures, write_sweep_csv};
use corrgeo::state::load_state_file;
use corrgeo::{full_analysis, selftest, sweep, AnalysisOptions, Error, SweepSpec};

const EXIT_INTERNAL: u8 = 1;
const EXIT_INVALID: u8 = 2;
const EXIT_NOT_CONVERGED: u8 = 3;

#[derive(Parser)]
#[command(name = "corrgeo", version, about = "Relative-entropy correlation measures for quantum states")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
    Table,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the correlation report of one state file.
    Analyze(AnalyzeArgs),
    /// Evaluate a parameter grid and write one CSV row per point.
    Sweep {
        specfile: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the golden-value suite and print a pass/fail table.
    Selftest,
}

#[derive(Args)]
struct AnalyzeArgs {
    statefile: PathBuf,
    /// `all` or a comma-separated subset of E,D,Q,C,T,L,delta,mid.
    #[arg(long, default_value = "all")]
    measures: String,
    /// Restarts of the product-basis search.
    #[arg(long)]
    restarts: Option<usize>,
    /// Convergence tolerance of the basis search and the entanglement sweeps.
    #[arg(long)]
    tol: Option<f64>,
    /// Number of product terms in the separable ansatz.
    #[arg(long)]
    ree_terms: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Party measured by the original discord (0 or 1).
    #[arg(long, default_value_t = 0)]
    measured_party: usize,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::ConsistencyError(_) => EXIT_INTERNAL,
        _ => EXIT_INVALID,
    }
}

fn analyze(args: AnalyzeArgs) -> corrgeo::Result<u8> {
    let AnalyzeArgs {
        statefile,
        measures,
        restarts,
        tol,
        ree_terms,
        seed,
        measured_party,
        format,
    } = args;
    let state = load_state_file(&statefile)?;
    let mut opts = AnalysisOptions {
        measures: parse_measures(&measures)?,
        measured_party,
        ..AnalysisOptions::default()
    }
    .with_seed(seed);
    if let Some(r) = restarts {
        if r == 0 {
            return Err(Error::InvalidInput("--restarts must be at least 1".into()));
        }
        opts.search.restarts = r;
    }
    if let Some(t) = tol {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidInput(format!("--tol {t} must be positive")));
        }
        opts.search.entropy_tol = t;
        opts.ree.sweep_tol = t;
    }
    if let Some(m) = ree_terms {
        if m == 0 {
            return Err(Error::InvalidInput("--ree-terms must be at least 1".into()));
        }
        opts.ree.terms = Some(m);
    }
    if measured_party > 1 {
        return Err(Error::InvalidInput("--measured-party must be 0 or 1".into()));
    }

    let report = full_analysis(&state, &opts)?;
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut out, &report.to_json())?;
            writeln!(out)?;
        }
        Format::Csv => report.write_csv(&mut out)?,
        Format::Table => write!(out, "{}", report.to_table())?,
    }
    if report.subadditivity_violation() == Some(true) {
        log::warn!(
            "subadditivity violated: T_rho - (E + Q + C_sigma) = {:.6}",
            report.subadditivity_gap.unwrap_or(f64::NAN)
        );
    }
    Ok(if report.has_non_convergence() { EXIT_NOT_CONVERGED } else { 0 })
}

fn run_sweep(specfile: PathBuf, out: PathBuf) -> corrgeo::Result<u8> {
    let text = std::fs::read_to_string(&specfile)?;
    let spec: SweepSpec = serde_json::from_str(&text)?;
    let rows = sweep(&spec)?;
    let file = BufWriter::new(File::create(&out)?);
    write_sweep_csv(&spec, &rows, file)?;
    let violations = rows
        .iter()
        .filter(|r| r.report.subadditivity_violation() == Some(true))
        .count();
    if violations > 0 {
        log::warn!("subadditivity violated at {violations} of {} points", rows.len());
    }
    let unconverged = rows.iter().any(|r| r.report.has_non_convergence());
    Ok(if unconverged { EXIT_NOT_CONVERGED } else { 0 })
}

fn run_selftest() -> corrgeo::Result<u8> {
    let checks = selftest::run()?;
    print!("{}", selftest::format_table(&checks));
    Ok(if checks.iter().all(|c| c.passed()) { 0 } else { EXIT_INTERNAL })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Analyze(args) => analyze(args),
        Command::Sweep { specfile, out } => run_sweep(specfile, out),
        Command::Selftest => run_selftest(),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
