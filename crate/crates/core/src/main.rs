use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64 as C64;
use serde::Deserialize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use tklab::scenario::suite::{run_suite, write_suite};
use tklab::scenario::sweep::{sweep, to_csv, SweepParam};
use tklab::scenario::{load_scenario, run_scenario, RunOptions, ScenarioError};
use tklab::symbols::scalar_inner_outer;

#[derive(Parser)]
#[command(name = "tklab", version, about = "Kernels and defect spaces of finite-rank perturbed block Toeplitz operators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Copy)]
struct Tolerances {
    /// Relative rank tolerance for every SVD cut.
    #[arg(long, global = true)]
    tol_rank: Option<f64>,
    /// Containment tolerance for predicted defect spaces.
    #[arg(long, global = true)]
    tol_contain: Option<f64>,
    /// Seed for generated perturbations; overrides the scenario file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Record per-check wall-clock timings.
    #[arg(long, global = true)]
    timings: bool,
}

impl Tolerances {
    fn options(self) -> RunOptions {
        RunOptions {
            tol_rank: self.tol_rank,
            tol_contain: self.tol_contain,
            seed: self.seed,
            timings: self.timings,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario file.
    Run {
        file: PathBuf,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[command(flatten)]
        tol: Tolerances,
    },
    /// Run every scenario file in a directory.
    Suite {
        dir: PathBuf,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Directory receiving suite.json and suite.txt.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[command(flatten)]
        tol: Tolerances,
    },
    /// Sweep one parameter of a scenario and print CSV.
    Sweep {
        file: PathBuf,
        #[arg(long)]
        param: SweepParam,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        tol: Tolerances,
    },
    /// Inner–outer factorization of a scalar polynomial.
    Factor { file: PathBuf },
}

#[derive(Deserialize)]
#[serde(untagged)]
enum PolyFile {
    Bare(#[serde(with = "tklab::json::cvec")] Vec<C64>),
    Wrapped {
        #[serde(with = "tklab::json::cvec")]
        coeffs: Vec<C64>,
    },
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), ScenarioError> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| ScenarioError::Validation(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<i32, ScenarioError> {
    match cli.command {
        Command::Run { file, out, format, tol } => {
            let report = run_scenario(&file, &tol.options())?;
            let text = match format {
                Format::Json => serde_json::to_string_pretty(&report).expect("serializable") + "\n",
                Format::Text => report.text(),
            };
            emit(&text, out.as_deref())?;
            Ok(report.exit_code())
        }
        Command::Suite { dir, jobs, out, tol } => {
            let report = run_suite(&dir, jobs, &tol.options())?;
            write_suite(&report, &out).map_err(|e| ScenarioError::Validation(format!("{}: {e}", out.display())))?;
            print!("{}", report.text());
            Ok(report.exit_code)
        }
        Command::Sweep { file, param, values, out, tol } => {
            let s = load_scenario(&file)?;
            let rows = sweep(&s, param, &values, &tol.options())?;
            emit(&to_csv(&rows), out.as_deref())?;
            Ok(0)
        }
        Command::Factor { file } => {
            let text = std::fs::read_to_string(&file)
                .map_err(|e| ScenarioError::Parse(format!("{}: {e}", file.display())))?;
            let poly: PolyFile = serde_json::from_str(&text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
            let coeffs = match poly {
                PolyFile::Bare(c) | PolyFile::Wrapped { coeffs: c } => c,
            };
            let f = scalar_inner_outer(&coeffs).map_err(|e| ScenarioError::Validation(e.to_string()))?;
            println!("{}", serde_json::to_string_pretty(&f).expect("serializable"));
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("tklab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
