mod commands;
mod output;

use std::fs;
use std::io::{Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde_json::json;

use output::{Artifacts, Table};

#[derive(Parser, Debug)]
#[command(name = "tropkern", version, about = "Tropical reproducing kernels on finite grids")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON input file; standard input when absent.
    #[arg(long, global = true)]
    input: Option<PathBuf>,

    /// JSON output file; standard output when absent. Grid functions are
    /// also written as CSV next to it.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    /// CSV output file, overriding the path derived from `--output`.
    #[arg(long, global = true)]
    csv: Option<PathBuf>,

    /// Seed for randomized checks.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Numerical tolerance.
    #[arg(long, global = true, default_value_t = tropkern::DEFAULT_TOL)]
    tol: f64,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Pairwise and permutation positivity of a kernel.
    CheckTpsd,
    /// φ/b₀ decomposition and the X×X feature map.
    Factorize,
    /// B̄f or Bf.
    Conjugate,
    /// Range membership by biconjugation.
    Membership,
    /// Funk kernel of a conjugation.
    Funk,
    /// Maximal kernel c_G of a function family.
    CgKernel,
    /// Idempotency and von Neumann regularity of a max-plus matrix.
    Regularity,
    /// Tropical interpolation through samples.
    Interpolate,
    /// Best range element in sup-norm or L1.
    Regress,
    /// Maupertuis gram by dynamic programming.
    Maupertuis,
    /// Backward value function for a terminal cost.
    ValueFunction,
    /// Stopping cost from value samples.
    InvertStoppingCost,
    /// Terminal cost from value samples at one time.
    InvertTerminalCost,
}

/// Failures that stop a run before any result exists.
#[derive(Debug)]
pub enum CliError {
    Io(String),
    Schema { path: String, message: String },
    Lib(tropkern::Error),
}

impl From<tropkern::Error> for CliError {
    fn from(e: tropkern::Error) -> Self {
        CliError::Lib(e)
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub struct Ctx {
    pub seed: u64,
    pub tol: f64,
}

pub fn parse<T: DeserializeOwned>(text: &str) -> CliResult<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| CliError::Schema {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })
}

fn read_input(path: &Option<PathBuf>) -> CliResult<String> {
    let mut text = String::new();
    match path {
        Some(p) => text = fs::read_to_string(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?,
        None => {
            std::io::stdin().read_to_string(&mut text).map_err(|e| CliError::Io(format!("stdin: {e}")))?;
        }
    }
    Ok(text)
}

fn run(cli: &Cli) -> CliResult<Artifacts> {
    let text = read_input(&cli.input)?;
    let ctx = Ctx { seed: cli.seed, tol: cli.tol };
    match cli.command {
        Command::CheckTpsd => commands::check_tpsd(&text, &ctx),
        Command::Factorize => commands::factorize(&text, &ctx),
        Command::Conjugate => commands::conjugate(&text, &ctx),
        Command::Membership => commands::membership(&text, &ctx),
        Command::Funk => commands::funk(&text, &ctx),
        Command::CgKernel => commands::cg_kernel(&text, &ctx),
        Command::Regularity => commands::regularity(&text, &ctx),
        Command::Interpolate => commands::interpolate(&text, &ctx),
        Command::Regress => commands::regress(&text, &ctx),
        Command::Maupertuis => commands::maupertuis(&text, &ctx),
        Command::ValueFunction => commands::value_function(&text, &ctx),
        Command::InvertStoppingCost => commands::invert_stopping_cost(&text, &ctx),
        Command::InvertTerminalCost => commands::invert_terminal_cost(&text, &ctx),
    }
}

fn write_text(path: &Option<PathBuf>, text: &str) -> std::io::Result<()> {
    match path {
        Some(p) => fs::write(p, format!("{text}\n")),
        None => {
            let mut out = std::io::stdout().lock();
            match writeln!(out, "{text}") {
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
                r => r,
            }
        }
    }
}

fn csv_path(cli: &Cli) -> Option<PathBuf> {
    cli.csv.clone().or_else(|| cli.output.as_ref().map(|p| p.with_extension("csv")))
}

fn emit(cli: &Cli, art: &Artifacts) -> std::io::Result<()> {
    let text = serde_json::to_string_pretty(&art.json).expect("JSON values always serialize");
    write_text(&cli.output, &text)?;
    if let (Some(table), Some(path)) = (&art.csv, csv_path(cli)) {
        write_csv(table, &path)?;
    }
    Ok(())
}

fn write_csv(table: &Table, path: &PathBuf) -> std::io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(&table.header)?;
    for row in &table.rows {
        w.write_record(row)?;
    }
    w.flush()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if !(cli.tol >= 0.0 && cli.tol.is_finite()) {
        eprintln!("{}", json!({"error": "schema", "field": "--tol", "message": "tolerance must be finite and nonnegative"}));
        return ExitCode::from(2);
    }
    match run(&cli) {
        Ok(art) => match emit(&cli, &art) {
            Ok(()) => ExitCode::from(if art.diagnosis { 1 } else { 0 }),
            Err(e) => {
                eprintln!("{}", json!({"error": "io", "message": e.to_string()}));
                ExitCode::from(2)
            }
        },
        Err(CliError::Lib(e @ (tropkern::Error::Precondition(_) | tropkern::Error::Size(_)))) => {
            let kind = if matches!(e, tropkern::Error::Size(_)) { "size" } else { "precondition" };
            let art = Artifacts::diagnosis(json!({"error": kind, "message": e.to_string()}));
            match emit(&cli, &art) {
                Ok(()) => ExitCode::from(1),
                Err(io) => {
                    eprintln!("{}", json!({"error": "io", "message": io.to_string()}));
                    ExitCode::from(2)
                }
            }
        }
        Err(CliError::Lib(e)) => {
            eprintln!("{}", json!({"error": "input", "message": e.to_string()}));
            ExitCode::from(2)
        }
        Err(CliError::Schema { path, message }) => {
            eprintln!("{}", json!({"error": "schema", "field": path, "message": message}));
            ExitCode::from(2)
        }
        Err(CliError::Io(message)) => {
            eprintln!("{}", json!({"error": "io", "message": message}));
            ExitCode::from(2)
        }
    }
}
