use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lorentz_cli::{run, verify, write_orbit_csv, AnalysisConfig, CliError, Report};
use lorentz_core::norm::lorentz_norm;
use lorentz_core::operators::orbit_trace;
use serde::Serialize;

/// Exit codes.
const SCHEMA: u8 = 2;
const PRECONDITION: u8 = 3;
const MISMATCH: u8 = 4;

#[derive(Parser)]
#[command(name = "lorentz-dyn", version, about = "Chaos and expansivity of composition operators on Lorentz spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the analyses of a config and write the report.
    Analyze {
        config: PathBuf,
        /// Report path; overrides `outputs.report`. Stdout when neither is set.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Trace the orbit of `inputs.vector` and write one CSV per index.
    Orbit {
        config: PathBuf,
        /// Directory for the CSV files; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the norm of `inputs.vector` for every index.
    Norm { config: PathBuf },
    /// Replay every witness in a report.
    Verify { report: PathBuf },
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Schema(format!("{}: {e}", path.display())))
}

fn write_text(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::io(p, e)),
        None => io::stdout().write_all(text.as_bytes()).map_err(|e| CliError::Io(e.to_string())),
    }
}

fn exit_code(e: &CliError) -> u8 {
    match e {
        CliError::Schema(_) => SCHEMA,
        CliError::Core(_) | CliError::EmptyTrace => PRECONDITION,
        CliError::Io(_) | CliError::EmptyPath => 1,
    }
}

fn analyze(config: &Path, out: Option<PathBuf>) -> Result<u8, CliError> {
    let config = AnalysisConfig::from_json(&read(config)?)?;
    let report = run(&config)?;
    write_text(out.or(config.outputs.report.clone()).as_deref(), &report.to_json())?;
    let failed: Vec<_> = report.failures().collect();
    for f in &failed {
        if let lorentz_cli::Outcome::Error { message } = &f.outcome {
            eprintln!("{}: {message}", serde_json::to_string(&f.analysis).unwrap_or_default());
        }
    }
    Ok(if failed.is_empty() { 0 } else { PRECONDITION })
}

fn orbit(config: &Path, out: Option<PathBuf>) -> Result<u8, CliError> {
    let config = AnalysisConfig::from_json(&read(config)?)?;
    let setup = config.setup()?;
    let g = config.vector(&setup.space)?;
    let dir = out.or(config.outputs.orbit_dir.clone());
    for (k, idx) in config.indices.iter().enumerate() {
        let trace = orbit_trace(&setup.operator, &g, idx, config.horizon)?;
        match &dir {
            Some(d) => lorentz_cli::export_orbit_csv(&trace, &d.join(format!("orbit_{k}.csv")))?,
            None => write_orbit_csv(&trace, io::stdout().lock())?,
        }
    }
    Ok(0)
}

#[derive(Serialize)]
struct NormLine<'a> {
    index: &'a lorentz_core::LorentzIndex,
    norm: lorentz_core::CertifiedReal,
}

fn norm(config: &Path) -> Result<u8, CliError> {
    let config = AnalysisConfig::from_json(&read(config)?)?;
    let setup = config.setup()?;
    let g = config.vector(&setup.space)?;
    let mut text = String::new();
    for idx in &config.indices {
        let line = NormLine { index: idx, norm: lorentz_norm(&setup.space, &g, idx)? };
        text += &serde_json::to_string(&line).expect("norms serialize");
        text.push('\n');
    }
    write_text(None, &text)?;
    Ok(0)
}

fn verify_report(path: &Path) -> Result<u8, CliError> {
    let report = Report::from_json(&read(path)?)?;
    let mismatches = verify(&report)?;
    for m in &mismatches {
        eprintln!("mismatch: {m}");
    }
    if mismatches.is_empty() {
        println!("ok: {} results replayed", report.results.len());
        Ok(0)
    } else {
        Ok(MISMATCH)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Analyze { config, out } => analyze(&config, out),
        Command::Orbit { config, out } => orbit(&config, out),
        Command::Norm { config } => norm(&config),
        Command::Verify { report } => verify_report(&report),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
