//! Command-line sweeps for collective Ramsey interferometry.

mod commands;
mod config;
mod table;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::RunConfig;
use crate::table::{Format, Table};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(#[from] collective_ramsey::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "collective-ramsey",
    version,
    about = "Ramsey sensitivity sweeps for coupled emitter ensembles"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file; defaults to `[output] path`, then stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Emit unnormalized rates, times and sensitivities.
    #[arg(long, global = true)]
    raw: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Pair decay and shift kernels over a separation grid.
    Couplings,
    /// Optimal sensitivity per interrogation time and phase index.
    Sensitivity,
    /// Two-atom closed forms against the numerical pipeline.
    TwoAtom,
    /// Hamiltonian eigenstates, effective decay rates and populations.
    DickeSpectrum,
}

fn run(cli: &Cli) -> Result<Table, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config <path> is required".into()))?;
    let cfg = RunConfig::load(path)?;
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let table = match cli.command {
        Command::Couplings => commands::couplings(&cfg)?,
        Command::Sensitivity => commands::sensitivity_sweep(&cfg, cli.raw)?,
        Command::TwoAtom => commands::two_atom(&cfg, cli.raw)?,
        Command::DickeSpectrum => commands::dicke_spectrum(&cfg, cli.raw)?,
    };
    let out = cli.out.clone().or(cfg.output.path.clone());
    match out {
        Some(p) => {
            let mut w = BufWriter::new(File::create(&p)?);
            table.write(cli.format, &mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            table.write(cli.format, &mut lock)?;
        }
    }
    Ok(table)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(table) if table.is_failed() => {
            eprintln!("error: sweep stopped early; partial results written");
            ExitCode::from(3)
        }
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
