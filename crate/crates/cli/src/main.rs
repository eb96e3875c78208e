use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cvq_cli::{config, emit, run_with_threads, CliError, OutputFormat};

#[derive(Parser)]
#[command(name = "cvq", version, about = "Transfer a CV mode into qubits and back: experiment runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        config: PathBuf,
        /// Override a config key; repeatable, later ones win.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        #[arg(long, value_parser = ["csv", "json"])]
        format: Option<String>,
        /// Write the table here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
    },
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let Command::Run {
        config: path,
        set,
        format,
        out,
        threads,
    } = cli.command;
    let mut c = config::ExperimentConfig::load(&path, &set)?;
    if let Some(f) = format {
        c.format = f.parse::<OutputFormat>().map_err(CliError::Config)?;
    }
    if out.is_some() {
        c.out = out;
    }
    let report = run_with_threads(&c, threads)?;
    emit(&c, &report, c.out.as_deref())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
