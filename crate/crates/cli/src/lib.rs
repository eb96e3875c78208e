//! Experiment runner for the CV-to-qubit transfer simulator.
//!
//! A run reads a flat `key = value` config, evaluates every cell of the
//! requested experiment and writes one table (CSV or JSON) plus optional
//! text dumps of Wigner grids and state vectors.

use std::io::Write;
use std::path::{Path, PathBuf};

pub mod config;
pub mod dump;
pub mod experiments;
pub mod output;

pub use config::{ExperimentConfig, OutputFormat};
pub use experiments::{run, Report};
pub use output::ResultRow;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("writing table: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Core(#[from] cvq_core::Error),
    #[error("thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

impl CliError {
    /// 2 for bad configs, 3 for numerical failures, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(e) if e.is_convergence() || matches!(e, cvq_core::Error::Truncation { .. }) => 3,
            CliError::Core(_) => 2,
            CliError::Io { .. } | CliError::Csv(_) | CliError::Pool(_) => 1,
        }
    }
}

/// Runs `config` on a pool of `threads` workers (rayon's default when
/// `None`).
pub fn run_with_threads(config: &ExperimentConfig, threads: Option<usize>) -> Result<Report, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::Config("--threads: must be positive".into()));
        }
        builder = builder.num_threads(n);
    }
    builder.build()?.install(|| run(config))
}

/// Serialises the table in the configured format.
pub fn render(rows: &[ResultRow], format: OutputFormat) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    match format {
        OutputFormat::Csv => output::write_csv(rows, &mut buf)?,
        OutputFormat::Json => output::write_json(rows, &mut buf).map_err(|source| CliError::Io {
            path: PathBuf::from("<buffer>"),
            source,
        })?,
    }
    Ok(buf)
}

/// Writes the table to `out` (stdout when `None`) and dumps to the config's
/// `dump_dir`.
pub fn emit(config: &ExperimentConfig, report: &Report, out: Option<&Path>) -> Result<(), CliError> {
    let bytes = render(&report.rows, config.format)?;
    match out {
        Some(path) => std::fs::write(path, &bytes).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(&bytes).map_err(|source| CliError::Io {
                path: PathBuf::from("<stdout>"),
                source,
            })?;
        }
    }
    if let Some(dir) = &config.dump_dir {
        dump::write_dumps(dir, &report.dumps)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Config("x".into()).exit_code(), 2);
        let conv = cvq_core::Error::Quadrature {
            achieved: 1.0,
            tolerance: 1e-10,
        };
        assert_eq!(CliError::from(conv).exit_code(), 3);
        let trunc = cvq_core::Error::Truncation {
            leakage: 1.0,
            threshold: 1e-6,
        };
        assert_eq!(CliError::from(trunc).exit_code(), 3);
        let io = CliError::Io {
            path: "x".into(),
            source: std::io::Error::other("boom"),
        };
        assert_eq!(io.exit_code(), 1);
        assert!(io.to_string().starts_with("x:"));
    }

    #[test]
    fn zero_threads_is_a_config_error() {
        let c = ExperimentConfig::defaults(config::Experiment::SweepLambda);
        assert_eq!(run_with_threads(&c, Some(0)).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn json_render_is_an_array() {
        let bytes = render(&[ResultRow::new("cat-demo", "cat:2")], OutputFormat::Json).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
        assert_eq!(v.as_array().unwrap().len(), 1);
        assert_eq!(v[0]["input"], "cat:2");
    }
}
