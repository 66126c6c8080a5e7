//! Batch driver for the `spleak` binary: instance loading, the five
//! commands, and CSV / SVG / JSON emission.
//!
//! Exit codes: 0 success, 1 verification failure, 2 input error,
//! 3 solver non-convergence.

pub mod args;
pub mod commands;
pub mod svg;

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sparse_leakage::{load_joint, random_instance, Error, JointDistribution};
use thiserror::Error as ThisError;

pub use args::{Cli, Command, Common};

/// Largest alphabet on which the exact branch runs without `--sdp-only`.
pub const EXACT_GUARD_K: usize = 14;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFICATION: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NONCONVERGENCE: i32 = 3;

#[derive(Debug, ThisError)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(Error::NoConvergence { .. } | Error::NoConvergedPoints) => {
                EXIT_NONCONVERGENCE
            }
            CliError::Core(Error::Internal(_)) => EXIT_VERIFICATION,
            _ => EXIT_INPUT,
        }
    }
}

/// Provenance carried into every output file.
#[derive(Clone, Debug, Serialize)]
pub struct InstanceMeta {
    pub k: usize,
    pub seed: Option<u64>,
    pub label: Option<String>,
    pub source: String,
}

pub fn load_instance(common: &Common) -> Result<(JointDistribution, InstanceMeta), CliError> {
    let (dist, source) = match (&common.instance, &common.random) {
        (Some(path), _) => {
            let file = fs::File::open(path).map_err(|source| CliError::Io {
                path: path.clone(),
                source,
            })?;
            (load_joint(std::io::BufReader::new(file))?, path.display().to_string())
        }
        (None, Some(r)) => {
            let k = usize::try_from(r[0]).map_err(|_| CliError::Usage(format!("bad K {}", r[0])))?;
            (random_instance(k, r[1])?, format!("random:{}:{}", r[0], r[1]))
        }
        (None, None) => return Err(CliError::Usage("one of --instance or --random is required".into())),
    };
    let meta = InstanceMeta {
        k: dist.k(),
        seed: dist.seed,
        label: dist.label.clone(),
        source,
    };
    Ok((dist, meta))
}

pub fn check_exact_guard(k: usize, sdp_only: bool) -> Result<(), CliError> {
    if !sdp_only && k > EXACT_GUARD_K {
        return Err(CliError::Usage(format!(
            "K = {k} exceeds the exact-enumeration guard of {EXACT_GUARD_K}; rerun with --sdp-only"
        )));
    }
    Ok(())
}

/// Fixed twelve-decimal rendering without negative zero.
pub fn fmt_num(v: f64) -> String {
    let s = format!("{v:.12}");
    match s.strip_prefix('-') {
        Some(rest) if rest.bytes().all(|b| b == b'0' || b == b'.') => rest.to_string(),
        _ => s,
    }
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

pub fn to_json<S: Serialize>(value: &S) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable report");
    s.push('\n');
    s
}

/// Runs one parsed command and returns the process exit code.
pub fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Info(c) => commands::info(&c),
        Command::Pareto(c) => commands::pareto(&c),
        Command::Mechanism { common, n_budget } => commands::mechanism(&common, n_budget),
        Command::Verify(c) => commands::verify(&c),
        Command::Gen { random, out, label } => commands::gen(&random, out.as_deref(), label),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn negative_zero_is_stripped() {
        assert_eq!(fmt_num(-0.0), "0.000000000000");
        assert_eq!(fmt_num(-1e-15), "0.000000000000");
        assert_eq!(fmt_num(-0.5), "-0.500000000000");
        assert_eq!(fmt_num(1.0), "1.000000000000");
    }

    #[test]
    fn guard() {
        assert!(check_exact_guard(14, false).is_ok());
        assert!(check_exact_guard(15, false).is_err());
        assert!(check_exact_guard(15, true).is_ok());
    }
}
