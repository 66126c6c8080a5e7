use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use sparse_leakage::{SolverOptions, TauGrid};

use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "spleak", version, about = "Sparse point-wise leakage mechanism design")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the instance summary and its saturation thresholds.
    Info(Common),
    /// Exact Pareto curve against the rounded SDP envelope.
    Pareto(Common),
    /// Build the binary uniform mechanism for one budget.
    Mechanism {
        #[command(flatten)]
        common: Common,
        /// Sparsity budget N.
        #[arg(long = "n", short = 'n')]
        n_budget: usize,
    },
    /// Check the saturation and tightness clauses plus the invariant suite.
    Verify(Common),
    /// Write a random instance file.
    Gen {
        #[arg(long, num_args = 2, value_names = ["K", "SEED"], required = true)]
        random: Vec<u64>,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        label: Option<String>,
    },
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// JSON instance file.
    #[arg(long, conflicts_with = "random", required_unless_present = "random")]
    pub instance: Option<PathBuf>,
    /// Seeded random instance of size K.
    #[arg(long, num_args = 2, value_names = ["K", "SEED"])]
    pub random: Option<Vec<u64>>,
    /// Budgets as `A..B` (inclusive); defaults to `1..K`.
    #[arg(long)]
    pub n_range: Option<NRange>,
    /// `default`, `lin:LO:HI:COUNT`, or a comma-separated list.
    #[arg(long, default_value = "default")]
    pub tau_grid: String,
    /// A number or `auto`.
    #[arg(long, default_value = "auto")]
    pub epsilon: EpsilonArg,
    /// Re-optimize rounded directions on their own support.
    #[arg(long)]
    pub polish: bool,
    /// Skip exact enumeration.
    #[arg(long)]
    pub sdp_only: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Comma-separated subset of csv,svg,json.
    #[arg(long, default_value = "csv,svg,json")]
    pub formats: Formats,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
}

impl Common {
    pub fn solver_options(&self) -> Result<SolverOptions, CliError> {
        let mut opts = SolverOptions {
            tau_grid: TauGrid::from_str(&self.tau_grid)?,
            ..SolverOptions::default()
        };
        if let Some(t) = self.tol {
            opts.tolerance = t;
        }
        if let Some(m) = self.max_iters {
            opts.max_iterations = m;
        }
        opts.validate()?;
        Ok(opts)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NRange {
    pub lo: usize,
    pub hi: usize,
}

impl FromStr for NRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (a, b) = s
            .split_once("..")
            .ok_or_else(|| format!("expected A..B, got {s:?}"))?;
        let lo: usize = a.trim().parse().map_err(|_| format!("bad lower bound in {s:?}"))?;
        let hi: usize = b.trim().parse().map_err(|_| format!("bad upper bound in {s:?}"))?;
        if lo == 0 || hi < lo {
            return Err(format!("empty or zero-based range {s:?}"));
        }
        Ok(NRange { lo, hi })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EpsilonArg {
    Auto,
    Value(f64),
}

impl FromStr for EpsilonArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "auto" {
            return Ok(EpsilonArg::Auto);
        }
        let v: f64 = s.parse().map_err(|_| format!("expected a number or auto, got {s:?}"))?;
        if !(v >= 0.0 && v.is_finite()) {
            return Err(format!("epsilon must be finite and nonnegative, got {v}"));
        }
        Ok(EpsilonArg::Value(v))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Formats {
    pub csv: bool,
    pub svg: bool,
    pub json: bool,
}

impl FromStr for Formats {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let mut f = Formats {
            csv: false,
            svg: false,
            json: false,
        };
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            match part {
                "csv" => f.csv = true,
                "svg" => f.svg = true,
                "json" => f.json = true,
                other => return Err(format!("unknown format {other:?}")),
            }
        }
        Ok(f)
    }
}
