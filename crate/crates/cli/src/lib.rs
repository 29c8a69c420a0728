//! Experiment runner around the `efce` solver: configuration, the five
//! subcommands, per-seed result files and plot-ready CSV data.
//!
//! Output layout under the configured directory:
//!
//! - `runs/<seed>/convergence.csv`, `certificate.json`, `report.json`
//! - `plots/regret.csv`, `plots/regret_fit.csv`, `plots/payoffs.csv`
//! - `plots/bench.csv`, `plots/bench_fit.csv` (bench)
//! - `oracle/trajectory.csv` (oracle)
//! - `report.json`

pub mod config;
pub mod error;
pub mod games;
pub mod output;
pub mod run;

pub use config::{BenchConfig, Cli, Command, Flags, GameKind, GameSelector, Mode, RunConfig};
pub use error::{CliError, CliResult};
pub use run::{run, BenchRow, OracleOutcome, RunReport, SeedOutcome, Suggestion, Verification};
