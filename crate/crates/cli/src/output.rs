//! Plot-ready CSV files. Headers are part of the interface and pinned by tests.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{CliResult, IoContext};
use crate::run::{BenchRow, SeedOutcome};

pub const REGRET_HEADER: &str = "seed,round,r_star";
pub const REGRET_FIT_HEADER: &str = "seed,rounds,fit_from_round,slope";
pub const PAYOFF_HEADER: &str = "seed,max_entropy,w,player,payoff";
pub const BENCH_HEADER: &str = "side,gamma,payoff_seed,converged,rounds,initial_r_star,r_star,wall_ms,peak_mem_bytes";
pub const BENCH_FIT_HEADER: &str = "quantity,slope,points";
pub const TRAJECTORY_HEADER: &str = "round,max_regret,log_partition";

/// Least-squares slope of `ln y` against `ln x` over points with both
/// coordinates positive. `None` below two usable points or without spread
/// in `x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if logs.len() < 2 {
        return None;
    }
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

/// Slope of the regret series over its second half.
pub fn late_phase_slope(series: &[(usize, f64)]) -> (usize, Option<f64>) {
    let rounds = series.last().map_or(0, |r| r.0);
    let start = (rounds / 2).max(1);
    let points: Vec<(f64, f64)> = series
        .iter()
        .filter(|(t, _)| *t >= start)
        .map(|&(t, r)| (t as f64, r))
        .collect();
    (start, loglog_slope(&points))
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).at(dir)?;
    }
    Ok(BufWriter::new(File::create(path).at(path)?))
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, |v| format!("{v:e}"))
}

pub fn write_regret_series(path: &Path, seeds: &[SeedOutcome]) -> CliResult<()> {
    let mut out = create(path)?;
    writeln!(out, "{REGRET_HEADER}").at(path)?;
    for s in seeds {
        for &(t, r) in &s.series {
            writeln!(out, "{},{t},{r:e}", s.seed).at(path)?;
        }
    }
    out.flush().at(path)
}

pub fn write_regret_fits(path: &Path, seeds: &[SeedOutcome]) -> CliResult<()> {
    let mut out = create(path)?;
    writeln!(out, "{REGRET_FIT_HEADER}").at(path)?;
    for s in seeds {
        let (start, slope) = late_phase_slope(&s.series);
        writeln!(out, "{},{},{start},{}", s.seed, s.rounds, opt(slope)).at(path)?;
    }
    out.flush().at(path)
}

/// One row per seed and player; `max_entropy` marks runs with `w = 0`.
pub fn write_payoffs(path: &Path, seeds: &[SeedOutcome], w: &[f64]) -> CliResult<()> {
    let mut out = create(path)?;
    writeln!(out, "{PAYOFF_HEADER}").at(path)?;
    let max_entropy = w.iter().all(|&x| x == 0.0);
    let w_text = w.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(";");
    for s in seeds {
        for (n, u) in s.expected_utilities.iter().enumerate() {
            writeln!(out, "{},{},{w_text},{n},{u:e}", s.seed, u8::from(max_entropy)).at(path)?;
        }
    }
    out.flush().at(path)
}

pub fn write_bench(path: &Path, rows: &[BenchRow]) -> CliResult<()> {
    let mut out = create(path)?;
    writeln!(out, "{BENCH_HEADER}").at(path)?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{:e},{:e},{},{}",
            r.side,
            r.gamma,
            r.payoff_seed,
            u8::from(r.converged),
            r.rounds,
            r.initial_r_star,
            r.r_star,
            r.wall_ms,
            r.peak_mem_bytes
        )
        .at(path)?;
    }
    out.flush().at(path)
}

pub fn write_bench_fits(path: &Path, fits: &[(&str, Option<f64>, usize)]) -> CliResult<()> {
    let mut out = create(path)?;
    writeln!(out, "{BENCH_FIT_HEADER}").at(path)?;
    for (name, slope, n) in fits {
        writeln!(out, "{name},{},{n}", opt(*slope)).at(path)?;
    }
    out.flush().at(path)
}

pub fn write_trajectory(path: &Path, rows: &[efce::oracle::BoostRound]) -> CliResult<()> {
    let mut out = create(path)?;
    writeln!(out, "{TRAJECTORY_HEADER}").at(path)?;
    for r in rows {
        writeln!(out, "{},{:e},{:e}", r.round, r.max_regret, r.log_partition).at(path)?;
    }
    out.flush().at(path)
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out).at(path)?;
    out.flush().at(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_a_power_law() {
        let pts: Vec<(f64, f64)> = (1..50).map(|t| (t as f64, 3.0 * (t as f64).powf(-1.5))).collect();
        assert!((loglog_slope(&pts).unwrap() + 1.5).abs() < 1e-12);
        assert_eq!(loglog_slope(&[(1.0, 1.0)]), None);
        assert_eq!(loglog_slope(&[(2.0, 1.0), (2.0, 3.0)]), None);
    }

    #[test]
    fn late_phase_starts_halfway() {
        let series: Vec<(usize, f64)> = (1..=40).map(|t| (t, 1.0 / t as f64)).collect();
        let (start, slope) = late_phase_slope(&series);
        assert_eq!(start, 20);
        assert!((slope.unwrap() + 1.0).abs() < 1e-12);
    }
}
