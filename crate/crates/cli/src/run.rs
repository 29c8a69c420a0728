use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use efce::deviations::DeviationRecord;
use efce::forest::InfoSetForest;
use efce::games::grid::build_grid_game;
use efce::oracle::Oracle;
use efce::sampler::Profile;
use efce::solver::{
    iteration_bound, moderator_sample, scenario_sample, solve, write_convergence_csv, EquilibriumCertificate,
};
use efce::trees::build_deviation_tree;
use efce::{reduce, Error, SuccinctGame};
use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Mode, RunConfig};
use crate::error::{CliError, CliResult, IoContext};
use crate::games::{with_game, BuiltGame};
use crate::output;

/// Largest explored tree accepted when expanding certificate suggestions.
const FOREST_CAP: usize = 10_000_000;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SeedOutcome {
    pub seed: u64,
    pub converged: bool,
    pub rounds: usize,
    pub initial_r_star: f64,
    pub r_star: f64,
    pub effective_epsilon: f64,
    pub expected_utilities: Vec<f64>,
    /// Exact regret of the returned distribution, when the game is small
    /// enough for the oracle.
    pub oracle_max_regret: Option<f64>,
    pub wall_ms: u64,
    pub peak_mem_bytes: u64,
    pub dir: PathBuf,
    /// `(round, r*)` per round.
    #[serde(skip)]
    pub series: Vec<(usize, f64)>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BenchRow {
    pub side: usize,
    pub gamma: u64,
    pub payoff_seed: u64,
    pub converged: bool,
    pub rounds: usize,
    pub initial_r_star: f64,
    pub r_star: f64,
    pub wall_ms: u64,
    pub peak_mem_bytes: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Verification {
    pub game: String,
    /// Exact over all causal deviations and scenarios; otherwise measured by
    /// the deviation tree against the certificate's scenario sample.
    pub exact: bool,
    pub max_regret: f64,
    pub epsilon: f64,
    pub is_epsilon_efce: bool,
    pub worst: DeviationRecord,
    pub certificate_r_star: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OracleOutcome {
    pub updates: usize,
    pub final_max_regret: f64,
    pub iteration_bound: u64,
    pub expected_utilities: Vec<f64>,
    pub profiles: usize,
    pub deviations: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Suggestion {
    pub draw: usize,
    /// `(player, information set, action)` over the reduced profile.
    pub actions: Vec<(usize, u64, usize)>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunReport {
    pub mode: Mode,
    pub game: String,
    pub seeds: Vec<SeedOutcome>,
    pub bench: Vec<BenchRow>,
    /// Log-log slope of wall time against Γ over the bench rows.
    pub bench_time_slope: Option<f64>,
    pub bench_memory_slope: Option<f64>,
    pub verification: Option<Verification>,
    pub oracle: Option<OracleOutcome>,
    pub suggestions: Vec<Suggestion>,
}

impl RunReport {
    fn empty(mode: Mode, game: String) -> Self {
        Self {
            mode,
            game,
            seeds: Vec::new(),
            bench: Vec::new(),
            bench_time_slope: None,
            bench_memory_slope: None,
            verification: None,
            oracle: None,
            suggestions: Vec::new(),
        }
    }
}

/// Executes one mode. Structured text meant for the user (verification
/// reports, suggestion streams) goes to `stdout`; files go under
/// `config.out`.
pub fn run(config: &RunConfig, mode: Mode, stdout: &mut dyn Write) -> CliResult<RunReport> {
    config.validate(mode)?;
    let report = match mode {
        Mode::Solve => run_solve(config)?,
        Mode::Verify => run_verify(config, stdout)?,
        Mode::Oracle => run_oracle(config)?,
        Mode::Bench => run_bench(config)?,
        Mode::Moderate => run_moderate(config, stdout)?,
    };
    if mode != Mode::Moderate {
        output::write_json(&config.out.join("report.json"), &report)?;
    }
    Ok(report)
}

/// Oracle for `game` unless it is too large to enumerate.
fn try_oracle<G: SuccinctGame + ?Sized>(game: &G) -> CliResult<Option<Oracle<'_, G>>> {
    match Oracle::new(game) {
        Ok(o) => Ok(Some(o)),
        Err(Error::TooLarge { .. }) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

fn run_solve(config: &RunConfig) -> CliResult<RunReport> {
    let game = BuiltGame::build(&config.game)?;
    let seeds = config.seed_list();
    let outcomes = with_game!(&game, g => {
        let oracle = if config.verify_with_oracle { try_oracle(g)? } else { None };
        seeds
            .par_iter()
            .map(|&seed| solve_seed(g, oracle.as_ref(), config, seed))
            .collect::<CliResult<Vec<_>>>()?
    });
    let plots = config.out.join("plots");
    output::write_regret_series(&plots.join("regret.csv"), &outcomes)?;
    output::write_regret_fits(&plots.join("regret_fit.csv"), &outcomes)?;
    output::write_payoffs(&plots.join("payoffs.csv"), &outcomes, &config.solver.w)?;
    let name = with_game!(&game, g => g.name());
    let mut report = RunReport::empty(Mode::Solve, name);
    report.seeds = outcomes;
    Ok(report)
}

fn solve_seed<G: SuccinctGame>(
    game: &G,
    oracle: Option<&Oracle<'_, G>>,
    config: &RunConfig,
    seed: u64,
) -> CliResult<SeedOutcome> {
    let mut solver = config.solver.clone();
    solver.seed = seed;
    let sol = solve::<f64, _>(game, &solver)?;
    let cert = &sol.certificate;
    let dir = config.out.join("runs").join(seed.to_string());
    std::fs::create_dir_all(&dir).at(&dir)?;
    let csv = dir.join("convergence.csv");
    let mut file = std::io::BufWriter::new(std::fs::File::create(&csv).at(&csv)?);
    write_convergence_csv(&sol.history, &mut file).at(&csv)?;
    file.flush().at(&csv)?;
    output::write_json(&dir.join("certificate.json"), cert)?;

    let oracle_max_regret = match oracle {
        Some(o) => {
            let (profiles, weights) = cert.distribution();
            let refs: Vec<&Profile> = profiles.iter().collect();
            let dist = o.from_weighted_profiles(&refs, &weights)?;
            Some(o.exact_best_deviation(&dist)?.max_regret)
        }
        None => None,
    };
    let outcome = SeedOutcome {
        seed,
        converged: cert.is_converged(),
        rounds: cert.rounds,
        initial_r_star: cert.initial_r_star,
        r_star: cert.r_star,
        effective_epsilon: cert.effective_epsilon,
        expected_utilities: cert.expected_utilities.clone(),
        oracle_max_regret,
        wall_ms: cert.wall_ms,
        peak_mem_bytes: cert.peak_mem_bytes,
        dir: dir.clone(),
        series: sol.history.iter().map(|h| (h.round, h.r_star)).collect(),
    };
    info!(
        "seed {seed}: {} after {} rounds, r* {:.3e}",
        if outcome.converged { "converged" } else { "stopped" },
        outcome.rounds,
        outcome.r_star
    );
    output::write_json(&dir.join("report.json"), &outcome)?;
    Ok(outcome)
}

fn read_certificate(config: &RunConfig) -> CliResult<EquilibriumCertificate> {
    let path = config.certificate.as_ref().expect("validated");
    let text = std::fs::read_to_string(path).at(path)?;
    Ok(serde_json::from_str(&text)?)
}

fn run_verify(config: &RunConfig, stdout: &mut dyn Write) -> CliResult<RunReport> {
    let cert = read_certificate(config)?;
    let game = BuiltGame::from_certificate(&cert)?;
    let epsilon = cert.effective_epsilon;
    let (profiles, weights) = cert.distribution();
    let verification = with_game!(&game, g => {
        match try_oracle(g)? {
            Some(o) => {
                let refs: Vec<&Profile> = profiles.iter().collect();
                let dist = o.from_weighted_profiles(&refs, &weights)?;
                let r = o.verify_efce(&dist, epsilon)?;
                Verification {
                    game: g.name(),
                    exact: true,
                    max_regret: r.max_regret,
                    epsilon,
                    is_epsilon_efce: r.max_regret <= epsilon,
                    worst: r.worst.to_record(),
                    certificate_r_star: cert.r_star,
                }
            }
            None => {
                let scenarios = scenario_sample(g, &cert.config)?;
                let tree = build_deviation_tree::<f64, _, _>(g, &profiles, &weights, &scenarios, cert.config.node_budget)?;
                let best = tree.best_deviation(None)?;
                Verification {
                    game: g.name(),
                    exact: false,
                    max_regret: best.empirical_regret,
                    epsilon,
                    is_epsilon_efce: best.empirical_regret <= epsilon,
                    worst: best.deviation.to_record(),
                    certificate_r_star: cert.r_star,
                }
            }
        }
    });
    serde_json::to_writer_pretty(&mut *stdout, &verification)?;
    writeln!(stdout).map_err(|e| CliError::Io {
        path: "stdout".into(),
        source: e,
    })?;
    output::write_json(&config.out.join("verification.json"), &verification)?;
    let mut report = RunReport::empty(Mode::Verify, verification.game.clone());
    report.verification = Some(verification);
    Ok(report)
}

fn run_oracle(config: &RunConfig) -> CliResult<RunReport> {
    let game = BuiltGame::build(&config.game)?;
    let (name, outcome, trajectory) = with_game!(&game, g => {
        let mut o = Oracle::new(g)?;
        let w = if config.solver.w.is_empty() { vec![0.0; g.num_players()] } else { config.solver.w.clone() };
        let epsilon = config.solver.effective_epsilon(g.game_type().gamma);
        let boost = o.exact_boost(&w, epsilon, config.solver.max_rounds)?;
        let bound = iteration_bound(epsilon, g.game_type().r_max, (o.profiles.len() as f64).ln())?;
        let outcome = OracleOutcome {
            updates: boost.updates,
            final_max_regret: boost.trajectory.last().map_or(f64::NAN, |r| r.max_regret),
            iteration_bound: bound.rounds,
            expected_utilities: boost.distribution.expected_utilities.clone(),
            profiles: o.profiles.len(),
            deviations: o.deviations.len(),
        };
        (g.name(), outcome, boost.trajectory)
    });
    output::write_trajectory(&config.out.join("oracle").join("trajectory.csv"), &trajectory)?;
    let mut report = RunReport::empty(Mode::Oracle, name);
    report.oracle = Some(outcome);
    Ok(report)
}

/// Runs sequentially so that wall times are not inflated by sharing cores.
fn run_bench(config: &RunConfig) -> CliResult<RunReport> {
    let mut rows = Vec::new();
    for &side in &config.bench.sides {
        for k in 0..config.bench.games as u64 {
            let payoff_seed = config.first_seed + k;
            let game = build_grid_game(efce::games::grid::GridGameSpec { side, payoff_seed })?;
            let mut solver = config.solver.clone();
            solver.seed = payoff_seed;
            let started = Instant::now();
            let sol = solve::<f64, _>(&game, &solver)?;
            let wall_ms = if solver.telemetry { started.elapsed().as_millis() as u64 } else { 0 };
            let cert = &sol.certificate;
            if !cert.is_converged() && solver.stop_relative.is_some_and(|rel| cert.r_star > rel * cert.initial_r_star) {
                warn!("grid L={side} game {payoff_seed}: stopped at r* {:.3e}", cert.r_star);
            }
            rows.push(BenchRow {
                side,
                gamma: game.game_type().gamma,
                payoff_seed,
                converged: cert.is_converged(),
                rounds: cert.rounds,
                initial_r_star: cert.initial_r_star,
                r_star: cert.r_star,
                wall_ms,
                peak_mem_bytes: cert.peak_mem_bytes,
            });
        }
    }
    let time: Vec<(f64, f64)> = rows.iter().map(|r| (r.gamma as f64, r.wall_ms as f64)).collect();
    let memory: Vec<(f64, f64)> = rows.iter().map(|r| (r.gamma as f64, r.peak_mem_bytes as f64)).collect();
    let time_slope = output::loglog_slope(&time);
    let memory_slope = output::loglog_slope(&memory);
    let plots = config.out.join("plots");
    output::write_bench(&plots.join("bench.csv"), &rows)?;
    output::write_bench_fits(
        &plots.join("bench_fit.csv"),
        &[("wall_ms", time_slope, rows.len()), ("peak_mem_bytes", memory_slope, rows.len())],
    )?;
    let mut report = RunReport::empty(Mode::Bench, "grid".into());
    report.bench = rows;
    report.bench_time_slope = time_slope;
    report.bench_memory_slope = memory_slope;
    Ok(report)
}

fn run_moderate(config: &RunConfig, stdout: &mut dyn Write) -> CliResult<RunReport> {
    let cert = read_certificate(config)?;
    let game = BuiltGame::from_certificate(&cert)?;
    let suggestions = with_game!(&game, g => {
        let forest = InfoSetForest::explore(g, FOREST_CAP)?;
        let mut out = Vec::with_capacity(config.count);
        for draw in 0..config.count {
            let profile = moderator_sample(&cert, config.first_seed + draw as u64)?;
            let full = profile.materialize(&forest)?;
            let mut actions = Vec::new();
            for s in &full.strategies {
                for (&i, &a) in &reduce(g, s)?.choices {
                    actions.push((s.owner, i, a));
                }
            }
            out.push(Suggestion { draw, actions });
        }
        out
    });
    for s in &suggestions {
        serde_json::to_writer(&mut *stdout, s)?;
        writeln!(stdout).map_err(|e| CliError::Io {
            path: "stdout".into(),
            source: e,
        })?;
    }
    let mut report = RunReport::empty(Mode::Moderate, cert.game.clone());
    report.suggestions = suggestions;
    Ok(report)
}
