//! Dual coordinate descent for maximum-entropy approximate correlated
//! equilibria.
//!
//! Each round draws (or reweights) a profile sample from the current
//! exponential-family distribution, finds the causal deviation with the
//! largest empirical regret, and stops once that regret is below `2ε/3`.
//! Otherwise the deviation's dual weight grows by a basic update or a line
//! search step.

mod bounds;
mod certificate;
mod line_search;

use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use bounds::{basic_update, iteration_bound, sample_bounds, schedule_m, IterationBound, SampleBounds, Schedule};
pub use certificate::{moderator_sample, CertificateStatus, EquilibriumCertificate, LambdaEntry, ScenarioDescriptor, WeightedProfile};
pub use line_search::{line_search_delta, line_search_step, line_search_update, LineSearchConfig, LineStep};

use crate::deviations::DeviationSet;
use crate::efg::{enumerate_scenarios, sample_scenarios, ScenarioSample, SuccinctGame};
use crate::error::{Error, Result};
use crate::hash::hash2;
use crate::sampler::{draw_sample, Profile, SamplerConfig, WeightedSample};
use crate::scalar::Scalar;
use crate::trees::{build_deviation_tree, DEFAULT_NODE_BUDGET};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpsilonMode {
    /// Use ε as given.
    #[default]
    Raw,
    /// Divide ε by Γ, so that a player combining deviations at all of its
    /// triggers still gains at most the given ε.
    GammaScaled,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioMode {
    /// Exhaustive when the game reports few enough nature information sets,
    /// sampled otherwise.
    #[default]
    Auto,
    Exhaustive,
    Sampled,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub mode: ScenarioMode,
    /// Largest nature information set count for automatic exhaustive mode,
    /// and the cap on enumerated scenarios.
    pub exhaustive_cap: usize,
    /// Cap on the sampled scenario count.
    pub max_sampled: usize,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            mode: ScenarioMode::Auto,
            exhaustive_cap: 100_000,
            max_sampled: 10_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Target regret, in utility units.
    pub epsilon: f64,
    pub delta: f64,
    /// Payoff direction; empty means all zeros (maximum entropy).
    pub w: Vec<f64>,
    pub max_rounds: usize,
    pub line_search: LineSearchConfig,
    /// Draw a fresh sample after a step that left the weights unchanged
    /// (every sample point had the same regret on the updated coordinate).
    pub resample_when_uninformative: bool,
    /// Draw a fresh sample after any step whose minimizer lay beyond the
    /// line-search cap.
    pub resample_when_capped: bool,
    /// Draw a fresh sample when r* on the current sample has not reached a
    /// new low for this many rounds. A reused sample may admit no
    /// reweighting with small regret; then the weights settle while λ grows.
    pub stall_rounds: Option<usize>,
    pub schedule: Schedule,
    pub epsilon_mode: EpsilonMode,
    pub seed: u64,
    pub sampler: SamplerConfig,
    pub scenarios: ScenarioConfig,
    /// Size profile samples by the Hoeffding bound instead of the schedule.
    pub strict_bounds: bool,
    pub max_strict_sample: usize,
    /// Also stop once r* falls below this fraction of the first round's r*.
    pub stop_relative: Option<f64>,
    pub node_budget: usize,
    /// Record wall-clock time; when off the column is zero.
    pub telemetry: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-3,
            delta: 0.05,
            w: Vec::new(),
            max_rounds: 1000,
            line_search: LineSearchConfig::default(),
            resample_when_uninformative: true,
            resample_when_capped: false,
            stall_rounds: Some(20),
            schedule: Schedule::default(),
            epsilon_mode: EpsilonMode::Raw,
            seed: 0,
            sampler: SamplerConfig::default(),
            scenarios: ScenarioConfig::default(),
            strict_bounds: false,
            max_strict_sample: 100_000,
            stop_relative: None,
            node_budget: DEFAULT_NODE_BUDGET,
            telemetry: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self, num_players: usize) -> Result<()> {
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(Error::Config(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::Config(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        if !self.w.is_empty() && self.w.len() != num_players {
            return Err(Error::Config(format!(
                "w has {} entries but the game has {num_players} players",
                self.w.len()
            )));
        }
        if self.w.iter().any(|x| !x.is_finite()) {
            return Err(Error::Config("w must be finite".into()));
        }
        if !(self.line_search.cap_factor >= 1.0) {
            return Err(Error::Config(format!(
                "cap_factor must be at least 1, got {}",
                self.line_search.cap_factor
            )));
        }
        if self.max_rounds == 0 {
            return Err(Error::Config("max_rounds must be positive".into()));
        }
        if let Some(rel) = self.stop_relative {
            if !(rel > 0.0 && rel < 1.0) {
                return Err(Error::Config(format!("stop_relative must lie in (0, 1), got {rel}")));
            }
        }
        Ok(())
    }

    /// ε after applying the epsilon mode.
    pub fn effective_epsilon(&self, gamma: u64) -> f64 {
        match self.epsilon_mode {
            EpsilonMode::Raw => self.epsilon,
            EpsilonMode::GammaScaled => self.epsilon / gamma as f64,
        }
    }
}

/// One row of the convergence log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistoryRow {
    pub round: usize,
    pub r_star: f64,
    pub psi_size: usize,
    pub m_t: usize,
    pub ess: f64,
    pub lambda_l1: f64,
    pub wall_ms: u64,
    pub peak_mem_bytes: u64,
}

pub const CONVERGENCE_HEADER: &str = "round,r_star,psi_size,M_t,ess,lambda_l1,wall_ms,peak_mem_bytes";

pub fn write_convergence_csv<W: Write>(rows: &[HistoryRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{CONVERGENCE_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{:e},{},{},{},{},{},{}",
            r.round, r.r_star, r.psi_size, r.m_t, r.ess, r.lambda_l1, r.wall_ms, r.peak_mem_bytes
        )?;
    }
    Ok(())
}

/// Everything a finished run produces.
#[derive(Clone, Debug)]
pub struct Solution<S> {
    pub certificate: EquilibriumCertificate,
    pub history: Vec<HistoryRow>,
    /// The returned distribution: a weighted profile sample.
    pub sample: WeightedSample<S>,
    pub psi: DeviationSet,
    pub lambda: Vec<S>,
    pub scenarios: ScenarioSample,
}

/// Scenario sample used throughout a run.
pub fn scenario_sample<G: SuccinctGame + ?Sized>(game: &G, config: &SolverConfig) -> Result<ScenarioSample> {
    let count = game.nature_info_set_count();
    if count == Some(0) {
        return Ok(ScenarioSample::deterministic());
    }
    let cap = config.scenarios.exhaustive_cap;
    let exhaustive = match config.scenarios.mode {
        ScenarioMode::Exhaustive => true,
        ScenarioMode::Sampled => false,
        ScenarioMode::Auto => count.is_some_and(|c| c <= cap as u64),
    };
    if exhaustive {
        return enumerate_scenarios(game, cap, config.node_budget);
    }
    let gt = game.game_type();
    let eps = config.effective_epsilon(gt.gamma);
    let bound = sample_bounds(eps / 3.0, config.delta / 2.0, gt).m_nat;
    let m_nat = (bound.min(config.scenarios.max_sampled as u64)).max(1) as usize;
    Ok(sample_scenarios(game, m_nat, hash2(config.seed, 0x6e61_7475_7265)))
}

struct Snapshot<S> {
    round: usize,
    r_star: S,
    sample: WeightedSample<S>,
    lambda: Vec<S>,
    psi_len: usize,
}

/// Runs coordinate descent until the empirical regret drops below `2ε/3`
/// or the round budget runs out, in which case the lowest-regret state is
/// returned with a budget-exhausted status.
/// Fraction of the lowest r* on the current sample that counts as progress.
const STALL_PROGRESS: f64 = 0.99;

pub fn solve<S, G>(game: &G, config: &SolverConfig) -> Result<Solution<S>>
where
    S: Scalar,
    G: SuccinctGame + ?Sized,
{
    let n = game.num_players();
    config.validate(n)?;
    let started = Instant::now();
    let gt = game.game_type();
    let eps = config.effective_epsilon(gt.gamma);
    let r_tilde = S::of(gt.r_max + eps / 3.0);
    let threshold = S::of(2.0 * eps / 3.0);
    let w: Vec<S> = if config.w.is_empty() {
        vec![S::zero(); n]
    } else {
        config.w.iter().map(|&x| S::of(x)).collect()
    };
    let scenarios = scenario_sample(game, config)?;
    let strict_m = sample_bounds(eps / 3.0, config.delta / 2.0, gt).m;
    if config.strict_bounds && strict_m > config.max_strict_sample as u64 {
        return Err(Error::Config(format!(
            "strict sample size {strict_m} exceeds max_strict_sample {}",
            config.max_strict_sample
        )));
    }
    log::info!(
        "solving {} with eps={eps}, r_max={}, {} scenarios, worst-case M={strict_m}",
        game.name(),
        gt.r_max,
        scenarios.len()
    );

    let mut psi = DeviationSet::new();
    let mut lambda: Vec<S> = vec![S::zero()];
    let mut sample: Option<WeightedSample<S>> = None;
    let mut chain_state: Option<Profile> = None;
    let mut history = Vec::new();
    let mut best: Option<Snapshot<S>> = None;
    let mut initial_r_star = None;
    let mut peak_mem = 0usize;
    let mut converged = false;
    let mut d_bound = gt.gamma as f64;
    let mut stale = false;
    let mut sample_low = f64::INFINITY;
    let mut since_low = 0usize;

    for t in 1..=config.max_rounds {
        let fresh = stale || sample.as_ref().is_none_or(|s| s.gate_fired(config.sampler.ess_gate));
        if fresh {
            let m = if config.strict_bounds {
                strict_m as usize
            } else {
                config.schedule.size(t)
            };
            let sampler = SamplerConfig {
                seed: hash2(config.seed, t as u64),
                ..config.sampler
            };
            let (s, last) = draw_sample(game, &scenarios, &psi, &w, &lambda, m, &sampler, chain_state.take())?;
            chain_state = Some(last);
            if t == 1 && w.iter().any(|&x| x != S::zero()) {
                let spread = s
                    .draws()
                    .iter()
                    .map(|d| d.utility.iter().zip(&w).map(|(&u, &wn)| u * wn).sum::<S>().abs())
                    .fold(S::zero(), S::max);
                d_bound += 2.0 * spread.as_f64();
            }
            sample = Some(s);
            sample_low = f64::INFINITY;
            since_low = 0;
        }
        let current = sample.as_mut().expect("sample drawn above");
        let profiles = current.profiles();
        let tree = build_deviation_tree(game, &profiles, current.weights(), &scenarios, config.node_budget)?;
        let found = tree.best_deviation(None)?;
        let r_star = found.empirical_regret;
        let initial = *initial_r_star.get_or_insert(r_star);
        peak_mem = peak_mem.max(tree.memory_bytes() + current.memory_bytes());
        drop(tree);

        history.push(HistoryRow {
            round: t,
            r_star: r_star.as_f64(),
            psi_size: psi.len(),
            m_t: current.len(),
            ess: current.ess().as_f64(),
            lambda_l1: lambda.iter().map(|x| x.as_f64()).sum(),
            wall_ms: if config.telemetry {
                started.elapsed().as_millis() as u64
            } else {
                0
            },
            peak_mem_bytes: peak_mem as u64,
        });
        log::debug!("round {t}: r*={r_star} |psi|={} ess={}", psi.len(), current.ess());

        if best.as_ref().is_none_or(|b| r_star < b.r_star) {
            best = Some(Snapshot {
                round: t,
                r_star,
                sample: current.clone(),
                lambda: lambda.clone(),
                psi_len: psi.len(),
            });
        }
        let relative_hit = config
            .stop_relative
            .is_some_and(|rel| initial > S::zero() && r_star < S::of(rel) * initial);
        if r_star < threshold || relative_hit {
            converged = true;
            break;
        }

        if r_star.as_f64() < STALL_PROGRESS * sample_low {
            sample_low = r_star.as_f64();
            since_low = 0;
        } else {
            since_low += 1;
        }
        let (k, _) = psi.insert(found.deviation);
        lambda.resize(psi.len(), S::zero());
        current.extend_regrets(game, &scenarios, &psi)?;
        let delta = if config.line_search.enabled {
            let step = line_search_update(current, k, r_tilde, &config.line_search)?;
            stale = (config.resample_when_uninformative && step.uninformative)
                || (config.resample_when_capped && step.capped);
            step.delta
        } else {
            basic_update(r_star, r_tilde)?
        };
        lambda[k] += delta;
        current.reweight(&lambda)?;
        stale |= config.stall_rounds.is_some_and(|n| since_low >= n);
    }

    let snap = best.expect("at least one round ran");
    let rounds = history.len();
    let (final_sample, final_lambda, final_r_star, psi_len) = if converged {
        let s = sample.expect("sample exists");
        let r = S::of(history.last().expect("history").r_star);
        let lam = lambda.clone();
        (s, lam, r, psi.len())
    } else {
        (snap.sample, snap.lambda, snap.r_star, snap.psi_len)
    };
    let bound = iteration_bound(eps, r_tilde.as_f64(), d_bound).ok();
    let certificate = EquilibriumCertificate::new(
        game,
        config,
        &CertificateInputs {
            status: if converged {
                CertificateStatus::Converged
            } else {
                CertificateStatus::BudgetExhausted
            },
            effective_epsilon: eps,
            rounds,
            best_round: if converged { rounds } else { snap.round },
            r_star: final_r_star.as_f64(),
            initial_r_star: initial_r_star.map_or(0.0, |x: S| x.as_f64()),
            iteration_bound: bound,
            wall_ms: if config.telemetry {
                started.elapsed().as_millis() as u64
            } else {
                0
            },
            peak_mem_bytes: peak_mem as u64,
        },
        &psi,
        psi_len,
        &final_lambda,
        &final_sample,
        &scenarios,
    );
    Ok(Solution {
        certificate,
        history,
        sample: final_sample,
        psi,
        lambda: final_lambda,
        scenarios,
    })
}

pub(crate) struct CertificateInputs {
    pub status: CertificateStatus,
    pub effective_epsilon: f64,
    pub rounds: usize,
    pub best_round: usize,
    pub r_star: f64,
    pub initial_r_star: f64,
    pub iteration_bound: Option<IterationBound>,
    pub wall_ms: u64,
    pub peak_mem_bytes: u64,
}
