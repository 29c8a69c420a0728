//! Brute-force ground truth for games small enough to enumerate: reduced
//! profiles, every causal deviation, exact distributions and exact regrets.
//!
//! Regrets here come from applying each deviation to explicit strategies and
//! replaying the game, so they share no code with the tree-based search.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::deviations::{regret, CausalDeviation, Trigger};
use crate::efg::{enumerate_scenarios, expected_utility, reduce, PureStrategy, ScenarioSample, StrategyProfile, SuccinctGame};
use crate::error::{Error, Result};
use crate::forest::InfoSetForest;
use crate::sampler::Profile;
use crate::scalar::{log_sum_exp, normalize_log_weights};

pub const DEFAULT_PROFILE_CAP: usize = 1_000_000;
pub const DEFAULT_DEVIATION_CAP: usize = 10_000_000;
pub const DEFAULT_NODE_CAP: usize = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OracleCaps {
    pub profiles: usize,
    pub deviations: usize,
    pub nodes: usize,
}

impl Default for OracleCaps {
    fn default() -> Self {
        Self {
            profiles: DEFAULT_PROFILE_CAP,
            deviations: DEFAULT_DEVIATION_CAP,
            nodes: DEFAULT_NODE_CAP,
        }
    }
}

/// All reduced strategy profiles of an explored game.
pub fn enumerate_reduced_profiles<G: SuccinctGame + ?Sized>(game: &G, cap: usize) -> Result<Vec<StrategyProfile>> {
    let forest = InfoSetForest::explore(game, DEFAULT_NODE_CAP)?;
    profiles_of(&forest, cap)
}

fn profiles_of(forest: &InfoSetForest, cap: usize) -> Result<Vec<StrategyProfile>> {
    let per_player = (0..forest.num_players)
        .map(|n| forest.reduced_strategies(n, cap))
        .collect::<Result<Vec<_>>>()?;
    let total = per_player
        .iter()
        .try_fold(1u128, |acc, s| acc.checked_mul(s.len() as u128))
        .unwrap_or(u128::MAX);
    if total > cap as u128 {
        return Err(Error::TooLarge {
            what: "reduced profile enumeration".into(),
            cap: cap as u64,
        });
    }
    let mut out: Vec<Vec<PureStrategy>> = vec![Vec::new()];
    for strategies in &per_player {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                strategies.iter().map(move |s| {
                    let mut p = prefix.clone();
                    p.push(s.clone());
                    p
                })
            })
            .collect();
    }
    Ok(out.into_iter().map(StrategyProfile::new).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExplicitDistribution {
    pub profiles: Vec<StrategyProfile>,
    pub probabilities: Vec<f64>,
    pub expected_utilities: Vec<f64>,
    /// `ln Z` relative to the uniform distribution, when the distribution
    /// comes from dual weights.
    pub log_partition: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub max_regret: f64,
    pub worst: CausalDeviation,
    /// Number of deviations examined, identity included.
    pub deviations_checked: usize,
    pub epsilon: Option<f64>,
    pub is_epsilon_efce: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoostRound {
    pub round: usize,
    pub max_regret: f64,
    pub log_partition: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoostRun {
    pub distribution: ExplicitDistribution,
    /// Max regret and `ln Z` before each update, plus the final state.
    pub trajectory: Vec<BoostRound>,
    pub updates: usize,
}

/// Exhaustive model of a small game.
pub struct Oracle<'g, G: SuccinctGame + ?Sized> {
    game: &'g G,
    pub forest: InfoSetForest,
    pub scenarios: ScenarioSample,
    pub profiles: Vec<StrategyProfile>,
    /// Every causal deviation, identity first, then by trigger.
    pub deviations: Vec<CausalDeviation>,
    /// `utilities[k][n]`.
    pub utilities: Vec<Vec<f64>>,
    /// `regrets[φ][k]` on the enumerated profiles, computed lazily.
    regrets: Option<Vec<Vec<f64>>>,
    index: HashMap<StrategyProfile, usize>,
}

impl<'g, G: SuccinctGame + ?Sized> Oracle<'g, G> {
    pub fn new(game: &'g G) -> Result<Self> {
        Self::with_caps(game, OracleCaps::default())
    }

    pub fn with_caps(game: &'g G, caps: OracleCaps) -> Result<Self> {
        let forest = InfoSetForest::explore(game, caps.nodes)?;
        let profiles = profiles_of(&forest, caps.profiles)?;
        let scenarios = enumerate_scenarios(game, caps.profiles, caps.nodes)?;
        let mut deviations = vec![CausalDeviation::Identity];
        for n in 0..forest.num_players {
            for (i, rec) in forest.player_info_sets(n) {
                let devs = forest.reduced_assignments(&[i], caps.deviations)?;
                for a in 0..rec.actions {
                    let trigger = Trigger {
                        player: n,
                        info_set: i,
                        action: a,
                    };
                    for dev in &devs {
                        deviations.push(CausalDeviation::Triggered {
                            trigger,
                            dev: dev.clone(),
                        });
                        if deviations.len() > caps.deviations {
                            return Err(Error::TooLarge {
                                what: "deviation enumeration".into(),
                                cap: caps.deviations as u64,
                            });
                        }
                    }
                }
            }
        }
        let utilities = profiles
            .iter()
            .map(|s| expected_utility::<f64, _, _>(game, s, &scenarios))
            .collect::<Result<Vec<_>>>()?;
        let index = profiles.iter().enumerate().map(|(k, s)| (s.clone(), k)).collect();
        Ok(Self {
            game,
            forest,
            scenarios,
            profiles,
            deviations,
            utilities,
            regrets: None,
            index,
        })
    }

    pub fn game(&self) -> &G {
        self.game
    }

    /// Position of a profile's reduction among the enumerated profiles.
    pub fn index_of(&self, profile: &StrategyProfile) -> Result<Option<usize>> {
        let reduced = StrategyProfile::new(
            profile
                .strategies
                .iter()
                .map(|s| reduce(self.game, s))
                .collect::<Result<Vec<_>>>()?,
        );
        Ok(self.index.get(&reduced).copied())
    }

    /// Regret table over the enumerated profiles.
    pub fn regret_table(&mut self) -> Result<&Vec<Vec<f64>>> {
        if self.regrets.is_none() {
            let table = self
                .deviations
                .iter()
                .map(|phi| {
                    self.profiles
                        .iter()
                        .map(|s| regret::<f64, _>(self.game, phi, s, &self.scenarios))
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            self.regrets = Some(table);
        }
        Ok(self.regrets.as_ref().expect("filled above"))
    }

    /// `q(s) ∝ exp(w·u(s) − Σ λ_φ r_φ(s))` over the reduced profiles.
    pub fn exact_distribution(&self, weighted: &[(CausalDeviation, f64)], w: &[f64]) -> Result<ExplicitDistribution> {
        let mut energies = Vec::with_capacity(self.profiles.len());
        for (k, s) in self.profiles.iter().enumerate() {
            let mut e: f64 = w.iter().zip(&self.utilities[k]).map(|(a, b)| a * b).sum();
            for (phi, lambda) in weighted {
                if *lambda != 0.0 {
                    e -= lambda * regret::<f64, _>(self.game, phi, s, &self.scenarios)?;
                }
            }
            energies.push(e);
        }
        Ok(self.distribution_from_energies(&energies))
    }

    fn distribution_from_energies(&self, energies: &[f64]) -> ExplicitDistribution {
        let probabilities = normalize_log_weights(energies);
        let log_partition = log_sum_exp(energies) - (energies.len() as f64).ln();
        ExplicitDistribution {
            expected_utilities: self.mean_utilities(&probabilities),
            profiles: self.profiles.clone(),
            probabilities,
            log_partition: Some(log_partition),
        }
    }

    fn mean_utilities(&self, probabilities: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.forest.num_players];
        for (u, &p) in self.utilities.iter().zip(probabilities) {
            for (o, x) in out.iter_mut().zip(u) {
                *o += p * x;
            }
        }
        out
    }

    /// Uniform distribution over the reduced profiles.
    pub fn uniform(&self) -> ExplicitDistribution {
        self.distribution_from_energies(&vec![0.0; self.profiles.len()])
    }

    /// Point mass on one (possibly unreduced) profile.
    pub fn point_mass(&self, profile: &StrategyProfile) -> Result<ExplicitDistribution> {
        Ok(ExplicitDistribution {
            expected_utilities: expected_utility::<f64, _, _>(self.game, profile, &self.scenarios)?,
            profiles: vec![profile.clone()],
            probabilities: vec![1.0],
            log_partition: None,
        })
    }

    /// Distribution of a weighted sample of sampler profiles.
    pub fn from_weighted_profiles(&self, profiles: &[&Profile], weights: &[f64]) -> Result<ExplicitDistribution> {
        let explicit = profiles
            .iter()
            .map(|p| p.materialize(&self.forest))
            .collect::<Result<Vec<_>>>()?;
        let mut utilities = vec![0.0; self.forest.num_players];
        for (s, &q) in explicit.iter().zip(weights) {
            let u = expected_utility::<f64, _, _>(self.game, s, &self.scenarios)?;
            for (o, x) in utilities.iter_mut().zip(u) {
                *o += q * x;
            }
        }
        Ok(ExplicitDistribution {
            profiles: explicit,
            probabilities: weights.to_vec(),
            expected_utilities: utilities,
            log_partition: None,
        })
    }

    /// Largest expected regret over every causal deviation. Ties go to the
    /// lowest (player, information set, action), then the first deviation
    /// strategy in enumeration order.
    pub fn exact_best_deviation(&self, dist: &ExplicitDistribution) -> Result<VerificationReport> {
        let mut best = (0.0, CausalDeviation::Identity);
        for phi in self.deviations.iter().skip(1) {
            let mut r = 0.0;
            for (s, &p) in dist.profiles.iter().zip(&dist.probabilities) {
                if p != 0.0 {
                    r += p * regret::<f64, _>(self.game, phi, s, &self.scenarios)?;
                }
            }
            if r > best.0 {
                best = (r, phi.clone());
            }
        }
        Ok(VerificationReport {
            max_regret: best.0,
            worst: best.1,
            deviations_checked: self.deviations.len(),
            epsilon: None,
            is_epsilon_efce: None,
        })
    }

    pub fn verify_efce(&self, dist: &ExplicitDistribution, epsilon: f64) -> Result<VerificationReport> {
        let mut report = self.exact_best_deviation(dist)?;
        report.epsilon = Some(epsilon);
        report.is_epsilon_efce = Some(report.max_regret <= epsilon);
        Ok(report)
    }

    /// Idealized coordinate descent with exact expectations: each round adds
    /// `(1/(2 r_max)) ln((r_max + r)/(r_max − r))` to the dual weight of the
    /// deviation with the largest regret `r`.
    pub fn exact_boost(&mut self, w: &[f64], epsilon: f64, max_rounds: usize) -> Result<BoostRun> {
        let r_max = self.game.game_type().r_max;
        let base: Vec<f64> = self
            .utilities
            .iter()
            .map(|u| w.iter().zip(u).map(|(a, b)| a * b).sum())
            .collect();
        self.regret_table()?;
        let table = self.regrets.as_ref().expect("computed above");
        let mut lambda = vec![0.0; self.deviations.len()];
        let mut trajectory = Vec::new();
        let mut updates = 0;
        loop {
            let energies: Vec<f64> = (0..self.profiles.len())
                .map(|k| base[k] - lambda.iter().zip(table).map(|(l, row)| l * row[k]).sum::<f64>())
                .collect();
            let dist = self.distribution_from_energies(&energies);
            let mut best = (0.0, 0usize);
            for (phi, row) in table.iter().enumerate().skip(1) {
                let r: f64 = row.iter().zip(&dist.probabilities).map(|(a, b)| a * b).sum();
                if r > best.0 {
                    best = (r, phi);
                }
            }
            trajectory.push(BoostRound {
                round: updates,
                max_regret: best.0,
                log_partition: dist.log_partition.expect("set by construction"),
            });
            if best.0 <= epsilon || updates >= max_rounds {
                return Ok(BoostRun {
                    distribution: dist,
                    trajectory,
                    updates,
                });
            }
            let (r, phi) = best;
            if r >= r_max {
                return Err(Error::Domain(format!("regret {r} reached the bound {r_max}")));
            }
            lambda[phi] += ((r_max + r) / (r_max - r)).ln() / (2.0 * r_max);
            updates += 1;
        }
    }

    /// Best gain of `player` from deviating at several triggers at once,
    /// where the first trigger that fires along the player's own path
    /// decides the rest of its play.
    pub fn best_multi_trigger_gain(&self, player: usize, dist: &ExplicitDistribution, cap: usize) -> Result<f64> {
        let triggers: Vec<(usize, Vec<&CausalDeviation>)> = {
            let mut by: Vec<(Trigger, Vec<&CausalDeviation>)> = Vec::new();
            for phi in &self.deviations {
                if let Some(t) = phi.trigger().filter(|t| t.player == player) {
                    match by.last_mut() {
                        Some((last, v)) if last == t => v.push(phi),
                        _ => by.push((*t, vec![phi])),
                    }
                }
            }
            by.into_iter().enumerate().map(|(k, (_, v))| (k, v)).collect()
        };
        let combos = triggers
            .iter()
            .try_fold(1u128, |acc, (_, v)| acc.checked_mul(v.len() as u128 + 1))
            .unwrap_or(u128::MAX);
        if combos > cap as u128 {
            return Err(Error::TooLarge {
                what: "multi-trigger enumeration".into(),
                cap: cap as u64,
            });
        }
        let base: f64 = dist
            .profiles
            .iter()
            .zip(&dist.probabilities)
            .map(|(s, &p)| Ok(p * expected_utility::<f64, _, _>(self.game, s, &self.scenarios)?[player]))
            .sum::<Result<f64>>()?;
        let mut choice = vec![0usize; triggers.len()];
        let mut best = 0.0f64;
        loop {
            let selected: Vec<&CausalDeviation> = triggers
                .iter()
                .zip(&choice)
                .filter(|(_, &c)| c > 0)
                .map(|((_, v), &c)| v[c - 1])
                .collect();
            let mut value = 0.0;
            for (s, &p) in dist.profiles.iter().zip(&dist.probabilities) {
                let deviated = s.with_strategy(self.combine(&selected, &s.strategies[player]));
                value += p * expected_utility::<f64, _, _>(self.game, &deviated, &self.scenarios)?[player];
            }
            best = best.max(value - base);
            // Odometer increment.
            let mut k = 0;
            loop {
                if k == choice.len() {
                    return Ok(best);
                }
                choice[k] += 1;
                if choice[k] <= triggers[k].1.len() {
                    break;
                }
                choice[k] = 0;
                k += 1;
            }
        }
    }

    fn combine(&self, selected: &[&CausalDeviation], s_n: &PureStrategy) -> PureStrategy {
        let mut out = s_n.clone();
        // Reduced strategies leave sets off their own path unassigned; a
        // fired trigger can reach them, so walk every set of the player.
        for (j, _) in self.forest.player_info_sets(s_n.owner) {
            // Owner ancestors of j, root first, j itself last.
            let mut chain: Vec<_> = self.forest.ancestors(j).into_iter().map(|(i, _)| i).collect();
            chain.reverse();
            chain.push(j);
            let fired = chain.iter().find_map(|&i| {
                selected.iter().find(|phi| {
                    let t = phi.trigger().expect("triggered");
                    t.info_set == i && s_n.get(i) == Some(t.action)
                })
            });
            if let Some(phi) = fired {
                out.set(j, phi.dev_action(j));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::job_market::*;

    #[test]
    fn job_market_counts() {
        let g = build_job_market(JobMarketSpec::default());
        let o = Oracle::new(&g).unwrap();
        assert_eq!(o.profiles.len(), 16);
        // Student: 2 triggers × 4 + 4 triggers × 2; employer: 4 triggers × 2.
        assert_eq!(o.deviations.len(), 1 + 8 + 8 + 8);
        let u = o.uniform();
        assert!((u.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(u.log_partition.unwrap().abs() < 1e-12);
    }

    #[test]
    fn noncooperative_point_mass_is_an_equilibrium() {
        let g = build_job_market(JobMarketSpec::default());
        let o = Oracle::new(&g).unwrap();
        let s = StrategyProfile::new(vec![
            PureStrategy::with(STUDENT, [(STUDY, SKIP), (ANSWER_AFTER_STUDY, SAY_NO), (ANSWER_AFTER_SKIP, SAY_NO)]),
            PureStrategy::with(EMPLOYER, [(HEARD_YES, REJECT), (HEARD_NO, REJECT)]),
        ]);
        let report = o.verify_efce(&o.point_mass(&s).unwrap(), 0.0).unwrap();
        assert_eq!(report.max_regret, 0.0);
        assert_eq!(report.is_epsilon_efce, Some(true));
    }
}
