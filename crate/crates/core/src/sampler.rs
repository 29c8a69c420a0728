//! Metropolis-Hastings sampling from `q(s) ∝ exp(w·ũ(s) − λ·r̃(s))` over
//! full strategy profiles, and importance reweighting of the resulting
//! sample when λ moves.
//!
//! A profile is stored as explicit actions on its skeleton (the information
//! sets that determine ũ and r̃) plus a seed that fills every other
//! coordinate uniformly at random on demand. One chain step picks a skeleton
//! coordinate uniformly, proposes a new action from the exact conditional
//! given the rest, accepts with probability `min(1, |skel(s)| / |skel(s')|)`,
//! and then redraws the fill seed, which resamples everything off the
//! skeleton without changing the energy.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::deviations::DeviationSet;
use crate::efg::{Action, InfoSetId, ProfileLookup, PureStrategy, ScenarioSample, StrategyProfile, SuccinctGame};
use crate::error::{Error, Result};
use crate::forest::InfoSetForest;
use crate::hash::{hash2, mix64, uniform_index};
use crate::scalar::{effective_sample_size, normalize_log_weights, Scalar};
use crate::trees::{regret_of, ProfileTree};

/// Strategy profile with explicit coordinates and a lazy uniform fill.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Profile {
    #[serde(with = "crate::serde_map")]
    pub explicit: BTreeMap<InfoSetId, Action>,
    pub fill_seed: Option<u64>,
}

impl Profile {
    /// Uniformly random profile.
    pub fn uniform(seed: u64) -> Self {
        Self {
            explicit: BTreeMap::new(),
            fill_seed: Some(seed),
        }
    }

    /// Profile defined only on the given coordinates.
    pub fn fixed(explicit: BTreeMap<InfoSetId, Action>) -> Self {
        Self {
            explicit,
            fill_seed: None,
        }
    }

    pub fn from_strategies(profile: &StrategyProfile) -> Self {
        Self::fixed(
            profile
                .strategies
                .iter()
                .flat_map(|s| s.choices.iter().map(|(&i, &a)| (i, a)))
                .collect(),
        )
    }

    /// Explicit strategies over every information set of an explored game.
    pub fn materialize(&self, forest: &InfoSetForest) -> Result<StrategyProfile> {
        let mut strategies: Vec<PureStrategy> = (0..forest.num_players).map(PureStrategy::new).collect();
        for (&i, rec) in &forest.records {
            if let Some(n) = rec.owner.regular() {
                let a = self
                    .action(n, i, rec.actions)
                    .ok_or(Error::MissingAction { player: n, info_set: i })?;
                strategies[n].set(i, a);
            }
        }
        Ok(StrategyProfile::new(strategies))
    }
}

impl ProfileLookup for Profile {
    #[inline]
    fn action(&self, _player: usize, info_set: InfoSetId, num_actions: usize) -> Option<Action> {
        match self.explicit.get(&info_set) {
            Some(&a) => Some(a),
            None => self.fill_seed.map(|s| uniform_index(hash2(s, info_set), num_actions)),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerConfig {
    /// Burn-in steps per skeleton coordinate.
    pub burnin_mult: usize,
    /// Steps per skeleton coordinate between retained draws.
    pub thin_mult: usize,
    /// Resample when `ln ESS < ln M − ess_gate`.
    pub ess_gate: f64,
    /// Independent chains; draws are concatenated in chain order.
    pub chains: usize,
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            burnin_mult: 20,
            thin_mult: 2,
            ess_gate: 1.0,
            chains: 1,
            seed: 0,
        }
    }
}

/// Acceptance probability of a move between skeletons of the given sizes.
pub fn acceptance_probability(current: usize, proposed: usize) -> f64 {
    if proposed == 0 {
        return 1.0;
    }
    (current as f64 / proposed as f64).min(1.0)
}

/// State of one Markov chain, with cached play records of its profile.
pub struct Chain<'a, S: Scalar, G: SuccinctGame + ?Sized> {
    game: &'a G,
    scenarios: &'a ScenarioSample,
    psi: &'a DeviationSet,
    w: &'a [S],
    lambda: &'a [S],
    profile: Profile,
    tree: ProfileTree,
    energy: S,
    rng: ChaCha8Rng,
    pub steps: u64,
    pub accepted: u64,
}

impl<'a, S: Scalar, G: SuccinctGame + ?Sized> Chain<'a, S, G> {
    pub fn new(
        game: &'a G,
        scenarios: &'a ScenarioSample,
        psi: &'a DeviationSet,
        w: &'a [S],
        lambda: &'a [S],
        init: Profile,
        seed: u64,
    ) -> Result<Self> {
        let mut profile = init;
        if profile.fill_seed.is_none() {
            profile.fill_seed = Some(mix64(seed));
        }
        let tree = ProfileTree::new(game, &profile, scenarios, psi)?;
        let energy = tree.energy(&scenarios.weights, w, lambda);
        let mut chain = Self {
            game,
            scenarios,
            psi,
            w,
            lambda,
            profile,
            tree,
            energy,
            rng: ChaCha8Rng::seed_from_u64(mix64(seed ^ 0x5eed)),
            steps: 0,
            accepted: 0,
        };
        chain.pin_skeleton();
        Ok(chain)
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    pub fn tree(&self) -> &ProfileTree {
        &self.tree
    }

    pub fn energy(&self) -> S {
        self.energy
    }

    pub fn skeleton_len(&self) -> usize {
        self.tree.skeleton_len()
    }

    /// Makes every skeleton coordinate explicit and drops the rest, so the
    /// fill seed can be redrawn without touching the energy.
    fn pin_skeleton(&mut self) {
        let mut explicit = BTreeMap::new();
        for i in self.tree.skeleton_ids() {
            explicit.insert(i, self.resolve(i));
        }
        self.profile.explicit = explicit;
        self.tree.take_changes();
    }

    /// [`Chain::pin_skeleton`] for the coordinates that entered or left the
    /// skeleton since the last pin.
    fn repin(&mut self) {
        for i in self.tree.take_changes() {
            if self.tree.skeleton_contains(i) {
                if !self.profile.explicit.contains_key(&i) {
                    let a = self.resolve(i);
                    self.profile.explicit.insert(i, a);
                }
            } else {
                self.profile.explicit.remove(&i);
            }
        }
    }

    fn resolve(&self, i: InfoSetId) -> Action {
        let n = self.game.player(i).regular().expect("regular information set");
        self.profile
            .action(n, i, self.game.num_actions(i))
            .expect("filled profile resolves every coordinate")
    }

    fn set(&mut self, i: InfoSetId, a: Action) {
        self.profile.explicit.insert(i, a);
    }

    /// One proposal/acceptance step followed by a slice move.
    pub fn step(&mut self) -> Result<()> {
        self.steps += 1;
        let len = self.tree.skeleton_len();
        if len > 0 {
            let pick = self.rng.gen_range(0..len);
            let i = self.tree.skeleton_member(pick);
            let a_count = self.game.num_actions(i);
            let current = self.profile.explicit[&i];
            let mut energies = Vec::with_capacity(a_count);
            let mut sizes = Vec::with_capacity(a_count);
            for b in 0..a_count {
                if b == current {
                    energies.push(self.energy);
                    sizes.push(len);
                    continue;
                }
                self.set(i, b);
                let undo = self.tree.update(self.game, &self.profile, self.scenarios, self.psi, i)?;
                energies.push(self.tree.energy(&self.scenarios.weights, self.w, self.lambda));
                sizes.push(self.tree.skeleton_len());
                self.tree.undo(undo);
            }
            self.set(i, current);
            let b = sample_softmax(&energies, self.rng.gen::<f64>());
            if b != current && self.rng.gen::<f64>() < acceptance_probability(len, sizes[b]) {
                self.set(i, b);
                self.tree.update(self.game, &self.profile, self.scenarios, self.psi, i)?;
                self.energy = energies[b];
                self.accepted += 1;
            }
        }
        self.repin();
        self.profile.fill_seed = Some(self.rng.gen());
        Ok(())
    }

    /// Compares the cached records against a fresh evaluation.
    pub fn cache_is_consistent(&self) -> Result<bool> {
        let fresh = ProfileTree::new(self.game, &self.profile, self.scenarios, self.psi)?;
        let e = fresh.energy(&self.scenarios.weights, self.w, self.lambda);
        Ok(fresh.records() == self.tree.records() && (e - self.energy).abs() <= S::of(1e-9) * (S::one() + e.abs()))
    }
}

fn sample_softmax<S: Scalar>(energies: &[S], u: f64) -> usize {
    let max = energies.iter().copied().fold(S::neg_infinity(), S::max);
    let p: Vec<f64> = energies.iter().map(|&e| (e - max).as_f64().exp()).collect();
    let total: f64 = p.iter().sum();
    let mut acc = 0.0;
    for (b, &x) in p.iter().enumerate() {
        acc += x / total;
        if u < acc {
            return b;
        }
    }
    energies.len() - 1
}

/// One retained profile with its cached evaluations.
#[derive(Clone, Debug, PartialEq)]
pub struct Draw<S> {
    pub profile: Profile,
    pub utility: Vec<S>,
    /// Regret per member of Ψ, for the prefix of Ψ evaluated so far.
    pub regrets: Vec<S>,
}

/// Importance-weighted profile sample.
#[derive(Clone, Debug)]
pub struct WeightedSample<S> {
    draws: Vec<Draw<S>>,
    log_weights: Vec<S>,
    weights: Vec<S>,
    origin_lambda: Vec<S>,
    lambda: Vec<S>,
    ess: S,
}

impl<S: Scalar> WeightedSample<S> {
    /// Uniformly weighted sample drawn at `lambda`.
    pub fn new(draws: Vec<Draw<S>>, lambda: &[S]) -> Self {
        assert!(!draws.is_empty());
        let m = draws.len();
        Self {
            log_weights: vec![S::zero(); m],
            weights: vec![S::one() / S::of_usize(m); m],
            ess: S::of_usize(m),
            origin_lambda: lambda.to_vec(),
            lambda: lambda.to_vec(),
            draws,
        }
    }

    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn draws(&self) -> &[Draw<S>] {
        &self.draws
    }

    pub fn weights(&self) -> &[S] {
        &self.weights
    }

    pub fn ess(&self) -> S {
        self.ess
    }

    pub fn lambda(&self) -> &[S] {
        &self.lambda
    }

    pub fn origin_lambda(&self) -> &[S] {
        &self.origin_lambda
    }

    pub fn profiles(&self) -> Vec<&Profile> {
        self.draws.iter().map(|d| &d.profile).collect()
    }

    /// Whether the weights have degenerated enough to warrant a fresh draw.
    pub fn gate_fired(&self, ess_gate: f64) -> bool {
        self.ess.as_f64().ln() < (self.len() as f64).ln() - ess_gate
    }

    /// Evaluates regrets of Ψ members added after the draws were taken.
    pub fn extend_regrets<G: SuccinctGame + ?Sized>(
        &mut self,
        game: &G,
        scenarios: &ScenarioSample,
        psi: &DeviationSet,
    ) -> Result<()> {
        for d in &mut self.draws {
            for k in d.regrets.len()..psi.len() {
                let r = regret_of(game, psi.get(k), &d.profile, scenarios).map_err(|e| match e {
                    Error::MissingAction { info_set, .. } => {
                        Error::SkeletonInsufficient(format!("no action for information set {info_set:#x}"))
                    }
                    other => other,
                })?;
                d.regrets.push(r);
            }
        }
        Ok(())
    }

    /// Moves the sample to `lambda_new` by exponential tilting.
    pub fn reweight(&mut self, lambda_new: &[S]) -> Result<()> {
        let coord = |v: &[S], k: usize| v.get(k).copied().unwrap_or(S::zero());
        let len = lambda_new.len().max(self.lambda.len());
        for k in 0..len {
            let delta = coord(lambda_new, k) - coord(&self.lambda, k);
            if delta == S::zero() {
                continue;
            }
            for (d, lw) in self.draws.iter().zip(self.log_weights.iter_mut()) {
                let r = *d.regrets.get(k).ok_or_else(|| {
                    Error::SkeletonInsufficient(format!("regret of deviation {k} was never evaluated"))
                })?;
                *lw -= delta * r;
            }
        }
        self.lambda = lambda_new.to_vec();
        self.weights = normalize_log_weights(&self.log_weights);
        self.ess = effective_sample_size(&self.weights);
        Ok(())
    }

    /// Weighted mean utility vector.
    pub fn expected_utility(&self) -> Vec<S> {
        let n = self.draws[0].utility.len();
        let mut out = vec![S::zero(); n];
        for (d, &w) in self.draws.iter().zip(&self.weights) {
            for (o, &u) in out.iter_mut().zip(&d.utility) {
                *o += w * u;
            }
        }
        out
    }

    /// Weighted mean regret of Ψ member `k`.
    pub fn expected_regret(&self, k: usize) -> S {
        self.draws
            .iter()
            .zip(&self.weights)
            .map(|(d, &w)| w * d.regrets.get(k).copied().unwrap_or(S::zero()))
            .sum()
    }

    pub fn memory_bytes(&self) -> usize {
        self.draws
            .iter()
            .map(|d| {
                std::mem::size_of::<Draw<S>>()
                    + d.profile.explicit.len() * 24
                    + (d.utility.capacity() + d.regrets.capacity()) * std::mem::size_of::<S>()
            })
            .sum::<usize>()
            + 3 * self.draws.len() * std::mem::size_of::<S>()
    }
}

/// Draws `m` profiles from the chain(s) targeting `exp(w·ũ − λ·r̃)`.
///
/// Returns the sample and the final chain state, which callers may use to
/// warm-start the next draw.
#[allow(clippy::too_many_arguments)]
pub fn draw_sample<S, G>(
    game: &G,
    scenarios: &ScenarioSample,
    psi: &DeviationSet,
    w: &[S],
    lambda: &[S],
    m: usize,
    config: &SamplerConfig,
    init: Option<Profile>,
) -> Result<(WeightedSample<S>, Profile)>
where
    S: Scalar,
    G: SuccinctGame + ?Sized,
{
    assert!(m >= 1, "sample size must be positive");
    let chains = config.chains.max(1).min(m);
    let mut draws = Vec::with_capacity(m);
    let mut last = None;
    for c in 0..chains {
        let share = m / chains + usize::from(c < m % chains);
        let seed = hash2(config.seed, c as u64);
        let start = init.clone().unwrap_or_else(|| Profile::uniform(mix64(seed)));
        let mut chain = Chain::new(game, scenarios, psi, w, lambda, start, seed)?;
        let burnin = config.burnin_mult * chain.skeleton_len().max(1);
        for _ in 0..burnin {
            chain.step()?;
        }
        for _ in 0..share {
            let thin = (config.thin_mult * chain.skeleton_len()).max(1);
            for _ in 0..thin {
                chain.step()?;
            }
            draws.push(Draw {
                profile: chain.profile().clone(),
                utility: chain.tree().utilities(&scenarios.weights),
                regrets: chain.tree().regrets(&scenarios.weights, psi.len()),
            });
        }
        last = Some(chain.profile().clone());
    }
    Ok((WeightedSample::new(draws, lambda), last.expect("at least one chain")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::job_market::*;

    #[test]
    fn acceptance_ratio() {
        assert_eq!(acceptance_probability(3, 3), 1.0);
        assert_eq!(acceptance_probability(4, 3), 1.0);
        assert_eq!(acceptance_probability(3, 4), 0.75);
    }

    #[test]
    fn fill_is_stable_and_overridden_by_explicit_entries() {
        let mut p = Profile::uniform(9);
        let a = p.action(0, 77, 3).unwrap();
        assert_eq!(p.action(0, 77, 3), Some(a));
        p.explicit.insert(77, (a + 1) % 3);
        assert_eq!(p.action(0, 77, 3), Some((a + 1) % 3));
        assert_eq!(Profile::fixed(BTreeMap::new()).action(0, 77, 3), None);
    }

    #[test]
    fn chain_caches_stay_consistent() {
        let g = build_job_market(JobMarketSpec::default());
        let sc = ScenarioSample::deterministic();
        let psi = DeviationSet::new();
        let w = [1.0, 0.5];
        let lambda = [0.0];
        let mut chain = Chain::new(&g, &sc, &psi, &w, &lambda, Profile::uniform(1), 4).unwrap();
        for _ in 0..200 {
            chain.step().unwrap();
            assert!(chain.cache_is_consistent().unwrap());
            assert_eq!(chain.skeleton_len(), 3);
        }
    }

    #[test]
    fn single_draw_has_unit_weight() {
        let g = build_job_market(JobMarketSpec::default());
        let sc = ScenarioSample::deterministic();
        let psi = DeviationSet::new();
        let (s, _) = draw_sample::<f64, _>(&g, &sc, &psi, &[0.0, 0.0], &[0.0], 1, &SamplerConfig::default(), None)
            .unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.weights(), &[1.0]);
        assert_eq!(s.ess(), 1.0);
    }
}
