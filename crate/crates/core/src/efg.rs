//! Succinct extensive-form games and the primitives built on them: pure
//! strategies, scenarios (pure strategies of nature), play and expectation.
//!
//! Players are indexed `0..N` and actions `0..A_i`.

use std::collections::BTreeMap;
use std::fmt::Debug;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hash::{hash2, unit_interval};
use crate::scalar::Scalar;

/// Opaque information set identifier. Games choose their own encoding.
pub type InfoSetId = u64;

/// Action index in `0..A_i`.
pub type Action = usize;

/// Maximum number of steps a single walk may take before the game is
/// considered defective.
pub const DEFAULT_DEPTH_CAP: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PlayerId {
    Regular(usize),
    Nature,
}

impl PlayerId {
    pub fn regular(self) -> Option<usize> {
        match self {
            PlayerId::Regular(n) => Some(n),
            PlayerId::Nature => None,
        }
    }
}

/// Sequence complexity bound and regret bound of a game.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameType {
    pub gamma: u64,
    pub r_max: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InfoSetDescriptor {
    pub id: InfoSetId,
    pub owner: PlayerId,
    pub action_count: usize,
}

/// Query interface of a succinct game.
///
/// Nothing here requires the tree to be materialized: nodes are produced on
/// demand by [`SuccinctGame::next`].
pub trait SuccinctGame: Send + Sync {
    type Node: Clone + Debug + Send + Sync;

    fn game_type(&self) -> GameType;

    fn num_players(&self) -> usize;

    fn root(&self) -> Self::Node;

    /// `None` at leaves.
    fn info_set(&self, node: &Self::Node) -> Option<InfoSetId>;

    fn player(&self, info_set: InfoSetId) -> PlayerId;

    fn num_actions(&self, info_set: InfoSetId) -> usize;

    fn next(&self, node: &Self::Node, action: Action) -> Self::Node;

    /// Probability of `action` at a nature information set.
    fn nature_probability(&self, info_set: InfoSetId, action: Action) -> f64;

    /// Utility vector at a leaf, one entry per regular player.
    fn utility(&self, leaf: &Self::Node) -> Vec<f64>;

    /// Number of nature information sets, when the game knows it cheaply.
    fn nature_info_set_count(&self) -> Option<u64> {
        None
    }

    /// Closed-form answer to "does some path visit `from` strictly before
    /// `to`", for two information sets of the same player. `None` falls back
    /// to a tree walk.
    fn precedes(&self, _from: InfoSetId, _to: InfoSetId) -> Option<bool> {
        None
    }

    /// Stable name used in certificates.
    fn name(&self) -> String;

    /// Construction parameters, serialized into certificates.
    fn parameters(&self) -> serde_json::Value {
        serde_json::Value::Null
    }

    fn descriptor(&self, info_set: InfoSetId) -> InfoSetDescriptor {
        InfoSetDescriptor {
            id: info_set,
            owner: self.player(info_set),
            action_count: self.num_actions(info_set),
        }
    }
}

/// Anything that can suggest an action for a regular player's information
/// set: explicit profiles, lazily filled sampler states.
pub trait ProfileLookup {
    fn action(&self, player: usize, info_set: InfoSetId, num_actions: usize) -> Option<Action>;
}

/// Pure strategy of one regular player. Absent entries are "don't care";
/// a strategy whose absent entries are exactly the unreachable ones is a
/// reduced strategy.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PureStrategy {
    pub owner: usize,
    #[serde(with = "crate::serde_map")]
    pub choices: BTreeMap<InfoSetId, Action>,
}

pub type ReducedStrategy = PureStrategy;

impl PureStrategy {
    pub fn new(owner: usize) -> Self {
        Self {
            owner,
            choices: BTreeMap::new(),
        }
    }

    pub fn with(owner: usize, entries: impl IntoIterator<Item = (InfoSetId, Action)>) -> Self {
        Self {
            owner,
            choices: entries.into_iter().collect(),
        }
    }

    pub fn get(&self, info_set: InfoSetId) -> Option<Action> {
        self.choices.get(&info_set).copied()
    }

    pub fn set(&mut self, info_set: InfoSetId, action: Action) {
        self.choices.insert(info_set, action);
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StrategyProfile {
    pub strategies: Vec<PureStrategy>,
}

impl StrategyProfile {
    pub fn new(strategies: Vec<PureStrategy>) -> Self {
        debug_assert!(strategies.iter().enumerate().all(|(n, s)| s.owner == n));
        Self { strategies }
    }

    pub fn empty(num_players: usize) -> Self {
        Self {
            strategies: (0..num_players).map(PureStrategy::new).collect(),
        }
    }

    pub fn with_strategy(&self, strategy: PureStrategy) -> Self {
        let mut out = self.clone();
        let n = strategy.owner;
        out.strategies[n] = strategy;
        out
    }
}

impl ProfileLookup for StrategyProfile {
    fn action(&self, player: usize, info_set: InfoSetId, _num_actions: usize) -> Option<Action> {
        self.strategies.get(player)?.get(info_set)
    }
}

impl<P: ProfileLookup + ?Sized> ProfileLookup for &P {
    fn action(&self, player: usize, info_set: InfoSetId, num_actions: usize) -> Option<Action> {
        (**self).action(player, info_set, num_actions)
    }
}

/// A pure strategy of nature.
///
/// `Seeded` realizes each entry lazily by hashing the information set id, so
/// repeated queries agree without storing anything. `Fixed` holds an explicit
/// (possibly partial) assignment, as produced by exhaustive enumeration.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scenario {
    Seeded(u64),
    Fixed(#[serde(with = "crate::serde_map")] BTreeMap<InfoSetId, Action>),
}

impl Scenario {
    pub fn action<G: SuccinctGame + ?Sized>(&self, game: &G, info_set: InfoSetId) -> Result<Action> {
        match self {
            Scenario::Seeded(seed) => Ok(inverse_cdf(game, info_set, unit_interval(hash2(*seed, info_set)))),
            Scenario::Fixed(map) => map.get(&info_set).copied().ok_or_else(|| {
                Error::MalformedGame(format!(
                    "enumerated scenario does not cover nature information set {info_set:#x}"
                ))
            }),
        }
    }
}

fn inverse_cdf<G: SuccinctGame + ?Sized>(game: &G, info_set: InfoSetId, u: f64) -> Action {
    let a_count = game.num_actions(info_set);
    let mut acc = 0.0;
    let mut last_positive = 0;
    for a in 0..a_count {
        let p = game.nature_probability(info_set, a);
        if p > 0.0 {
            last_positive = a;
            acc += p;
            if u < acc {
                return a;
            }
        }
    }
    // Rounding left u above the accumulated mass.
    last_positive
}

/// Weighted list of scenarios; weights sum to one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSample {
    pub scenarios: Vec<Scenario>,
    pub weights: Vec<f64>,
    /// True when the list enumerates every scenario class with its exact
    /// probability.
    pub exhaustive: bool,
    pub seed: Option<u64>,
}

impl ScenarioSample {
    pub fn len(&self) -> usize {
        self.scenarios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenarios.is_empty()
    }

    /// Single empty scenario for games without nature.
    pub fn deterministic() -> Self {
        Self {
            scenarios: vec![Scenario::Fixed(BTreeMap::new())],
            weights: vec![1.0],
            exhaustive: true,
            seed: None,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Scenario, f64)> {
        self.scenarios.iter().zip(self.weights.iter().copied())
    }
}

/// Draws `m_nat` independent seeded scenarios.
pub fn sample_scenarios<G: SuccinctGame + ?Sized>(game: &G, m_nat: usize, seed: u64) -> ScenarioSample {
    assert!(m_nat >= 1, "scenario sample must be nonempty");
    if game.nature_info_set_count() == Some(0) {
        return ScenarioSample::deterministic();
    }
    let w = 1.0 / m_nat as f64;
    ScenarioSample {
        scenarios: (0..m_nat as u64).map(|k| Scenario::Seeded(hash2(seed, k))).collect(),
        weights: vec![w; m_nat],
        exhaustive: false,
        seed: Some(seed),
    }
}

/// Enumerates nature's pure strategies up to equivalence on reachable nature
/// information sets, with exact probabilities.
///
/// Partial assignments are refined one nature information set at a time: the
/// first unassigned nature set reachable under the assignment (with regular
/// players ranging over all actions) is split into its positive-probability
/// actions. Fails with `TooLarge` when more than `cap` scenarios would result
/// or a refinement walk exceeds `node_budget` nodes.
pub fn enumerate_scenarios<G: SuccinctGame + ?Sized>(
    game: &G,
    cap: usize,
    node_budget: usize,
) -> Result<ScenarioSample> {
    if game.nature_info_set_count() == Some(0) {
        return Ok(ScenarioSample::deterministic());
    }
    let mut done = Vec::new();
    let mut pending: Vec<(BTreeMap<InfoSetId, Action>, f64)> = vec![(BTreeMap::new(), 1.0)];
    while let Some((assignment, prob)) = pending.pop() {
        let mut budget = node_budget;
        match first_unassigned_nature(game, &game.root(), &assignment, &mut budget, 0)? {
            None => {
                done.push((assignment, prob));
                if done.len() > cap {
                    return Err(Error::TooLarge {
                        what: "scenario enumeration".into(),
                        cap: cap as u64,
                    });
                }
            }
            Some(i) => {
                // Reverse so that popping visits actions in increasing order.
                for a in (0..game.num_actions(i)).rev() {
                    let p = game.nature_probability(i, a);
                    if p > 0.0 {
                        let mut next = assignment.clone();
                        next.insert(i, a);
                        pending.push((next, prob * p));
                    }
                }
            }
        }
    }
    let (scenarios, weights) = done.into_iter().map(|(a, p)| (Scenario::Fixed(a), p)).unzip();
    Ok(ScenarioSample {
        scenarios,
        weights,
        exhaustive: true,
        seed: None,
    })
}

fn first_unassigned_nature<G: SuccinctGame + ?Sized>(
    game: &G,
    node: &G::Node,
    assignment: &BTreeMap<InfoSetId, Action>,
    budget: &mut usize,
    depth: usize,
) -> Result<Option<InfoSetId>> {
    if *budget == 0 {
        return Err(Error::TooLarge {
            what: "scenario refinement walk".into(),
            cap: 0,
        });
    }
    *budget -= 1;
    if depth > DEFAULT_DEPTH_CAP {
        return Err(depth_exceeded());
    }
    let Some(i) = game.info_set(node) else {
        return Ok(None);
    };
    match game.player(i) {
        PlayerId::Nature => match assignment.get(&i) {
            None => Ok(Some(i)),
            Some(&a) => first_unassigned_nature(game, &game.next(node, a), assignment, budget, depth + 1),
        },
        PlayerId::Regular(_) => {
            for a in 0..game.num_actions(i) {
                if let Some(found) =
                    first_unassigned_nature(game, &game.next(node, a), assignment, budget, depth + 1)?
                {
                    return Ok(Some(found));
                }
            }
            Ok(None)
        }
    }
}

pub(crate) fn depth_exceeded() -> Error {
    Error::MalformedGame(format!("walk exceeded the depth cap of {DEFAULT_DEPTH_CAP}"))
}

/// Resolves the action taken at a decision node.
#[inline]
pub fn resolve_action<G, P>(game: &G, info_set: InfoSetId, profile: &P, scenario: &Scenario) -> Result<(PlayerId, Action)>
where
    G: SuccinctGame + ?Sized,
    P: ProfileLookup + ?Sized,
{
    let player = game.player(info_set);
    let action = match player {
        PlayerId::Nature => scenario.action(game, info_set)?,
        PlayerId::Regular(n) => profile
            .action(n, info_set, game.num_actions(info_set))
            .ok_or(Error::MissingAction { player: n, info_set })?,
    };
    Ok((player, action))
}

/// Plays the game to a leaf and returns its utility vector.
pub fn play<G, P>(game: &G, profile: &P, scenario: &Scenario) -> Result<Vec<f64>>
where
    G: SuccinctGame + ?Sized,
    P: ProfileLookup + ?Sized,
{
    let mut node = game.root();
    for _ in 0..=DEFAULT_DEPTH_CAP {
        let Some(i) = game.info_set(&node) else {
            return Ok(game.utility(&node));
        };
        let (_, a) = resolve_action(game, i, profile, scenario)?;
        node = game.next(&node, a);
    }
    Err(depth_exceeded())
}

/// Weighted mean of [`play`] over a scenario sample.
pub fn expected_utility<S, G, P>(game: &G, profile: &P, sample: &ScenarioSample) -> Result<Vec<S>>
where
    S: Scalar,
    G: SuccinctGame + ?Sized,
    P: ProfileLookup + ?Sized,
{
    assert!(!sample.is_empty(), "scenario sample must be nonempty");
    let mut acc = vec![S::zero(); game.num_players()];
    for (scenario, weight) in sample.iter() {
        let u = play(game, profile, scenario)?;
        for (a, x) in acc.iter_mut().zip(u) {
            *a += S::of(weight * x);
        }
    }
    Ok(acc)
}

/// Drops the entries of `strategy` at information sets its owner can never
/// reach given its own earlier choices.
pub fn reduce<G: SuccinctGame + ?Sized>(game: &G, strategy: &PureStrategy) -> Result<ReducedStrategy> {
    let mut reached = std::collections::BTreeSet::new();
    let mut stack = vec![(game.root(), 0usize)];
    while let Some((node, depth)) = stack.pop() {
        if depth > DEFAULT_DEPTH_CAP {
            return Err(depth_exceeded());
        }
        let Some(i) = game.info_set(&node) else { continue };
        match game.player(i) {
            PlayerId::Regular(n) if n == strategy.owner => {
                let a = strategy.get(i).ok_or(Error::MissingAction { player: n, info_set: i })?;
                reached.insert(i);
                stack.push((game.next(&node, a), depth + 1));
            }
            _ => {
                for a in 0..game.num_actions(i) {
                    stack.push((game.next(&node, a), depth + 1));
                }
            }
        }
    }
    Ok(PureStrategy {
        owner: strategy.owner,
        choices: strategy
            .choices
            .iter()
            .filter(|(i, _)| reached.contains(i))
            .map(|(&i, &a)| (i, a))
            .collect(),
    })
}
