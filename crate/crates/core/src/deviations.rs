//! Causal deviations and their regret.
//!
//! A deviation fires when its player reaches the trigger information set and
//! is told to play the trigger action. From that point on, starting at the
//! trigger itself, the player follows the deviation strategy instead of the
//! suggestions. Entries the deviation strategy leaves unspecified default to
//! action 0, so the deviated strategy never depends on the original one past
//! the trigger.

use std::collections::BTreeMap;

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::efg::{
    depth_exceeded, expected_utility, Action, InfoSetId, PlayerId, PureStrategy, ScenarioSample, StrategyProfile,
    SuccinctGame, DEFAULT_DEPTH_CAP,
};
use crate::error::Result;
use crate::scalar::Scalar;

/// Action used for information sets the deviation strategy leaves open.
pub const DEFAULT_DEV_ACTION: Action = 0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Trigger {
    pub player: usize,
    pub info_set: InfoSetId,
    pub action: Action,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CausalDeviation {
    Identity,
    Triggered {
        trigger: Trigger,
        dev: BTreeMap<InfoSetId, Action>,
    },
}

impl CausalDeviation {
    pub fn triggered(trigger: Trigger, dev: impl IntoIterator<Item = (InfoSetId, Action)>) -> Self {
        CausalDeviation::Triggered {
            trigger,
            dev: dev.into_iter().collect(),
        }
    }

    pub fn trigger(&self) -> Option<&Trigger> {
        match self {
            CausalDeviation::Identity => None,
            CausalDeviation::Triggered { trigger, .. } => Some(trigger),
        }
    }

    pub fn player(&self) -> Option<usize> {
        self.trigger().map(|t| t.player)
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, CausalDeviation::Identity)
    }

    /// Action played at `info_set` once the deviation has fired.
    #[inline]
    pub fn dev_action(&self, info_set: InfoSetId) -> Action {
        match self {
            CausalDeviation::Identity => DEFAULT_DEV_ACTION,
            CausalDeviation::Triggered { dev, .. } => dev.get(&info_set).copied().unwrap_or(DEFAULT_DEV_ACTION),
        }
    }

    pub fn to_record(&self) -> DeviationRecord {
        match self {
            CausalDeviation::Identity => DeviationRecord {
                player: None,
                info_set: None,
                action: None,
                dev: Vec::new(),
            },
            CausalDeviation::Triggered { trigger, dev } => DeviationRecord {
                player: Some(trigger.player),
                info_set: Some(trigger.info_set),
                action: Some(trigger.action),
                dev: dev.iter().map(|(&i, &a)| (i, a)).collect(),
            },
        }
    }

    pub fn from_record(r: &DeviationRecord) -> Self {
        match (r.player, r.info_set, r.action) {
            (Some(player), Some(info_set), Some(action)) => CausalDeviation::Triggered {
                trigger: Trigger { player, info_set, action },
                dev: r.dev.iter().copied().collect(),
            },
            _ => CausalDeviation::Identity,
        }
    }
}

/// Flat serialized form; identity has no trigger fields.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeviationRecord {
    pub player: Option<usize>,
    pub info_set: Option<InfoSetId>,
    pub action: Option<Action>,
    pub dev: Vec<(InfoSetId, Action)>,
}

impl Serialize for CausalDeviation {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_record().serialize(s)
    }
}

impl<'de> Deserialize<'de> for CausalDeviation {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Ok(Self::from_record(&DeviationRecord::deserialize(d)?))
    }
}

/// Ordered deviation collection Ψ with the identity at index 0.
#[derive(Clone, Debug)]
pub struct DeviationSet {
    items: Vec<CausalDeviation>,
    index: FxHashMap<CausalDeviation, usize>,
    by_trigger: FxHashMap<(InfoSetId, Action), Vec<u32>>,
}

impl Default for DeviationSet {
    fn default() -> Self {
        Self::new()
    }
}

impl DeviationSet {
    pub fn new() -> Self {
        let mut index = FxHashMap::default();
        index.insert(CausalDeviation::Identity, 0);
        Self {
            items: vec![CausalDeviation::Identity],
            index,
            by_trigger: FxHashMap::default(),
        }
    }

    /// Inserts `phi` unless present. Returns its index and whether it is new.
    pub fn insert(&mut self, phi: CausalDeviation) -> (usize, bool) {
        if let Some(&k) = self.index.get(&phi) {
            return (k, false);
        }
        let k = self.items.len();
        if let Some(t) = phi.trigger() {
            self.by_trigger.entry((t.info_set, t.action)).or_default().push(k as u32);
        }
        self.index.insert(phi.clone(), k);
        self.items.push(phi);
        (k, true)
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn get(&self, k: usize) -> &CausalDeviation {
        &self.items[k]
    }

    pub fn position(&self, phi: &CausalDeviation) -> Option<usize> {
        self.index.get(phi).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = &CausalDeviation> {
        self.items.iter()
    }

    /// Indices of the deviations with this trigger.
    #[inline]
    pub fn triggered_by(&self, info_set: InfoSetId, action: Action) -> &[u32] {
        self.by_trigger
            .get(&(info_set, action))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn has_triggers(&self) -> bool {
        !self.by_trigger.is_empty()
    }

    pub fn records(&self) -> Vec<DeviationRecord> {
        self.items.iter().map(CausalDeviation::to_record).collect()
    }

    pub fn from_deviations(items: impl IntoIterator<Item = CausalDeviation>) -> Self {
        let mut set = Self::new();
        for phi in items {
            set.insert(phi);
        }
        set
    }
}

/// Whether some path visits `from` strictly before `to`; both must belong to
/// the same player. Uses the game's closed form when it has one.
pub fn reachable<G: SuccinctGame + ?Sized>(game: &G, from: InfoSetId, to: InfoSetId) -> bool {
    debug_assert_eq!(game.player(from), game.player(to), "reachability across players");
    if from == to {
        return false;
    }
    if let Some(answer) = game.precedes(from, to) {
        return answer;
    }
    walk_precedes(game, from, to).unwrap_or(false)
}

fn walk_precedes<G: SuccinctGame + ?Sized>(game: &G, from: InfoSetId, to: InfoSetId) -> Result<bool> {
    let mut stack = vec![(game.root(), false, 0usize)];
    while let Some((node, passed, depth)) = stack.pop() {
        if depth > DEFAULT_DEPTH_CAP {
            return Err(depth_exceeded());
        }
        let Some(i) = game.info_set(&node) else { continue };
        if i == to && passed {
            return Ok(true);
        }
        let passed = passed || i == from;
        for a in 0..game.num_actions(i) {
            stack.push((game.next(&node, a), passed, depth + 1));
        }
    }
    Ok(false)
}

/// The deviation map applied to one player's strategy.
pub fn apply<G: SuccinctGame + ?Sized>(game: &G, phi: &CausalDeviation, s_n: &PureStrategy) -> PureStrategy {
    let CausalDeviation::Triggered { trigger, dev } = phi else {
        return s_n.clone();
    };
    debug_assert_eq!(trigger.player, s_n.owner);
    if s_n.get(trigger.info_set) != Some(trigger.action) {
        return s_n.clone();
    }
    let after = |i: InfoSetId| i == trigger.info_set || reachable(game, trigger.info_set, i);
    let mut out = s_n.clone();
    for (&i, a) in out.choices.iter_mut() {
        if after(i) {
            *a = phi.dev_action(i);
        }
    }
    for (&i, &a) in dev {
        if after(i) {
            out.set(i, a);
        }
    }
    out
}

/// Gain of the deviating player from applying `phi`, in expectation over the
/// scenario sample.
pub fn regret<S, G>(game: &G, phi: &CausalDeviation, s: &StrategyProfile, sample: &ScenarioSample) -> Result<S>
where
    S: Scalar,
    G: SuccinctGame + ?Sized,
{
    let Some(n) = phi.player() else {
        return Ok(S::zero());
    };
    let deviated = s.with_strategy(apply(game, phi, &s.strategies[n]));
    let base = expected_utility::<S, _, _>(game, s, sample)?;
    let dev = expected_utility::<S, _, _>(game, &deviated, sample)?;
    Ok(dev[n] - base[n])
}

/// Owner of an information set, if it is a regular player.
pub fn owner<G: SuccinctGame + ?Sized>(game: &G, info_set: InfoSetId) -> Option<usize> {
    match game.player(info_set) {
        PlayerId::Regular(n) => Some(n),
        PlayerId::Nature => None,
    }
}
