use std::collections::BTreeMap;

use rustc_hash::FxHashMap;

use crate::deviations::{CausalDeviation, DeviationSet};
use crate::efg::{
    depth_exceeded, resolve_action, Action, InfoSetId, PlayerId, ProfileLookup, Scenario, ScenarioSample,
    SuccinctGame, DEFAULT_DEPTH_CAP,
};
use crate::error::Result;
use crate::scalar::Scalar;

/// Outcome of one profile against one scenario, plus the outcome of every
/// deviation in Ψ that fires along the way.
#[derive(Clone, Debug, PartialEq)]
pub struct PlayRecord {
    pub utility: Vec<f64>,
    /// Regular-player information sets visited by the plain play or any
    /// deviated play, sorted.
    pub visited: Vec<InfoSetId>,
    /// `(index in Ψ, regret)` for every deviation that fires.
    pub regrets: Vec<(u32, f64)>,
}

/// Plays `profile` against `scenario`, forking a deviated play at every
/// decision whose (information set, suggestion) triggers a member of `psi`.
pub fn play_record<G, P>(game: &G, profile: &P, scenario: &Scenario, psi: &DeviationSet) -> Result<PlayRecord>
where
    G: SuccinctGame + ?Sized,
    P: ProfileLookup + ?Sized,
{
    let mut visited = Vec::new();
    let mut forks: Vec<(u32, usize, f64)> = Vec::new();
    let mut node = game.root();
    let mut steps = 0;
    let utility = loop {
        let Some(i) = game.info_set(&node) else {
            break game.utility(&node);
        };
        steps += 1;
        if steps > DEFAULT_DEPTH_CAP {
            return Err(depth_exceeded());
        }
        let (player, a) = resolve_action(game, i, profile, scenario)?;
        if let PlayerId::Regular(n) = player {
            visited.push(i);
            for &k in psi.triggered_by(i, a) {
                let u = deviated_play(game, node.clone(), profile, scenario, psi.get(k as usize), n, &mut visited)?;
                forks.push((k, n, u));
            }
        }
        node = game.next(&node, a);
    };
    visited.sort_unstable();
    visited.dedup();
    let regrets = forks.into_iter().map(|(k, n, u)| (k, u - utility[n])).collect();
    Ok(PlayRecord {
        utility,
        visited,
        regrets,
    })
}

/// Deviating player's utility when `phi` takes over at `node`.
fn deviated_play<G, P>(
    game: &G,
    mut node: G::Node,
    profile: &P,
    scenario: &Scenario,
    phi: &CausalDeviation,
    owner: usize,
    visited: &mut Vec<InfoSetId>,
) -> Result<f64>
where
    G: SuccinctGame + ?Sized,
    P: ProfileLookup + ?Sized,
{
    for _ in 0..=DEFAULT_DEPTH_CAP {
        let Some(i) = game.info_set(&node) else {
            return Ok(game.utility(&node)[owner]);
        };
        let a = match game.player(i) {
            PlayerId::Regular(m) if m == owner => {
                visited.push(i);
                phi.dev_action(i)
            }
            PlayerId::Regular(_) => {
                visited.push(i);
                resolve_action(game, i, profile, scenario)?.1
            }
            PlayerId::Nature => scenario.action(game, i)?,
        };
        node = game.next(&node, a);
    }
    Err(depth_exceeded())
}

/// Play records of one profile over a whole scenario sample, with the
/// skeleton (visited information sets) kept as reference counts so single
/// coordinate changes can be applied locally.
#[derive(Clone, Debug)]
pub struct ProfileTree {
    records: Vec<PlayRecord>,
    skeleton: BTreeMap<InfoSetId, u32>,
    /// Skeleton members in insertion order, for uniform picks.
    order: Vec<InfoSetId>,
    position: FxHashMap<InfoSetId, usize>,
    /// Information sets that entered or left the skeleton since the last
    /// [`ProfileTree::take_changes`].
    changed: Vec<InfoSetId>,
}

/// Records replaced by [`ProfileTree::update`], for rollback.
#[derive(Debug)]
pub struct Undo {
    old: Vec<(usize, PlayRecord)>,
}

impl ProfileTree {
    pub fn new<G, P>(game: &G, profile: &P, scenarios: &ScenarioSample, psi: &DeviationSet) -> Result<Self>
    where
        G: SuccinctGame + ?Sized,
        P: ProfileLookup + ?Sized,
    {
        let records = scenarios
            .scenarios
            .iter()
            .map(|sc| play_record(game, profile, sc, psi))
            .collect::<Result<Vec<_>>>()?;
        let mut tree = Self {
            records,
            skeleton: BTreeMap::new(),
            order: Vec::new(),
            position: FxHashMap::default(),
            changed: Vec::new(),
        };
        for j in 0..tree.records.len() {
            tree.count(j);
        }
        tree.changed.clear();
        Ok(tree)
    }

    pub fn records(&self) -> &[PlayRecord] {
        &self.records
    }

    pub fn skeleton_len(&self) -> usize {
        self.skeleton.len()
    }

    /// Skeleton information sets in increasing id order.
    pub fn skeleton_ids(&self) -> impl ExactSizeIterator<Item = InfoSetId> + '_ {
        self.skeleton.keys().copied()
    }

    pub fn skeleton_contains(&self, i: InfoSetId) -> bool {
        self.skeleton.contains_key(&i)
    }

    /// The `k`-th skeleton member in an arbitrary but deterministic order.
    pub fn skeleton_member(&self, k: usize) -> InfoSetId {
        self.order[k]
    }

    /// Information sets whose skeleton membership may have changed since
    /// the previous call (possibly with repeats or net no change).
    pub fn take_changes(&mut self) -> Vec<InfoSetId> {
        std::mem::take(&mut self.changed)
    }

    /// Recomputes the records that visit `changed`, after the profile's
    /// action there was modified.
    pub fn update<G, P>(
        &mut self,
        game: &G,
        profile: &P,
        scenarios: &ScenarioSample,
        psi: &DeviationSet,
        changed: InfoSetId,
    ) -> Result<Undo>
    where
        G: SuccinctGame + ?Sized,
        P: ProfileLookup + ?Sized,
    {
        let mut old = Vec::new();
        for j in 0..self.records.len() {
            if self.records[j].visited.binary_search(&changed).is_ok() {
                let fresh = play_record(game, profile, &scenarios.scenarios[j], psi)?;
                let prev = std::mem::replace(&mut self.records[j], fresh);
                self.uncount(&prev.visited);
                self.count(j);
                old.push((j, prev));
            }
        }
        Ok(Undo { old })
    }

    pub fn undo(&mut self, undo: Undo) {
        for (j, prev) in undo.old.into_iter().rev() {
            let cur = std::mem::replace(&mut self.records[j], prev);
            self.uncount(&cur.visited);
            self.count(j);
        }
    }

    fn count(&mut self, j: usize) {
        for &i in &self.records[j].visited {
            let c = self.skeleton.entry(i).or_insert(0);
            *c += 1;
            if *c == 1 {
                self.position.insert(i, self.order.len());
                self.order.push(i);
                self.changed.push(i);
            }
        }
    }

    fn uncount(&mut self, visited: &[InfoSetId]) {
        for &i in visited {
            let c = self.skeleton.get_mut(&i).expect("counted earlier");
            *c -= 1;
            if *c == 0 {
                self.skeleton.remove(&i);
                let at = self.position.remove(&i).expect("member has a position");
                self.order.swap_remove(at);
                if let Some(&moved) = self.order.get(at) {
                    self.position.insert(moved, at);
                }
                self.changed.push(i);
            }
        }
    }

    /// Expected utilities under the scenario weights.
    pub fn utilities<S: Scalar>(&self, scenario_weights: &[f64]) -> Vec<S> {
        let n = self.records.first().map_or(0, |r| r.utility.len());
        let mut out = vec![S::zero(); n];
        for (r, &nu) in self.records.iter().zip(scenario_weights) {
            for (o, &u) in out.iter_mut().zip(&r.utility) {
                *o += S::of(nu * u);
            }
        }
        out
    }

    /// Expected regret of each of the first `len` members of Ψ.
    pub fn regrets<S: Scalar>(&self, scenario_weights: &[f64], len: usize) -> Vec<S> {
        let mut out = vec![S::zero(); len];
        for (r, &nu) in self.records.iter().zip(scenario_weights) {
            for &(k, g) in &r.regrets {
                if let Some(o) = out.get_mut(k as usize) {
                    *o += S::of(nu * g);
                }
            }
        }
        out
    }

    /// `w·ũ − λ·r̃` for this profile.
    pub fn energy<S: Scalar>(&self, scenario_weights: &[f64], w: &[S], lambda: &[S]) -> S {
        let mut e = S::zero();
        for (r, &nu) in self.records.iter().zip(scenario_weights) {
            let mut x = S::zero();
            for (&wn, &u) in w.iter().zip(&r.utility) {
                x += wn * S::of(u);
            }
            for &(k, g) in &r.regrets {
                if let Some(&l) = lambda.get(k as usize) {
                    x -= l * S::of(g);
                }
            }
            e += S::of(nu) * x;
        }
        e
    }

    pub fn memory_bytes(&self) -> usize {
        self.records
            .iter()
            .map(|r| {
                std::mem::size_of::<PlayRecord>()
                    + r.utility.capacity() * 8
                    + r.visited.capacity() * 8
                    + r.regrets.capacity() * 16
            })
            .sum::<usize>()
            + self.skeleton.len() * 56
    }
}

/// Regret of every member of Ψ on one profile.
pub fn evaluate_regrets<S, G, P>(game: &G, psi: &DeviationSet, profile: &P, scenarios: &ScenarioSample) -> Result<Vec<S>>
where
    S: Scalar,
    G: SuccinctGame + ?Sized,
    P: ProfileLookup + ?Sized,
{
    Ok(ProfileTree::new(game, profile, scenarios, psi)?.regrets(&scenarios.weights, psi.len()))
}

/// Regret of a single deviation on one profile.
pub fn regret_of<S, G, P>(game: &G, phi: &CausalDeviation, profile: &P, scenarios: &ScenarioSample) -> Result<S>
where
    S: Scalar,
    G: SuccinctGame + ?Sized,
    P: ProfileLookup + ?Sized,
{
    if phi.is_identity() {
        return Ok(S::zero());
    }
    let psi = DeviationSet::from_deviations([phi.clone()]);
    let mut acc = S::zero();
    for (sc, nu) in scenarios.iter() {
        let r = play_record(game, profile, sc, &psi)?;
        for (_, g) in r.regrets {
            acc += S::of(nu * g);
        }
    }
    Ok(acc)
}

/// Partial profile: the actions of `profile` at the information sets that
/// any play or deviated play under Ψ and the scenarios visits. Absent
/// entries are "don't care".
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Skeleton {
    pub assignment: BTreeMap<InfoSetId, Action>,
}

impl Skeleton {
    pub fn support_size(&self) -> usize {
        self.assignment.len()
    }
}

impl ProfileLookup for Skeleton {
    fn action(&self, _player: usize, info_set: InfoSetId, _num_actions: usize) -> Option<Action> {
        self.assignment.get(&info_set).copied()
    }
}

pub fn skeleton_of<G, P>(game: &G, profile: &P, psi: &DeviationSet, scenarios: &ScenarioSample) -> Result<Skeleton>
where
    G: SuccinctGame + ?Sized,
    P: ProfileLookup + ?Sized,
{
    let tree = ProfileTree::new(game, profile, scenarios, psi)?;
    let assignment = tree
        .skeleton_ids()
        .map(|i| {
            let n = game.player(i).regular().expect("skeleton holds regular information sets");
            let a = profile
                .action(n, i, game.num_actions(i))
                .ok_or(crate::error::Error::MissingAction { player: n, info_set: i })?;
            Ok((i, a))
        })
        .collect::<Result<_>>()?;
    Ok(Skeleton { assignment })
}
