use std::fmt::Write as _;

use rustc_hash::FxHashMap;

use crate::deviations::{CausalDeviation, Trigger};
use crate::efg::{Action, InfoSetId, PlayerId, ProfileLookup, ScenarioSample, SuccinctGame, DEFAULT_DEPTH_CAP};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Default cap on deviation tree nodes.
pub const DEFAULT_NODE_BUDGET: usize = 50_000_000;

const NO_PARENT: u32 = u32::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeLabel {
    Simulated,
    /// Inside the best-response subtree of the given trigger record.
    Deviated(u32),
}

#[derive(Clone, Debug)]
pub struct TreeNode<S> {
    pub parent: u32,
    pub label: NodeLabel,
    pub info_set: Option<InfoSetId>,
    pub player: Option<PlayerId>,
    /// Action count at decision nodes, 0 at leaves.
    pub actions: u32,
    /// Action on the edge from the parent; for deviated subtree roots, the
    /// suggested action that triggers them.
    pub action: Action,
    /// Total weight of the (profile, scenario) pairs reaching the node.
    pub weight: S,
    /// Deviated leaves: weight times the deviating player's utility.
    pub value: S,
    /// Deviated nodes of the deviating player: the nearest such ancestor in
    /// the same subtree and the action taken there.
    pub route: Option<(u32, Action)>,
}

#[derive(Clone, Debug)]
pub struct TriggerRecord<S> {
    pub trigger: Trigger,
    /// Weighted utility of the deviating player without deviating, over the
    /// pairs that receive this suggestion.
    pub base: S,
    pub roots: Vec<u32>,
}

/// Simulation tree of a weighted profile sample against a scenario sample,
/// with a best-response subtree hanging off every simulated decision of a
/// regular player, one per suggested action.
#[derive(Clone, Debug)]
pub struct DeviationTree<S> {
    nodes: Vec<TreeNode<S>>,
    triggers: Vec<TriggerRecord<S>>,
    num_players: usize,
    pairs: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BestDeviationResult<S> {
    pub deviation: CausalDeviation,
    pub empirical_regret: S,
    /// Best regret per trigger, sorted by (player, info set, action).
    pub table: Vec<(Trigger, S)>,
    /// Nodes and table entries touched by the dynamic program.
    pub dp_visits: usize,
}

struct Builder<'a, S, G: SuccinctGame + ?Sized, P> {
    game: &'a G,
    profiles: &'a [P],
    scenarios: &'a ScenarioSample,
    pair_weight: Vec<S>,
    m_nat: usize,
    budget: usize,
    nodes: Vec<TreeNode<S>>,
    leaf_utils: Vec<Vec<f64>>,
    pair_leaf: Vec<u32>,
    triggers: Vec<TriggerRecord<S>>,
    trigger_index: FxHashMap<(InfoSetId, Action), u32>,
}

/// Builds the deviation tree for profiles `profiles` with probabilities
/// `weights` (summing to one) against `scenarios`.
pub fn build_deviation_tree<S, G, P>(
    game: &G,
    profiles: &[P],
    weights: &[S],
    scenarios: &ScenarioSample,
    node_budget: usize,
) -> Result<DeviationTree<S>>
where
    S: Scalar,
    G: SuccinctGame + ?Sized,
    P: ProfileLookup,
{
    assert!(!profiles.is_empty() && profiles.len() == weights.len());
    assert!(!scenarios.is_empty());
    let m_nat = scenarios.len();
    let pair_count = profiles.len() * m_nat;
    if pair_count > u32::MAX as usize {
        return Err(Error::SizeExceeded { budget: u32::MAX as usize });
    }
    let mut pair_weight = Vec::with_capacity(pair_count);
    for &q in weights {
        for &nu in &scenarios.weights {
            pair_weight.push(q * S::of(nu));
        }
    }
    let mut b = Builder {
        game,
        profiles,
        scenarios,
        pair_weight,
        m_nat,
        budget: node_budget.min(NO_PARENT as usize),
        nodes: Vec::new(),
        leaf_utils: Vec::new(),
        pair_leaf: vec![u32::MAX; pair_count],
        triggers: Vec::new(),
        trigger_index: FxHashMap::default(),
    };
    let all: Vec<u32> = (0..pair_count as u32).collect();
    b.simulate(game.root(), all, NO_PARENT, usize::MAX, 0)?;
    Ok(DeviationTree {
        nodes: b.nodes,
        triggers: b.triggers,
        num_players: game.num_players(),
        pairs: pair_count,
    })
}

impl<S, G, P> Builder<'_, S, G, P>
where
    S: Scalar,
    G: SuccinctGame + ?Sized,
    P: ProfileLookup,
{
    fn push(&mut self, node: TreeNode<S>) -> Result<u32> {
        if self.nodes.len() >= self.budget {
            return Err(Error::SizeExceeded { budget: self.budget });
        }
        self.nodes.push(node);
        Ok((self.nodes.len() - 1) as u32)
    }

    fn weight_of(&self, pairs: &[u32]) -> S {
        pairs.iter().map(|&p| self.pair_weight[p as usize]).sum()
    }

    /// Splits pairs by the action they take at a non-deviating decision.
    fn split(&self, i: InfoSetId, player: PlayerId, pairs: &[u32]) -> Result<Vec<Vec<u32>>> {
        let a_count = self.game.num_actions(i);
        let mut buckets = vec![Vec::new(); a_count];
        for &p in pairs {
            let a = match player {
                PlayerId::Nature => self.scenarios.scenarios[p as usize % self.m_nat].action(self.game, i)?,
                PlayerId::Regular(n) => self.profiles[p as usize / self.m_nat]
                    .action(n, i, a_count)
                    .ok_or(Error::MissingAction { player: n, info_set: i })?,
            };
            buckets[a].push(p);
        }
        Ok(buckets)
    }

    fn simulate(&mut self, node: G::Node, pairs: Vec<u32>, parent: u32, action: Action, depth: usize) -> Result<()> {
        if depth > DEFAULT_DEPTH_CAP {
            return Err(crate::efg::depth_exceeded());
        }
        let info_set = self.game.info_set(&node);
        let player = info_set.map(|i| self.game.player(i));
        let weight = self.weight_of(&pairs);
        let id = self.push(TreeNode {
            parent,
            label: NodeLabel::Simulated,
            info_set,
            player,
            actions: info_set.map_or(0, |i| self.game.num_actions(i) as u32),
            action,
            weight,
            value: S::zero(),
            route: None,
        })?;
        let Some(i) = info_set else {
            let leaf = self.leaf_utils.len() as u32;
            self.leaf_utils.push(self.game.utility(&node));
            for &p in &pairs {
                self.pair_leaf[p as usize] = leaf;
            }
            return Ok(());
        };
        let player = player.expect("decision node has a player");
        let buckets = self.split(i, player, &pairs)?;
        drop(pairs);
        for (a, bucket) in buckets.iter().enumerate() {
            if !bucket.is_empty() {
                self.simulate(self.game.next(&node, a), bucket.clone(), id, a, depth + 1)?;
            }
        }
        if let PlayerId::Regular(n) = player {
            for (a, bucket) in buckets.iter().enumerate() {
                if bucket.is_empty() {
                    continue;
                }
                let t = self.trigger_record(Trigger {
                    player: n,
                    info_set: i,
                    action: a,
                });
                let base: S = bucket
                    .iter()
                    .map(|&p| self.pair_weight[p as usize] * S::of(self.leaf_utils[self.pair_leaf[p as usize] as usize][n]))
                    .sum();
                self.triggers[t as usize].base += base;
                let root = self.deviate(node.clone(), bucket, t, n, id, a, None, depth)?;
                self.triggers[t as usize].roots.push(root);
            }
        }
        Ok(())
    }

    fn trigger_record(&mut self, trigger: Trigger) -> u32 {
        let next = self.triggers.len() as u32;
        let t = *self.trigger_index.entry((trigger.info_set, trigger.action)).or_insert(next);
        if t == next {
            self.triggers.push(TriggerRecord {
                trigger,
                base: S::zero(),
                roots: Vec::new(),
            });
        }
        t
    }

    #[allow(clippy::too_many_arguments)]
    fn deviate(
        &mut self,
        node: G::Node,
        pairs: &[u32],
        t: u32,
        owner: usize,
        parent: u32,
        action: Action,
        route: Option<(u32, Action)>,
        depth: usize,
    ) -> Result<u32> {
        if depth > DEFAULT_DEPTH_CAP {
            return Err(crate::efg::depth_exceeded());
        }
        let info_set = self.game.info_set(&node);
        let player = info_set.map(|i| self.game.player(i));
        let weight = self.weight_of(pairs);
        let value = match info_set {
            None => weight * S::of(self.game.utility(&node)[owner]),
            Some(_) => S::zero(),
        };
        let is_owner = player == Some(PlayerId::Regular(owner));
        let id = self.push(TreeNode {
            parent,
            label: NodeLabel::Deviated(t),
            info_set,
            player,
            actions: info_set.map_or(0, |i| self.game.num_actions(i) as u32),
            action,
            weight,
            value,
            route: if is_owner { route } else { None },
        })?;
        let (Some(i), Some(player)) = (info_set, player) else {
            return Ok(id);
        };
        if is_owner {
            for b in 0..self.game.num_actions(i) {
                self.deviate(self.game.next(&node, b), pairs, t, owner, id, b, Some((id, b)), depth + 1)?;
            }
        } else {
            let buckets = self.split(i, player, pairs)?;
            for (a, bucket) in buckets.iter().enumerate() {
                if !bucket.is_empty() {
                    self.deviate(self.game.next(&node, a), bucket, t, owner, id, a, route, depth + 1)?;
                }
            }
        }
        Ok(id)
    }
}

/// Per (trigger, information set) aggregate of the dynamic program.
struct Entry<S> {
    info_set: InfoSetId,
    q: Vec<S>,
    children: Vec<Vec<u32>>,
    parent: Option<Option<(u32, Action)>>,
}

impl<S: Scalar> DeviationTree<S> {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[TreeNode<S>] {
        &self.nodes
    }

    pub fn triggers(&self) -> &[TriggerRecord<S>] {
        &self.triggers
    }

    pub fn simulated_len(&self) -> usize {
        self.nodes.iter().filter(|n| n.label == NodeLabel::Simulated).count()
    }

    pub fn num_players(&self) -> usize {
        self.num_players
    }

    pub fn pair_count(&self) -> usize {
        self.pairs
    }

    /// Approximate heap footprint.
    pub fn memory_bytes(&self) -> usize {
        self.nodes.capacity() * std::mem::size_of::<TreeNode<S>>()
            + self
                .triggers
                .iter()
                .map(|t| std::mem::size_of::<TriggerRecord<S>>() + t.roots.capacity() * 4)
                .sum::<usize>()
    }

    /// Maximizes empirical regret over all causal deviations realizable in
    /// the tree, optionally for one player only.
    ///
    /// One reverse pass over the node arena accumulates, for every trigger and
    /// every information set of the deviating player inside its subtrees, the
    /// weighted utility reached directly (without passing another decision of
    /// that player) after each action. Perfect recall makes these sets a
    /// forest, so the best deviation strategy is a bottom-up maximization.
    pub fn best_deviation(&self, player_filter: Option<usize>) -> Result<BestDeviationResult<S>> {
        let wanted = |t: u32| player_filter.is_none_or(|p| self.triggers[t as usize].trigger.player == p);
        let mut imm = vec![S::zero(); self.nodes.len()];
        let mut entries: Vec<Entry<S>> = Vec::new();
        let mut index: FxHashMap<(u32, InfoSetId), u32> = FxHashMap::default();
        let mut visits = 0usize;

        let mut entry_of = |entries: &mut Vec<Entry<S>>, t: u32, i: InfoSetId, actions: usize| -> u32 {
            *index.entry((t, i)).or_insert_with(|| {
                entries.push(Entry {
                    info_set: i,
                    q: vec![S::zero(); actions],
                    children: vec![Vec::new(); actions],
                    parent: None,
                });
                (entries.len() - 1) as u32
            })
        };

        for x in (0..self.nodes.len()).rev() {
            let node = &self.nodes[x];
            let NodeLabel::Deviated(t) = node.label else { continue };
            if !wanted(t) {
                continue;
            }
            visits += 1;
            let owner = PlayerId::Regular(self.triggers[t as usize].trigger.player);
            match (node.info_set, node.player) {
                (None, _) => imm[x] = node.value,
                (Some(i), Some(p)) if p == owner => {
                    let actions = node.actions as usize;
                    let e = entry_of(&mut entries, t, i, actions);
                    let parent = match node.route {
                        None => None,
                        Some((z, b)) => {
                            let zi = self.nodes[z as usize].info_set.expect("owner ancestor has an info set");
                            let za = self.nodes[z as usize].actions as usize;
                            let pe = entry_of(&mut entries, t, zi, za);
                            Some((pe, b))
                        }
                    };
                    match entries[e as usize].parent {
                        None => {
                            entries[e as usize].parent = Some(parent);
                            if let Some((pe, b)) = parent {
                                entries[pe as usize].children[b].push(e);
                            }
                        }
                        Some(known) if known != parent => {
                            return Err(Error::MalformedGame(format!(
                                "imperfect recall at information set {i:#x}"
                            )));
                        }
                        Some(_) => {}
                    }
                    continue;
                }
                _ => {}
            }
            let p = node.parent as usize;
            let parent = &self.nodes[p];
            if parent.label == NodeLabel::Simulated {
                continue;
            }
            if parent.player == Some(owner) {
                let pi = parent.info_set.expect("decision node");
                let e = entry_of(&mut entries, t, pi, parent.actions as usize);
                entries[e as usize].q[node.action] += imm[x];
            } else {
                let v = imm[x];
                imm[p] += v;
            }
        }

        let mut memo: Vec<Option<S>> = vec![None; entries.len()];
        let mut table = Vec::new();
        let mut order: Vec<u32> = (0..self.triggers.len() as u32).filter(|&t| wanted(t)).collect();
        order.sort_by_key(|&t| self.triggers[t as usize].trigger);
        let mut best: Option<(u32, S)> = None;
        for &t in &order {
            let rec = &self.triggers[t as usize];
            let root = index[&(t, rec.trigger.info_set)];
            let v = value(&entries, root, &mut memo, &mut visits);
            let r = v - rec.base;
            table.push((rec.trigger, r));
            if r > S::zero() && best.is_none_or(|(_, b)| r > b) {
                best = Some((t, r));
            }
        }
        let (deviation, empirical_regret) = match best {
            None => (CausalDeviation::Identity, S::zero()),
            Some((t, r)) => {
                let trigger = self.triggers[t as usize].trigger;
                let mut dev = std::collections::BTreeMap::new();
                let mut stack = vec![index[&(t, trigger.info_set)]];
                while let Some(e) = stack.pop() {
                    let b = argmax(&entries, e, &mut memo, &mut visits);
                    dev.insert(entries[e as usize].info_set, b);
                    stack.extend(entries[e as usize].children[b].iter().copied());
                }
                (CausalDeviation::Triggered { trigger, dev }, r)
            }
        };
        Ok(BestDeviationResult {
            deviation,
            empirical_regret,
            table,
            dp_visits: visits,
        })
    }

    /// Line-oriented dump: `id parent label weight`, with `S` for simulated
    /// nodes and `D<player>` for deviated ones.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (id, n) in self.nodes.iter().enumerate() {
            let parent = if n.parent == NO_PARENT { "-".to_string() } else { n.parent.to_string() };
            let label = match n.label {
                NodeLabel::Simulated => "S".to_string(),
                NodeLabel::Deviated(t) => format!("D{}", self.triggers[t as usize].trigger.player),
            };
            let _ = writeln!(out, "{id} {parent} {label} {}", n.weight);
        }
        out
    }
}

fn value<S: Scalar>(entries: &[Entry<S>], e: u32, memo: &mut [Option<S>], visits: &mut usize) -> S {
    if let Some(v) = memo[e as usize] {
        return v;
    }
    *visits += 1;
    let entry = &entries[e as usize];
    let mut best = S::neg_infinity();
    for (b, kids) in entry.children.iter().enumerate() {
        let mut v = entry.q[b];
        for &c in kids {
            v += value(entries, c, memo, visits);
        }
        if v > best {
            best = v;
        }
    }
    memo[e as usize] = Some(best);
    best
}

fn argmax<S: Scalar>(entries: &[Entry<S>], e: u32, memo: &mut [Option<S>], visits: &mut usize) -> Action {
    let entry = &entries[e as usize];
    let mut best = (0, S::neg_infinity());
    for (b, kids) in entry.children.iter().enumerate() {
        let mut v = entry.q[b];
        for &c in kids {
            v += value(entries, c, memo, visits);
        }
        if v > best.1 {
            best = (b, v);
        }
    }
    best.0
}
