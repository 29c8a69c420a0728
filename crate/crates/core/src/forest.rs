//! Explicit information-set structure of small games, recovered by walking
//! the full tree. Used for perfect-recall checks, reduced-strategy
//! enumeration and tests; never needed by the solver itself.

use std::collections::{BTreeMap, BTreeSet};

use crate::efg::{depth_exceeded, Action, InfoSetId, PlayerId, PureStrategy, SuccinctGame, DEFAULT_DEPTH_CAP};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct InfoSetRecord {
    pub owner: PlayerId,
    pub actions: usize,
    /// Owner's previous decision (information set, action) on every path
    /// into this set; `None` for the owner's first decision.
    pub parent: Option<(InfoSetId, Action)>,
}

#[derive(Clone, Debug)]
pub struct InfoSetForest {
    pub num_players: usize,
    pub records: BTreeMap<InfoSetId, InfoSetRecord>,
    /// `(info set, action)` → owner's information sets that can come next.
    pub children: BTreeMap<(InfoSetId, Action), Vec<InfoSetId>>,
    /// Per player, the information sets without an owner parent.
    pub roots: Vec<Vec<InfoSetId>>,
    /// Longest root-to-leaf path counted in decision nodes.
    pub depth: usize,
    pub node_count: usize,
    pub leaf_count: usize,
}

impl InfoSetForest {
    /// Walks the whole tree. Fails with `TooLarge` past `node_cap` nodes and
    /// with `MalformedGame` on imperfect recall or a nature information set
    /// repeated along a path.
    pub fn explore<G: SuccinctGame + ?Sized>(game: &G, node_cap: usize) -> Result<Self> {
        let n = game.num_players();
        let mut forest = InfoSetForest {
            num_players: n,
            records: BTreeMap::new(),
            children: BTreeMap::new(),
            roots: vec![Vec::new(); n],
            depth: 0,
            node_count: 0,
            leaf_count: 0,
        };
        let mut last = vec![None; n];
        let mut nature_path = Vec::new();
        forest.walk(game, &game.root(), &mut last, &mut nature_path, 0, node_cap)?;
        for ((from, _), kids) in forest.children.iter_mut() {
            kids.sort_unstable();
            kids.dedup();
            debug_assert!(forest.records.contains_key(from));
        }
        for roots in forest.roots.iter_mut() {
            roots.sort_unstable();
            roots.dedup();
        }
        Ok(forest)
    }

    fn walk<G: SuccinctGame + ?Sized>(
        &mut self,
        game: &G,
        node: &G::Node,
        last: &mut Vec<Option<(InfoSetId, Action)>>,
        nature_path: &mut Vec<InfoSetId>,
        depth: usize,
        node_cap: usize,
    ) -> Result<()> {
        self.node_count += 1;
        if self.node_count > node_cap {
            return Err(Error::TooLarge {
                what: "game tree".into(),
                cap: node_cap as u64,
            });
        }
        if depth > DEFAULT_DEPTH_CAP {
            return Err(depth_exceeded());
        }
        let Some(i) = game.info_set(node) else {
            self.leaf_count += 1;
            self.depth = self.depth.max(depth);
            return Ok(());
        };
        let owner = game.player(i);
        let actions = game.num_actions(i);
        match owner {
            PlayerId::Nature => {
                if nature_path.contains(&i) {
                    return Err(Error::MalformedGame(format!(
                        "nature information set {i:#x} repeats along a path"
                    )));
                }
                let total: f64 = (0..actions).map(|a| game.nature_probability(i, a)).sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(Error::MalformedGame(format!(
                        "nature probabilities at {i:#x} sum to {total}"
                    )));
                }
                self.register(i, owner, actions, None)?;
                nature_path.push(i);
                for a in 0..actions {
                    self.walk(game, &game.next(node, a), last, nature_path, depth + 1, node_cap)?;
                }
                nature_path.pop();
            }
            PlayerId::Regular(p) => {
                let parent = last[p];
                self.register(i, owner, actions, parent)?;
                match parent {
                    Some(key) => self.children.entry(key).or_default().push(i),
                    None => self.roots[p].push(i),
                }
                for a in 0..actions {
                    last[p] = Some((i, a));
                    self.walk(game, &game.next(node, a), last, nature_path, depth + 1, node_cap)?;
                }
                last[p] = parent;
            }
        }
        Ok(())
    }

    fn register(
        &mut self,
        i: InfoSetId,
        owner: PlayerId,
        actions: usize,
        parent: Option<(InfoSetId, Action)>,
    ) -> Result<()> {
        if actions < 2 && owner != PlayerId::Nature {
            return Err(Error::MalformedGame(format!(
                "information set {i:#x} has {actions} actions"
            )));
        }
        match self.records.get(&i) {
            None => {
                self.records.insert(i, InfoSetRecord { owner, actions, parent });
                Ok(())
            }
            Some(r) if r.owner != owner || r.actions != actions => Err(Error::MalformedGame(format!(
                "information set {i:#x} reported with inconsistent owner or action count"
            ))),
            Some(r) if owner != PlayerId::Nature && r.parent != parent => Err(Error::MalformedGame(format!(
                "imperfect recall at information set {i:#x}"
            ))),
            Some(_) => Ok(()),
        }
    }

    pub fn player_info_sets(&self, player: usize) -> impl Iterator<Item = (InfoSetId, &InfoSetRecord)> {
        self.records
            .iter()
            .filter(move |(_, r)| r.owner == PlayerId::Regular(player))
            .map(|(&i, r)| (i, r))
    }

    pub fn nature_info_set_count(&self) -> usize {
        self.records.values().filter(|r| r.owner == PlayerId::Nature).count()
    }

    /// Σ A_i over the information sets of one player.
    pub fn sequence_complexity_of(&self, player: usize) -> u64 {
        self.player_info_sets(player).map(|(_, r)| r.actions as u64).sum()
    }

    pub fn sequence_complexity(&self) -> u64 {
        (0..self.num_players).map(|n| self.sequence_complexity_of(n)).sum()
    }

    /// Whether `from` is a strict ancestor of `to` in the owner's forest.
    pub fn precedes(&self, from: InfoSetId, to: InfoSetId) -> bool {
        let mut cur = self.records.get(&to).and_then(|r| r.parent);
        while let Some((i, _)) = cur {
            if i == from {
                return true;
            }
            cur = self.records.get(&i).and_then(|r| r.parent);
        }
        false
    }

    /// Owner ancestors of `i`, nearest first, with the action taken there.
    pub fn ancestors(&self, i: InfoSetId) -> Vec<(InfoSetId, Action)> {
        let mut out = Vec::new();
        let mut cur = self.records.get(&i).and_then(|r| r.parent);
        while let Some(step) = cur {
            out.push(step);
            cur = self.records.get(&step.0).and_then(|r| r.parent);
        }
        out
    }

    /// All reduced strategies of the subforest below the given roots:
    /// every choice assignment that is defined exactly on the information
    /// sets reachable under its own choices.
    pub fn reduced_assignments(&self, roots: &[InfoSetId], cap: usize) -> Result<Vec<BTreeMap<InfoSetId, Action>>> {
        let mut acc: Vec<BTreeMap<InfoSetId, Action>> = vec![BTreeMap::new()];
        for &r in roots {
            let sub = self.subtree_assignments(r, cap)?;
            acc = product(&acc, &sub, cap)?;
        }
        Ok(acc)
    }

    fn subtree_assignments(&self, i: InfoSetId, cap: usize) -> Result<Vec<BTreeMap<InfoSetId, Action>>> {
        let rec = &self.records[&i];
        let mut out = Vec::new();
        for a in 0..rec.actions {
            let mut acc: Vec<BTreeMap<InfoSetId, Action>> = vec![BTreeMap::from([(i, a)])];
            if let Some(kids) = self.children.get(&(i, a)) {
                for &k in kids {
                    let sub = self.subtree_assignments(k, cap)?;
                    acc = product(&acc, &sub, cap)?;
                }
            }
            out.extend(acc);
            if out.len() > cap {
                return Err(too_many(cap));
            }
        }
        Ok(out)
    }

    /// Reduced strategies of one player.
    pub fn reduced_strategies(&self, player: usize, cap: usize) -> Result<Vec<PureStrategy>> {
        Ok(self
            .reduced_assignments(&self.roots[player], cap)?
            .into_iter()
            .map(|choices| PureStrategy { owner: player, choices })
            .collect())
    }

    /// Information sets of the owner in the subforest rooted at `i`, `i`
    /// included.
    pub fn descendants(&self, i: InfoSetId) -> BTreeSet<InfoSetId> {
        let mut out = BTreeSet::new();
        let mut stack = vec![i];
        while let Some(j) = stack.pop() {
            if out.insert(j) {
                for a in 0..self.records[&j].actions {
                    if let Some(kids) = self.children.get(&(j, a)) {
                        stack.extend(kids.iter().copied());
                    }
                }
            }
        }
        out
    }
}

fn too_many(cap: usize) -> Error {
    Error::TooLarge {
        what: "strategy enumeration".into(),
        cap: cap as u64,
    }
}

fn product(
    left: &[BTreeMap<InfoSetId, Action>],
    right: &[BTreeMap<InfoSetId, Action>],
    cap: usize,
) -> Result<Vec<BTreeMap<InfoSetId, Action>>> {
    if (left.len() as u128) * (right.len() as u128) > cap as u128 {
        return Err(too_many(cap));
    }
    let mut out = Vec::with_capacity(left.len() * right.len());
    for l in left {
        for r in right {
            let mut m = l.clone();
            m.extend(r.iter().map(|(&k, &v)| (k, v)));
            out.push(m);
        }
    }
    Ok(out)
}
