//! Simultaneous-move game on an L×L grid.
//!
//! Every cell is a player with three actions. For each ordered pair of grid
//! neighbors `(p, q)` there is a 3×3 matrix `M[p,q]`, and player `p` receives
//! `Σ_q M[p,q][a_p][a_q]` over its neighbors. Players move in row-major order
//! without observing earlier moves.

use serde::{Deserialize, Serialize};

use crate::efg::{Action, GameType, InfoSetId, PlayerId, SuccinctGame};
use crate::error::{Error, Result};
use crate::hash::{hash2, unit_interval};

pub const GRID_ACTIONS: usize = 3;

pub type PayoffMatrix = [[f64; GRID_ACTIONS]; GRID_ACTIONS];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridGameSpec {
    pub side: usize,
    pub payoff_seed: u64,
}

#[derive(Clone, Debug)]
pub struct GridGame {
    spec: GridGameSpec,
    /// Per player, `(neighbor, matrix index)`.
    neighbors: Vec<Vec<(usize, usize)>>,
    matrices: Vec<PayoffMatrix>,
    r_max: f64,
}

pub fn build_grid_game(spec: GridGameSpec) -> Result<GridGame> {
    if spec.side < 2 {
        return Err(Error::InvalidSpec(format!("grid side must be at least 2, got {}", spec.side)));
    }
    if spec.side > 255 {
        return Err(Error::InvalidSpec(format!("grid side {} too large", spec.side)));
    }
    let neighbors = neighbor_lists(spec.side);
    let pairs: usize = neighbors.iter().map(Vec::len).sum();
    let matrices = (0..pairs)
        .map(|m| {
            let mut mat = [[0.0; GRID_ACTIONS]; GRID_ACTIONS];
            for (r, row) in mat.iter_mut().enumerate() {
                for (c, x) in row.iter_mut().enumerate() {
                    let key = (m * GRID_ACTIONS + r) * GRID_ACTIONS + c;
                    *x = unit_interval(hash2(spec.payoff_seed, key as u64));
                }
            }
            mat
        })
        .collect();
    Ok(GridGame::assemble(spec, neighbors, matrices))
}

fn neighbor_lists(side: usize) -> Vec<Vec<(usize, usize)>> {
    let mut next_matrix = 0;
    let mut out = Vec::with_capacity(side * side);
    for r in 0..side {
        for c in 0..side {
            let mut list = Vec::with_capacity(4);
            let mut push = |q: usize| {
                list.push((q, next_matrix));
                next_matrix += 1;
            };
            if r > 0 {
                push((r - 1) * side + c);
            }
            if c > 0 {
                push(r * side + c - 1);
            }
            if c + 1 < side {
                push(r * side + c + 1);
            }
            if r + 1 < side {
                push((r + 1) * side + c);
            }
            out.push(list);
        }
    }
    out
}

impl GridGame {
    fn assemble(spec: GridGameSpec, neighbors: Vec<Vec<(usize, usize)>>, matrices: Vec<PayoffMatrix>) -> Self {
        let spread = |m: &PayoffMatrix| {
            let flat = m.iter().flatten();
            flat.clone().copied().fold(f64::NEG_INFINITY, f64::max) - flat.copied().fold(f64::INFINITY, f64::min)
        };
        let r_max = neighbors
            .iter()
            .map(|list| list.iter().map(|&(_, m)| spread(&matrices[m])).sum::<f64>())
            .fold(0.0, f64::max);
        Self {
            spec,
            neighbors,
            matrices,
            r_max,
        }
    }

    /// Same topology with caller-supplied matrices, in the order of
    /// [`GridGame::neighbors`].
    pub fn with_matrices(side: usize, matrices: Vec<PayoffMatrix>) -> Result<Self> {
        let base = build_grid_game(GridGameSpec { side, payoff_seed: 0 })?;
        if matrices.len() != base.matrices.len() {
            return Err(Error::InvalidSpec(format!(
                "expected {} matrices, got {}",
                base.matrices.len(),
                matrices.len()
            )));
        }
        Ok(Self::assemble(base.spec, base.neighbors, matrices))
    }

    /// Every payoff zero.
    pub fn zeroed(side: usize) -> Result<Self> {
        let pairs = neighbor_lists(side.max(2)).iter().map(Vec::len).sum();
        Self::with_matrices(side, vec![[[0.0; GRID_ACTIONS]; GRID_ACTIONS]; pairs])
    }

    pub fn side(&self) -> usize {
        self.spec.side
    }

    pub fn players(&self) -> usize {
        self.spec.side * self.spec.side
    }

    pub fn neighbors(&self, player: usize) -> &[(usize, usize)] {
        &self.neighbors[player]
    }

    pub fn matrix(&self, index: usize) -> &PayoffMatrix {
        &self.matrices[index]
    }

    /// Payoff of every player under a full action vector.
    pub fn payoffs(&self, actions: &[u8]) -> Vec<f64> {
        self.neighbors
            .iter()
            .enumerate()
            .map(|(p, list)| {
                list.iter()
                    .map(|&(q, m)| self.matrices[m][actions[p] as usize][actions[q] as usize])
                    .sum()
            })
            .collect()
    }
}

impl SuccinctGame for GridGame {
    /// Actions chosen so far, in row-major player order.
    type Node = Vec<u8>;

    fn game_type(&self) -> GameType {
        GameType {
            gamma: (GRID_ACTIONS * self.players()) as u64,
            r_max: self.r_max,
        }
    }

    fn num_players(&self) -> usize {
        self.players()
    }

    fn root(&self) -> Vec<u8> {
        Vec::new()
    }

    fn info_set(&self, node: &Vec<u8>) -> Option<InfoSetId> {
        (node.len() < self.players()).then_some(node.len() as InfoSetId)
    }

    fn player(&self, info_set: InfoSetId) -> PlayerId {
        PlayerId::Regular(info_set as usize)
    }

    fn num_actions(&self, _info_set: InfoSetId) -> usize {
        GRID_ACTIONS
    }

    fn next(&self, node: &Vec<u8>, action: Action) -> Vec<u8> {
        debug_assert!(action < GRID_ACTIONS);
        let mut out = Vec::with_capacity(self.players());
        out.extend_from_slice(node);
        out.push(action as u8);
        out
    }

    fn nature_probability(&self, _info_set: InfoSetId, _action: Action) -> f64 {
        panic!("the grid game has no nature moves")
    }

    fn utility(&self, leaf: &Vec<u8>) -> Vec<f64> {
        debug_assert_eq!(leaf.len(), self.players());
        self.payoffs(leaf)
    }

    fn nature_info_set_count(&self) -> Option<u64> {
        Some(0)
    }

    fn precedes(&self, _from: InfoSetId, _to: InfoSetId) -> Option<bool> {
        Some(false)
    }

    fn name(&self) -> String {
        "grid".into()
    }

    fn parameters(&self) -> serde_json::Value {
        serde_json::to_value(self.spec).unwrap_or_default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_is_three_per_cell() {
        let g = build_grid_game(GridGameSpec { side: 5, payoff_seed: 3 }).unwrap();
        assert_eq!(g.game_type().gamma, 75);
        assert!(build_grid_game(GridGameSpec { side: 1, payoff_seed: 3 }).is_err());
    }

    #[test]
    fn corner_payoff_is_two_lookups() {
        let g = build_grid_game(GridGameSpec { side: 3, payoff_seed: 11 }).unwrap();
        let actions = [2u8, 0, 1, 1, 2, 0, 0, 1, 2];
        let corner = g.neighbors(0);
        assert_eq!(corner.iter().map(|&(q, _)| q).collect::<Vec<_>>(), vec![1, 3]);
        let expected = g.matrix(corner[0].1)[2][0] + g.matrix(corner[1].1)[2][1];
        assert_eq!(g.utility(&actions.to_vec())[0], expected);
    }

    #[test]
    fn matrices_are_reproducible_and_bounded() {
        let a = build_grid_game(GridGameSpec { side: 3, payoff_seed: 5 }).unwrap();
        let b = build_grid_game(GridGameSpec { side: 3, payoff_seed: 5 }).unwrap();
        let c = build_grid_game(GridGameSpec { side: 3, payoff_seed: 6 }).unwrap();
        assert_eq!(a.matrices, b.matrices);
        assert_ne!(a.matrices, c.matrices);
        assert!(a.matrices.iter().flatten().flatten().all(|&x| (0.0..1.0).contains(&x)));
        assert_eq!(a.matrices.len(), 24);
    }

    #[test]
    fn zeroed_game_pays_nothing() {
        let g = GridGame::zeroed(2).unwrap();
        assert_eq!(g.utility(&vec![0, 1, 2, 1]), vec![0.0; 4]);
        assert_eq!(g.game_type().r_max, 0.0);
    }
}
