//! Three-player Indian poker with `C` cards.
//!
//! Each player antes 1 and sees the other two cards but not their own. In
//! turn order players pass or bet 1; after the first bet every other player
//! decides once more. Among the bettors the highest card takes the pot, and
//! if nobody bets the antes are returned.
//!
//! Information set ids are bit-packed:
//!
//! | bits   | regular player            | nature               |
//! |--------|---------------------------|----------------------|
//! | 60..64 | tag 1                     | tag 2                |
//! | 56..60 | player                    | deal index           |
//! | 48..56 | lower-indexed other card  | -                    |
//! | 40..48 | higher-indexed other card | -                    |
//! | 8..16  | history length            | first dealt card     |
//! | 0..8   | history bits (1 = bet)    | second dealt card    |

use serde::{Deserialize, Serialize};

use crate::efg::{Action, GameType, InfoSetId, PlayerId, SuccinctGame};
use crate::error::{Error, Result};

pub const PASS: Action = 0;
pub const BET: Action = 1;

const TAG_PLAYER: u64 = 1 << 60;
const TAG_NATURE: u64 = 2 << 60;
const TAG_MASK: u64 = 0xf << 60;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndianPokerSpec {
    pub cards: u8,
}

/// Game position. Cards are `1..=C`, with 0 meaning "not dealt yet".
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PokerNode {
    pub cards: [u8; 3],
    pub dealt: u8,
    pub history: u8,
    pub len: u8,
}

#[derive(Clone, Debug)]
pub struct IndianPoker {
    cards: u8,
}

pub fn build_indian_poker(spec: IndianPokerSpec) -> Result<IndianPoker> {
    if spec.cards < 3 {
        return Err(Error::InvalidSpec(format!(
            "Indian poker needs at least 3 cards, got {}",
            spec.cards
        )));
    }
    if spec.cards > 250 {
        return Err(Error::InvalidSpec(format!("card count {} too large", spec.cards)));
    }
    Ok(IndianPoker { cards: spec.cards })
}

fn first_bet(history: u8, len: u8) -> Option<u8> {
    (0..len).find(|&k| history >> k & 1 == 1)
}

fn is_terminal(history: u8, len: u8) -> bool {
    match first_bet(history, len) {
        None => len == 3,
        Some(k) => len == k + 3,
    }
}

impl IndianPoker {
    pub fn card_count(&self) -> u8 {
        self.cards
    }

    /// Node after dealing `cards` to players 0, 1, 2.
    pub fn dealt(&self, cards: [u8; 3]) -> PokerNode {
        PokerNode {
            cards,
            dealt: 3,
            history: 0,
            len: 0,
        }
    }

    fn remaining(&self, node_cards: &[u8]) -> impl Iterator<Item = u8> + '_ {
        let used: Vec<u8> = node_cards.to_vec();
        (1..=self.cards).filter(move |c| !used.contains(c))
    }

    fn player_info_set(player: usize, cards: [u8; 3], history: u8, len: u8) -> InfoSetId {
        let (a, b) = match player {
            0 => (cards[1], cards[2]),
            1 => (cards[0], cards[2]),
            _ => (cards[0], cards[1]),
        };
        TAG_PLAYER
            | (player as u64) << 56
            | (a as u64) << 48
            | (b as u64) << 40
            | (len as u64) << 8
            | history as u64
    }

    /// Decodes a regular information set id into (player, other cards, history, length).
    pub fn decode(info_set: InfoSetId) -> Option<(usize, (u8, u8), u8, u8)> {
        if info_set & TAG_MASK != TAG_PLAYER {
            return None;
        }
        Some((
            (info_set >> 56 & 0xf) as usize,
            ((info_set >> 48 & 0xff) as u8, (info_set >> 40 & 0xff) as u8),
            (info_set & 0xff) as u8,
            (info_set >> 8 & 0xff) as u8,
        ))
    }
}

impl SuccinctGame for IndianPoker {
    type Node = PokerNode;

    fn game_type(&self) -> GameType {
        let c = self.cards as u64;
        GameType {
            gamma: 24 * c * (c - 1),
            // Largest spread: +4 for winning a full pot against -2 for losing it.
            r_max: 6.0,
        }
    }

    fn num_players(&self) -> usize {
        3
    }

    fn root(&self) -> PokerNode {
        PokerNode {
            cards: [0; 3],
            dealt: 0,
            history: 0,
            len: 0,
        }
    }

    fn info_set(&self, node: &PokerNode) -> Option<InfoSetId> {
        match node.dealt {
            0 => Some(TAG_NATURE),
            1 => Some(TAG_NATURE | 1 << 56 | (node.cards[0] as u64) << 8),
            2 => Some(TAG_NATURE | 2 << 56 | (node.cards[0] as u64) << 8 | node.cards[1] as u64),
            _ if is_terminal(node.history, node.len) => None,
            _ => {
                let player = (node.len % 3) as usize;
                Some(Self::player_info_set(player, node.cards, node.history, node.len))
            }
        }
    }

    fn player(&self, info_set: InfoSetId) -> PlayerId {
        if info_set & TAG_MASK == TAG_NATURE {
            PlayerId::Nature
        } else {
            PlayerId::Regular((info_set >> 56 & 0xf) as usize)
        }
    }

    fn num_actions(&self, info_set: InfoSetId) -> usize {
        if info_set & TAG_MASK == TAG_NATURE {
            (self.cards - (info_set >> 56 & 0xf) as u8) as usize
        } else {
            2
        }
    }

    fn next(&self, node: &PokerNode, action: Action) -> PokerNode {
        let mut out = *node;
        if node.dealt < 3 {
            let k = node.dealt as usize;
            let card = self
                .remaining(&node.cards[..k])
                .nth(action)
                .expect("deal action within remaining cards");
            out.cards[k] = card;
            out.dealt += 1;
        } else {
            debug_assert!(action < 2 && !is_terminal(node.history, node.len));
            out.history |= (action as u8) << node.len;
            out.len += 1;
        }
        out
    }

    fn nature_probability(&self, info_set: InfoSetId, action: Action) -> f64 {
        let n = self.num_actions(info_set);
        if action < n {
            1.0 / n as f64
        } else {
            0.0
        }
    }

    fn utility(&self, leaf: &PokerNode) -> Vec<f64> {
        let mut bet = [false; 3];
        for k in 0..leaf.len {
            if leaf.history >> k & 1 == 1 {
                bet[(k % 3) as usize] = true;
            }
        }
        let bettors = bet.iter().filter(|&&b| b).count();
        if bettors == 0 {
            return vec![0.0; 3];
        }
        let pot = (2 * bettors + (3 - bettors)) as f64;
        let winner = (0..3)
            .filter(|&p| bet[p])
            .max_by_key(|&p| leaf.cards[p])
            .expect("at least one bettor");
        (0..3)
            .map(|p| {
                if p == winner {
                    pot - 2.0
                } else if bet[p] {
                    -2.0
                } else {
                    -1.0
                }
            })
            .collect()
    }

    fn nature_info_set_count(&self) -> Option<u64> {
        let c = self.cards as u64;
        Some(1 + c + c * (c - 1))
    }

    fn precedes(&self, from: InfoSetId, to: InfoSetId) -> Option<bool> {
        let (Some((pf, cf, hf, lf)), Some((pt, ct, ht, lt))) = (Self::decode(from), Self::decode(to)) else {
            return Some(false);
        };
        let mask = ((1u16 << lf) - 1) as u8;
        Some(pf == pt && cf == ct && lf < lt && ht & mask == hf)
    }

    fn name(&self) -> String {
        "poker".into()
    }

    fn parameters(&self) -> serde_json::Value {
        serde_json::json!({ "cards": self.cards })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn walk(g: &IndianPoker, cards: [u8; 3], actions: &[Action]) -> Vec<f64> {
        let mut node = g.dealt(cards);
        for &a in actions {
            node = g.next(&node, a);
        }
        assert!(g.info_set(&node).is_none(), "not a leaf: {node:?}");
        g.utility(&node)
    }

    #[test]
    fn showdowns() {
        let g = build_indian_poker(IndianPokerSpec { cards: 8 }).unwrap();
        assert_eq!(walk(&g, [7, 2, 5], &[PASS, PASS, PASS]), vec![0.0, 0.0, 0.0]);
        assert_eq!(walk(&g, [7, 2, 5], &[BET, PASS, BET]), vec![3.0, -1.0, -2.0]);
        let g4 = build_indian_poker(IndianPokerSpec { cards: 4 }).unwrap();
        assert_eq!(walk(&g4, [4, 1, 2], &[BET, BET, BET]), vec![4.0, -2.0, -2.0]);
        // Lone bettor collects both antes.
        assert_eq!(walk(&g4, [1, 3, 2], &[PASS, PASS, BET, PASS, PASS]), vec![-1.0, -1.0, 2.0]);
    }

    #[test]
    fn gamma_formula() {
        assert_eq!(build_indian_poker(IndianPokerSpec { cards: 8 }).unwrap().game_type().gamma, 1344);
        assert!(build_indian_poker(IndianPokerSpec { cards: 2 }).is_err());
    }

    #[test]
    fn longest_game_has_five_decisions() {
        let g = build_indian_poker(IndianPokerSpec { cards: 3 }).unwrap();
        let mut node = g.dealt([1, 2, 3]);
        let mut decisions = 0;
        for a in [PASS, PASS, BET, PASS, BET] {
            assert!(g.info_set(&node).is_some());
            node = g.next(&node, a);
            decisions += 1;
        }
        assert!(g.info_set(&node).is_none());
        assert_eq!(decisions, 5);
    }

    #[test]
    fn precedence_follows_history_prefix() {
        let g = build_indian_poker(IndianPokerSpec { cards: 4 }).unwrap();
        let first = g.info_set(&g.dealt([1, 2, 3])).unwrap();
        let mut node = g.dealt([1, 2, 3]);
        for a in [PASS, BET, PASS] {
            node = g.next(&node, a);
        }
        let second = g.info_set(&node).unwrap();
        assert_eq!(g.player(second), PlayerId::Regular(0));
        assert_eq!(g.precedes(first, second), Some(true));
        assert_eq!(g.precedes(second, first), Some(false));
        assert_eq!(g.precedes(first, first), Some(false));
    }
}
