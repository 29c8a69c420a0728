use crate::efg::{depth_exceeded, resolve_action, PlayerId, ProfileLookup, Scenario, SuccinctGame, DEFAULT_DEPTH_CAP};
use crate::error::Result;

/// Size of the best-response tree of `player` against one (profile,
/// scenario) pair: every action of `player` is expanded, everyone else
/// follows the pair.
pub fn best_response_tree_size<G, P>(game: &G, player: usize, profile: &P, scenario: &Scenario) -> Result<usize>
where
    G: SuccinctGame + ?Sized,
    P: ProfileLookup + ?Sized,
{
    let mut count = 0usize;
    let mut stack = vec![(game.root(), 0usize)];
    while let Some((node, depth)) = stack.pop() {
        if depth > DEFAULT_DEPTH_CAP {
            return Err(depth_exceeded());
        }
        count += 1;
        let Some(i) = game.info_set(&node) else { continue };
        if game.player(i) == PlayerId::Regular(player) {
            for b in 0..game.num_actions(i) {
                stack.push((game.next(&node, b), depth + 1));
            }
        } else {
            let (_, a) = resolve_action(game, i, profile, scenario)?;
            stack.push((game.next(&node, a), depth + 1));
        }
    }
    Ok(count)
}

/// Largest best-response tree of `player` over the probed pairs; a lower
/// bound on the best-response complexity, exact when every pair is probed.
pub fn best_response_complexity<G, P>(game: &G, player: usize, probes: &[(P, Scenario)]) -> Result<usize>
where
    G: SuccinctGame + ?Sized,
    P: ProfileLookup,
{
    assert!(!probes.is_empty(), "need at least one probe pair");
    let mut best = 0;
    for (profile, scenario) in probes {
        best = best.max(best_response_tree_size(game, player, profile, scenario)?);
    }
    Ok(best)
}
