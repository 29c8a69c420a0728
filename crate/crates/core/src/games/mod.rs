//! Benchmark games.

pub mod grid;
pub mod indian_poker;
pub mod job_market;

use serde::{Deserialize, Serialize};

pub use grid::{build_grid_game, GridGame, GridGameSpec};
pub use indian_poker::{build_indian_poker, IndianPoker, IndianPokerSpec};
pub use job_market::{build_job_market, JobMarket, JobMarketSpec};

/// Serializable selector for the benchmark games.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "game", rename_all = "lowercase")]
pub enum GameSpec {
    #[serde(rename = "jobmarket")]
    JobMarket(JobMarketSpec),
    Poker(IndianPokerSpec),
    Grid(GridGameSpec),
}

/// Runs `$body` with `$g` bound to the constructed game.
#[macro_export]
macro_rules! with_game {
    ($spec:expr, $g:ident => $body:expr) => {{
        match $spec {
            $crate::games::GameSpec::JobMarket(s) => {
                let $g = $crate::games::build_job_market(s);
                $body
            }
            $crate::games::GameSpec::Poker(s) => {
                let $g = $crate::games::build_indian_poker(s)?;
                $body
            }
            $crate::games::GameSpec::Grid(s) => {
                let $g = $crate::games::build_grid_game(s)?;
                $body
            }
        }
    }};
}
