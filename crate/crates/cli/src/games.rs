use efce::games::grid::{build_grid_game, GridGame, GridGameSpec};
use efce::games::indian_poker::{build_indian_poker, IndianPoker, IndianPokerSpec};
use efce::games::job_market::{build_job_market, JobMarket, JobMarketSpec};
use efce::solver::EquilibriumCertificate;

use crate::config::{GameKind, GameSelector};
use crate::error::{CliError, CliResult};

pub enum BuiltGame {
    JobMarket(JobMarket),
    Poker(IndianPoker),
    Grid(GridGame),
}

/// Runs `$body` with `$g` bound to the concrete game.
macro_rules! with_game {
    ($game:expr, $g:ident => $body:expr) => {
        match $game {
            $crate::games::BuiltGame::JobMarket($g) => $body,
            $crate::games::BuiltGame::Poker($g) => $body,
            $crate::games::BuiltGame::Grid($g) => $body,
        }
    };
}
pub(crate) use with_game;

impl BuiltGame {
    pub fn build(selector: &GameSelector) -> CliResult<Self> {
        Ok(match selector.name {
            GameKind::Jobmarket => BuiltGame::JobMarket(build_job_market(JobMarketSpec::default())),
            GameKind::Poker => BuiltGame::Poker(build_indian_poker(IndianPokerSpec {
                cards: selector.cards,
            })?),
            GameKind::Grid => BuiltGame::Grid(build_grid_game(selector.grid_spec())?),
        })
    }

    /// The game a certificate was produced for.
    pub fn from_certificate(cert: &EquilibriumCertificate) -> CliResult<Self> {
        let bad = |e: serde_json::Error| CliError::Config(format!("certificate parameters: {e}"));
        Ok(match cert.game.as_str() {
            "jobmarket" => {
                let spec: JobMarketSpec = serde_json::from_value(cert.parameters.clone()).map_err(bad)?;
                BuiltGame::JobMarket(build_job_market(spec))
            }
            "poker" => {
                let spec: IndianPokerSpec = serde_json::from_value(cert.parameters.clone()).map_err(bad)?;
                BuiltGame::Poker(build_indian_poker(spec)?)
            }
            "grid" => {
                let spec: GridGameSpec = serde_json::from_value(cert.parameters.clone()).map_err(bad)?;
                BuiltGame::Grid(build_grid_game(spec)?)
            }
            other => return Err(CliError::Config(format!("unknown game {other:?} in certificate"))),
        })
    }
}
