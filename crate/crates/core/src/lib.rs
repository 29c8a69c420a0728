//! Approximate extensive-form correlated equilibria of succinct games.
//!
//! The solver maximizes entropy (optionally tilted toward a payoff direction)
//! subject to regret constraints on causal deviations, by coordinate descent
//! on the dual. Each round samples strategy profiles from the current
//! exponential-family distribution with a Metropolis-Hastings chain, finds the
//! deviation with the largest empirical regret by dynamic programming over a
//! sample-restricted deviation tree, and raises that deviation's dual weight.
//!
//! The numerical code is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases at the crate root fix it to `f64`.

pub mod deviations;
pub mod efg;
pub mod error;
pub mod forest;
pub mod games;
pub mod hash;
pub mod oracle;
pub mod sampler;
pub mod scalar;
pub(crate) mod serde_map;
pub mod solver;
pub mod trees;

pub use deviations::{apply, reachable, regret, CausalDeviation, DeviationSet, Trigger};
pub use efg::{
    enumerate_scenarios, expected_utility, play, reduce, sample_scenarios, Action, GameType, InfoSetDescriptor,
    InfoSetId, PlayerId, ProfileLookup, PureStrategy, ReducedStrategy, Scenario, ScenarioSample, StrategyProfile,
    SuccinctGame,
};
pub use error::{Error, Result};
pub use scalar::Scalar;

pub type DeviationTreeF64 = trees::DeviationTree<f64>;
pub type BestDeviationF64 = trees::BestDeviationResult<f64>;
pub type WeightedSampleF64 = sampler::WeightedSample<f64>;
pub type SolutionF64 = solver::Solution<f64>;
