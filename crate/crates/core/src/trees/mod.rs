//! Sample-restricted game trees: the deviation tree with its best-deviation
//! dynamic program, per-profile play records used by the sampler, and
//! best-response tree measurements.

mod best_response;
mod deviation_tree;
mod profile_tree;

pub use best_response::{best_response_complexity, best_response_tree_size};
pub use deviation_tree::{
    build_deviation_tree, BestDeviationResult, DeviationTree, NodeLabel, TreeNode, TriggerRecord,
    DEFAULT_NODE_BUDGET,
};
pub use profile_tree::{
    evaluate_regrets, play_record, regret_of, skeleton_of, PlayRecord, ProfileTree, Skeleton, Undo,
};
