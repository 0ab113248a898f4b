//! Fitness-guided trigger search over a black-box model pair.

mod engine;
pub mod fitness;
mod oracle;
pub mod select;

pub use engine::{
    run_trigger_search, run_trigger_search_with_store, SearchConfig, SearchMode, TrialReport,
};
pub(crate) use engine::{check_seed, Budget};
pub use fitness::{distance, fitness, StateStore};
pub use oracle::{ModelPairOracle, Observation};
pub use select::{acceptance_probability, rank_order, select_operator, Proposal, Ranking};
