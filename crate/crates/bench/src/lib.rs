//! Seeded benchmark campaigns over test functions, strategies, batch sizes and
//! pool sizes, with summary statistics and resumable JSON-lines output.

pub mod campaign;
mod error;
pub mod external;
pub mod runner;
pub mod summary;

pub use campaign::{Campaign, Experiment, StrategyName};
pub use error::{BenchError, Result};
pub use external::ExternalSpec;
pub use runner::{run_campaign, CampaignOutcome, ReplicateRecord, RunConfig, Status, TimingRecord};
pub use summary::SummaryRow;
