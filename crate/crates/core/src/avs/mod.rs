//! Active view selection: interpolation, filtering, aggregation, the
//! episode loop and comparison baselines.

pub mod baseline;
pub mod episode;
pub mod interpolate;
pub mod policy;
pub mod select;

pub use baseline::{baseline_select, BaselineKind, ViewSelection};
pub use episode::{run_episode, EpisodeConfig, EpisodeError, EpisodeStep, EpisodeTrajectory, Round};
pub use interpolate::{interpolate, interpolation_weights};
pub use policy::{AggregatePolicy, FilterPolicy};
pub use select::{aggregate, argmax_alive, filter_redundant, select_next, CandidateSet, Selection};
