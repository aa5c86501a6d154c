//! Workload-adaptive partial layouts and the candidate pool that switches between them.

mod kde;
mod partial;
mod pool;
mod sampling;
mod sizing;
mod spline;
mod window;

pub use kde::{kde_densities, representative_index, select_representative, silverman_bandwidth};
pub use partial::{
    cost_vector, estimate_query_cost, estimate_radius, generate_partial_layout, partial_cardinality, DisPartition,
    PartialLayout,
};
pub use pool::{
    cost_distance, read_snapshot, write_snapshot, EntrySnapshot, LayoutPool, LayoutSnapshot, PoolConfig, PoolEntry,
    PoolLayout, PoolSnapshot, SwitchOutcome, DEFAULT_ALPHA, DEFAULT_BETA, DEFAULT_EPSILON, DEFAULT_OPTIMIZED_COST,
};
pub use sampling::{sample_window_queries, time_biased_sample, DEFAULT_DECAY, DEFAULT_SAMPLE_SIZE};
pub use sizing::{optimal_partial_size, SizingParams, SizingSolution};
pub use spline::DistanceCdf;
pub use window::{SlidingWindow, DEFAULT_WINDOW_CAPACITY};
