mod brute;
mod candidates;
mod online;

pub use brute::{brute_force_knn, brute_force_knn_among, brute_force_pbf};
pub use candidates::CandidateSet;
pub use online::{online_query, DEFAULT_EXPANSION};

pub use crate::index::static_query;
