//! Workload-driven physical data layouts for range filtering and k-NN search.
//!
//! [`optimizer`] reorders a dataset for a static workload, [`dynamic`] keeps a
//! pool of partial layouts for a drifting workload, [`query`] executes
//! queries against either, and [`index`] holds the upper-level indexes.

pub mod dynamic;
pub mod error;
pub mod index;
pub mod model;
pub mod optimizer;
pub mod query;
mod spatial;
pub mod workload;

pub use error::{Error, Result};
