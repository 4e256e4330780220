//! Detection and prioritisation of anomalous purchase transactions.
//!
//! The library works on unlabelled tabular purchase data (purchase order
//! line items). It combines univariate outlier detectors, target-encoded
//! k-means clustering with silhouette diagnostics, and an isolation forest
//! into a single prioritised review list, and can attribute individual
//! anomaly scores back to input features with Shapley values.
//!
//! Everything is deterministic: a single master seed fans out to every
//! randomised stage, and parallel execution (the `parallel` feature, on by
//! default) only uses order-preserving maps, so a run produces byte-identical
//! artifacts regardless of thread count.

pub mod clustering;
pub mod encoding;
pub mod ensemble;
pub mod error;
mod exec;
pub mod explain;
pub mod iforest;
pub mod ingest;
pub mod pipeline;
pub mod sampling;
pub mod seeding;
pub mod synthgen;
pub mod univariate;

pub use error::{Error, Result};
