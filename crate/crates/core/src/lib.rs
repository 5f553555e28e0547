//! Deterministic construction-site simulation core.

pub mod config;
pub mod events;
pub mod geometry;
pub mod metrics;
mod num_keys;
pub mod rng;
pub mod sync;
pub mod task;
pub mod types;
