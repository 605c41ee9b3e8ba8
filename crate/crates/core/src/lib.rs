//! Simulate volumetric segmentation labeling strategies under an effort
//! budget, and find the labeling trajectory that buys the most performance.

pub mod analysis;
pub mod effort;
pub mod error;
pub mod metrics;
pub mod plan;
pub mod plot;
pub mod rng;
pub mod runner;
pub mod store;
pub mod trainer;
pub mod trajectory;
pub mod virtue;

pub use error::{Error, Result};
