//! Multi-expert anomaly detection with gated activation analysis.
//!
//! A shared encoder feeds a bank of expert decoder heads; a shared alarm
//! network scores the hidden activations of each encoder+expert path, and a
//! softmax gating network (with a short-cut entry that feeds the output
//! directly) fuses the per-expert scores into one anomaly score in `[0, 1]`.
//! The crate also ships the surrounding experiment machinery: data loading
//! and splitting protocols, cluster assignment strategies, two-phase
//! training, a plain autoencoder baseline, and threshold-free metrics.

pub mod baseline;
pub mod clustering;
pub mod datasets;
pub mod error;
pub mod metrics;
pub mod model;
pub mod nn;
pub mod persist;
pub mod trainer;

pub use error::{Error, Result};
