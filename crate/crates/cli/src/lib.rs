//! Experiment orchestration for the gated multi-expert anomaly detector:
//! config-driven pipelines for clustering, training, scoring, comparison,
//! and report emission.

pub mod config;
pub mod pipeline;
pub mod report;
