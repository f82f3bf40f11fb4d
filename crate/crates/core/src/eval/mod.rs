//! Evaluation harness: metrics, synthetic scenes, baselines, sweeps and timing.

pub mod metrics;
pub mod synth;
pub mod harness;
