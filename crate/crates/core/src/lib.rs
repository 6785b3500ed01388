//! Explainable gait classification toolkit.
//!
//! The crate is split into the stages of the analysis pipeline:
//!
//! - [`data`]: ground-reaction-force trial parsing, normalization, input assembly,
//!   subject-disjoint stratified folds and a planted-feature synthetic generator.
//! - [`nn`]: a small deterministic 1D-CNN engine (forward, exact backward, SGD/Adam,
//!   checkpoints).
//! - [`lrp`]: layer-wise relevance propagation over [`nn`] activation traces.
//! - [`spm`]: one-dimensional statistical parametric mapping for two-group curve
//!   comparisons (t-fields, smoothness, random-field thresholds, permutation oracle).
//! - [`eval`]: cross-validation harness, baselines, signal aggregation and region overlap.
//! - [`plot`]: deterministic SVG panels.
//!
//! All arithmetic is `f64`. Every stochastic step takes an explicit seed.

pub mod data;
pub mod eval;
pub mod lrp;
pub mod nn;
pub mod plot;
pub mod spm;

pub use data::{ChannelId, Component, Dataset, GaitTrial, InputLayout, InputSample, InputSpec, Sex, Side};
pub use nn::{Checkpoint, LayerGraph, LayerSpec, Model, TrainConfig};
