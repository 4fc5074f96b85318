//! Brownian-bridge training objectives and their baselines.

pub mod config;
pub mod endpoint;
pub mod objective;

pub use config::{EllipticConfig, EndpointMode, MixupConfig, ObjectiveVariant};
pub use endpoint::{pairwise_distances, sample_endpoint, simplex_project, EndpointSampler};
pub use objective::{
    bridge_objective, erm_objective, importance_weighted_objective, mixup_objective, mixup_with, sample_bridges, sample_mixup_lambda,
    BridgeSamples, ObjectiveValue,
};
