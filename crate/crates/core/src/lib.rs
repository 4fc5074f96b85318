//! Elliptic loss-landscape regularization for small neural networks.
//!
//! Training objectives that minimize the loss along Brownian bridges between
//! data points ([`elliptic`]), a Monte Carlo Feynman-Kac estimator of the
//! resulting loss landscape with checks of its maximum principle ([`fk_verify`]),
//! and the supporting network, sampler and dataset code.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`). The aliases
//! below fix `f64`, which the documented tolerances assume.

pub mod data;
pub mod elliptic;
pub mod error;
pub mod fk_verify;
pub mod nn;
pub mod rng;
pub mod scalar;
pub mod sde;
pub mod stats;

pub use error::{Error, Result};
pub use rng::RngStream;
pub use scalar::Scalar;

pub type Matrix = nn::Matrix<f64>;
pub type Mlp = nn::MlpModel<f64>;
pub type Grads = nn::Gradients<f64>;
pub type Path = sde::Path<f64>;
pub type BoundingBox = sde::BoundingBox<f64>;
pub type Optimizer = nn::OptimState<f64>;
pub type Dataset = data::Dataset<f64>;
pub type EllipticConfig = elliptic::EllipticConfig<f64>;
pub type EndpointSampler = elliptic::EndpointSampler<f64>;
pub type LandscapeEstimate = fk_verify::LandscapeEstimate<f64>;
