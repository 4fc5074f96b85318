//! Samplers for Brownian motion, Brownian bridges, Euler-Maruyama diffusions
//! and first-hitting walks, plus Girsanov log-weights.
//!
//! Every sampler takes an [`RngStream`](crate::RngStream) and is a pure
//! function of it.

mod brownian;
mod hitting;
mod path;

pub use brownian::{euler_maruyama, girsanov_log_weight, sample_brownian_bridge, sample_brownian_path, BridgeSpec};
pub(crate) use brownian::bridge_into;
pub(crate) use hitting::walk;
pub use hitting::{hitting_time_walk, HitOutcome, HitResult, Stop, WalkParams};
pub use path::{BoundingBox, Path};
