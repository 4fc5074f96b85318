//! Feynman-Kac estimation of the loss landscape and executable checks of its
//! maximum principle, Dynkin's formula and the two-layer ReLU bounds.

mod bounds;
mod dynkin;
mod landscape;
mod principle;
pub mod report;

pub use bounds::{affine_shift_bound, finite_difference_laplacian, two_layer_laplacian_bound, two_layer_output};
pub use dynkin::{dynkin_residual, DynkinResult, StoppingRule};
pub use landscape::{
    estimate_boundary_value, estimate_hitting_time, estimate_landscape, joint_point_loss, HittingTimeEstimate, LandscapeEstimate,
    LandscapeParams, StopValue,
};
pub use principle::{max_principle_from_values, max_principle_report, MaxPrincipleReport};
