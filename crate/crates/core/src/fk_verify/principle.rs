use super::landscape::LandscapeEstimate;
use crate::{Error, Result, Scalar};

/// Boundary and interior extremes and the maximum-principle verdict.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MaxPrincipleReport<T> {
    pub min_boundary: T,
    pub max_boundary: T,
    pub min_interior: T,
    pub max_interior: T,
    pub satisfied: bool,
    pub slack: T,
}

fn extremes<T: Scalar>(values: impl Iterator<Item = T>) -> Option<(T, T)> {
    values.fold(None, |acc, v| match acc {
        None => Some((v, v)),
        Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
    })
}

/// Compare interior values against boundary losses.
///
/// Satisfied iff `max_interior <= max_boundary (1 + slack)` and
/// `min_interior >= min_boundary (1 - slack) - slack`.
pub fn max_principle_from_values<T: Scalar>(boundary_losses: &[T], interior: &[T], slack: T) -> Result<MaxPrincipleReport<T>> {
    if !(slack >= T::zero()) {
        return Err(Error::Precondition("slack must be >= 0".into()));
    }
    if boundary_losses.iter().chain(interior).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("maximum-principle inputs must be finite".into()));
    }
    let (min_boundary, max_boundary) =
        extremes(boundary_losses.iter().copied()).ok_or_else(|| Error::Precondition("no boundary losses".into()))?;
    let (min_interior, max_interior) =
        extremes(interior.iter().copied()).ok_or_else(|| Error::Precondition("no valid interior values".into()))?;
    let satisfied =
        max_interior <= max_boundary * (T::one() + slack) && min_interior >= min_boundary * (T::one() - slack) - slack;
    Ok(MaxPrincipleReport { min_boundary, max_boundary, min_interior, max_interior, satisfied, slack })
}

/// Maximum-principle report over the valid landscape estimates.
pub fn max_principle_report<T: Scalar>(
    boundary_losses: &[T],
    interior: &[LandscapeEstimate<T>],
    slack: T,
) -> Result<MaxPrincipleReport<T>> {
    let means: Vec<T> = interior.iter().filter(|e| e.valid).map(|e| e.mean).collect();
    max_principle_from_values(boundary_losses, &means, slack)
}
