use crate::{Error, Result, Scalar};

/// How the loss along a bridge is turned into an objective.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ObjectiveVariant {
    /// Mean of the loss over the bridge grid.
    PathAverage,
    /// Loss at the anchor plus the grid mean (source-term form).
    SourceTerm,
}

/// How a bridge partner is chosen for each anchor.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EndpointMode {
    /// `P(j) ∝ 1 / d(i, j)`, `j != i`.
    InverseDistance,
    /// Uniform over `j != i`.
    Uniform,
    /// Partner is the anchor itself. Diagnostic only: with `sigma_b = 0` the
    /// bridge objective collapses to ERM.
    SelfPair,
}

/// Brownian-bridge training knobs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EllipticConfig<T> {
    /// Bridges drawn per anchor sample.
    pub n_bridges: usize,
    /// Grid points per bridge, both endpoints included.
    pub n_time: usize,
    /// Bridge diffusion coefficient.
    pub sigma_b: T,
    /// Importance-weight strength.
    pub xi: T,
    pub variant: ObjectiveVariant,
    pub endpoint_mode: EndpointMode,
    /// Map bridged labels back onto the probability simplex.
    pub simplex_project: bool,
    pub t_end: T,
}

impl<T: Scalar> Default for EllipticConfig<T> {
    /// Tabular-regression defaults: 20 bridges, 5 grid points, `sigma_b = 0.05`, `xi = 1`.
    fn default() -> Self {
        Self {
            n_bridges: 20,
            n_time: 5,
            sigma_b: T::of(0.05),
            xi: T::one(),
            variant: ObjectiveVariant::PathAverage,
            endpoint_mode: EndpointMode::InverseDistance,
            simplex_project: false,
            t_end: T::one(),
        }
    }
}

impl<T: Scalar> EllipticConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.n_bridges == 0 {
            return Err(Error::Precondition("n_bridges must be >= 1".into()));
        }
        if self.n_time < 2 {
            return Err(Error::Precondition("n_time must be >= 2 so both endpoints are on the grid".into()));
        }
        if !(self.sigma_b >= T::zero()) || !(self.xi >= T::zero()) {
            return Err(Error::Precondition("sigma_b and xi must be >= 0".into()));
        }
        if !(self.t_end > T::zero()) {
            return Err(Error::Precondition("t_end must be > 0".into()));
        }
        Ok(())
    }

    /// Grid times `s_j = j * t_end / (n_time - 1)`.
    pub fn grid(&self) -> Vec<T> {
        let steps = T::of_usize(self.n_time - 1);
        (0..self.n_time).map(|j| self.t_end * T::of_usize(j) / steps).collect()
    }
}

/// Mixup baseline: `lambda ~ Beta(alpha, alpha)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MixupConfig<T> {
    pub alpha: T,
}

impl<T: Scalar> MixupConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > T::zero()) {
            return Err(Error::Precondition("mixup alpha must be > 0".into()));
        }
        Ok(())
    }
}
