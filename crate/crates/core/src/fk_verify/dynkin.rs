//! Dynkin's formula as an executable check:
//! `E g(X_tau) - g(x0) - E int_0^tau (sigma^2 / 2) Lap g(X_s) ds` should vanish.

use rayon::prelude::*;

use crate::nn::Matrix;
use crate::rng::RngStream;
use crate::sde::{walk, BoundingBox, WalkParams};
use crate::stats::{compensated_sum, mean_stderr};
use crate::{Error, Result, Scalar};

/// When a Dynkin path stops.
#[derive(Clone, Debug, PartialEq)]
pub enum StoppingRule<T> {
    /// Deterministic `tau = T`.
    FixedHorizon(T),
    /// First entry into an eps-ball around a center, exit from `domain`, or
    /// `t_max`, whichever comes first.
    FirstHit { centers: Matrix<T>, eps: T, domain: BoundingBox<T>, t_max: T },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DynkinResult<T> {
    pub residual: T,
    pub stderr: T,
    pub n_paths: usize,
}

/// Per-path residuals `g(X_tau) - g(x0) - sum (sigma^2 / 2) Lap g(X_i) h_i`
/// (left-endpoint quadrature), averaged over `n_paths` walks.
pub fn dynkin_residual<T, G, L>(
    g: G,
    laplacian: L,
    x0: &[T],
    sigma: T,
    stop: &StoppingRule<T>,
    n_paths: usize,
    dt: T,
    stream: RngStream,
) -> Result<DynkinResult<T>>
where
    T: Scalar,
    G: Fn(&[T]) -> T + Sync,
    L: Fn(&[T]) -> T + Sync,
{
    if n_paths == 0 {
        return Err(Error::Precondition("n_paths must be >= 1".into()));
    }
    let m = x0.len();
    let unbounded = BoundingBox::new(vec![T::neg_infinity(); m], vec![T::infinity(); m])?;
    let no_centers = Matrix::zeros(0, m);
    let (params, centers, domain) = match stop {
        StoppingRule::FixedHorizon(h) => (WalkParams { sigma, eps: T::one(), dt, t_max: *h }, &no_centers, &unbounded),
        StoppingRule::FirstHit { centers, eps, domain, t_max } => {
            if centers.rows() > 0 && centers.cols() != m || domain.dim() != m {
                return Err(Error::Shape("centers and box must match the start dimension".into()));
            }
            (WalkParams { sigma, eps: *eps, dt, t_max: *t_max }, centers, domain)
        }
    };
    params.validate()?;
    if !domain.contains(x0) {
        return Err(Error::Precondition("x0 lies outside the domain box".into()));
    }
    let half_var = T::of(0.5) * sigma * sigma;
    let g0 = g(x0);
    let residuals: Vec<T> = (0..n_paths)
        .into_par_iter()
        .map(|p| {
            let mut terms = Vec::new();
            let s = walk(x0, &params, centers, domain, stream.derive(p as u64), |_, h, z| terms.push(half_var * laplacian(z) * h));
            g(&s.state) - g0 - compensated_sum(terms)
        })
        .collect();
    if let Some(bad) = residuals.iter().find(|r| !r.is_finite()) {
        return Err(Error::NonFinite(format!("dynkin residual {bad}")));
    }
    let (residual, stderr) = mean_stderr(&residuals);
    Ok(DynkinResult { residual, stderr, n_paths })
}
