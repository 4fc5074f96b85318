//! First entry of a diffusion into the epsilon-fattened data set.
//!
//! A walk `dz = sigma dW` stops when its state comes within `eps` of a center,
//! leaves the domain box, or runs out of time. Ball entry is only checked at
//! grid points.

use super::path::{BoundingBox, Path};
use crate::nn::matrix::distance_sq;
use crate::nn::Matrix;
use crate::rng::{gaussian, RngStream};
use crate::{Error, Result, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HitOutcome {
    /// Entered the ball around this center (row index).
    HitCenter(usize),
    /// Left the domain box; the final state was clamped onto it.
    HitDomainBoundary,
    /// Still walking at `t_max`.
    Timeout,
}

/// Knobs of a hitting-time walk.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WalkParams<T> {
    pub sigma: T,
    pub eps: T,
    pub dt: T,
    pub t_max: T,
}

impl<T: Scalar> WalkParams<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > T::zero()) || !(self.eps > T::zero()) || !(self.dt > T::zero()) || self.t_max < T::zero() {
            return Err(Error::Precondition("walk needs sigma > 0, eps > 0, dt > 0, t_max >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HitResult<T> {
    pub path: Path<T>,
    pub outcome: HitOutcome,
    pub tau: T,
}

/// Outcome of a walk without its trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct Stop<T> {
    pub outcome: HitOutcome,
    pub tau: T,
    pub state: Vec<T>,
}

/// Nearest center strictly inside the eps-ball, lowest index on exact ties.
fn entered_ball<T: Scalar>(z: &[T], centers: &Matrix<T>, eps_sq: T) -> (Option<usize>, T) {
    let mut best: Option<usize> = None;
    let mut best_d = T::infinity();
    for (i, c) in centers.iter_rows().enumerate() {
        let d = distance_sq(z, c);
        if d < best_d {
            best_d = d;
            if d < eps_sq {
                best = Some(i);
            }
        }
    }
    (best, best_d.sqrt())
}

/// Runs one walk, calling `observe(t, dt, state)` at every grid point before
/// stepping from it (not at the stopping state).
///
/// The nearest-center scan is skipped while the walker has moved less than
/// `nearest - eps` since the last scan; by the triangle inequality no ball can
/// have been entered in the meantime, so this is exact.
pub(crate) fn walk<T, F>(
    start: &[T],
    params: &WalkParams<T>,
    centers: &Matrix<T>,
    domain: &BoundingBox<T>,
    stream: RngStream,
    mut observe: F,
) -> Stop<T>
where
    T: Scalar,
    F: FnMut(T, T, &[T]),
{
    let m = start.len();
    let mut rng = stream.rng();
    let eps_sq = params.eps * params.eps;
    let scale_full = params.sigma * params.dt.sqrt();
    let mut z = start.to_vec();
    let mut anchor = start.to_vec();
    let mut slack = T::neg_infinity();
    let mut t = T::zero();
    loop {
        if distance_sq(&z, &anchor) >= slack * slack || slack <= T::zero() {
            let (hit, nearest) = if centers.rows() == 0 {
                (None, T::infinity())
            } else {
                entered_ball(&z, centers, eps_sq)
            };
            if let Some(i) = hit {
                return Stop { outcome: HitOutcome::HitCenter(i), tau: t, state: z };
            }
            anchor.copy_from_slice(&z);
            slack = nearest - params.eps;
        }
        if t >= params.t_max {
            return Stop { outcome: HitOutcome::Timeout, tau: params.t_max.min(t), state: z };
        }
        let h = params.dt.min(params.t_max - t);
        observe(t, h, &z);
        let scale = if h == params.dt { scale_full } else { params.sigma * h.sqrt() };
        for v in z.iter_mut().take(m) {
            *v = *v + scale * gaussian::<T, _>(&mut rng);
        }
        t = if h == params.dt { t + h } else { params.t_max };
        if !domain.contains(&z) {
            // a ball straddling the box face still takes precedence
            if let (Some(i), _) = entered_ball(&z, centers, eps_sq) {
                return Stop { outcome: HitOutcome::HitCenter(i), tau: t, state: z };
            }
            domain.clamp(&mut z);
            return Stop { outcome: HitOutcome::HitDomainBoundary, tau: t, state: z };
        }
    }
}

/// One recorded walk from `start` until the first hit, exit, or `t_max`.
pub fn hitting_time_walk<T: Scalar>(
    start: &[T],
    params: &WalkParams<T>,
    centers: &Matrix<T>,
    domain: &BoundingBox<T>,
    stream: RngStream,
) -> Result<HitResult<T>> {
    params.validate()?;
    if start.len() != domain.dim() || (centers.rows() > 0 && centers.cols() != start.len()) {
        return Err(Error::Shape("start, centers and box must share a dimension".into()));
    }
    if !domain.contains(start) {
        return Err(Error::Precondition("walk must start inside the domain box".into()));
    }
    let mut times = Vec::new();
    let mut states = Vec::new();
    let stop = walk(start, params, centers, domain, stream, |t, _, z| {
        times.push(t);
        states.extend_from_slice(z);
    });
    if times.last().is_none_or(|&last| stop.tau > last) {
        times.push(stop.tau);
        states.extend_from_slice(&stop.state);
    }
    if times.len() == 1 {
        // stopped at t = 0: repeat the state so the path keeps two grid points
        times.push(stop.tau + params.dt);
        states.extend_from_slice(&stop.state);
    }
    let n = times.len();
    let path = Path::new(times, Matrix::from_vec(n, start.len(), states)?)?;
    Ok(HitResult { path, outcome: stop.outcome, tau: stop.tau })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_box(m: usize) -> BoundingBox<f64> {
        BoundingBox::new(vec![-1.0; m], vec![2.0; m]).unwrap()
    }

    fn params(t_max: f64) -> WalkParams<f64> {
        WalkParams { sigma: 1.0, eps: 0.05, dt: 1e-3, t_max }
    }

    #[test]
    fn start_inside_ball_hits_immediately() {
        let centers = Matrix::from_rows(&[[0.0], [1.0]]).unwrap();
        let r = hitting_time_walk(&[0.99], &params(1.0), &centers, &unit_box(1), RngStream::root(0)).unwrap();
        assert_eq!(r.outcome, HitOutcome::HitCenter(1));
        assert_eq!(r.tau, 0.0);
    }

    #[test]
    fn zero_budget_times_out() {
        let centers = Matrix::from_rows(&[[0.0]]).unwrap();
        let r = hitting_time_walk(&[0.5], &params(0.0), &centers, &unit_box(1), RngStream::root(0)).unwrap();
        assert_eq!(r.outcome, HitOutcome::Timeout);
        assert_eq!(r.tau, 0.0);
    }

    #[test]
    fn tau_never_exceeds_budget() {
        let centers = Matrix::<f64>::zeros(0, 2);
        let big = BoundingBox::new(vec![-100.0; 2], vec![100.0; 2]).unwrap();
        let p = WalkParams { sigma: 1.0, eps: 0.1, dt: 0.03, t_max: 0.1 };
        for s in 0..10 {
            let r = hitting_time_walk(&[0.0, 0.0], &p, &centers, &big, RngStream::root(s)).unwrap();
            assert_eq!(r.outcome, HitOutcome::Timeout);
            assert!(r.tau <= 0.1);
            assert_eq!(*r.path.times().last().unwrap(), r.tau);
        }
    }

    #[test]
    fn exit_is_clamped_to_box() {
        let centers = Matrix::<f64>::zeros(0, 1);
        let b = BoundingBox::new(vec![0.0], vec![0.1]).unwrap();
        let r = hitting_time_walk(&[0.05], &params(100.0), &centers, &b, RngStream::root(5)).unwrap();
        assert_eq!(r.outcome, HitOutcome::HitDomainBoundary);
        let x = r.path.last()[0];
        assert!(x == 0.0 || x == 0.1);
    }

    #[test]
    fn nearest_center_wins_and_ties_break_by_index() {
        let centers = Matrix::from_rows(&[[0.0, 0.1], [0.0, 0.05], [0.0, -0.05]]).unwrap();
        let (hit, _) = entered_ball(&[0.0, 0.0], &centers, 0.2 * 0.2);
        assert_eq!(hit, Some(1));
    }

    #[test]
    fn rejects_start_outside_box() {
        let centers = Matrix::from_rows(&[[0.0]]).unwrap();
        assert!(hitting_time_walk(&[5.0], &params(1.0), &centers, &unit_box(1), RngStream::root(0)).is_err());
    }
}
