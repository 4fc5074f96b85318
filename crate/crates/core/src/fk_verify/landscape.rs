//! Monte Carlo Feynman-Kac estimates of the loss landscape.
//!
//! A query point `z = (X, y)` launches diffusions `dz = sigma dW` in the joint
//! space; each path stops on entering the eps-ball of a data point (or leaving
//! the domain box) and records a boundary loss. Timed-out paths are censored.

use rayon::prelude::*;

use crate::data::Dataset;
use crate::elliptic::simplex_project;
use crate::nn::matrix::distance_sq;
use crate::nn::model::ForwardTrace;
use crate::nn::{per_sample_losses, LossKind, Matrix, MlpModel, OutputHead};
use crate::rng::RngStream;
use crate::sde::{walk, HitOutcome, Stop, WalkParams};
use crate::sde::BoundingBox;
use crate::stats::{compensated_sum, mean_stderr};
use crate::{Error, Result, Scalar};

/// Which loss a stopped path records.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum StopValue {
    /// Loss of the data point whose ball was entered; after a box exit, the
    /// data point nearest to the exit state.
    #[default]
    Center,
    /// Loss of the model at the stopped state itself.
    StoppedState,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LandscapeParams<T> {
    pub walk: WalkParams<T>,
    pub n_paths: usize,
    pub stop_value: StopValue,
}

impl<T: Scalar> LandscapeParams<T> {
    pub fn validate(&self) -> Result<()> {
        self.walk.validate()?;
        if self.n_paths == 0 {
            return Err(Error::Precondition("n_paths must be >= 1".into()));
        }
        Ok(())
    }
}

/// Estimate at one query point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LandscapeEstimate<T> {
    /// Mean recorded loss (NaN when nothing was recorded).
    pub mean: T,
    /// Sample standard deviation over recorded paths divided by their root count.
    pub stderr: T,
    pub n_hit: usize,
    pub n_timeout: usize,
    pub n_boundary: usize,
    /// False when every path timed out.
    pub valid: bool,
}

impl<T: Scalar> LandscapeEstimate<T> {
    pub fn n_paths(&self) -> usize {
        self.n_hit + self.n_timeout + self.n_boundary
    }

    /// Paths that contributed a value (hits and box exits).
    pub fn n_recorded(&self) -> usize {
        self.n_hit + self.n_boundary
    }

    fn from_values(values: &[T], n_hit: usize, n_timeout: usize, n_boundary: usize) -> Self {
        let valid = !values.is_empty();
        let (mean, stderr) = if valid { mean_stderr(values) } else { (T::nan(), T::nan()) };
        Self { mean, stderr, n_hit, n_timeout, n_boundary, valid }
    }

    /// `Err(Invalid)` for an estimate built from timeouts only.
    pub fn require_valid(&self) -> Result<T> {
        if self.valid {
            Ok(self.mean)
        } else {
            Err(Error::Invalid(format!("all {} paths timed out", self.n_timeout)))
        }
    }
}

fn check_walk_inputs<T: Scalar>(start: &[T], centers: &Matrix<T>, domain: &BoundingBox<T>) -> Result<()> {
    if start.len() != domain.dim() || (centers.rows() > 0 && centers.cols() != start.len()) {
        return Err(Error::Shape(format!(
            "start has {} coordinates, box {}, centers {}",
            start.len(),
            domain.dim(),
            centers.cols()
        )));
    }
    if !domain.contains(start) {
        return Err(Error::Precondition(format!("start {start:?} lies outside the domain box")));
    }
    Ok(())
}

/// Runs `n_paths` walks from `start`; path `p` uses `stream.derive(p)`.
pub(crate) fn run_walks<T: Scalar>(
    start: &[T],
    walk_params: &WalkParams<T>,
    n_paths: usize,
    centers: &Matrix<T>,
    domain: &BoundingBox<T>,
    stream: RngStream,
) -> Vec<Stop<T>> {
    (0..n_paths)
        .into_par_iter()
        .map(|p| walk(start, walk_params, centers, domain, stream.derive(p as u64), |_, _, _| {}))
        .collect()
}

/// Generic exit-value estimator: mean of `value(stop)` over non-censored paths.
///
/// With `value` returning a fixed number per center this is the classical
/// Monte Carlo solver of the Dirichlet problem with data on the balls.
pub fn estimate_boundary_value<T, F>(
    start: &[T],
    params: &LandscapeParams<T>,
    centers: &Matrix<T>,
    domain: &BoundingBox<T>,
    stream: RngStream,
    value: F,
) -> Result<LandscapeEstimate<T>>
where
    T: Scalar,
    F: Fn(&Stop<T>) -> T,
{
    params.validate()?;
    check_walk_inputs(start, centers, domain)?;
    let stops = run_walks(start, &params.walk, params.n_paths, centers, domain, stream);
    let (mut n_hit, mut n_timeout, mut n_boundary) = (0, 0, 0);
    let mut values = Vec::with_capacity(stops.len());
    for s in &stops {
        match s.outcome {
            HitOutcome::HitCenter(_) => n_hit += 1,
            HitOutcome::HitDomainBoundary => n_boundary += 1,
            HitOutcome::Timeout => {
                n_timeout += 1;
                continue;
            }
        }
        values.push(value(s));
    }
    Ok(LandscapeEstimate::from_values(&values, n_hit, n_timeout, n_boundary))
}

pub(crate) fn nearest_row<T: Scalar>(z: &[T], points: &Matrix<T>) -> usize {
    let mut best = 0;
    let mut best_d = T::infinity();
    for (i, p) in points.iter_rows().enumerate() {
        let d = distance_sq(z, p);
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

/// Loss of `model` at one joint point `z = (X, y)`. For a softmax head the
/// label part is first mapped onto the simplex.
pub fn joint_point_loss<T: Scalar>(model: &MlpModel<T>, kind: LossKind, z: &[T]) -> Result<T> {
    let d = model.input_dim();
    if z.len() != d + model.output_dim() {
        return Err(Error::Shape(format!("joint point has {} coordinates, model needs {}", z.len(), d + model.output_dim())));
    }
    kind.check_head(model.head())?;
    let mut trace = ForwardTrace::new(model);
    model.forward_sample(&z[..d], &mut trace);
    let y = if model.head() == OutputHead::Softmax { simplex_project(&z[d..]) } else { z[d..].to_vec() };
    Ok(kind.value(trace.logits(), trace.output(), &y))
}

/// Landscape estimates at each joint query row. Query `q` uses
/// `stream.derive(q)`, and its path `p` uses `stream.derive(q).derive(p)`.
pub fn estimate_landscape<T: Scalar>(
    model: &MlpModel<T>,
    kind: LossKind,
    data: &Dataset<T>,
    queries: &Matrix<T>,
    params: &LandscapeParams<T>,
    domain: &BoundingBox<T>,
    stream: RngStream,
) -> Result<Vec<LandscapeEstimate<T>>> {
    params.validate()?;
    let centers = data.joint();
    if queries.cols() != centers.cols() {
        return Err(Error::Shape(format!("queries have {} columns, joint space has {}", queries.cols(), centers.cols())));
    }
    let center_loss = per_sample_losses(kind, model, data.features(), data.targets())?;
    queries
        .iter_rows()
        .enumerate()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(q, z)| {
            estimate_boundary_value(z, params, &centers, domain, stream.derive(q as u64), |s| match (params.stop_value, s.outcome) {
                (StopValue::Center, HitOutcome::HitCenter(i)) => center_loss[i],
                (StopValue::Center, _) => center_loss[nearest_row(&s.state, &centers)],
                (StopValue::StoppedState, _) => joint_point_loss(model, kind, &s.state).expect("shapes checked above"),
            })
        })
        .collect()
}

/// Hit-conditional hitting-time statistics. Box exits count as hits.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HittingTimeEstimate<T> {
    pub mean: T,
    pub stderr: T,
    pub n_hit: usize,
    pub n_paths: usize,
    /// Fraction of paths still walking at `t_max`.
    pub censor_rate: T,
    pub valid: bool,
}

pub fn estimate_hitting_time<T: Scalar>(
    start: &[T],
    walk_params: &WalkParams<T>,
    centers: &Matrix<T>,
    domain: &BoundingBox<T>,
    n_paths: usize,
    stream: RngStream,
) -> Result<HittingTimeEstimate<T>> {
    let params = LandscapeParams { walk: *walk_params, n_paths, stop_value: StopValue::Center };
    params.validate()?;
    check_walk_inputs(start, centers, domain)?;
    let stops = run_walks(start, walk_params, n_paths, centers, domain, stream);
    let taus: Vec<T> = stops.iter().filter(|s| s.outcome != HitOutcome::Timeout).map(|s| s.tau).collect();
    let valid = !taus.is_empty();
    let (mean, stderr) = if valid { mean_stderr(&taus) } else { (T::nan(), T::nan()) };
    let censored = compensated_sum(stops.iter().map(|s| if s.outcome == HitOutcome::Timeout { T::one() } else { T::zero() }));
    Ok(HittingTimeEstimate {
        mean,
        stderr,
        n_hit: taus.len(),
        n_paths,
        censor_rate: censored / T::of_usize(n_paths),
        valid,
    })
}
