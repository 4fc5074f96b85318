//! Brownian paths, Brownian bridges, Euler-Maruyama and Girsanov log-weights.

use super::path::Path;
use crate::nn::Matrix;
use crate::rng::{gaussian, RngStream};
use crate::{Error, Result, Scalar};

/// Scaled Brownian motion `W_t = sum sigma * sqrt(dt) * xi`, started at the origin.
pub fn sample_brownian_path<T: Scalar>(dim: usize, n_steps: usize, dt: T, sigma: T, stream: RngStream) -> Result<Path<T>> {
    if !(dt > T::zero()) || sigma < T::zero() || n_steps == 0 {
        return Err(Error::Precondition("brownian path needs dt > 0, sigma >= 0, n_steps >= 1".into()));
    }
    let mut rng = stream.rng();
    let scale = sigma * dt.sqrt();
    let mut states = Matrix::zeros(n_steps + 1, dim);
    for i in 1..=n_steps {
        for j in 0..dim {
            let prev = states.get(i - 1, j);
            states.set(i, j, prev + scale * gaussian::<T, _>(&mut rng));
        }
    }
    Path::new(Path::uniform_times(T::zero(), dt, n_steps), states)
}

/// Endpoints, diffusion and resolution of one bridge on `[0, t_end]`.
#[derive(Clone, Debug, PartialEq)]
pub struct BridgeSpec<T> {
    pub start: Vec<T>,
    pub end: Vec<T>,
    pub sigma: T,
    pub n_steps: usize,
    pub t_end: T,
}

impl<T: Scalar> BridgeSpec<T> {
    pub fn unit(start: Vec<T>, end: Vec<T>, sigma: T, n_steps: usize) -> Self {
        Self { start, end, sigma, n_steps, t_end: T::one() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.start.len() != self.end.len() {
            return Err(Error::Shape("bridge endpoints differ in dimension".into()));
        }
        if self.sigma < T::zero() || self.n_steps == 0 || !(self.t_end > T::zero()) {
            return Err(Error::Precondition("bridge needs sigma >= 0, n_steps >= 1, t_end > 0".into()));
        }
        Ok(())
    }
}

/// Writes the `n_steps + 1` bridge states row-major into `out`.
///
/// Builds `W` from Gaussian increments, shifts it to the start point, then
/// subtracts `(t / T)(W_T + start - end)`. The first and last rows are
/// assigned the endpoints directly so pinning is exact.
pub(crate) fn bridge_into<T: Scalar, R: rand::Rng + ?Sized>(
    start: &[T],
    end: &[T],
    sigma: T,
    n_steps: usize,
    t_end: T,
    rng: &mut R,
    out: &mut [T],
) {
    let m = start.len();
    debug_assert_eq!(out.len(), (n_steps + 1) * m);
    let dt = t_end / T::of_usize(n_steps);
    let scale = sigma * dt.sqrt();
    out[..m].iter_mut().for_each(|v| *v = T::zero());
    for i in 1..=n_steps {
        for j in 0..m {
            let w = if sigma == T::zero() { T::zero() } else { scale * gaussian::<T, _>(rng) };
            out[i * m + j] = out[(i - 1) * m + j] + w;
        }
    }
    for j in 0..m {
        let gap = end[j] - start[j] - out[n_steps * m + j];
        for i in 1..n_steps {
            let frac = T::of_usize(i) / T::of_usize(n_steps);
            out[i * m + j] = start[j] + out[i * m + j] + frac * gap;
        }
    }
    out[..m].copy_from_slice(start);
    out[n_steps * m..].copy_from_slice(end);
}

/// Brownian bridge from `spec.start` to `spec.end`.
pub fn sample_brownian_bridge<T: Scalar>(spec: &BridgeSpec<T>, stream: RngStream) -> Result<Path<T>> {
    spec.validate()?;
    let m = spec.start.len();
    let mut data = vec![T::zero(); (spec.n_steps + 1) * m];
    let mut rng = stream.rng();
    bridge_into(&spec.start, &spec.end, spec.sigma, spec.n_steps, spec.t_end, &mut rng, &mut data);
    let dt = spec.t_end / T::of_usize(spec.n_steps);
    let mut times = Path::uniform_times(T::zero(), dt, spec.n_steps);
    times[spec.n_steps] = spec.t_end;
    Path::new(times, Matrix::from_vec(spec.n_steps + 1, m, data)?)
}

/// `X_{i+1} = X_i + drift(X_i) dt + sigma sqrt(dt) xi_i` on `[0, horizon]`.
pub fn euler_maruyama<T, F>(drift: F, sigma: T, x0: &[T], horizon: T, n_steps: usize, stream: RngStream) -> Result<Path<T>>
where
    T: Scalar,
    F: Fn(&[T]) -> Vec<T>,
{
    if sigma < T::zero() || !(horizon > T::zero()) || n_steps == 0 {
        return Err(Error::Precondition("euler_maruyama needs sigma >= 0, horizon > 0, n_steps >= 1".into()));
    }
    let m = x0.len();
    let dt = horizon / T::of_usize(n_steps);
    let scale = sigma * dt.sqrt();
    let mut rng = stream.rng();
    let mut states = Matrix::zeros(n_steps + 1, m);
    states.row_mut(0).copy_from_slice(x0);
    for i in 0..n_steps {
        let b = drift(states.row(i));
        if b.len() != m {
            return Err(Error::Shape(format!("drift returned {} values for a {m}-dimensional state", b.len())));
        }
        if b.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("drift at step {i}, state {:?}: {:?}", states.row(i), b)));
        }
        for j in 0..m {
            let noise = if sigma == T::zero() { T::zero() } else { scale * gaussian::<T, _>(&mut rng) };
            let next = states.get(i, j) + b[j] * dt + noise;
            states.set(i + 1, j, next);
        }
    }
    let mut times = Path::uniform_times(T::zero(), dt, n_steps);
    times[n_steps] = horizon;
    Path::new(times, states)
}

/// Left-endpoint discretization of `int mu^T dZ - 1/2 int |mu|^2 ds`.
pub fn girsanov_log_weight<T, F>(path: &Path<T>, mu: F) -> T
where
    T: Scalar,
    F: Fn(&[T]) -> Vec<T>,
{
    let mut total = T::zero();
    for i in 0..path.len() - 1 {
        let z = path.state(i);
        let next = path.state(i + 1);
        let dt = path.times()[i + 1] - path.times()[i];
        let m = mu(z);
        let mut stochastic = T::zero();
        let mut energy = T::zero();
        for ((&mj, &a), &b) in m.iter().zip(z).zip(next) {
            stochastic = stochastic + mj * (b - a);
            energy = energy + mj * mj;
        }
        total = total + stochastic - T::of(0.5) * energy * dt;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_sigma_path_is_constant_zero() {
        let p = sample_brownian_path::<f64>(3, 10, 0.1, 0.0, RngStream::root(1)).unwrap();
        assert!(p.states().as_slice().iter().all(|&v| v == 0.0));
        assert!((p.times()[10] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn brownian_starts_at_origin() {
        for seed in 0..20 {
            let p = sample_brownian_path::<f64>(2, 5, 0.2, 1.3, RngStream::root(seed)).unwrap();
            assert_eq!(p.first(), &[0.0, 0.0]);
        }
    }

    #[test]
    fn zero_sigma_bridge_is_linear_interpolation() {
        let spec = BridgeSpec::unit(vec![1.0, -2.0], vec![3.0, 4.0], 0.0, 4);
        let p = sample_brownian_bridge(&spec, RngStream::root(9)).unwrap();
        for i in 0..=4 {
            let t = i as f64 / 4.0;
            for j in 0..2 {
                let lin = spec.start[j] + t * (spec.end[j] - spec.start[j]);
                assert_eq!(p.state(i)[j], lin);
            }
        }
    }

    #[test]
    fn euler_constant_drift_and_zero_noise() {
        let still = euler_maruyama(|x: &[f64]| vec![0.0; x.len()], 0.0, &[0.5, 1.0], 1.0, 8, RngStream::root(0)).unwrap();
        assert!(still.states().iter_rows().all(|r| r == [0.5, 1.0]));
        let p = euler_maruyama(|_: &[f64]| vec![0.25], 0.0, &[1.0], 2.0, 8, RngStream::root(0)).unwrap();
        assert!((p.last()[0] - 1.5).abs() < 1e-15);
    }

    #[test]
    fn euler_decay_matches_exponential() {
        let p = euler_maruyama(|x: &[f64]| vec![-x[0]], 0.0, &[1.0], 1.0, 10_000, RngStream::root(0)).unwrap();
        assert!((p.last()[0] - (-1f64).exp()).abs() < 1e-3);
    }

    #[test]
    fn euler_reports_non_finite_drift() {
        let err = euler_maruyama(|x: &[f64]| vec![1.0 / (x[0] - 1.0)], 0.0, &[1.0], 1.0, 4, RngStream::root(0)).unwrap_err();
        assert!(matches!(err, Error::NonFinite(_)));
    }

    #[test]
    fn girsanov_zero_drift_and_single_step() {
        let p = sample_brownian_path::<f64>(2, 50, 0.02, 1.0, RngStream::root(4)).unwrap();
        assert_eq!(girsanov_log_weight(&p, |z: &[f64]| vec![0.0; z.len()]), 0.0);

        let one = Path::new(vec![0.0, 0.5], Matrix::from_rows(&[[0.0], [0.3]]).unwrap()).unwrap();
        let w = girsanov_log_weight(&one, |_: &[f64]| vec![2.0]);
        assert!((w - (2.0 * 0.3 - 0.5 * 4.0 * 0.5)).abs() < 1e-15);
    }
}
