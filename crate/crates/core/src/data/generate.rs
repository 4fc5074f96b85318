use std::f64::consts::PI;

use super::{Dataset, Task};
use crate::nn::Matrix;
use crate::rng::{gaussian, uniform, RngStream};
use crate::{Error, Result, Scalar};

/// Interleaved half-circles. Even rows are class 0 on `(cos t, sin t)`, odd
/// rows class 1 on `(1 - cos t, 1/2 - sin t)`, with `t ~ U[0, pi]` and
/// isotropic Gaussian noise of standard deviation `noise`.
pub fn two_moons<T: Scalar>(n: usize, noise: T, stream: RngStream) -> Result<Dataset<T>> {
    if n < 2 {
        return Err(Error::Precondition("two_moons needs n >= 2".into()));
    }
    if !(noise >= T::zero()) {
        return Err(Error::Precondition("noise must be >= 0".into()));
    }
    let mut rng = stream.rng();
    let pi = T::of(PI);
    let half = T::of(0.5);
    let mut x = Matrix::zeros(n, 2);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let t = pi * uniform::<T, _>(&mut rng);
        let class = i % 2;
        let (a, b) = if class == 0 { (t.cos(), t.sin()) } else { (T::one() - t.cos(), half - t.sin()) };
        let (ea, eb) = (gaussian::<T, _>(&mut rng), gaussian::<T, _>(&mut rng));
        x.set(i, 0, a + noise * ea);
        x.set(i, 1, b + noise * eb);
        labels.push(class);
    }
    Dataset::classification(x, &labels, 2)
}

/// Expected position of each moon's points: `(0, 2/pi)` and `(1, 1/2 - 2/pi)`.
pub fn two_moons_centroids() -> [[f64; 2]; 2] {
    [[0.0, 2.0 / PI], [1.0, 0.5 - 2.0 / PI]]
}

/// `y = sin(2 pi x) + noise * xi` with `x ~ U[0, 1]`.
pub fn synthetic_sine<T: Scalar>(n: usize, noise: T, stream: RngStream) -> Result<Dataset<T>> {
    if n == 0 {
        return Err(Error::Precondition("synthetic_sine needs n >= 1".into()));
    }
    let mut rng = stream.rng();
    let two_pi = T::of(2.0 * PI);
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let xi = uniform::<T, _>(&mut rng);
        let e = gaussian::<T, _>(&mut rng);
        x.push(xi);
        y.push((two_pi * xi).sin() + noise * e);
    }
    Dataset::new(Matrix::from_vec(n, 1, x)?, Matrix::from_vec(n, 1, y)?, Task::Regression)
}
