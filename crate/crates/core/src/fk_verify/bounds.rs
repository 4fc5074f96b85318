//! Closed-form bounds for the bias-free two-layer ReLU net `f(X) = W1 ReLU(W0 X)`.

use crate::nn::matrix::norm;
use crate::nn::Matrix;
use crate::{Error, Result, Scalar};

fn check_two_layer<T: Scalar>(w0: &Matrix<T>, w1: &Matrix<T>) -> Result<()> {
    if w1.rows() != 1 || w1.cols() != w0.rows() {
        return Err(Error::Shape(format!("W1 must be 1x{}, got {}x{}", w0.rows(), w1.rows(), w1.cols())));
    }
    Ok(())
}

/// `f(X) = W1 ReLU(W0 X)`.
pub fn two_layer_output<T: Scalar>(w0: &Matrix<T>, w1: &Matrix<T>, x: &[T]) -> Result<T> {
    check_two_layer(w0, w1)?;
    if x.len() != w0.cols() {
        return Err(Error::Shape(format!("X has {} coordinates, W0 expects {}", x.len(), w0.cols())));
    }
    Ok((0..w0.rows()).fold(T::zero(), |acc, k| {
        let pre = w0.row(k).iter().zip(x).fold(T::zero(), |a, (&w, &v)| a + w * v);
        acc + w1.get(0, k) * pre.max(T::zero())
    }))
}

/// `2 (W1 W0)(W1 W0)^T`.
pub fn two_layer_laplacian_bound<T: Scalar>(w0: &Matrix<T>, w1: &Matrix<T>) -> Result<T> {
    check_two_layer(w0, w1)?;
    let v = w1.matmul(w0)?;
    Ok(T::of(2.0) * v.norm_sq())
}

/// `2 (W1 W0)(W1 W0)^T tau_T + C |Delta| (|Delta| + 2 eps)` with
/// `Delta = A_T X + b_T - X` and `eps = |f(X) - y|`.
#[allow(clippy::too_many_arguments)]
pub fn affine_shift_bound<T: Scalar>(
    w0: &Matrix<T>,
    w1: &Matrix<T>,
    a_t: &Matrix<T>,
    b_t: &[T],
    x: &[T],
    y: T,
    lipschitz: T,
    tau_t: T,
) -> Result<T> {
    let d = w0.cols();
    if a_t.shape() != (d, d) || b_t.len() != d || x.len() != d {
        return Err(Error::Shape(format!("A_T must be {d}x{d} and b_T, X length {d}")));
    }
    if tau_t < T::zero() || lipschitz < T::zero() {
        return Err(Error::Precondition("tau_T and C must be >= 0".into()));
    }
    let delta: Vec<T> = (0..d)
        .map(|i| a_t.row(i).iter().zip(x).fold(T::zero(), |a, (&w, &v)| a + w * v) + b_t[i] - x[i])
        .collect();
    let shift = norm(&delta);
    let eps = (two_layer_output(w0, w1, x)? - y).abs();
    Ok(two_layer_laplacian_bound(w0, w1)? * tau_t + lipschitz * shift * (shift + T::of(2.0) * eps))
}

/// Central second differences summed over the coordinates in `coords`.
pub fn finite_difference_laplacian<T, F>(f: F, z: &[T], h: T, coords: &[usize]) -> T
where
    T: Scalar,
    F: Fn(&[T]) -> T,
{
    let mut p = z.to_vec();
    let f0 = f(z);
    let mut total = T::zero();
    for &i in coords {
        p[i] = z[i] + h;
        let up = f(&p);
        p[i] = z[i] - h;
        let down = f(&p);
        p[i] = z[i];
        total = total + (up - T::of(2.0) * f0 + down) / (h * h);
    }
    total
}
