use crate::nn::Matrix;
use crate::{Error, Result, Scalar};

/// Time grid plus one state per grid time.
#[derive(Clone, Debug, PartialEq)]
pub struct Path<T> {
    times: Vec<T>,
    /// Row `i` is the state at `times[i]`.
    states: Matrix<T>,
}

impl<T: Scalar> Path<T> {
    pub fn new(times: Vec<T>, states: Matrix<T>) -> Result<Self> {
        if times.len() < 2 || times.len() != states.rows() {
            return Err(Error::Shape(format!(
                "a path needs >= 2 times matching its states ({} times, {} states)",
                times.len(),
                states.rows()
            )));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Precondition("path times must be strictly increasing".into()));
        }
        Ok(Self { times, states })
    }

    /// Uniform grid `t0 + i * dt`, `i = 0..=n_steps`.
    pub(crate) fn uniform_times(t0: T, dt: T, n_steps: usize) -> Vec<T> {
        (0..=n_steps).map(|i| t0 + dt * T::of_usize(i)).collect()
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn states(&self) -> &Matrix<T> {
        &self.states
    }

    pub fn state(&self, i: usize) -> &[T] {
        self.states.row(i)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states.cols()
    }

    pub fn first(&self) -> &[T] {
        self.states.row(0)
    }

    pub fn last(&self) -> &[T] {
        self.states.row(self.states.rows() - 1)
    }
}

/// Axis-aligned box standing in for the domain around the data.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundingBox<T> {
    pub lo: Vec<T>,
    pub hi: Vec<T>,
}

impl<T: Scalar> BoundingBox<T> {
    pub fn new(lo: Vec<T>, hi: Vec<T>) -> Result<Self> {
        if lo.len() != hi.len() || lo.iter().zip(&hi).any(|(&a, &b)| !(a <= b)) {
            return Err(Error::Precondition("box needs lo <= hi in every coordinate".into()));
        }
        Ok(Self { lo, hi })
    }

    /// Bounding box of `points` padded by `margin` times the side length.
    ///
    /// A coordinate with zero spread (e.g. a constant target) is padded
    /// relative to the widest side instead, so the box never has zero width.
    pub fn around(points: &Matrix<T>, margin: T) -> Result<Self> {
        if points.rows() == 0 {
            return Err(Error::Precondition("cannot bound an empty point set".into()));
        }
        let m = points.cols();
        let mut lo = points.row(0).to_vec();
        let mut hi = lo.clone();
        for row in points.iter_rows() {
            for j in 0..m {
                lo[j] = lo[j].min(row[j]);
                hi[j] = hi[j].max(row[j]);
            }
        }
        let widest = lo.iter().zip(&hi).fold(T::zero(), |acc, (&a, &b)| acc.max(b - a));
        let fallback = if widest > T::zero() { widest } else { T::one() };
        for j in 0..m {
            let side = hi[j] - lo[j];
            let pad = margin * if side > T::zero() { side } else { fallback };
            lo[j] = lo[j] - pad;
            hi[j] = hi[j] + pad;
        }
        Self::new(lo, hi)
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, p: &[T]) -> bool {
        p.iter().zip(self.lo.iter().zip(&self.hi)).all(|(&x, (&a, &b))| x >= a && x <= b)
    }

    /// Project onto the box (nearest face for an outside point).
    pub fn clamp(&self, p: &mut [T]) {
        for (x, (&a, &b)) in p.iter_mut().zip(self.lo.iter().zip(&self.hi)) {
            *x = x.max(a).min(b);
        }
    }

    /// Restriction to the leading `k` coordinates.
    pub fn leading(&self, k: usize) -> Self {
        Self { lo: self.lo[..k].to_vec(), hi: self.hi[..k].to_vec() }
    }
}
