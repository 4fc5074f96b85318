use rand::Rng;

use super::config::EndpointMode;
use crate::nn::matrix::distance;
use crate::nn::Matrix;
use crate::rng::uniform;
use crate::{Error, Result, Scalar};

/// Euclidean distances between all rows.
pub fn pairwise_distances<T: Scalar>(points: &Matrix<T>) -> Matrix<T> {
    let n = points.rows();
    let mut d = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let v = distance(points.row(i), points.row(j));
            d.set(i, j, v);
            d.set(j, i, v);
        }
    }
    d
}

/// Partner law over a batch.
#[derive(Clone, Debug, PartialEq)]
pub struct EndpointSampler<T> {
    mode: EndpointMode,
    n: usize,
    distances: Option<Matrix<T>>,
    floor: T,
}

impl<T: Scalar> EndpointSampler<T> {
    pub const DEFAULT_FLOOR: f64 = 1e-12;

    /// Sampler for the batch with these feature rows.
    pub fn for_batch(mode: EndpointMode, features: &Matrix<T>) -> Self {
        let distances = (mode == EndpointMode::InverseDistance).then(|| pairwise_distances(features));
        Self { mode, n: features.rows(), distances, floor: T::of(Self::DEFAULT_FLOOR) }
    }

    /// Inverse-distance sampler over a precomputed distance matrix.
    pub fn from_distances(distances: Matrix<T>, floor: T) -> Result<Self> {
        let n = distances.rows();
        if distances.cols() != n {
            return Err(Error::Shape("distance matrix must be square".into()));
        }
        if !(floor > T::zero()) {
            return Err(Error::Precondition("distance floor must be > 0".into()));
        }
        for i in 0..n {
            if distances.get(i, i) != T::zero() {
                return Err(Error::Precondition(format!("distance[{i}][{i}] is not zero")));
            }
            for j in 0..i {
                let v = distances.get(i, j);
                if v != distances.get(j, i) || v < T::zero() {
                    return Err(Error::Precondition(format!("distance[{i}][{j}] is negative or asymmetric")));
                }
            }
        }
        Ok(Self { mode: EndpointMode::InverseDistance, n, distances: Some(distances), floor })
    }

    pub fn uniform(n: usize) -> Self {
        Self { mode: EndpointMode::Uniform, n, distances: None, floor: T::of(Self::DEFAULT_FLOOR) }
    }

    pub fn self_pair(n: usize) -> Self {
        Self { mode: EndpointMode::SelfPair, n, distances: None, floor: T::of(Self::DEFAULT_FLOOR) }
    }

    pub fn mode(&self) -> EndpointMode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Probability of each partner for `anchor` (zero at the anchor itself).
    pub fn probabilities(&self, anchor: usize) -> Vec<T> {
        let mut w: Vec<T> = (0..self.n).map(|j| self.weight(anchor, j)).collect();
        let total = w.iter().fold(T::zero(), |a, &v| a + v);
        w.iter_mut().for_each(|v| *v = *v / total);
        w
    }

    fn weight(&self, anchor: usize, j: usize) -> T {
        match self.mode {
            EndpointMode::SelfPair => {
                if j == anchor {
                    T::one()
                } else {
                    T::zero()
                }
            }
            _ if j == anchor => T::zero(),
            EndpointMode::Uniform => T::one(),
            EndpointMode::InverseDistance => {
                let d = self.distances.as_ref().expect("inverse-distance sampler carries distances").get(anchor, j);
                T::one() / d.max(self.floor)
            }
        }
    }
}

/// Draw a bridge partner for `anchor`.
pub fn sample_endpoint<T: Scalar, R: Rng + ?Sized>(anchor: usize, sampler: &EndpointSampler<T>, rng: &mut R) -> Result<usize> {
    if anchor >= sampler.n {
        return Err(Error::Precondition(format!("anchor {anchor} outside batch of {}", sampler.n)));
    }
    match sampler.mode {
        EndpointMode::SelfPair => return Ok(anchor),
        _ if sampler.n < 2 => return Err(Error::Precondition("partner sampling needs a batch of at least 2".into())),
        EndpointMode::Uniform => {
            let j = rng.random_range(0..sampler.n - 1);
            return Ok(if j >= anchor { j + 1 } else { j });
        }
        EndpointMode::InverseDistance => {}
    }
    let total = (0..sampler.n).fold(T::zero(), |a, j| a + sampler.weight(anchor, j));
    let target = uniform::<T, _>(rng) * total;
    let mut acc = T::zero();
    let mut last = anchor;
    for j in (0..sampler.n).filter(|&j| j != anchor) {
        acc = acc + sampler.weight(anchor, j);
        last = j;
        if target < acc {
            return Ok(j);
        }
    }
    // rounding left target at the very top of the cumulative sum
    Ok(last)
}

/// `|y| / sum |y|`, or the uniform vector when `y` is all zeros.
pub fn simplex_project<T: Scalar>(y: &[T]) -> Vec<T> {
    let mut out = y.to_vec();
    simplex_project_in_place(&mut out);
    out
}

pub(crate) fn simplex_project_in_place<T: Scalar>(y: &mut [T]) {
    let total = y.iter().fold(T::zero(), |a, &v| a + v.abs());
    if total > T::zero() {
        y.iter_mut().for_each(|v| *v = v.abs() / total);
    } else {
        let u = T::one() / T::of_usize(y.len());
        y.iter_mut().for_each(|v| *v = u);
    }
}
