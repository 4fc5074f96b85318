//! Datasets: the two-moons generator, CSV ingestion with min-max
//! normalization, a synthetic regression set, and seeded splits.

mod csv_file;
mod generate;

pub use csv_file::{load_csv, CsvOptions};
pub use generate::{two_moons, two_moons_centroids, synthetic_sine};

use rand::seq::SliceRandom;

use crate::nn::Matrix;
use crate::rng::RngStream;
use crate::{Error, Result, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Task {
    Regression,
    Classification(usize),
}

/// Feature/target pairs plus the normalization that produced the features.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset<T> {
    features: Matrix<T>,
    targets: Matrix<T>,
    normalization: Option<Vec<(T, T)>>,
    task: Task,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(features: Matrix<T>, targets: Matrix<T>, task: Task) -> Result<Self> {
        if features.rows() == 0 {
            return Err(Error::Precondition("dataset needs at least one row".into()));
        }
        if features.rows() != targets.rows() {
            return Err(Error::Shape(format!("{} feature rows, {} target rows", features.rows(), targets.rows())));
        }
        features.ensure_finite("features")?;
        targets.ensure_finite("targets")?;
        if let Task::Classification(k) = task {
            if targets.cols() != k {
                return Err(Error::Shape(format!("{k} classes but {} target columns", targets.cols())));
            }
            for (i, row) in targets.iter_rows().enumerate() {
                let ones = row.iter().filter(|&&v| v == T::one()).count();
                let zeros = row.iter().filter(|&&v| v == T::zero()).count();
                if ones != 1 || ones + zeros != k {
                    return Err(Error::Domain(format!("target row {i} is not one-hot")));
                }
            }
        }
        Ok(Self { features, targets, normalization: None, task })
    }

    /// One-hot targets from class labels.
    pub fn classification(features: Matrix<T>, labels: &[usize], num_classes: usize) -> Result<Self> {
        if let Some(&bad) = labels.iter().find(|&&l| l >= num_classes) {
            return Err(Error::Domain(format!("label {bad} outside {num_classes} classes")));
        }
        let targets = Matrix::from_fn(labels.len(), num_classes, |r, c| if labels[r] == c { T::one() } else { T::zero() });
        Self::new(features, targets, Task::Classification(num_classes))
    }

    pub fn features(&self) -> &Matrix<T> {
        &self.features
    }

    pub fn targets(&self) -> &Matrix<T> {
        &self.targets
    }

    pub fn task(&self) -> Task {
        self.task
    }

    /// Per feature column `(min, max)` used to normalize, if any.
    pub fn normalization(&self) -> Option<&[(T, T)]> {
        self.normalization.as_deref()
    }

    pub fn len(&self) -> usize {
        self.features.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn feature_dim(&self) -> usize {
        self.features.cols()
    }

    pub fn target_dim(&self) -> usize {
        self.targets.cols()
    }

    /// Rows `(X_i, y_i)` of the joint space.
    pub fn joint(&self) -> Matrix<T> {
        self.features.hstack(&self.targets).expect("row counts checked on construction")
    }

    /// Class index per row (argmax of the one-hot target).
    pub fn labels(&self) -> Vec<usize> {
        self.targets.iter_rows().map(argmax).collect()
    }

    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::Precondition("subset would be empty".into()));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.len()) {
            return Err(Error::Precondition(format!("row {bad} outside dataset of {}", self.len())));
        }
        Ok(Self {
            features: self.features.select_rows(indices),
            targets: self.targets.select_rows(indices),
            normalization: self.normalization.clone(),
            task: self.task,
        })
    }

    /// Min-max normalize every feature column in place and keep the ranges.
    /// A constant column maps to zero.
    pub fn normalize(&mut self) {
        let ranges = column_ranges(&self.features);
        apply_ranges(&mut self.features, &ranges);
        self.normalization = Some(ranges);
    }

    /// Map normalized feature rows back to the original scale.
    pub fn denormalize(&self, normalized: &Matrix<T>) -> Result<Matrix<T>> {
        let ranges = self.normalization.as_ref().ok_or_else(|| Error::Precondition("dataset is not normalized".into()))?;
        if normalized.cols() != ranges.len() {
            return Err(Error::Shape(format!("{} columns, {} ranges", normalized.cols(), ranges.len())));
        }
        Ok(Matrix::from_fn(normalized.rows(), normalized.cols(), |r, c| {
            let (lo, hi) = ranges[c];
            lo + normalized.get(r, c) * (hi - lo)
        }))
    }

    /// Apply this dataset's normalization to other raw feature rows.
    pub fn normalize_features(&self, raw: &Matrix<T>) -> Result<Matrix<T>> {
        let ranges = self.normalization.as_ref().ok_or_else(|| Error::Precondition("dataset is not normalized".into()))?;
        if raw.cols() != ranges.len() {
            return Err(Error::Shape(format!("{} columns, {} ranges", raw.cols(), ranges.len())));
        }
        let mut out = raw.clone();
        apply_ranges(&mut out, ranges);
        Ok(out)
    }
}

pub(crate) fn argmax<T: Scalar>(row: &[T]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

fn column_ranges<T: Scalar>(m: &Matrix<T>) -> Vec<(T, T)> {
    (0..m.cols())
        .map(|c| {
            (0..m.rows()).fold((T::infinity(), T::neg_infinity()), |(lo, hi), r| (lo.min(m.get(r, c)), hi.max(m.get(r, c))))
        })
        .collect()
}

fn apply_ranges<T: Scalar>(m: &mut Matrix<T>, ranges: &[(T, T)]) {
    for r in 0..m.rows() {
        for (c, &(lo, hi)) in ranges.iter().enumerate() {
            let v = if hi > lo { (m.get(r, c) - lo) / (hi - lo) } else { T::zero() };
            m.set(r, c, v);
        }
    }
}

/// Seeded disjoint partition of the rows.
///
/// Part `i > 0` gets `floor(fractions[i] * n)` rows; the first part takes the
/// remainder.
pub fn split<T: Scalar>(ds: &Dataset<T>, fractions: &[f64], stream: RngStream) -> Result<Vec<Dataset<T>>> {
    if fractions.is_empty() || fractions.iter().any(|&f| !(f > 0.0)) {
        return Err(Error::Precondition("split fractions must be positive".into()));
    }
    let total: f64 = fractions.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Precondition(format!("split fractions sum to {total}, not 1")));
    }
    let n = ds.len();
    let mut sizes: Vec<usize> = fractions.iter().map(|&f| (f * n as f64).floor() as usize).collect();
    let rest: usize = sizes[1..].iter().sum();
    if rest > n {
        return Err(Error::Precondition("split fractions overflow the dataset".into()));
    }
    sizes[0] = n - rest;
    if let Some(i) = sizes.iter().position(|&s| s == 0) {
        return Err(Error::Precondition(format!("split part {i} of {n} rows would be empty")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut stream.rng());
    let mut parts = Vec::with_capacity(sizes.len());
    let mut start = 0;
    for s in sizes {
        parts.push(ds.subset(&order[start..start + s])?);
        start += s;
    }
    Ok(parts)
}
