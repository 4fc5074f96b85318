//! Order-fixed reductions and small descriptive statistics.

use crate::Scalar;

/// Neumaier-compensated sum. The result depends only on the order of `values`.
pub fn compensated_sum<T: Scalar>(values: impl IntoIterator<Item = T>) -> T {
    let mut sum = T::zero();
    let mut comp = T::zero();
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp = comp + ((sum - t) + v);
        } else {
            comp = comp + ((v - t) + sum);
        }
        sum = t;
    }
    sum + comp
}

pub fn mean<T: Scalar>(values: &[T]) -> T {
    if values.is_empty() {
        return T::nan();
    }
    compensated_sum(values.iter().copied()) / T::of_usize(values.len())
}

/// Unbiased sample standard deviation; zero for fewer than two values.
pub fn sample_std<T: Scalar>(values: &[T]) -> T {
    if values.len() < 2 {
        return T::zero();
    }
    let m = mean(values);
    let ss = compensated_sum(values.iter().map(|&v| (v - m) * (v - m)));
    (ss / T::of_usize(values.len() - 1)).sqrt()
}

/// Mean and standard error of the mean.
pub fn mean_stderr<T: Scalar>(values: &[T]) -> (T, T) {
    let m = mean(values);
    let se = if values.len() < 2 {
        T::zero()
    } else {
        sample_std(values) / T::of_usize(values.len()).sqrt()
    };
    (m, se)
}
