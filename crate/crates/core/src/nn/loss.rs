use super::model::{log_sum_exp, OutputHead};
use crate::{Error, Result, Scalar};

/// Per-sample loss `l(f(X), y)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LossKind {
    /// `||f(X) - y||^2`, summed over output coordinates.
    MeanSquaredError,
    /// `-sum_k y_k log softmax(z)_k` against a (possibly soft) probability vector.
    CrossEntropy,
}

impl LossKind {
    pub(crate) fn check_head(&self, head: OutputHead) -> Result<()> {
        if *self == LossKind::CrossEntropy && head != OutputHead::Softmax {
            return Err(Error::Domain("cross-entropy requires a softmax output head".into()));
        }
        Ok(())
    }

    pub(crate) fn check_target<T: Scalar>(&self, row: usize, target: &[T]) -> Result<()> {
        if *self != LossKind::CrossEntropy {
            return Ok(());
        }
        let tol = T::simplex_tolerance();
        let sum = target.iter().fold(T::zero(), |a, &v| a + v);
        if target.iter().any(|&v| v < -tol) || (sum - T::one()).abs() > tol {
            return Err(Error::Domain(format!(
                "cross-entropy target row {row} is not a probability vector (sum {sum})"
            )));
        }
        Ok(())
    }

    /// Loss value from the last-layer pre-activations and head output.
    ///
    /// No target validation; callers outside this module go through the checked
    /// entry points in `backprop`.
    pub fn value<T: Scalar>(&self, logits: &[T], output: &[T], target: &[T]) -> T {
        match self {
            LossKind::MeanSquaredError => output
                .iter()
                .zip(target)
                .fold(T::zero(), |acc, (&p, &y)| acc + (p - y) * (p - y)),
            LossKind::CrossEntropy => {
                let lse = log_sum_exp(logits);
                logits.iter().zip(target).fold(T::zero(), |acc, (&z, &y)| acc + y * (lse - z))
            }
        }
    }

    /// Writes `dl/dlogits` into `d_logits` and `dl/dy` into `d_target`.
    pub(crate) fn gradients<T: Scalar>(
        &self,
        head: OutputHead,
        logits: &[T],
        output: &[T],
        target: &[T],
        d_logits: &mut [T],
        d_target: &mut [T],
    ) {
        match self {
            LossKind::MeanSquaredError => {
                let two = T::of(2.0);
                for ((dt, &p), &y) in d_target.iter_mut().zip(output).zip(target) {
                    *dt = -two * (p - y);
                }
                match head {
                    OutputHead::Linear => {
                        for (dz, &dt) in d_logits.iter_mut().zip(d_target.iter()) {
                            *dz = -dt;
                        }
                    }
                    OutputHead::Softmax => {
                        // softmax Jacobian: dz = p * (g - <g, p>)
                        let dot = output
                            .iter()
                            .zip(d_target.iter())
                            .fold(T::zero(), |a, (&p, &dt)| a + p * -dt);
                        for ((dz, &p), &dt) in d_logits.iter_mut().zip(output).zip(d_target.iter()) {
                            *dz = p * (-dt - dot);
                        }
                    }
                }
            }
            LossKind::CrossEntropy => {
                let lse = log_sum_exp(logits);
                let mass = target.iter().fold(T::zero(), |a, &y| a + y);
                for (((dz, dt), &z), (&p, &y)) in d_logits
                    .iter_mut()
                    .zip(d_target.iter_mut())
                    .zip(logits)
                    .zip(output.iter().zip(target))
                {
                    *dz = mass * p - y;
                    *dt = lse - z;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mse_value() {
        let v = LossKind::MeanSquaredError.value(&[0.0, 0.0], &[1.0, 3.0], &[0.0, 1.0]);
        assert_eq!(v, 5.0);
    }

    #[test]
    fn cross_entropy_is_nonnegative_on_simplex() {
        let z = [2.0f64, -1.0, 0.5];
        let mut p = [0.0; 3];
        super::super::model::softmax_into(&z, &mut p);
        for t in [[1.0, 0.0, 0.0], [0.2, 0.3, 0.5], [0.0, 0.0, 1.0]] {
            assert!(LossKind::CrossEntropy.value(&z, &p, &t) >= 0.0);
        }
    }

    #[test]
    fn simplex_check() {
        let ce = LossKind::CrossEntropy;
        assert!(ce.check_target(0, &[0.5f64, 0.5]).is_ok());
        assert!(ce.check_target(3, &[1.2f64, -0.2]).is_err());
        assert!(ce.check_target(3, &[0.4f64, 0.4]).is_err());
        assert!(LossKind::MeanSquaredError.check_target(0, &[7.0f64]).is_ok());
    }

    #[test]
    fn cross_entropy_needs_softmax() {
        assert!(LossKind::CrossEntropy.check_head(OutputHead::Linear).is_err());
        assert!(LossKind::CrossEntropy.check_head(OutputHead::Softmax).is_ok());
    }
}
