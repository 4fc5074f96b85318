use super::backprop::Gradients;
use super::model::MlpModel;
use crate::{Error, Result, Scalar};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OptimKind<T> {
    /// Heavy-ball SGD with coupled L2 weight decay (PyTorch convention).
    Sgd { momentum: T, weight_decay: T },
    Adam { beta1: T, beta2: T, epsilon: T },
}

impl<T: Scalar> OptimKind<T> {
    pub fn adam_default() -> Self {
        OptimKind::Adam { beta1: T::of(0.9), beta2: T::of(0.999), epsilon: T::of(1e-8) }
    }
}

/// Optimizer kind plus moment buffers shaped like the model.
#[derive(Clone, Debug)]
pub struct OptimState<T> {
    kind: OptimKind<T>,
    /// SGD momentum buffer, or Adam first moment.
    first: Gradients<T>,
    /// Adam second moment (unused by SGD).
    second: Gradients<T>,
    step: u64,
}

impl<T: Scalar> OptimState<T> {
    pub fn new(kind: OptimKind<T>, model: &MlpModel<T>) -> Result<Self> {
        match kind {
            OptimKind::Sgd { momentum, weight_decay } => {
                if momentum < T::zero() || weight_decay < T::zero() {
                    return Err(Error::Domain("SGD momentum and weight decay must be >= 0".into()));
                }
            }
            OptimKind::Adam { beta1, beta2, epsilon } => {
                let unit = |b: T| b >= T::zero() && b < T::one();
                if !unit(beta1) || !unit(beta2) || epsilon <= T::zero() {
                    return Err(Error::Domain("Adam needs betas in [0, 1) and epsilon > 0".into()));
                }
            }
        }
        Ok(Self { kind, first: Gradients::zeros_like(model), second: Gradients::zeros_like(model), step: 0 })
    }

    pub fn kind(&self) -> OptimKind<T> {
        self.kind
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// Apply one update in place.
    pub fn step(&mut self, model: &mut MlpModel<T>, grads: &Gradients<T>, learning_rate: T) -> Result<()> {
        if !grads.matches(model) || !self.first.matches(model) {
            return Err(Error::Shape("gradient set does not mirror the model".into()));
        }
        if let Some((i, g)) = grads.values().enumerate().find(|(_, g)| !g.is_finite()) {
            return Err(Error::NonFinite(format!("gradient entry {i} is {g} at step {}", self.step)));
        }
        let first_step = self.step == 0;
        self.step += 1;
        let params = model.layers_mut().iter_mut().flat_map(|l| l.weights.as_mut_slice().iter_mut().chain(l.bias.iter_mut()));
        match self.kind {
            OptimKind::Sgd { momentum, weight_decay } => {
                for ((p, g), buf) in params.zip(grads.values()).zip(self.first.values_mut()) {
                    let mut d = g + weight_decay * *p;
                    if momentum != T::zero() {
                        *buf = if first_step { d } else { momentum * *buf + d };
                        d = *buf;
                    }
                    *p = *p - learning_rate * d;
                }
            }
            OptimKind::Adam { beta1, beta2, epsilon } => {
                let t = self.step as i32;
                let c1 = T::one() - beta1.powi(t);
                let c2 = T::one() - beta2.powi(t);
                for (((p, g), m), v) in params.zip(grads.values()).zip(self.first.values_mut()).zip(self.second.values_mut()) {
                    *m = beta1 * *m + (T::one() - beta1) * g;
                    *v = beta2 * *v + (T::one() - beta2) * g * g;
                    let m_hat = *m / c1;
                    let v_hat = *v / c2;
                    *p = *p - learning_rate * m_hat / (v_hat.sqrt() + epsilon);
                }
            }
        }
        Ok(())
    }
}

/// Free-function form of [`OptimState::step`].
pub fn optimizer_step<T: Scalar>(
    state: &mut OptimState<T>,
    model: &mut MlpModel<T>,
    grads: &Gradients<T>,
    learning_rate: T,
) -> Result<()> {
    state.step(model, grads, learning_rate)
}
