//! Reverse-mode gradients for [`MlpModel`].
//!
//! One backward sweep per sample produces both the parameter gradient and the
//! gradient with respect to the joint point `z = (X, y)`. Samples are processed
//! in fixed-size chunks (possibly on several threads) and the chunk partials
//! are summed in chunk order, so results are bit-identical for any thread count.

use rayon::prelude::*;

use super::loss::LossKind;
use super::matrix::Matrix;
use super::model::{Dense, ForwardTrace, MlpModel};
use crate::{Error, Result, Scalar};

const CHUNK: usize = 64;

/// Gradient set mirroring a model's parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients<T> {
    pub layers: Vec<Dense<T>>,
}

impl<T: Scalar> Gradients<T> {
    pub fn zeros_like(model: &MlpModel<T>) -> Self {
        let layers = model
            .layers()
            .iter()
            .map(|l| Dense { weights: Matrix::zeros(l.output_dim(), l.input_dim()), bias: vec![T::zero(); l.output_dim()] })
            .collect();
        Self { layers }
    }

    pub fn add_assign(&mut self, other: &Gradients<T>) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            for (x, &y) in a.weights.as_mut_slice().iter_mut().zip(b.weights.as_slice()) {
                *x = *x + y;
            }
            for (x, &y) in a.bias.iter_mut().zip(&b.bias) {
                *x = *x + y;
            }
        }
    }

    pub fn scale(&mut self, factor: T) {
        for v in self.values_mut() {
            *v = *v * factor;
        }
    }

    pub fn values(&self) -> impl Iterator<Item = T> + '_ {
        self.layers.iter().flat_map(|l| l.weights.as_slice().iter().chain(&l.bias).copied())
    }

    pub fn values_mut(&mut self) -> impl Iterator<Item = &mut T> + '_ {
        self.layers.iter_mut().flat_map(|l| l.weights.as_mut_slice().iter_mut().chain(l.bias.iter_mut()))
    }

    pub fn is_finite(&self) -> bool {
        self.values().all(|v| v.is_finite())
    }

    pub fn matches(&self, model: &MlpModel<T>) -> bool {
        self.layers.len() == model.layers().len()
            && self.layers.iter().zip(model.layers()).all(|(g, l)| {
                g.weights.shape() == l.weights.shape() && g.bias.len() == l.bias.len()
            })
    }
}

/// Everything one backward sweep over a batch produces.
#[derive(Clone, Debug)]
pub struct BackpropOutput<T> {
    /// Unweighted per-sample losses.
    pub losses: Vec<T>,
    /// Row `i` is `d l(f(X_i), y_i) / d (X_i, y_i)`.
    pub grad_z: Matrix<T>,
    /// `sum_i w_i * d l_i / d theta`.
    pub grads: Gradients<T>,
    /// The weights `w_i` that were applied.
    pub weights: Vec<T>,
}

fn validate<T: Scalar>(kind: LossKind, model: &MlpModel<T>, inputs: &Matrix<T>, targets: &Matrix<T>) -> Result<()> {
    model.check_input(inputs)?;
    kind.check_head(model.head())?;
    if targets.cols() != model.output_dim() || targets.rows() != inputs.rows() {
        return Err(Error::Shape(format!(
            "targets are {}x{}, expected {}x{}",
            targets.rows(),
            targets.cols(),
            inputs.rows(),
            model.output_dim()
        )));
    }
    for (i, row) in targets.iter_rows().enumerate() {
        kind.check_target(i, row)?;
    }
    Ok(())
}

struct Scratch<T> {
    trace: ForwardTrace<T>,
    deltas: Vec<Vec<T>>,
    d_target: Vec<T>,
}

impl<T: Scalar> Scratch<T> {
    fn new(model: &MlpModel<T>) -> Self {
        Self {
            trace: ForwardTrace::new(model),
            deltas: model.layers().iter().map(|l| vec![T::zero(); l.output_dim()]).collect(),
            d_target: vec![T::zero(); model.output_dim()],
        }
    }
}

/// Backward sweep with a per-sample weight on the parameter gradient.
///
/// `weight(i, loss_i, grad_z_i)` is evaluated after the sample's input/target
/// gradient is known and treated as a constant (no gradient flows through it).
pub fn backprop_weighted<T, W>(
    kind: LossKind,
    model: &MlpModel<T>,
    inputs: &Matrix<T>,
    targets: &Matrix<T>,
    weight: W,
) -> Result<BackpropOutput<T>>
where
    T: Scalar,
    W: Fn(usize, T, &[T]) -> T + Sync,
{
    validate(kind, model, inputs, targets)?;
    let n = inputs.rows();
    let d = model.input_dim();
    let k = model.output_dim();
    let starts: Vec<usize> = (0..n).step_by(CHUNK).collect();

    let partials: Vec<(Vec<T>, Vec<T>, Vec<T>, Gradients<T>)> = starts
        .par_iter()
        .map(|&start| {
            let end = (start + CHUNK).min(n);
            let mut scratch = Scratch::new(model);
            let mut grads = Gradients::zeros_like(model);
            let mut losses = Vec::with_capacity(end - start);
            let mut weights = Vec::with_capacity(end - start);
            let mut gz = vec![T::zero(); (end - start) * (d + k)];
            for i in start..end {
                let row = &mut gz[(i - start) * (d + k)..(i - start + 1) * (d + k)];
                let loss = sample_backward(kind, model, inputs.row(i), targets.row(i), &mut scratch, row);
                let w = weight(i, loss, row);
                accumulate(model, &scratch, w, &mut grads);
                losses.push(loss);
                weights.push(w);
            }
            (losses, weights, gz, grads)
        })
        .collect();

    let mut losses = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    let mut gz = Vec::with_capacity(n * (d + k));
    let mut grads = Gradients::zeros_like(model);
    for (l, w, g, p) in partials {
        losses.extend(l);
        weights.extend(w);
        gz.extend(g);
        grads.add_assign(&p);
    }
    Ok(BackpropOutput { losses, grad_z: Matrix::from_vec(n, d + k, gz)?, grads, weights })
}

/// Forward + backward for one sample. Leaves per-layer deltas in `scratch`,
/// writes `dl/d(x, y)` into `grad_z`, returns the loss.
fn sample_backward<T: Scalar>(
    kind: LossKind,
    model: &MlpModel<T>,
    input: &[T],
    target: &[T],
    scratch: &mut Scratch<T>,
    grad_z: &mut [T],
) -> T {
    model.forward_sample(input, &mut scratch.trace);
    let last = model.layers().len() - 1;
    let loss = kind.value(scratch.trace.logits(), scratch.trace.output(), target);
    {
        let Scratch { trace, deltas, d_target } = scratch;
        kind.gradients(model.head(), trace.logits(), trace.output(), target, &mut deltas[last], d_target);
    }
    let act = model.activation();
    let layers = model.layers();
    for l in (1..=last).rev() {
        let (lower, upper) = scratch.deltas.split_at_mut(l);
        let delta = &upper[0];
        let below = &mut lower[l - 1];
        let w = &layers[l].weights;
        for (j, b) in below.iter_mut().enumerate() {
            let mut acc = T::zero();
            for (o, &dv) in delta.iter().enumerate() {
                acc = acc + w.get(o, j) * dv;
            }
            *b = acc * act.derivative(scratch.trace.pre[l - 1][j]);
        }
    }
    let d = input.len();
    let w0 = &layers[0].weights;
    for (j, g) in grad_z[..d].iter_mut().enumerate() {
        let mut acc = T::zero();
        for (o, &dv) in scratch.deltas[0].iter().enumerate() {
            acc = acc + w0.get(o, j) * dv;
        }
        *g = acc;
    }
    grad_z[d..].copy_from_slice(&scratch.d_target);
    loss
}

fn accumulate<T: Scalar>(model: &MlpModel<T>, scratch: &Scratch<T>, w: T, grads: &mut Gradients<T>) {
    if w == T::zero() {
        return;
    }
    for (l, g) in grads.layers.iter_mut().enumerate() {
        let a = &scratch.trace.activations[l];
        for (o, &dv) in scratch.deltas[l].iter().enumerate() {
            let s = w * dv;
            g.bias[o] = g.bias[o] + s;
            for (gw, &av) in g.weights.row_mut(o).iter_mut().zip(a) {
                *gw = *gw + s * av;
            }
        }
    }
    debug_assert_eq!(grads.layers.len(), model.layers().len());
}

/// Per-sample losses and the gradient of each with respect to `z_i = (X_i, y_i)`.
pub fn loss_with_input_grad<T: Scalar>(
    kind: LossKind,
    model: &MlpModel<T>,
    inputs: &Matrix<T>,
    targets: &Matrix<T>,
) -> Result<(Vec<T>, Matrix<T>)> {
    let out = backprop_weighted(kind, model, inputs, targets, |_, _, _| T::zero())?;
    Ok((out.losses, out.grad_z))
}

/// Gradient of the mean per-sample loss with respect to every weight and bias.
pub fn backward_params<T: Scalar>(
    kind: LossKind,
    model: &MlpModel<T>,
    inputs: &Matrix<T>,
    targets: &Matrix<T>,
) -> Result<Gradients<T>> {
    let w = T::one() / T::of_usize(inputs.rows().max(1));
    Ok(backprop_weighted(kind, model, inputs, targets, |_, _, _| w)?.grads)
}

/// Per-sample losses without gradients.
pub fn per_sample_losses<T: Scalar>(
    kind: LossKind,
    model: &MlpModel<T>,
    inputs: &Matrix<T>,
    targets: &Matrix<T>,
) -> Result<Vec<T>> {
    validate(kind, model, inputs, targets)?;
    let mut trace = ForwardTrace::new(model);
    Ok((0..inputs.rows())
        .map(|i| {
            model.forward_sample(inputs.row(i), &mut trace);
            kind.value(trace.logits(), trace.output(), targets.row(i))
        })
        .collect())
}
