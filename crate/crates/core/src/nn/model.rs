use rand::Rng;

use super::matrix::Matrix;
use crate::rng::RngStream;
use crate::{Error, Result, Scalar};

/// Hidden-layer nonlinearity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Activation<T> {
    Relu,
    LeakyRelu { slope: T },
}

impl<T: Scalar> Activation<T> {
    pub fn leaky_default() -> Self {
        Activation::LeakyRelu { slope: T::of(0.1) }
    }

    #[inline]
    pub fn apply(&self, z: T) -> T {
        match *self {
            Activation::Relu => {
                if z > T::zero() {
                    z
                } else {
                    T::zero()
                }
            }
            Activation::LeakyRelu { slope } => {
                if z > T::zero() {
                    z
                } else {
                    slope * z
                }
            }
        }
    }

    /// Derivative with the kink at zero assigned to the left branch.
    #[inline]
    pub fn derivative(&self, z: T) -> T {
        match *self {
            Activation::Relu => {
                if z > T::zero() {
                    T::one()
                } else {
                    T::zero()
                }
            }
            Activation::LeakyRelu { slope } => {
                if z > T::zero() {
                    T::one()
                } else {
                    slope
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputHead {
    Linear,
    Softmax,
}

/// One affine layer `z = W h + b`, `W` stored as `out x in`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dense<T> {
    pub weights: Matrix<T>,
    pub bias: Vec<T>,
}

impl<T: Scalar> Dense<T> {
    pub fn input_dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.weights.rows()
    }

    #[inline]
    pub(crate) fn affine_into(&self, input: &[T], out: &mut [T]) {
        for (o, (w_row, &b)) in out.iter_mut().zip(self.weights.iter_rows().zip(&self.bias)) {
            let mut acc = b;
            for (&w, &x) in w_row.iter().zip(input) {
                acc = acc + w * x;
            }
            *o = acc;
        }
    }
}

/// Fully connected feed-forward network.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpModel<T> {
    layers: Vec<Dense<T>>,
    activation: Activation<T>,
    head: OutputHead,
}

impl<T: Scalar> MlpModel<T> {
    /// Assemble a model from explicit layers, validating dimensions.
    pub fn from_layers(layers: Vec<Dense<T>>, activation: Activation<T>, head: OutputHead) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Shape("a model needs at least one layer".into()));
        }
        for (i, l) in layers.iter().enumerate() {
            if l.bias.len() != l.output_dim() {
                return Err(Error::Shape(format!(
                    "layer {i}: bias has {} entries for {} outputs",
                    l.bias.len(),
                    l.output_dim()
                )));
            }
        }
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[0].output_dim() != pair[1].input_dim() {
                return Err(Error::Shape(format!(
                    "layer {i} emits {} values but layer {} expects {}",
                    pair[0].output_dim(),
                    i + 1,
                    pair[1].input_dim()
                )));
            }
        }
        if let Activation::LeakyRelu { slope } = activation {
            if !(slope > T::zero() && slope < T::one()) {
                return Err(Error::Domain(format!("leaky slope {slope} outside (0, 1)")));
            }
        }
        Ok(Self { layers, activation, head })
    }

    /// All-zero model with the given layer sizes (input first, output last).
    pub fn zeros(layer_sizes: &[usize], activation: Activation<T>, head: OutputHead) -> Result<Self> {
        if layer_sizes.len() < 2 {
            return Err(Error::Shape("layer_sizes needs an input and an output size".into()));
        }
        let layers = layer_sizes
            .windows(2)
            .map(|w| Dense { weights: Matrix::zeros(w[1], w[0]), bias: vec![T::zero(); w[1]] })
            .collect();
        Self::from_layers(layers, activation, head)
    }

    /// Uniform fan-in initialization, `U(-1/sqrt(fan_in), 1/sqrt(fan_in))` for weights and biases.
    pub fn init(layer_sizes: &[usize], activation: Activation<T>, head: OutputHead, stream: RngStream) -> Result<Self> {
        let mut model = Self::zeros(layer_sizes, activation, head)?;
        let mut rng = stream.rng();
        for layer in &mut model.layers {
            let bound = 1.0 / (layer.input_dim() as f64).sqrt();
            for w in layer.weights.as_mut_slice() {
                *w = T::of(rng.random_range(-bound..bound));
            }
            for b in &mut layer.bias {
                *b = T::of(rng.random_range(-bound..bound));
            }
        }
        Ok(model)
    }

    pub fn layers(&self) -> &[Dense<T>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense<T>] {
        &mut self.layers
    }

    pub fn activation(&self) -> Activation<T> {
        self.activation
    }

    pub fn head(&self) -> OutputHead {
        self.head
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].output_dim()
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        std::iter::once(self.input_dim()).chain(self.layers.iter().map(Dense::output_dim)).collect()
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.rows() * l.weights.cols() + l.bias.len()).sum()
    }

    pub fn check_input(&self, inputs: &Matrix<T>) -> Result<()> {
        if inputs.cols() != self.input_dim() {
            return Err(Error::Shape(format!(
                "inputs have {} columns, model expects {}",
                inputs.cols(),
                self.input_dim()
            )));
        }
        Ok(())
    }

    /// Batched prediction.
    pub fn forward(&self, inputs: &Matrix<T>) -> Result<Matrix<T>> {
        self.check_input(inputs)?;
        let mut out = Matrix::zeros(inputs.rows(), self.output_dim());
        let mut trace = ForwardTrace::new(self);
        for r in 0..inputs.rows() {
            self.forward_sample(inputs.row(r), &mut trace);
            out.row_mut(r).copy_from_slice(trace.output());
        }
        Ok(out)
    }

    /// Single-sample forward pass recording pre-activations for backprop.
    pub(crate) fn forward_sample(&self, input: &[T], trace: &mut ForwardTrace<T>) {
        trace.activations[0].copy_from_slice(input);
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let (before, after) = trace.activations.split_at_mut(l + 1);
            let z = &mut trace.pre[l];
            layer.affine_into(&before[l], z);
            let h = &mut after[0];
            if l < last {
                for (hv, &zv) in h.iter_mut().zip(z.iter()) {
                    *hv = self.activation.apply(zv);
                }
            } else {
                match self.head {
                    OutputHead::Linear => h.copy_from_slice(z),
                    OutputHead::Softmax => softmax_into(z, h),
                }
            }
        }
    }
}

/// Per-sample scratch buffers for one forward pass.
pub(crate) struct ForwardTrace<T> {
    /// `activations[0]` is the input; `activations[l + 1]` the output of layer `l`.
    pub activations: Vec<Vec<T>>,
    pub pre: Vec<Vec<T>>,
}

impl<T: Scalar> ForwardTrace<T> {
    pub fn new(model: &MlpModel<T>) -> Self {
        let sizes = model.layer_sizes();
        Self {
            activations: sizes.iter().map(|&n| vec![T::zero(); n]).collect(),
            pre: sizes[1..].iter().map(|&n| vec![T::zero(); n]).collect(),
        }
    }

    pub fn output(&self) -> &[T] {
        &self.activations[self.activations.len() - 1]
    }

    pub fn logits(&self) -> &[T] {
        &self.pre[self.pre.len() - 1]
    }
}

pub(crate) fn softmax_into<T: Scalar>(z: &[T], out: &mut [T]) {
    let max = z.iter().copied().fold(T::neg_infinity(), T::max);
    let mut total = T::zero();
    for (o, &v) in out.iter_mut().zip(z) {
        *o = (v - max).exp();
        total = total + *o;
    }
    for o in out.iter_mut() {
        *o = *o / total;
    }
}

/// `log(sum(exp(z)))` without overflow.
pub(crate) fn log_sum_exp<T: Scalar>(z: &[T]) -> T {
    let max = z.iter().copied().fold(T::neg_infinity(), T::max);
    let total = z.iter().fold(T::zero(), |acc, &v| acc + (v - max).exp());
    max + total.ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_identity() -> MlpModel<f64> {
        let layer = Dense { weights: Matrix::identity(2), bias: vec![0.0, 0.0] };
        MlpModel::from_layers(vec![layer], Activation::Relu, OutputHead::Linear).unwrap()
    }

    #[test]
    fn zero_network_outputs_zero() {
        let m = MlpModel::<f64>::zeros(&[3, 5, 2], Activation::Relu, OutputHead::Linear).unwrap();
        let x = Matrix::from_rows(&[[1.0, -2.0, 3.0], [0.5, 0.5, 0.5]]).unwrap();
        assert!(m.forward(&x).unwrap().as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_layer_output_is_affine() {
        // the only layer is the output layer, so no hidden activation is applied
        let x = Matrix::from_rows(&[[1.0, -1.0]]).unwrap();
        assert_eq!(single_identity().forward(&x).unwrap().row(0), &[1.0, -1.0]);
    }

    #[test]
    fn relu_hidden_layer_clips() {
        let hidden = Dense { weights: Matrix::identity(2), bias: vec![0.0, 0.0] };
        let out = Dense { weights: Matrix::identity(2), bias: vec![0.0, 0.0] };
        let m = MlpModel::from_layers(vec![hidden, out], Activation::Relu, OutputHead::Linear).unwrap();
        let x = Matrix::from_rows(&[[1.0, -1.0]]).unwrap();
        assert_eq!(m.forward(&x).unwrap().row(0), &[1.0, 0.0]);
    }

    #[test]
    fn softmax_rows_sum_to_one() {
        let m = MlpModel::<f64>::init(&[2, 8, 3], Activation::Relu, OutputHead::Softmax, RngStream::root(1)).unwrap();
        let x = Matrix::from_fn(20, 2, |r, c| (r as f64 - 10.0) * (c as f64 + 1.0) * 3.0);
        let y = m.forward(&x).unwrap();
        for row in y.iter_rows() {
            let s: f64 = row.iter().sum();
            assert!((s - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn shape_errors() {
        let x = Matrix::<f64>::zeros(1, 3);
        assert!(matches!(single_identity().forward(&x), Err(Error::Shape(_))));
        let a = Dense { weights: Matrix::<f64>::zeros(4, 2), bias: vec![0.0; 4] };
        let b = Dense { weights: Matrix::<f64>::zeros(1, 3), bias: vec![0.0; 1] };
        assert!(MlpModel::from_layers(vec![a, b], Activation::Relu, OutputHead::Linear).is_err());
    }

    #[test]
    fn leaky_slope_validated() {
        let r = MlpModel::<f64>::zeros(&[1, 1], Activation::LeakyRelu { slope: 1.5 }, OutputHead::Linear);
        assert!(matches!(r, Err(Error::Domain(_))));
    }

    #[test]
    fn relu_kink_derivative_is_zero() {
        assert_eq!(Activation::<f64>::Relu.derivative(0.0), 0.0);
        assert_eq!(Activation::<f64>::leaky_default().apply(-2.0), -0.2);
    }

    #[test]
    fn log_sum_exp_is_stable() {
        let v = log_sum_exp(&[1000.0f64, 1000.0]);
        assert!((v - (1000.0 + 2f64.ln())).abs() < 1e-12);
    }
}
