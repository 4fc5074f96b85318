//! Data preparation, the mini-batch training loop, and evaluation.

use elliptic_core::data::{load_csv, split, synthetic_sine, two_moons, CsvOptions, Dataset, Task};
use elliptic_core::elliptic::{
    bridge_objective, erm_objective, importance_weighted_objective, mixup_objective, EllipticConfig, EndpointSampler, MixupConfig,
    ObjectiveValue,
};
use elliptic_core::nn::{per_sample_losses, Activation, LossKind, Matrix, MlpModel, OptimKind, OptimState, OutputHead};
use elliptic_core::rng::RngStream;
use elliptic_core::stats::compensated_sum;
use rand::seq::SliceRandom;

use crate::config::{ActivationKind, DatasetKind, ObjectiveKind, OptimizerKind, RunConfig, Toggle};
use crate::CliError;

/// Train/test data plus, for two-moons, the higher-noise interior sample.
#[derive(Clone, Debug)]
pub struct Splits {
    pub train: Dataset<f64>,
    pub test: Dataset<f64>,
    pub interior: Option<Dataset<f64>>,
}

// Child stream indices under the master seed.
const DATA_STREAM: u64 = 1;
const INIT_STREAM: u64 = 2;
const SHUFFLE_STREAM: u64 = 3;
const OBJECTIVE_STREAM: u64 = 4;
pub(crate) const FK_STREAM: u64 = 5;

pub fn master(seed: u64) -> RngStream {
    RngStream::root(seed)
}

pub fn load_data(cfg: &RunConfig) -> Result<Splits, CliError> {
    let s = master(cfg.seed).derive(DATA_STREAM);
    match cfg.dataset {
        DatasetKind::TwoMoons => Ok(Splits {
            train: two_moons(cfg.n_train, cfg.noise, s.derive(0))?,
            test: two_moons(cfg.n_test, cfg.noise, s.derive(1))?,
            interior: Some(two_moons(cfg.n_interior.max(2), cfg.interior_noise, s.derive(2))?),
        }),
        DatasetKind::Sine => Ok(Splits {
            train: synthetic_sine(cfg.n_train, cfg.noise, s.derive(0))?,
            test: synthetic_sine(cfg.n_test, cfg.noise, s.derive(1))?,
            interior: None,
        }),
        DatasetKind::Csv => {
            let path = cfg.csv_path.as_ref().ok_or_else(|| CliError::Usage("dataset = csv needs csv_path".into()))?;
            let targets: Vec<&str> = cfg.csv_targets.iter().map(String::as_str).collect();
            let ds = load_csv(path, &targets, CsvOptions { normalize: cfg.normalize, mean_pad: cfg.mean_pad })?;
            let mut parts = split(&ds, &cfg.split, s.derive(0))?;
            let test = parts.pop().expect("split has at least two parts");
            Ok(Splits { train: parts.swap_remove(0), test, interior: None })
        }
    }
}

pub fn loss_kind(task: Task) -> LossKind {
    match task {
        Task::Regression => LossKind::MeanSquaredError,
        Task::Classification(_) => LossKind::CrossEntropy,
    }
}

pub fn build_model(cfg: &RunConfig, train: &Dataset<f64>) -> Result<MlpModel<f64>, CliError> {
    let mut sizes = vec![train.feature_dim()];
    sizes.extend(&cfg.hidden);
    sizes.push(train.target_dim());
    let act = match cfg.activation {
        ActivationKind::Relu => Activation::Relu,
        ActivationKind::LeakyRelu => Activation::LeakyRelu { slope: cfg.leaky_slope },
    };
    let head = match train.task() {
        Task::Regression => OutputHead::Linear,
        Task::Classification(_) => OutputHead::Softmax,
    };
    Ok(MlpModel::init(&sizes, act, head, master(cfg.seed).derive(INIT_STREAM))?)
}

pub fn elliptic_config(cfg: &RunConfig, task: Task) -> EllipticConfig<f64> {
    let simplex_project = match cfg.simplex_project {
        Toggle::Auto => matches!(task, Task::Classification(_)),
        Toggle::On => true,
        Toggle::Off => false,
    };
    EllipticConfig {
        n_bridges: cfg.n_bridges,
        n_time: cfg.n_time,
        sigma_b: cfg.sigma_b,
        xi: if cfg.objective == ObjectiveKind::EllipticIw { cfg.xi } else { 0.0 },
        variant: cfg.variant,
        endpoint_mode: cfg.endpoint,
        simplex_project,
        t_end: cfg.t_end,
    }
}

fn optimizer(cfg: &RunConfig, model: &MlpModel<f64>) -> Result<OptimState<f64>, CliError> {
    let kind = match cfg.optimizer {
        OptimizerKind::Adam => OptimKind::adam_default(),
        OptimizerKind::Sgd => OptimKind::Sgd { momentum: cfg.momentum, weight_decay: cfg.weight_decay },
    };
    Ok(OptimState::new(kind, model)?)
}

fn batch_objective(
    cfg: &RunConfig,
    model: &MlpModel<f64>,
    x: &Matrix<f64>,
    y: &Matrix<f64>,
    kind: LossKind,
    ell: &EllipticConfig<f64>,
    stream: RngStream,
) -> Result<ObjectiveValue<f64>, CliError> {
    let v = match cfg.objective {
        ObjectiveKind::Erm => erm_objective(model, x, y, kind)?,
        // a trailing batch of one cannot be mixed or bridged
        _ if x.rows() < 2 => erm_objective(model, x, y, kind)?,
        ObjectiveKind::Mixup => mixup_objective(model, x, y, kind, &MixupConfig { alpha: cfg.mixup_alpha }, stream)?,
        ObjectiveKind::Elliptic => bridge_objective(model, x, y, kind, ell, &EndpointSampler::for_batch(ell.endpoint_mode, x), stream)?,
        ObjectiveKind::EllipticIw => {
            importance_weighted_objective(model, x, y, kind, ell, &EndpointSampler::for_batch(ell.endpoint_mode, x), stream)?
        }
    };
    Ok(v)
}

/// Trained model and the mean objective of every epoch.
pub struct Trained {
    pub model: MlpModel<f64>,
    pub epoch_objective: Vec<f64>,
}

pub fn train(cfg: &RunConfig, train: &Dataset<f64>) -> Result<Trained, CliError> {
    let kind = loss_kind(train.task());
    let ell = elliptic_config(cfg, train.task());
    if matches!(cfg.objective, ObjectiveKind::Elliptic | ObjectiveKind::EllipticIw) {
        ell.validate()?;
    }
    let mut model = build_model(cfg, train)?;
    let mut opt = optimizer(cfg, &model)?;
    let root = master(cfg.seed);
    let n = train.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut epoch_objective = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.sort_unstable();
        order.shuffle(&mut root.derive(SHUFFLE_STREAM).derive(epoch as u64).rng());
        let epoch_stream = root.derive(OBJECTIVE_STREAM).derive(epoch as u64);
        let mut values = Vec::new();
        for (b, idx) in order.chunks(cfg.batch_size).enumerate() {
            let x = train.features().select_rows(idx);
            let y = train.targets().select_rows(idx);
            let v = batch_objective(cfg, &model, &x, &y, kind, &ell, epoch_stream.derive(b as u64))?;
            opt.step(&mut model, &v.grads, cfg.lr)?;
            values.push(v.value);
        }
        epoch_objective.push(compensated_sum(values.iter().copied()) / values.len() as f64);
    }
    Ok(Trained { model, epoch_objective })
}

/// Test metrics of a model on one dataset.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub mean_loss: f64,
    pub max_loss: f64,
    /// Regression only.
    pub rmse: Option<f64>,
    /// Classification only.
    pub accuracy: Option<f64>,
    pub worst_class_accuracy: Option<f64>,
}

pub fn evaluate(model: &MlpModel<f64>, ds: &Dataset<f64>) -> Result<Evaluation, CliError> {
    let kind = loss_kind(ds.task());
    let losses = per_sample_losses(kind, model, ds.features(), ds.targets())?;
    let n = losses.len() as f64;
    let mean_loss = compensated_sum(losses.iter().copied()) / n;
    let max_loss = losses.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut eval = Evaluation { mean_loss, max_loss, rmse: None, accuracy: None, worst_class_accuracy: None };
    match ds.task() {
        Task::Regression => {
            let k = ds.target_dim() as f64;
            eval.rmse = Some((mean_loss / k).sqrt());
        }
        Task::Classification(c) => {
            let out = model.forward(ds.features())?;
            let mut correct = vec![0usize; c];
            let mut total = vec![0usize; c];
            for (row, label) in out.iter_rows().zip(ds.labels()) {
                total[label] += 1;
                if argmax(row) == label {
                    correct[label] += 1;
                }
            }
            eval.accuracy = Some(correct.iter().sum::<usize>() as f64 / n);
            eval.worst_class_accuracy = (0..c)
                .filter(|&i| total[i] > 0)
                .map(|i| correct[i] as f64 / total[i] as f64)
                .reduce(f64::min);
        }
    }
    Ok(eval)
}

pub(crate) fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}
