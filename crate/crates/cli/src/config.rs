//! Flat `key = value` run configuration.
//!
//! Every key has a default. Files may contain blank lines and `#` comments;
//! unknown keys and malformed values are usage errors naming the key.

use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use elliptic_core::elliptic::{EndpointMode, ObjectiveVariant};
use elliptic_core::fk_verify::StopValue;

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DatasetKind {
    TwoMoons,
    Sine,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ObjectiveKind {
    Erm,
    Mixup,
    Elliptic,
    EllipticIw,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OptimizerKind {
    Adam,
    Sgd,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ActivationKind {
    Relu,
    LeakyRelu,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Toggle {
    Auto,
    On,
    Off,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum QuerySource {
    /// Uniform grid over the feature box, labelled by the model's prediction.
    Grid,
    /// The training points themselves.
    Data,
    /// Higher-noise copies of the data distribution.
    Interior,
    /// Headerless CSV of joint rows `(X, y)`.
    File(PathBuf),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub dataset: DatasetKind,
    pub n_train: usize,
    pub n_test: usize,
    pub noise: f64,
    pub csv_path: Option<PathBuf>,
    pub csv_targets: Vec<String>,
    pub normalize: bool,
    pub mean_pad: bool,
    pub split: Vec<f64>,
    pub n_interior: usize,
    pub interior_noise: f64,

    pub hidden: Vec<usize>,
    pub activation: ActivationKind,
    pub leaky_slope: f64,

    pub objective: ObjectiveKind,
    pub n_bridges: usize,
    pub n_time: usize,
    pub sigma_b: f64,
    pub xi: f64,
    pub variant: ObjectiveVariant,
    pub endpoint: EndpointMode,
    pub simplex_project: Toggle,
    pub t_end: f64,
    pub mixup_alpha: f64,

    pub optimizer: OptimizerKind,
    pub lr: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    pub epochs: usize,
    pub batch_size: usize,

    pub seed: u64,
    pub threads: usize,
    pub checkpoint: Option<PathBuf>,

    pub fk_eps: f64,
    pub fk_sigma: f64,
    pub fk_paths: usize,
    pub fk_dt: f64,
    pub fk_t_max: f64,
    pub fk_margin: f64,
    pub fk_slack: f64,
    pub fk_stop: StopValue,
    pub fk_queries: QuerySource,
    pub fk_grid: usize,
    pub fk_dynkin_paths: usize,
    pub surface_grid: usize,

    pub bench_objectives: Vec<ObjectiveKind>,
    pub bench_seeds: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dataset: DatasetKind::TwoMoons,
            n_train: 1000,
            n_test: 1000,
            noise: 0.1,
            csv_path: None,
            csv_targets: Vec::new(),
            normalize: true,
            mean_pad: false,
            split: vec![2.0 / 3.0, 0.2, 2.0 / 15.0],
            n_interior: 2000,
            interior_noise: 0.2,

            hidden: vec![4],
            activation: ActivationKind::Relu,
            leaky_slope: 0.1,

            objective: ObjectiveKind::Elliptic,
            n_bridges: 20,
            n_time: 5,
            sigma_b: 0.05,
            xi: 1.0,
            variant: ObjectiveVariant::PathAverage,
            endpoint: EndpointMode::InverseDistance,
            simplex_project: Toggle::Auto,
            t_end: 1.0,
            mixup_alpha: 1.0,

            optimizer: OptimizerKind::Adam,
            lr: 1e-2,
            momentum: 0.9,
            weight_decay: 0.0,
            epochs: 100,
            batch_size: 64,

            seed: 0,
            threads: 0,
            checkpoint: None,

            fk_eps: 0.05,
            fk_sigma: 1.0,
            fk_paths: 100,
            fk_dt: 1e-3,
            fk_t_max: 5.0,
            fk_margin: 0.1,
            fk_slack: 0.05,
            fk_stop: StopValue::Center,
            fk_queries: QuerySource::Grid,
            fk_grid: 6,
            fk_dynkin_paths: 2000,
            surface_grid: 20,

            bench_objectives: vec![ObjectiveKind::Erm, ObjectiveKind::Mixup, ObjectiveKind::Elliptic, ObjectiveKind::EllipticIw],
            bench_seeds: 10,
        }
    }
}

fn bad(key: &str, value: &str, expected: &str) -> CliError {
    CliError::Usage(format!("config key {key:?}: cannot parse {value:?} as {expected}"))
}

fn num<T: FromStr>(key: &str, value: &str, expected: &str) -> Result<T, CliError> {
    value.parse().map_err(|_| bad(key, value, expected))
}

fn real(key: &str, value: &str) -> Result<f64, CliError> {
    let v: f64 = num(key, value, "a real number")?;
    if !v.is_finite() {
        return Err(bad(key, value, "a finite real number"));
    }
    Ok(v)
}

fn flag(key: &str, value: &str) -> Result<bool, CliError> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(bad(key, value, "true/false")),
    }
}

fn list<T>(key: &str, value: &str, item: impl Fn(&str, &str) -> Result<T, CliError>) -> Result<Vec<T>, CliError> {
    if value.is_empty() {
        return Ok(Vec::new());
    }
    value.split(',').map(|v| item(key, v.trim())).collect()
}

fn objective(key: &str, value: &str) -> Result<ObjectiveKind, CliError> {
    match value {
        "erm" => Ok(ObjectiveKind::Erm),
        "mixup" => Ok(ObjectiveKind::Mixup),
        "elliptic" => Ok(ObjectiveKind::Elliptic),
        "elliptic_iw" => Ok(ObjectiveKind::EllipticIw),
        _ => Err(bad(key, value, "erm|mixup|elliptic|elliptic_iw")),
    }
}

pub fn objective_name(o: ObjectiveKind) -> &'static str {
    match o {
        ObjectiveKind::Erm => "erm",
        ObjectiveKind::Mixup => "mixup",
        ObjectiveKind::Elliptic => "elliptic",
        ObjectiveKind::EllipticIw => "elliptic_iw",
    }
}

fn join<T: Display>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

fn path_text(p: &Option<PathBuf>) -> String {
    p.as_ref().map_or_else(|| "none".to_owned(), |p| p.display().to_string())
}

fn opt_path(value: &str) -> Option<PathBuf> {
    (value != "none" && !value.is_empty()).then(|| PathBuf::from(value))
}

impl RunConfig {
    /// Set one key from its text value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        if value.chars().any(char::is_whitespace) {
            return Err(CliError::Usage(format!("config key {key:?}: values may not contain whitespace")));
        }
        match key {
            "dataset" => {
                self.dataset = match value {
                    "two_moons" => DatasetKind::TwoMoons,
                    "sine" => DatasetKind::Sine,
                    "csv" => DatasetKind::Csv,
                    _ => return Err(bad(key, value, "two_moons|sine|csv")),
                }
            }
            "n_train" => self.n_train = num(key, value, "a count")?,
            "n_test" => self.n_test = num(key, value, "a count")?,
            "noise" => self.noise = real(key, value)?,
            "csv_path" => self.csv_path = opt_path(value),
            "csv_targets" => self.csv_targets = list(key, value, |_, v| Ok(v.to_owned()))?,
            "normalize" => self.normalize = flag(key, value)?,
            "mean_pad" => self.mean_pad = flag(key, value)?,
            "split" => self.split = list(key, value, real)?,
            "n_interior" => self.n_interior = num(key, value, "a count")?,
            "interior_noise" => self.interior_noise = real(key, value)?,
            "hidden" => self.hidden = list(key, value, |k, v| num(k, v, "a list of widths"))?,
            "activation" => {
                self.activation = match value {
                    "relu" => ActivationKind::Relu,
                    "leaky_relu" => ActivationKind::LeakyRelu,
                    _ => return Err(bad(key, value, "relu|leaky_relu")),
                }
            }
            "leaky_slope" => self.leaky_slope = real(key, value)?,
            "objective" => self.objective = objective(key, value)?,
            "n_bridges" => self.n_bridges = num(key, value, "a count")?,
            "n_time" => self.n_time = num(key, value, "a count")?,
            "sigma_b" => self.sigma_b = real(key, value)?,
            "xi" => self.xi = real(key, value)?,
            "variant" => {
                self.variant = match value {
                    "path_average" => ObjectiveVariant::PathAverage,
                    "source_term" => ObjectiveVariant::SourceTerm,
                    _ => return Err(bad(key, value, "path_average|source_term")),
                }
            }
            "endpoint" => {
                self.endpoint = match value {
                    "inverse_distance" => EndpointMode::InverseDistance,
                    "uniform" => EndpointMode::Uniform,
                    "self" => EndpointMode::SelfPair,
                    _ => return Err(bad(key, value, "inverse_distance|uniform|self")),
                }
            }
            "simplex_project" => {
                self.simplex_project = match value {
                    "auto" => Toggle::Auto,
                    v => {
                        if flag(key, v)? {
                            Toggle::On
                        } else {
                            Toggle::Off
                        }
                    }
                }
            }
            "t_end" => self.t_end = real(key, value)?,
            "mixup_alpha" => self.mixup_alpha = real(key, value)?,
            "optimizer" => {
                self.optimizer = match value {
                    "adam" => OptimizerKind::Adam,
                    "sgd" => OptimizerKind::Sgd,
                    _ => return Err(bad(key, value, "adam|sgd")),
                }
            }
            "lr" => self.lr = real(key, value)?,
            "momentum" => self.momentum = real(key, value)?,
            "weight_decay" => self.weight_decay = real(key, value)?,
            "epochs" => self.epochs = num(key, value, "a count")?,
            "batch_size" => self.batch_size = num(key, value, "a count")?,
            "seed" => self.seed = num(key, value, "an unsigned 64-bit integer")?,
            "threads" => self.threads = num(key, value, "a count")?,
            "checkpoint" => self.checkpoint = opt_path(value),
            "fk_eps" => self.fk_eps = real(key, value)?,
            "fk_sigma" => self.fk_sigma = real(key, value)?,
            "fk_paths" => self.fk_paths = num(key, value, "a count")?,
            "fk_dt" => self.fk_dt = real(key, value)?,
            "fk_t_max" => self.fk_t_max = real(key, value)?,
            "fk_margin" => self.fk_margin = real(key, value)?,
            "fk_slack" => self.fk_slack = real(key, value)?,
            "fk_stop" => {
                self.fk_stop = match value {
                    "center" => StopValue::Center,
                    "stopped_state" => StopValue::StoppedState,
                    _ => return Err(bad(key, value, "center|stopped_state")),
                }
            }
            "fk_queries" => {
                self.fk_queries = match value {
                    "grid" => QuerySource::Grid,
                    "data" => QuerySource::Data,
                    "interior" => QuerySource::Interior,
                    path => QuerySource::File(PathBuf::from(path)),
                }
            }
            "fk_grid" => self.fk_grid = num(key, value, "a count")?,
            "fk_dynkin_paths" => self.fk_dynkin_paths = num(key, value, "a count")?,
            "surface_grid" => self.surface_grid = num(key, value, "a count")?,
            "bench_objectives" => self.bench_objectives = list(key, value, objective)?,
            "bench_seeds" => self.bench_seeds = num(key, value, "a count")?,
            _ => return Err(CliError::Usage(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    /// Apply a `key=value` override.
    pub fn apply_override(&mut self, assignment: &str) -> Result<(), CliError> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("override {assignment:?} is not key=value")))?;
        self.set(k.trim(), v.trim())
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut cfg = Self::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("config line {}: expected key = value", n + 1)))?;
            cfg.set(k.trim(), v.trim())?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Every key with its current value, in a fixed order. Feeding the result
    /// back through [`RunConfig::parse`] reproduces the configuration.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let dataset = match self.dataset {
            DatasetKind::TwoMoons => "two_moons",
            DatasetKind::Sine => "sine",
            DatasetKind::Csv => "csv",
        };
        let activation = match self.activation {
            ActivationKind::Relu => "relu",
            ActivationKind::LeakyRelu => "leaky_relu",
        };
        let variant = match self.variant {
            ObjectiveVariant::PathAverage => "path_average",
            ObjectiveVariant::SourceTerm => "source_term",
        };
        let endpoint = match self.endpoint {
            EndpointMode::InverseDistance => "inverse_distance",
            EndpointMode::Uniform => "uniform",
            EndpointMode::SelfPair => "self",
        };
        let simplex = match self.simplex_project {
            Toggle::Auto => "auto",
            Toggle::On => "true",
            Toggle::Off => "false",
        };
        let optimizer = match self.optimizer {
            OptimizerKind::Adam => "adam",
            OptimizerKind::Sgd => "sgd",
        };
        let stop = match self.fk_stop {
            StopValue::Center => "center",
            StopValue::StoppedState => "stopped_state",
        };
        let queries = match &self.fk_queries {
            QuerySource::Grid => "grid".to_owned(),
            QuerySource::Data => "data".to_owned(),
            QuerySource::Interior => "interior".to_owned(),
            QuerySource::File(p) => p.display().to_string(),
        };
        let objectives: Vec<&str> = self.bench_objectives.iter().map(|&o| objective_name(o)).collect();
        vec![
            ("dataset", dataset.to_owned()),
            ("n_train", self.n_train.to_string()),
            ("n_test", self.n_test.to_string()),
            ("noise", self.noise.to_string()),
            ("csv_path", path_text(&self.csv_path)),
            ("csv_targets", self.csv_targets.join(",")),
            ("normalize", self.normalize.to_string()),
            ("mean_pad", self.mean_pad.to_string()),
            ("split", join(&self.split)),
            ("n_interior", self.n_interior.to_string()),
            ("interior_noise", self.interior_noise.to_string()),
            ("hidden", join(&self.hidden)),
            ("activation", activation.to_owned()),
            ("leaky_slope", self.leaky_slope.to_string()),
            ("objective", objective_name(self.objective).to_owned()),
            ("n_bridges", self.n_bridges.to_string()),
            ("n_time", self.n_time.to_string()),
            ("sigma_b", self.sigma_b.to_string()),
            ("xi", self.xi.to_string()),
            ("variant", variant.to_owned()),
            ("endpoint", endpoint.to_owned()),
            ("simplex_project", simplex.to_owned()),
            ("t_end", self.t_end.to_string()),
            ("mixup_alpha", self.mixup_alpha.to_string()),
            ("optimizer", optimizer.to_owned()),
            ("lr", self.lr.to_string()),
            ("momentum", self.momentum.to_string()),
            ("weight_decay", self.weight_decay.to_string()),
            ("epochs", self.epochs.to_string()),
            ("batch_size", self.batch_size.to_string()),
            ("seed", self.seed.to_string()),
            ("checkpoint", path_text(&self.checkpoint)),
            ("fk_eps", self.fk_eps.to_string()),
            ("fk_sigma", self.fk_sigma.to_string()),
            ("fk_paths", self.fk_paths.to_string()),
            ("fk_dt", self.fk_dt.to_string()),
            ("fk_t_max", self.fk_t_max.to_string()),
            ("fk_margin", self.fk_margin.to_string()),
            ("fk_slack", self.fk_slack.to_string()),
            ("fk_stop", stop.to_owned()),
            ("fk_queries", queries),
            ("fk_grid", self.fk_grid.to_string()),
            ("fk_dynkin_paths", self.fk_dynkin_paths.to_string()),
            ("surface_grid", self.surface_grid.to_string()),
            ("bench_objectives", objectives.join(",")),
            ("bench_seeds", self.bench_seeds.to_string()),
        ]
    }

    /// Config as `key = value` lines. `threads` is left out: it never changes results.
    pub fn to_text(&self) -> String {
        self.entries().into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    /// Cross-key checks that single-key parsing cannot do.
    pub fn validate(&self) -> Result<(), CliError> {
        let usage = |m: &str| Err(CliError::Usage(m.to_owned()));
        if self.n_train == 0 || self.n_test == 0 {
            return usage("n_train and n_test must be >= 1");
        }
        if self.batch_size == 0 {
            return usage("batch_size must be >= 1");
        }
        if self.hidden.contains(&0) {
            return usage("hidden widths must be >= 1");
        }
        if self.dataset == DatasetKind::Csv && (self.csv_path.is_none() || self.csv_targets.is_empty()) {
            return usage("dataset = csv needs csv_path and csv_targets");
        }
        if self.split.len() < 2 {
            return usage("split needs at least train and test fractions");
        }
        if !(self.lr > 0.0) {
            return usage("lr must be > 0");
        }
        if self.bench_objectives.is_empty() || self.bench_seeds == 0 {
            return usage("bench needs at least one objective and one seed");
        }
        Ok(())
    }
}
