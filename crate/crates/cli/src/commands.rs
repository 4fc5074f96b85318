//! The `train`, `eval`, `fk-verify`, `surface` and `bench` subcommands.
//!
//! Result files hold only quantities determined by the configuration and
//! seed; wall-clock time goes to a separate `timing.txt`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use elliptic_core::data::{Dataset, Task};
use elliptic_core::fk_verify::report::{dynkin_record, estimate_record, fmt_real, principle_record, Record};
use elliptic_core::fk_verify::{dynkin_residual, estimate_landscape, max_principle_report, LandscapeParams, StoppingRule};
use elliptic_core::nn::{checkpoint, per_sample_losses, Matrix, MlpModel};
use elliptic_core::sde::{BoundingBox, WalkParams};
use elliptic_core::stats::{mean, sample_std};
use rayon::prelude::*;

use crate::config::{objective_name, QuerySource, RunConfig};
use crate::train::{argmax, evaluate, load_data, loss_kind, master, train, Evaluation, FK_STREAM};
use crate::CliError;

pub const METRICS_FILE: &str = "metrics.txt";
pub const CHECKPOINT_FILE: &str = "model.ckpt";
pub const EVAL_FILE: &str = "eval.txt";
pub const FK_REPORT_FILE: &str = "fk_report.txt";
pub const SURFACE_FILE: &str = "surface.csv";
pub const BENCH_FILE: &str = "bench.txt";
pub const TIMING_FILE: &str = "timing.txt";

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.to_path_buf(), source })
}

fn checkpoint_path(cfg: &RunConfig, out: &Path) -> PathBuf {
    cfg.checkpoint.clone().unwrap_or_else(|| out.join(CHECKPOINT_FILE))
}

fn config_record(cfg: &RunConfig) -> Record {
    cfg.entries().into_iter().fold(Record::new("config"), |r, (k, v)| r.field(k, v))
}

fn eval_record(split: &str, e: &Evaluation) -> Record {
    let mut r = Record::new("eval").field("split", split).real("mean_loss", e.mean_loss).real("max_loss", e.max_loss);
    if let Some(v) = e.rmse {
        r = r.real("rmse", v);
    }
    if let Some(v) = e.accuracy {
        r = r.real("accuracy", v);
    }
    if let Some(v) = e.worst_class_accuracy {
        r = r.real("worst_class_accuracy", v);
    }
    r
}

fn lines(records: &[Record]) -> String {
    records.iter().fold(String::new(), |mut s, r| {
        let _ = writeln!(s, "{}", r.to_line());
        s
    })
}

fn timing(out: &Path, command: &str, start: Instant) -> Result<(), CliError> {
    write(&out.join(TIMING_FILE), &format!("{command} wall_clock_seconds={:.3}\n", start.elapsed().as_secs_f64()))
}

fn load_model(cfg: &RunConfig, out: &Path) -> Result<MlpModel<f64>, CliError> {
    let path = checkpoint_path(cfg, out);
    if !path.exists() {
        return Err(CliError::Runtime(format!("checkpoint {} does not exist; run `train` first", path.display())));
    }
    Ok(checkpoint::load(&path)?)
}

fn check_model_fits(model: &MlpModel<f64>, ds: &Dataset<f64>) -> Result<(), CliError> {
    if model.input_dim() != ds.feature_dim() || model.output_dim() != ds.target_dim() {
        return Err(CliError::Runtime(format!(
            "checkpoint maps {} -> {} but the configured data is {} -> {}",
            model.input_dim(),
            model.output_dim(),
            ds.feature_dim(),
            ds.target_dim()
        )));
    }
    Ok(())
}

pub fn cmd_train(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let start = Instant::now();
    ensure_dir(out)?;
    let data = load_data(cfg)?;
    let trained = train(cfg, &data.train)?;
    checkpoint::save(&trained.model, &checkpoint_path(cfg, out))?;

    let mut recs = vec![config_record(cfg)];
    for (i, v) in trained.epoch_objective.iter().enumerate() {
        recs.push(Record::new("epoch").field("index", i).real("objective", *v));
    }
    recs.push(eval_record("train", &evaluate(&trained.model, &data.train)?));
    recs.push(eval_record("test", &evaluate(&trained.model, &data.test)?));
    if let Some(interior) = &data.interior {
        recs.push(eval_record("interior", &evaluate(&trained.model, interior)?));
    }
    recs.push(Record::new("seed").field("value", cfg.seed));
    write(&out.join(METRICS_FILE), &lines(&recs))?;
    timing(out, "train", start)
}

pub fn cmd_eval(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    ensure_dir(out)?;
    let data = load_data(cfg)?;
    let model = load_model(cfg, out)?;
    check_model_fits(&model, &data.train)?;
    let mut recs = vec![config_record(cfg)];
    recs.push(eval_record("train", &evaluate(&model, &data.train)?));
    recs.push(eval_record("test", &evaluate(&model, &data.test)?));
    if let Some(interior) = &data.interior {
        recs.push(eval_record("interior", &evaluate(&model, interior)?));
    }
    write(&out.join(EVAL_FILE), &lines(&recs))
}

/// Label part of a query: the predicted one-hot class, or the prediction itself.
fn predicted_label(model: &MlpModel<f64>, task: Task, x: &[f64]) -> Result<Vec<f64>, CliError> {
    let out = model.forward(&Matrix::from_vec(1, x.len(), x.to_vec())?)?;
    Ok(match task {
        Task::Regression => out.row(0).to_vec(),
        Task::Classification(k) => {
            let c = argmax(out.row(0));
            (0..k).map(|i| if i == c { 1.0 } else { 0.0 }).collect()
        }
    })
}

/// Uniform `g^d` grid over a box, first coordinate varying slowest.
fn grid(lo: &[f64], hi: &[f64], g: usize) -> Result<Vec<Vec<f64>>, CliError> {
    if g < 2 {
        return Err(CliError::Usage("grid size must be >= 2".into()));
    }
    let d = lo.len();
    let total = g.checked_pow(d as u32).filter(|&t| t <= 1_000_000).ok_or_else(|| {
        CliError::Usage(format!("a {g}^{d} grid is too large"))
    })?;
    Ok((0..total)
        .map(|mut idx| {
            let mut p = vec![0.0; d];
            for j in (0..d).rev() {
                let i = idx % g;
                idx /= g;
                p[j] = if i == g - 1 { hi[j] } else { lo[j] + (hi[j] - lo[j]) * i as f64 / (g - 1) as f64 };
            }
            p
        })
        .collect())
}

fn feature_box(cfg: &RunConfig, train: &Dataset<f64>) -> Result<BoundingBox<f64>, CliError> {
    Ok(BoundingBox::around(train.features(), cfg.fk_margin)?)
}

fn read_query_file(path: &Path, cols: usize) -> Result<Matrix<f64>, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    let mut rows = Vec::new();
    for (n, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let row: Vec<f64> = line
            .split(',')
            .map(|c| c.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| CliError::Runtime(format!("{} line {}: not a numeric row", path.display(), n + 1)))?;
        if row.len() != cols {
            return Err(CliError::Runtime(format!("{} line {}: {} values, joint space has {cols}", path.display(), n + 1, row.len())));
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(CliError::Runtime(format!("{} has no query rows", path.display())));
    }
    Ok(Matrix::from_rows(&rows)?)
}

fn queries(cfg: &RunConfig, model: &MlpModel<f64>, train: &Dataset<f64>, interior: Option<&Dataset<f64>>) -> Result<Matrix<f64>, CliError> {
    let m = train.feature_dim() + train.target_dim();
    match &cfg.fk_queries {
        QuerySource::Data => Ok(train.joint()),
        QuerySource::Interior => interior
            .map(Dataset::joint)
            .ok_or_else(|| CliError::Usage("fk_queries = interior needs dataset = two_moons".into())),
        QuerySource::File(p) => read_query_file(p, m),
        QuerySource::Grid => {
            let b = feature_box(cfg, train)?;
            let rows = grid(&b.lo, &b.hi, cfg.fk_grid)?
                .into_iter()
                .map(|x| {
                    let mut z = x.clone();
                    z.extend(predicted_label(model, train.task(), &x)?);
                    Ok(z)
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            Ok(Matrix::from_rows(&rows)?)
        }
    }
}

fn landscape_params(cfg: &RunConfig) -> LandscapeParams<f64> {
    LandscapeParams {
        walk: WalkParams { sigma: cfg.fk_sigma, eps: cfg.fk_eps, dt: cfg.fk_dt, t_max: cfg.fk_t_max },
        n_paths: cfg.fk_paths,
        stop_value: cfg.fk_stop,
    }
}

/// Box around the data and the queries, padded by `fk_margin`.
fn joint_domain(cfg: &RunConfig, train: &Dataset<f64>, queries: &Matrix<f64>) -> Result<BoundingBox<f64>, CliError> {
    let mut rows: Vec<Vec<f64>> = train.joint().iter_rows().map(<[f64]>::to_vec).collect();
    rows.extend(queries.iter_rows().map(<[f64]>::to_vec));
    Ok(BoundingBox::around(&Matrix::from_rows(&rows)?, cfg.fk_margin)?)
}

pub fn cmd_fk_verify(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    ensure_dir(out)?;
    let data = load_data(cfg)?;
    let model = load_model(cfg, out)?;
    check_model_fits(&model, &data.train)?;
    let kind = loss_kind(data.train.task());
    let q = queries(cfg, &model, &data.train, data.interior.as_ref())?;
    let domain = joint_domain(cfg, &data.train, &q)?;
    let params = landscape_params(cfg);
    let fk = master(cfg.seed).derive(FK_STREAM);
    let estimates = estimate_landscape(&model, kind, &data.train, &q, &params, &domain, fk.derive(0))?;
    let boundary = per_sample_losses(kind, &model, data.train.features(), data.train.targets())?;

    let mut recs = vec![config_record(cfg)];
    for (i, (z, e)) in q.iter_rows().zip(&estimates).enumerate() {
        recs.push(estimate_record(i, z, e));
    }
    let n_invalid = estimates.iter().filter(|e| !e.valid).count();
    recs.push(Record::new("summary").field("n_queries", estimates.len()).field("n_invalid", n_invalid));
    match max_principle_report(&boundary, &estimates, cfg.fk_slack) {
        Ok(r) => recs.push(principle_record(&r)),
        Err(e) => recs.push(Record::new("max_principle").field("error", e.to_string().replace(char::is_whitespace, "_"))),
    }

    let joint = data.train.joint();
    let m = joint.cols();
    let x0: Vec<f64> = (0..m).map(|c| mean(&(0..joint.rows()).map(|r| joint.get(r, c)).collect::<Vec<_>>())).collect();
    let square = |z: &[f64]| z.iter().map(|v| v * v).sum::<f64>();
    let lap = |_: &[f64]| 2.0 * m as f64;
    let fixed = dynkin_residual(square, lap, &x0, cfg.fk_sigma, &StoppingRule::FixedHorizon(1.0), cfg.fk_dynkin_paths, cfg.fk_dt, fk.derive(1))?;
    recs.push(dynkin_record("square_norm_fixed_horizon", &fixed));
    let first_hit = StoppingRule::FirstHit { centers: joint.clone(), eps: cfg.fk_eps, domain: domain.clone(), t_max: cfg.fk_t_max };
    if domain.contains(&x0) {
        let hit = dynkin_residual(square, lap, &x0, cfg.fk_sigma, &first_hit, cfg.fk_dynkin_paths, cfg.fk_dt, fk.derive(2))?;
        recs.push(dynkin_record("square_norm_first_hit", &hit));
    }
    write(&out.join(FK_REPORT_FILE), &lines(&recs))
}

pub fn cmd_surface(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    ensure_dir(out)?;
    let data = load_data(cfg)?;
    if data.train.feature_dim() != 2 {
        return Err(CliError::Usage(format!("surface needs 2 features, data has {}", data.train.feature_dim())));
    }
    if !matches!(data.train.task(), Task::Classification(_)) {
        return Err(CliError::Usage("surface needs a classification dataset".into()));
    }
    let model = load_model(cfg, out)?;
    check_model_fits(&model, &data.train)?;
    let kind = loss_kind(data.train.task());
    let b = feature_box(cfg, &data.train)?;
    let points = grid(&b.lo, &b.hi, cfg.surface_grid)?;
    let rows = points
        .iter()
        .map(|x| {
            let mut z = x.clone();
            z.extend(predicted_label(&model, data.train.task(), x)?);
            Ok(z)
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let q = Matrix::from_rows(&rows)?;
    let (x, y) = q.hsplit(2);
    let loss = per_sample_losses(kind, &model, &x, &y)?;
    let domain = joint_domain(cfg, &data.train, &q)?;
    let fk = master(cfg.seed).derive(FK_STREAM).derive(3);
    let estimates = estimate_landscape(&model, kind, &data.train, &q, &landscape_params(cfg), &domain, fk)?;
    let mut csv = String::from("x0,x1,loss,fk_mean,fk_stderr\n");
    for ((p, l), e) in points.iter().zip(&loss).zip(&estimates) {
        let _ = writeln!(csv, "{},{},{},{},{}", fmt_real(p[0]), fmt_real(p[1]), fmt_real(*l), fmt_real(e.mean), fmt_real(e.stderr));
    }
    write(&out.join(SURFACE_FILE), &csv)
}

/// Headline metric of a run: RMSE for regression, accuracy otherwise.
fn headline(e: &Evaluation) -> (&'static str, f64) {
    match (e.rmse, e.accuracy) {
        (Some(r), _) => ("rmse", r),
        (None, Some(a)) => ("accuracy", a),
        _ => ("mean_loss", e.mean_loss),
    }
}

pub fn cmd_bench(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let start = Instant::now();
    ensure_dir(out)?;
    let jobs: Vec<(usize, u64)> =
        (0..cfg.bench_objectives.len()).flat_map(|o| (0..cfg.bench_seeds as u64).map(move |s| (o, cfg.seed + s))).collect();
    let results: Vec<Result<Evaluation, CliError>> = jobs
        .par_iter()
        .map(|&(o, seed)| {
            let run = RunConfig { objective: cfg.bench_objectives[o], seed, ..cfg.clone() };
            let data = load_data(&run)?;
            let trained = train(&run, &data.train)?;
            evaluate(&trained.model, &data.test)
        })
        .collect();

    let mut recs = vec![config_record(cfg)];
    let mut per_objective: Vec<Vec<f64>> = vec![Vec::new(); cfg.bench_objectives.len()];
    let mut metric_name = "mean_loss";
    for (&(o, seed), r) in jobs.iter().zip(results) {
        let e = r?;
        let (name, v) = headline(&e);
        metric_name = name;
        per_objective[o].push(v);
        recs.push(eval_record("test", &e).field("objective", objective_name(cfg.bench_objectives[o])).field("seed", seed));
    }
    for (o, values) in per_objective.iter().enumerate() {
        recs.push(
            Record::new("summary")
                .field("objective", objective_name(cfg.bench_objectives[o]))
                .field("metric", metric_name)
                .real("mean", mean(values))
                .real("std", sample_std(values))
                .field("n", values.len()),
        );
    }
    write(&out.join(BENCH_FILE), &lines(&recs))?;
    timing(out, "bench", start)
}
