//! Feynman-Kac estimators, Dynkin residuals and the closed-form bounds.

use elliptic_core::data::{Dataset, Task};
use elliptic_core::fk_verify::{
    dynkin_residual, estimate_boundary_value, estimate_hitting_time, estimate_landscape, finite_difference_laplacian,
    affine_shift_bound, max_principle_report, two_layer_laplacian_bound, two_layer_output, LandscapeEstimate, LandscapeParams,
    StopValue, StoppingRule,
};
use elliptic_core::nn::{Activation, LossKind, Matrix, MlpModel, OutputHead};
use elliptic_core::rng::{gaussian, uniform};
use elliptic_core::sde::{BoundingBox, HitOutcome, WalkParams};
use elliptic_core::RngStream;
use proptest::prelude::*;

#[test]
fn dynkin_vanishes_for_a_quadratic_at_first_hit() {
    let centers = Matrix::from_rows(&[[1.0, 0.0], [-0.5, 0.8]]).unwrap();
    let unbounded = BoundingBox::new(vec![f64::NEG_INFINITY; 2], vec![f64::INFINITY; 2]).unwrap();
    let stop = StoppingRule::FirstHit { centers, eps: 0.2, domain: unbounded, t_max: 2.0 };
    let r = dynkin_residual(|x: &[f64]| x[0] * x[0] + x[1] * x[1], |_: &[f64]| 4.0, &[0.1, 0.1], 1.0, &stop, 3000, 1e-3, RngStream::root(31))
        .unwrap();
    assert!(r.residual.abs() <= 4.0 * r.stderr, "{r:?}");
}

#[test]
fn dynkin_vanishes_for_a_product_of_cosines() {
    let g = |x: &[f64]| x[0].cos() * x[1].cos();
    let lap = |x: &[f64]| -2.0 * x[0].cos() * x[1].cos();
    let r = dynkin_residual(g, lap, &[0.3, -0.2], 0.8, &StoppingRule::FixedHorizon(1.0), 3000, 1e-3, RngStream::root(32)).unwrap();
    assert!(r.residual.abs() <= 4.0 * r.stderr + 1e-3, "{r:?}");
}

#[test]
fn dynkin_stderr_halves_with_four_times_the_paths() {
    let g = |x: &[f64]| x[0] * x[0] + x[1] * x[1];
    let run = |n| dynkin_residual(g, |_: &[f64]| 4.0, &[0.0, 0.0], 1.0, &StoppingRule::FixedHorizon(0.5), n, 1e-2, RngStream::root(33)).unwrap();
    let ratio = run(500).stderr / run(2000).stderr;
    assert!((ratio - 2.0).abs() < 0.3, "stderr ratio {ratio}");
}

#[test]
fn box_exit_recovers_a_harmonic_function() {
    // h = x^2 - y^2 is harmonic, so E h(exit state) = h(start)
    let params = LandscapeParams { walk: WalkParams { sigma: 1.0, eps: 0.1, dt: 1e-4, t_max: 20.0 }, n_paths: 1500, stop_value: StopValue::Center };
    let domain = BoundingBox::new(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
    let centers = Matrix::<f64>::zeros(0, 2);
    let start = [0.4, -0.1];
    let e = estimate_boundary_value(&start, &params, &centers, &domain, RngStream::root(34), |s| {
        assert_eq!(s.outcome, HitOutcome::HitDomainBoundary);
        s.state[0] * s.state[0] - s.state[1] * s.state[1]
    })
    .unwrap();
    let exact = 0.4 * 0.4 - 0.1 * 0.1;
    assert_eq!(e.n_boundary, 1500);
    assert!((e.mean - exact).abs() < 4.0 * e.stderr + 0.01, "{} +- {} vs {exact}", e.mean, e.stderr);
}

#[test]
fn hitting_time_estimate_matches_interval_exit() {
    let w = WalkParams { sigma: 1.0, eps: 0.05, dt: 1e-4, t_max: 20.0 };
    let centers = Matrix::<f64>::from_rows(&[[0.0], [1.0]]).unwrap();
    let domain = BoundingBox::new(vec![-1.0], vec![2.0]).unwrap();
    let e = estimate_hitting_time(&[0.5], &w, &centers, &domain, 1500, RngStream::root(35)).unwrap();
    // absorbing ends at 0.05 and 0.95
    let exact = 0.45 * 0.45;
    assert_eq!(e.censor_rate, 0.0);
    assert!((e.mean - exact).abs() < 4.0 * e.stderr + 0.01, "{} +- {} vs {exact}", e.mean, e.stderr);
}

#[test]
fn short_horizon_censors_everything() {
    let w = WalkParams { sigma: 0.1, eps: 0.01, dt: 1e-2, t_max: 0.05 };
    let centers = Matrix::from_rows(&[[5.0]]).unwrap();
    let domain = BoundingBox::new(vec![-10.0], vec![10.0]).unwrap();
    let e = estimate_hitting_time(&[0.0], &w, &centers, &domain, 20, RngStream::root(36)).unwrap();
    assert!(!e.valid);
    assert_eq!(e.censor_rate, 1.0);
}

#[test]
fn center_mode_estimates_obey_the_maximum_principle() {
    let model = MlpModel::init(&[2, 6, 1], Activation::Relu, OutputHead::Linear, RngStream::root(37)).unwrap();
    let mut rng = RngStream::root(38).rng();
    let x = Matrix::from_fn(30, 2, |_, _| gaussian::<f64, _>(&mut rng));
    let y = Matrix::from_fn(30, 1, |_, _| gaussian::<f64, _>(&mut rng));
    let data = Dataset::new(x, y, Task::Regression).unwrap();
    let queries = Matrix::from_fn(8, 3, |_, _| 0.5 * gaussian::<f64, _>(&mut rng));
    let domain = BoundingBox::around(&data.joint(), 0.5).unwrap();
    let params = LandscapeParams { walk: WalkParams { sigma: 1.0, eps: 0.2, dt: 1e-3, t_max: 5.0 }, n_paths: 50, stop_value: StopValue::Center };
    let est = estimate_landscape(&model, LossKind::MeanSquaredError, &data, &queries, &params, &domain, RngStream::root(39)).unwrap();
    let losses = elliptic_core::nn::per_sample_losses(LossKind::MeanSquaredError, &model, data.features(), data.targets()).unwrap();
    let report = max_principle_report(&losses, &est, 0.0).unwrap();
    assert!(report.satisfied, "{report:?}");
}

#[test]
fn invalid_estimates_are_left_out_of_the_report() {
    let good = LandscapeEstimate { mean: 0.5, stderr: 0.1, n_hit: 3, n_timeout: 0, n_boundary: 0, valid: true };
    let bad = LandscapeEstimate { mean: f64::NAN, stderr: f64::NAN, n_hit: 0, n_timeout: 5, n_boundary: 0, valid: false };
    let r = max_principle_report(&[0.2, 0.9], &[good, bad], 0.0).unwrap();
    assert!(r.satisfied);
    assert_eq!(r.max_interior, 0.5);
}

#[test]
fn finite_difference_laplacian_of_a_quadratic() {
    let f = |z: &[f64]| 3.0 * z[0] * z[0] - z[1] * z[1] + z[0] * z[2] + 7.0 * z[2];
    let lap = finite_difference_laplacian(f, &[0.4, -1.0, 2.0], 1e-3, &[0, 1, 2]);
    assert!((lap - 4.0).abs() < 1e-5);
    let partial = finite_difference_laplacian(f, &[0.4, -1.0, 2.0], 1e-3, &[1]);
    assert!((partial + 2.0).abs() < 1e-5);
}

#[test]
fn affine_bound_without_shift_is_the_scaled_laplacian_bound() {
    let w0 = Matrix::<f64>::from_rows(&[[1.0, -0.5], [0.3, 0.2], [-0.7, 0.9]]).unwrap();
    let w1 = Matrix::from_rows(&[[0.4, -1.1, 0.6]]).unwrap();
    let base = two_layer_laplacian_bound(&w0, &w1).unwrap();
    let v = w1.matmul(&w0).unwrap();
    assert!((base - 2.0 * v.norm_sq()).abs() < 1e-15);
    let id = Matrix::<f64>::identity(2);
    let same = affine_shift_bound(&w0, &w1, &id, &[0.0, 0.0], &[0.3, 0.1], 2.0, 5.0, 0.25).unwrap();
    assert!((same - 0.25 * base).abs() < 1e-15);
    let shifted = affine_shift_bound(&w0, &w1, &id, &[0.3, -0.4], &[0.3, 0.1], 2.0, 5.0, 0.25).unwrap();
    let eps = (two_layer_output(&w0, &w1, &[0.3, 0.1]).unwrap() - 2.0).abs();
    let expected = 0.25 * base + 5.0 * 0.5 * (0.5 + 2.0 * eps);
    assert!((shifted - expected).abs() < 1e-12);
}

/// Random `K x d` and `1 x K` weights, optionally nonnegative.
fn random_net(seed: u64, k: usize, d: usize, nonneg: bool) -> (Matrix<f64>, Matrix<f64>) {
    let mut rng = RngStream::root(seed).rng();
    let mut draw = || if nonneg { uniform::<f64, _>(&mut rng) } else { 2.0 * uniform::<f64, _>(&mut rng) - 1.0 };
    let w0 = Matrix::from_fn(k, d, |_, _| draw());
    let w1 = Matrix::from_fn(1, k, |_, _| draw());
    (w0, w1)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn nonnegative_two_layer_laplacian_respects_the_bound(
        seed in 0u64..100_000,
        k in 1usize..8,
        d in 1usize..4,
        x in proptest::collection::vec(-2.0f64..2.0, 3),
        y in -2.0f64..2.0,
    ) {
        let (w0, w1) = random_net(seed, k, d, true);
        let x = &x[..d];
        let h = 1e-2;
        // skip points within 2h of a kink
        let smooth = (0..k).all(|r| w0.row(r).iter().zip(x).map(|(a, b)| a * b).sum::<f64>().abs() > 2.0 * h * w0.row(r).iter().map(|a| a.abs()).sum::<f64>());
        prop_assume!(smooth);
        let loss = |z: &[f64]| {
            let f = two_layer_output(&w0, &w1, &z[..d]).unwrap();
            (f - z[d]) * (f - z[d])
        };
        let mut z = x.to_vec();
        z.push(y);
        let coords: Vec<usize> = (0..d).collect();
        let lap = finite_difference_laplacian(loss, &z, h, &coords);
        let bound = two_layer_laplacian_bound(&w0, &w1).unwrap();
        prop_assert!(lap <= bound + 1e-8, "lap {lap} > bound {bound}");
    }
}

#[test]
fn stop_value_modes_differ_only_in_what_they_record() {
    // zero model: the loss of (x, y) is y^2
    let model = MlpModel::<f64>::zeros(&[1, 1], Activation::Relu, OutputHead::Linear).unwrap();
    let data = Dataset::new(Matrix::from_rows(&[[0.0]]).unwrap(), Matrix::from_rows(&[[1.0]]).unwrap(), Task::Regression).unwrap();
    let queries = Matrix::from_rows(&[[0.0, 1.5]]).unwrap();
    let domain = BoundingBox::new(vec![-3.0, -3.0], vec![3.0, 3.0]).unwrap();
    let walk = WalkParams { sigma: 1.0, eps: 0.3, dt: 1e-3, t_max: 30.0 };
    let run = |stop_value| {
        let params = LandscapeParams { walk, n_paths: 200, stop_value };
        estimate_landscape(&model, LossKind::MeanSquaredError, &data, &queries, &params, &domain, RngStream::root(40)).unwrap()[0]
    };
    let center = run(StopValue::Center);
    let stopped = run(StopValue::StoppedState);
    assert_eq!(center.mean, 1.0);
    assert_eq!((center.n_hit, center.n_boundary), (stopped.n_hit, stopped.n_boundary));
    assert_ne!(stopped.mean, 1.0);
}

#[test]
fn one_dimensional_dirichlet_interpolation() {
    let params = LandscapeParams { walk: WalkParams { sigma: 1.0, eps: 0.05, dt: 1e-4, t_max: 50.0 }, n_paths: 4000, stop_value: StopValue::Center };
    let centers = Matrix::from_rows(&[[0.0], [1.0]]).unwrap();
    let domain = BoundingBox::new(vec![-0.5], vec![1.5]).unwrap();
    let e = estimate_boundary_value(&[0.5], &params, &centers, &domain, RngStream::root(41), |s| match s.outcome {
        HitOutcome::HitCenter(i) => i as f64,
        _ => f64::NAN,
    })
    .unwrap();
    assert!((e.mean - 0.5).abs() <= 3.0 * e.stderr, "{} +- {}", e.mean, e.stderr);
}
