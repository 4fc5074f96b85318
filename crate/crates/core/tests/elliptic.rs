//! Bridge objective, partner law and mixup checked against closed forms.

use elliptic_core::elliptic::{
    bridge_objective, erm_objective, importance_weighted_objective, pairwise_distances, sample_bridges, sample_endpoint,
    sample_mixup_lambda, simplex_project, EllipticConfig, EndpointMode, EndpointSampler, MixupConfig, ObjectiveVariant,
};
use elliptic_core::nn::{Activation, Dense, LossKind, Matrix, MlpModel, OutputHead};
use elliptic_core::stats::mean_stderr;
use elliptic_core::RngStream;
use proptest::prelude::*;

fn linear(w: f64, b: f64) -> MlpModel<f64> {
    let layer = Dense { weights: Matrix::from_vec(1, 1, vec![w]).unwrap(), bias: vec![b] };
    MlpModel::from_layers(vec![layer], Activation::Relu, OutputHead::Linear).unwrap()
}

fn cfg(n_bridges: usize, n_time: usize, sigma_b: f64) -> EllipticConfig<f64> {
    EllipticConfig {
        n_bridges,
        n_time,
        sigma_b,
        xi: 0.0,
        variant: ObjectiveVariant::PathAverage,
        endpoint_mode: EndpointMode::InverseDistance,
        simplex_project: false,
        t_end: 1.0,
    }
}

#[test]
fn linear_model_bridge_expectation() {
    // residual r = w x + b - y is affine in z, so along a bridge
    // E r(s)^2 = ((1 - s) r_i + s r_j)^2 + sigma^2 (w^2 + 1) s (1 - s)
    let (w, b, sigma) = (1.5, -0.2, 0.4);
    let model = linear(w, b);
    let x = Matrix::from_rows(&[[0.0], [1.0]]).unwrap();
    let y = Matrix::from_rows(&[[0.5], [0.3]]).unwrap();
    let r = [w * 0.0 + b - 0.5, w * 1.0 + b - 0.3];
    let c = cfg(50, 6, sigma);
    let sampler = EndpointSampler::for_batch(EndpointMode::InverseDistance, &x);
    let grid = c.grid();
    let mut exact = 0.0;
    for (i, j) in [(0, 1), (1, 0)] {
        for &s in &grid {
            let lin = (1.0 - s) * r[i] + s * r[j];
            exact += lin * lin + sigma * sigma * (w * w + 1.0) * s * (1.0 - s);
        }
    }
    exact /= (2 * grid.len()) as f64;
    let root = RngStream::root(21);
    let vals: Vec<f64> = (0..200)
        .map(|k| bridge_objective(&model, &x, &y, LossKind::MeanSquaredError, &c, &sampler, root.derive(k)).unwrap().value)
        .collect();
    let (m, se) = mean_stderr(&vals);
    assert!((m - exact).abs() < 4.0 * se, "bridge objective {m} +- {se}, expected {exact}");
}

#[test]
fn bridge_gradient_matches_finite_differences_for_fixed_noise() {
    let model = MlpModel::init(&[2, 5, 1], Activation::leaky_default(), OutputHead::Linear, RngStream::root(3)).unwrap();
    let x = Matrix::from_rows(&[[0.1, 0.2], [0.9, -0.4], [0.3, 0.7], [-0.5, 0.0]]).unwrap();
    let y = Matrix::from_rows(&[[1.0], [0.0], [0.5], [-0.3]]).unwrap();
    let mut c = cfg(3, 4, 0.1);
    c.variant = ObjectiveVariant::SourceTerm;
    let sampler = EndpointSampler::for_batch(c.endpoint_mode, &x);
    let stream = RngStream::root(22);
    let value = |m: &MlpModel<f64>| bridge_objective(m, &x, &y, LossKind::MeanSquaredError, &c, &sampler, stream).unwrap();
    let analytic: Vec<f64> = value(&model).grads.values().collect();
    let h = 1e-6;
    let mut k = 0;
    for l in 0..model.layers().len() {
        let len_w = model.layers()[l].weights.as_slice().len();
        for i in 0..len_w + model.layers()[l].bias.len() {
            let shifted = |delta: f64| {
                let mut m = model.clone();
                let layer = &mut m.layers_mut()[l];
                if i < len_w {
                    layer.weights.as_mut_slice()[i] += delta;
                } else {
                    layer.bias[i - len_w] += delta;
                }
                value(&m).value
            };
            let fd = (shifted(h) - shifted(-h)) / (2.0 * h);
            assert!((fd - analytic[k]).abs() <= 1e-5 * (1.0 + fd.abs()), "param {k}: {fd} vs {}", analytic[k]);
            k += 1;
        }
    }
}

#[test]
fn self_paired_zero_noise_bridges_reproduce_erm() {
    let model = MlpModel::init(&[2, 8, 3], Activation::Relu, OutputHead::Softmax, RngStream::root(4)).unwrap();
    let x = Matrix::from_rows(&[[0.1, 0.2], [0.9, -0.4], [0.3, 0.7]]).unwrap();
    let y = Matrix::from_rows(&[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.2, 0.3, 0.5]]).unwrap();
    let c = EllipticConfig { endpoint_mode: EndpointMode::SelfPair, ..cfg(4, 2, 0.0) };
    let bridged = bridge_objective(&model, &x, &y, LossKind::CrossEntropy, &c, &EndpointSampler::self_pair(3), RngStream::root(5)).unwrap();
    let erm = erm_objective(&model, &x, &y, LossKind::CrossEntropy).unwrap();
    assert!((bridged.value - erm.value).abs() <= 1e-12);
    for (a, b) in bridged.grads.values().zip(erm.grads.values()) {
        assert!((a - b).abs() <= 1e-12);
    }
}

#[test]
fn inverse_distance_partner_frequencies() {
    // anchor at 0, partners at distance 1 and 2: probabilities 2/3 and 1/3
    let x = Matrix::<f64>::from_rows(&[[0.0], [1.0], [-2.0]]).unwrap();
    let sampler = EndpointSampler::for_batch(EndpointMode::InverseDistance, &x);
    let p = sampler.probabilities(0);
    assert_eq!(p[0], 0.0);
    assert!((p[1] - 2.0 / 3.0).abs() < 1e-15 && (p[2] - 1.0 / 3.0).abs() < 1e-15);
    let mut rng = RngStream::root(23).rng();
    let n = 30_000;
    let hits = (0..n).filter(|_| sample_endpoint(0, &sampler, &mut rng).unwrap() == 1).count();
    let f = hits as f64 / n as f64;
    let se = (2.0 / 9.0 / n as f64).sqrt();
    assert!((f - 2.0 / 3.0).abs() < 4.0 * se, "frequency {f}");
}

#[test]
fn uniform_sampler_never_returns_the_anchor() {
    let sampler = EndpointSampler::<f64>::uniform(5);
    let mut rng = RngStream::root(24).rng();
    let mut counts = [0usize; 5];
    for _ in 0..8000 {
        counts[sample_endpoint(2, &sampler, &mut rng).unwrap()] += 1;
    }
    assert_eq!(counts[2], 0);
    for c in [counts[0], counts[1], counts[3], counts[4]] {
        assert!((c as f64 - 2000.0).abs() < 4.0 * (8000.0f64 * 0.25 * 0.75).sqrt());
    }
}

/// Kolmogorov-Smirnov statistic of a sample against a CDF.
fn ks(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

#[test]
fn mixup_lambda_follows_beta() {
    let n = 4000;
    // 1% critical value of the one-sample KS statistic
    let crit = 1.63 / (n as f64).sqrt();
    let cases: [(f64, fn(f64) -> f64); 3] = [
        (1.0, |x| x),
        (2.0, |x| 3.0 * x * x - 2.0 * x * x * x),
        (0.5, |x| 2.0 / std::f64::consts::PI * x.sqrt().asin()),
    ];
    for (k, (alpha, cdf)) in cases.into_iter().enumerate() {
        let mut rng = RngStream::new(25, k as u64).rng();
        let mix = MixupConfig { alpha };
        let xs: Vec<f64> = (0..n).map(|_| sample_mixup_lambda(&mix, &mut rng).unwrap()).collect();
        let d = ks(xs, cdf);
        assert!(d < crit, "alpha {alpha}: KS {d} >= {crit}");
    }
}

#[test]
fn uniform_mixup_lambda_over_many_draws() {
    let n = 100_000;
    let mut rng = RngStream::root(28).rng();
    let xs: Vec<f64> = (0..n).map(|_| sample_mixup_lambda(&MixupConfig { alpha: 1.0 }, &mut rng).unwrap()).collect();
    let d = ks(xs, |x| x);
    assert!(d < 1.63 / (n as f64).sqrt(), "KS {d}");
}

#[test]
fn simplex_projection_applies_to_every_bridged_label() {
    let x = Matrix::from_rows(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
    let y = Matrix::from_rows(&[[1.0, 0.0], [0.0, 1.0], [1.0, 0.0]]).unwrap();
    let c = EllipticConfig { simplex_project: true, ..cfg(5, 6, 0.5) };
    let s = sample_bridges(&x, &y, &c, &EndpointSampler::for_batch(c.endpoint_mode, &x), RngStream::root(26)).unwrap();
    assert_eq!(s.features.rows(), 3 * 5 * 6);
    for row in s.targets.iter_rows() {
        assert!(row.iter().all(|&v| v >= 0.0));
        assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
    let total: f64 = s.weights.iter().sum();
    assert!((total - 1.0).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn pairwise_distances_match_brute_force(rows in proptest::collection::vec(proptest::collection::vec(-10.0f64..10.0, 3), 1..12)) {
        let m = Matrix::from_rows(&rows).unwrap();
        let d = pairwise_distances(&m);
        for i in 0..rows.len() {
            for j in 0..rows.len() {
                let brute: f64 = rows[i].iter().zip(&rows[j]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                prop_assert!((d.get(i, j) - brute).abs() <= 1e-12 * (1.0 + brute));
            }
        }
    }

    #[test]
    fn simplex_projection_lands_on_the_simplex(y in proptest::collection::vec(-5.0f64..5.0, 1..8)) {
        let p = simplex_project(&y);
        prop_assert!(p.iter().all(|&v| v >= 0.0));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let again = simplex_project(&p);
        for (a, b) in p.iter().zip(&again) {
            prop_assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_xi_is_the_plain_bridge_objective(seed in 0u64..10_000) {
        let model = MlpModel::init(&[2, 4, 1], Activation::Relu, OutputHead::Linear, RngStream::root(seed)).unwrap();
        let x = Matrix::from_rows(&[[0.1, 0.2], [0.9, -0.4], [0.3, 0.7]]).unwrap();
        let y = Matrix::from_rows(&[[1.0], [0.0], [0.5]]).unwrap();
        let c = cfg(2, 5, 0.05);
        let sampler = EndpointSampler::for_batch(c.endpoint_mode, &x);
        let s = RngStream::new(seed, 1);
        let a = bridge_objective(&model, &x, &y, LossKind::MeanSquaredError, &c, &sampler, s).unwrap();
        let b = importance_weighted_objective(&model, &x, &y, LossKind::MeanSquaredError, &c, &sampler, s).unwrap();
        prop_assert_eq!(a.value.to_bits(), b.value.to_bits());
        prop_assert_eq!(a.grads, b.grads);
    }

    #[test]
    fn importance_weighting_never_lowers_the_objective(seed in 0u64..10_000, xi in 0.0f64..3.0) {
        let model = MlpModel::init(&[2, 4, 1], Activation::Relu, OutputHead::Linear, RngStream::root(seed)).unwrap();
        let x = Matrix::from_rows(&[[0.1, 0.2], [0.9, -0.4], [0.3, 0.7]]).unwrap();
        let y = Matrix::from_rows(&[[1.0], [0.0], [0.5]]).unwrap();
        let c = cfg(2, 5, 0.05);
        let sampler = EndpointSampler::for_batch(c.endpoint_mode, &x);
        let s = RngStream::new(seed, 1);
        let plain = bridge_objective(&model, &x, &y, LossKind::MeanSquaredError, &c, &sampler, s).unwrap();
        let iw = importance_weighted_objective(&model, &x, &y, LossKind::MeanSquaredError, &EllipticConfig { xi, ..c }, &sampler, s).unwrap();
        prop_assert!(iw.value >= plain.value);
    }
}
