//! Generators, normalization and splitting.

use elliptic_core::data::{split, synthetic_sine, two_moons, two_moons_centroids, Dataset, Task};
use elliptic_core::nn::Matrix;
use elliptic_core::stats::mean_stderr;
use elliptic_core::RngStream;
use proptest::prelude::*;

#[test]
fn two_moons_class_means_approach_the_arc_centroids() {
    let ds = two_moons::<f64>(10_000, 0.1, RngStream::root(41)).unwrap();
    let labels = ds.labels();
    let centroids = two_moons_centroids();
    for (class, c) in centroids.iter().enumerate() {
        let rows: Vec<&[f64]> = ds.features().iter_rows().zip(&labels).filter(|(_, &l)| l == class).map(|(r, _)| r).collect();
        assert_eq!(rows.len(), 5_000);
        for j in 0..2 {
            let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
            let (m, se) = mean_stderr(&col);
            assert!((m - c[j]).abs() <= 3.0 * se, "class {class} coord {j}: {m} +- {se} vs {}", c[j]);
        }
    }
}

#[test]
fn noiseless_sine_lies_on_the_curve() {
    let ds = synthetic_sine::<f64>(200, 0.0, RngStream::root(42)).unwrap();
    assert_eq!(ds.task(), Task::Regression);
    for (x, y) in ds.features().iter_rows().zip(ds.targets().iter_rows()) {
        assert!((0.0..=1.0).contains(&x[0]));
        assert!((y[0] - (2.0 * std::f64::consts::PI * x[0]).sin()).abs() < 1e-12);
    }
}

#[test]
fn sine_noise_has_the_requested_scale() {
    let noisy = synthetic_sine::<f64>(20_000, 0.3, RngStream::root(43)).unwrap();
    let resid: Vec<f64> = noisy
        .features()
        .iter_rows()
        .zip(noisy.targets().iter_rows())
        .map(|(x, y)| y[0] - (2.0 * std::f64::consts::PI * x[0]).sin())
        .collect();
    let var = resid.iter().map(|r| r * r).sum::<f64>() / resid.len() as f64;
    assert!((var.sqrt() - 0.3).abs() < 0.01);
}

fn regression(rows: &[Vec<f64>]) -> Dataset<f64> {
    let x = Matrix::from_rows(rows).unwrap();
    let y = Matrix::from_fn(rows.len(), 1, |r, _| r as f64);
    Dataset::new(x, y, Task::Regression).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn normalization_round_trips(rows in proptest::collection::vec(proptest::collection::vec(-1e3f64..1e3, 3), 2..30)) {
        let mut ds = regression(&rows);
        let raw = ds.features().clone();
        ds.normalize();
        for v in ds.features().as_slice() {
            prop_assert!((-1e-12..=1.0 + 1e-12).contains(v));
        }
        let back = ds.denormalize(ds.features()).unwrap();
        let ranges = ds.normalization().unwrap();
        for (r, row) in raw.iter_rows().enumerate() {
            for (c, &v) in row.iter().enumerate() {
                let (lo, hi) = ranges[c];
                if hi > lo {
                    prop_assert!((back.get(r, c) - v).abs() <= 1e-12 * (1.0 + v.abs()));
                }
            }
        }
        let again = ds.normalize_features(&raw).unwrap();
        for (a, b) in again.as_slice().iter().zip(ds.features().as_slice()) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn splits_partition_the_rows(n in 3usize..200, a in 0.1f64..0.8, seed in 0u64..1000) {
        let rows: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64]).collect();
        let ds = regression(&rows);
        let b = (1.0 - a) / 2.0;
        let parts = match split(&ds, &[a, b, 1.0 - a - b], RngStream::root(seed)) {
            Ok(p) => p,
            // tiny sets can leave a part empty, which is rejected
            Err(_) => return Ok(()),
        };
        let mut seen: Vec<usize> = parts.iter().flat_map(|p| p.features().iter_rows().map(|r| r[0] as usize).collect::<Vec<_>>()).collect();
        seen.sort_unstable();
        prop_assert_eq!(seen, (0..n).collect::<Vec<_>>());
        for p in &parts {
            for (x, y) in p.features().iter_rows().zip(p.targets().iter_rows()) {
                prop_assert_eq!(x[0], y[0]);
            }
        }
        let again = split(&ds, &[a, b, 1.0 - a - b], RngStream::root(seed)).unwrap();
        prop_assert_eq!(parts[0].features(), again[0].features());
    }
}
