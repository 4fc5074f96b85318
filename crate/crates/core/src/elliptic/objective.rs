//! Training objectives over a mini-batch.
//!
//! Each objective returns its scalar value and the gradient of that value with
//! respect to the model parameters. Bridge samples are constants: gradients
//! flow only through the network.

use rand::seq::SliceRandom;
use rand_distr::{Beta, Distribution};
use rayon::prelude::*;

use super::config::{EllipticConfig, MixupConfig, ObjectiveVariant};
use super::endpoint::{sample_endpoint, simplex_project_in_place, EndpointSampler};
use crate::nn::matrix::norm;
use crate::nn::{backprop_weighted, Gradients, LossKind, Matrix, MlpModel};
use crate::rng::RngStream;
use crate::sde::bridge_into;
use crate::stats::compensated_sum;
use crate::{Error, Result, Scalar};

#[derive(Clone, Debug)]
pub struct ObjectiveValue<T> {
    pub value: T,
    pub grads: Gradients<T>,
}

fn check_batch<T: Scalar>(features: &Matrix<T>, targets: &Matrix<T>, min_rows: usize) -> Result<()> {
    if features.rows() != targets.rows() {
        return Err(Error::Shape(format!(
            "{} feature rows but {} target rows",
            features.rows(),
            targets.rows()
        )));
    }
    if features.rows() < min_rows {
        return Err(Error::Precondition(format!(
            "objective needs a batch of at least {min_rows}, got {}",
            features.rows()
        )));
    }
    Ok(())
}

/// `sum_i w_i (l_i + xi * |grad_z l_i|)` with parameter gradient
/// `sum_i w_i (1 + xi * |grad_z l_i|) grad_theta l_i`.
fn weighted_objective<T: Scalar>(
    kind: LossKind,
    model: &MlpModel<T>,
    inputs: &Matrix<T>,
    targets: &Matrix<T>,
    point_weights: &[T],
    xi: T,
) -> Result<ObjectiveValue<T>> {
    let out = backprop_weighted(kind, model, inputs, targets, |i, _, gz| {
        if xi == T::zero() {
            point_weights[i]
        } else {
            point_weights[i] * (T::one() + xi * norm(gz))
        }
    })?;
    let value = compensated_sum(out.losses.iter().zip(out.grad_z.iter_rows()).zip(point_weights).map(|((&l, gz), &w)| {
        if xi == T::zero() {
            w * l
        } else {
            w * (l + xi * norm(gz))
        }
    }));
    Ok(ObjectiveValue { value, grads: out.grads })
}

/// Mean per-sample loss.
pub fn erm_objective<T: Scalar>(
    model: &MlpModel<T>,
    features: &Matrix<T>,
    targets: &Matrix<T>,
    kind: LossKind,
) -> Result<ObjectiveValue<T>> {
    check_batch(features, targets, 1)?;
    let w = vec![T::one() / T::of_usize(features.rows()); features.rows()];
    weighted_objective(kind, model, features, targets, &w, T::zero())
}

/// Bridged points of a batch and the quadrature weight of each.
#[derive(Clone, Debug)]
pub struct BridgeSamples<T> {
    pub features: Matrix<T>,
    pub targets: Matrix<T>,
    pub weights: Vec<T>,
    /// `(anchor, partner)` per bridge, in generation order.
    pub pairs: Vec<(usize, usize)>,
}

/// Draw `n_bridges` bridges per anchor over the joint point `z = (X, y)`.
///
/// Anchor `i` uses stream `stream.derive(i)`, so the samples do not depend on
/// how anchors are scheduled across threads.
pub fn sample_bridges<T: Scalar>(
    features: &Matrix<T>,
    targets: &Matrix<T>,
    cfg: &EllipticConfig<T>,
    sampler: &EndpointSampler<T>,
    stream: RngStream,
) -> Result<BridgeSamples<T>> {
    cfg.validate()?;
    check_batch(features, targets, 2)?;
    if sampler.len() != features.rows() {
        return Err(Error::Shape(format!(
            "endpoint sampler covers {} points, batch has {}",
            sampler.len(),
            features.rows()
        )));
    }
    let n = features.rows();
    let d = features.cols();
    let k = targets.cols();
    let m = d + k;
    let n_t = cfg.n_time;
    let joint = features.hstack(targets)?;

    let per_anchor: Vec<Result<(Vec<T>, Vec<usize>)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream.derive(i as u64).rng();
            let mut block = vec![T::zero(); cfg.n_bridges * n_t * m];
            let mut partners = Vec::with_capacity(cfg.n_bridges);
            for b in 0..cfg.n_bridges {
                let j = sample_endpoint(i, sampler, &mut rng)?;
                partners.push(j);
                let out = &mut block[b * n_t * m..(b + 1) * n_t * m];
                bridge_into(joint.row(i), joint.row(j), cfg.sigma_b, n_t - 1, cfg.t_end, &mut rng, out);
            }
            Ok((block, partners))
        })
        .collect();

    let total = n * cfg.n_bridges * n_t;
    let mut xs = Vec::with_capacity(total * d);
    let mut ys = Vec::with_capacity(total * k);
    let mut pairs = Vec::with_capacity(n * cfg.n_bridges);
    for (i, r) in per_anchor.into_iter().enumerate() {
        let (block, partners) = r?;
        pairs.extend(partners.into_iter().map(|j| (i, j)));
        for z in block.chunks_exact(m) {
            xs.extend_from_slice(&z[..d]);
            let start = ys.len();
            ys.extend_from_slice(&z[d..]);
            if cfg.simplex_project {
                simplex_project_in_place(&mut ys[start..]);
            }
        }
    }

    let paths = T::of_usize(n * cfg.n_bridges);
    let grid_w = T::one() / (paths * T::of_usize(n_t));
    let weights: Vec<T> = (0..total)
        .map(|p| match cfg.variant {
            ObjectiveVariant::PathAverage => grid_w,
            ObjectiveVariant::SourceTerm if p % n_t == 0 => grid_w + T::one() / paths,
            ObjectiveVariant::SourceTerm => grid_w,
        })
        .collect();

    Ok(BridgeSamples {
        features: Matrix::from_vec(total, d, xs)?,
        targets: Matrix::from_vec(total, k, ys)?,
        weights,
        pairs,
    })
}

/// Brownian-bridge objective: mean loss along bridges between each anchor and
/// sampled partners (plus the anchor loss in the source-term variant).
pub fn bridge_objective<T: Scalar>(
    model: &MlpModel<T>,
    features: &Matrix<T>,
    targets: &Matrix<T>,
    kind: LossKind,
    cfg: &EllipticConfig<T>,
    sampler: &EndpointSampler<T>,
    stream: RngStream,
) -> Result<ObjectiveValue<T>> {
    let s = sample_bridges(features, targets, cfg, sampler, stream)?;
    weighted_objective(kind, model, &s.features, &s.targets, &s.weights, T::zero())
}

/// Bridge objective with every path point's loss `l` replaced by
/// `l + xi * |grad_z l|`.
///
/// The gradient-norm term is a detached per-point importance weight: it scales
/// that point's parameter gradient by `1 + xi * |grad_z l|` and no second-order
/// terms flow through it.
pub fn importance_weighted_objective<T: Scalar>(
    model: &MlpModel<T>,
    features: &Matrix<T>,
    targets: &Matrix<T>,
    kind: LossKind,
    cfg: &EllipticConfig<T>,
    sampler: &EndpointSampler<T>,
    stream: RngStream,
) -> Result<ObjectiveValue<T>> {
    let s = sample_bridges(features, targets, cfg, sampler, stream)?;
    weighted_objective(kind, model, &s.features, &s.targets, &s.weights, cfg.xi)
}

/// Mixup with an explicit mixing weight and partner permutation.
pub fn mixup_with<T: Scalar>(
    model: &MlpModel<T>,
    features: &Matrix<T>,
    targets: &Matrix<T>,
    kind: LossKind,
    lambda: T,
    partners: &[usize],
) -> Result<ObjectiveValue<T>> {
    check_batch(features, targets, 1)?;
    if partners.len() != features.rows() || partners.iter().any(|&j| j >= features.rows()) {
        return Err(Error::Shape("mixup partner list must index the batch".into()));
    }
    let mix = |m: &Matrix<T>| {
        Matrix::from_fn(m.rows(), m.cols(), |r, c| lambda * m.get(r, c) + (T::one() - lambda) * m.get(partners[r], c))
    };
    erm_objective(model, &mix(features), &mix(targets), kind)
}

/// Mixup baseline: one `lambda ~ Beta(alpha, alpha)` per batch, partners from a
/// random permutation.
pub fn mixup_objective<T: Scalar>(
    model: &MlpModel<T>,
    features: &Matrix<T>,
    targets: &Matrix<T>,
    kind: LossKind,
    mix: &MixupConfig<T>,
    stream: RngStream,
) -> Result<ObjectiveValue<T>> {
    mix.validate()?;
    check_batch(features, targets, 2)?;
    let mut rng = stream.rng();
    let lambda = sample_mixup_lambda(mix, &mut rng)?;
    let mut perm: Vec<usize> = (0..features.rows()).collect();
    perm.shuffle(&mut rng);
    mixup_with(model, features, targets, kind, lambda, &perm)
}

/// One mixing weight `lambda ~ Beta(alpha, alpha)`.
pub fn sample_mixup_lambda<T: Scalar, R: rand::Rng + ?Sized>(mix: &MixupConfig<T>, rng: &mut R) -> Result<T> {
    let a = mix.alpha.to_f64_lossy();
    let beta = Beta::new(a, a).map_err(|e| Error::Precondition(format!("mixup alpha {a}: {e}")))?;
    Ok(T::of(beta.sample(rng)))
}
