//! Gaussian RBF network regression, the base learner behind every surrogate.
//!
//! Training picks centers by k-means (k-means++ seeding), sets one shared
//! kernel width from the center spread, and solves a ridge-regularized
//! linear least-squares problem for the output layer. All hyperparameters
//! live in [`RbfConfig`]; none are dictated by the data, so they are
//! deliberately exposed in experiment configs rather than hidden here.

use crate::data::SampleSet;
use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RbfError {
    #[error("training needs at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("k = {k} clusters requested but only {distinct} distinct points available")]
    TooFewDistinctPoints { k: usize, distinct: usize },
    #[error("k must be at least 1")]
    ZeroClusters,
    #[error("input has dimension {got}, model expects {expected}")]
    DimensionMismatch { got: usize, expected: usize },
    #[error("invalid model parameters: {0}")]
    InvalidModel(&'static str),
    #[error("invalid config: {0}")]
    InvalidConfig(&'static str),
    #[error("normal equations are not positive definite (ridge too small for duplicate centers?)")]
    SingularSystem,
    #[error("evaluation set is empty")]
    EmptyEvalSet,
}

/// Training hyperparameters.
///
/// Defaults follow `for_dim`: `max_centers = 2 * d` caps model size at the
/// scale of one 3·d-point chunk while leaving capacity for combined
/// (historical + current) training sets; `ridge = 1e-8` keeps the normal
/// system solvable even with near-duplicate centers.
#[derive(Debug, Clone, PartialEq)]
pub struct RbfConfig {
    pub max_centers: usize,
    pub ridge: f64,
    pub kmeans_iters: usize,
}

impl RbfConfig {
    pub fn for_dim(dim: usize) -> Self {
        Self {
            max_centers: (2 * dim).max(1),
            ridge: 1e-8,
            kmeans_iters: 20,
        }
    }

    pub fn validate(&self) -> Result<(), RbfError> {
        if self.max_centers < 1 {
            return Err(RbfError::InvalidConfig("max_centers must be >= 1"));
        }
        if self.kmeans_iters < 1 {
            return Err(RbfError::InvalidConfig("kmeans_iters must be >= 1"));
        }
        if !(self.ridge >= 0.0) {
            return Err(RbfError::InvalidConfig("ridge must be non-negative"));
        }
        Ok(())
    }
}

/// A trained Gaussian RBF network: `f(x) = bias + Σ_j w_j exp(-‖x-c_j‖² / (2σ²))`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RbfModel {
    centers: Vec<Vec<f64>>,
    width: f64,
    out_weights: Vec<f64>,
    bias: f64,
}

impl RbfModel {
    pub fn new(
        centers: Vec<Vec<f64>>,
        width: f64,
        out_weights: Vec<f64>,
        bias: f64,
    ) -> Result<Self, RbfError> {
        if centers.is_empty() {
            return Err(RbfError::InvalidModel("at least one center required"));
        }
        if !(width > 0.0) {
            return Err(RbfError::InvalidModel("width must be positive"));
        }
        if centers.len() != out_weights.len() {
            return Err(RbfError::InvalidModel("one output weight per center required"));
        }
        let dim = centers[0].len();
        if centers.iter().any(|c| c.len() != dim) {
            return Err(RbfError::InvalidModel("centers must share one dimension"));
        }
        if !bias.is_finite()
            || out_weights.iter().any(|w| !w.is_finite())
            || centers.iter().flatten().any(|v| !v.is_finite())
        {
            return Err(RbfError::InvalidModel("parameters must be finite"));
        }
        Ok(Self {
            centers,
            width,
            out_weights,
            bias,
        })
    }

    pub fn dim(&self) -> usize {
        self.centers[0].len()
    }

    pub fn centers(&self) -> &[Vec<f64>] {
        &self.centers
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn out_weights(&self) -> &[f64] {
        &self.out_weights
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64, RbfError> {
        if x.len() != self.dim() {
            return Err(RbfError::DimensionMismatch {
                got: x.len(),
                expected: self.dim(),
            });
        }
        let inv_two_sigma_sq = 1.0 / (2.0 * self.width * self.width);
        let mut acc = self.bias;
        for (center, &w) in self.centers.iter().zip(&self.out_weights) {
            acc += w * (-sq_dist(x, center) * inv_two_sigma_sq).exp();
        }
        Ok(acc)
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = x - y;
            d * d
        })
        .sum()
}

fn count_distinct(points: &[Vec<f64>]) -> usize {
    let mut distinct: Vec<&Vec<f64>> = Vec::new();
    for p in points {
        if !distinct.iter().any(|q| *q == p) {
            distinct.push(p);
        }
    }
    distinct.len()
}

/// K-means clustering with k-means++ seeding and at most `iters` Lloyd
/// iterations. Ties in the nearest-center assignment break toward the lower
/// center index, so the result is fully determined by the rng stream.
///
/// Returns exactly `k` pairwise-distinct centers whenever the input holds at
/// least `k` distinct points; otherwise errors.
pub fn kmeans_centers(
    points: &[Vec<f64>],
    k: usize,
    iters: usize,
    rng: &mut impl Rng,
) -> Result<Vec<Vec<f64>>, RbfError> {
    if k == 0 {
        return Err(RbfError::ZeroClusters);
    }
    let distinct = count_distinct(points);
    if k > distinct {
        return Err(RbfError::TooFewDistinctPoints { k, distinct });
    }

    let n = points.len();
    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(k);
    centers.push(points[rng.random_range(0..n)].clone());

    // k-means++: sample each next seed proportional to squared distance from
    // the nearest already-chosen center. Points equal to a chosen center have
    // zero mass, so seeds are always distinct.
    let mut d2 = vec![0.0f64; n];
    while centers.len() < k {
        let mut total = 0.0;
        for (i, p) in points.iter().enumerate() {
            d2[i] = centers
                .iter()
                .map(|c| sq_dist(p, c))
                .fold(f64::INFINITY, f64::min);
            total += d2[i];
        }
        let mut target = rng.random::<f64>() * total;
        let mut chosen = None;
        for (i, &mass) in d2.iter().enumerate() {
            if mass <= 0.0 {
                continue;
            }
            target -= mass;
            if target <= 0.0 {
                chosen = Some(i);
                break;
            }
        }
        // Rounding can exhaust the walk; fall back to the farthest point.
        let idx = chosen.unwrap_or_else(|| {
            d2.iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .map(|(i, _)| i)
                .expect("non-empty input")
        });
        centers.push(points[idx].clone());
    }

    let dim = points[0].len();
    let mut assignment = vec![0usize; n];
    for _ in 0..iters {
        let mut changed = false;
        for (i, p) in points.iter().enumerate() {
            let mut best = 0usize;
            let mut best_d = f64::INFINITY;
            for (j, c) in centers.iter().enumerate() {
                let d = sq_dist(p, c);
                if d < best_d {
                    best_d = d;
                    best = j;
                }
            }
            if assignment[i] != best {
                assignment[i] = best;
                changed = true;
            }
        }

        let mut sums = vec![vec![0.0f64; dim]; k];
        let mut counts = vec![0usize; k];
        for (i, p) in points.iter().enumerate() {
            let j = assignment[i];
            counts[j] += 1;
            for (s, &v) in sums[j].iter_mut().zip(p) {
                *s += v;
            }
        }
        for j in 0..k {
            if counts[j] > 0 {
                for s in sums[j].iter_mut() {
                    *s /= counts[j] as f64;
                }
                centers[j] = sums[j].clone();
            }
            // empty cluster keeps its previous center
        }
        if !changed {
            break;
        }
    }

    repair_duplicate_centers(points, &mut centers);
    Ok(centers)
}

/// Lloyd updates can in rare symmetric configurations produce coinciding
/// means. Relocate any duplicate to the data point farthest from its nearest
/// center that is not itself a center; with >= k distinct points such a
/// point always exists.
fn repair_duplicate_centers(points: &[Vec<f64>], centers: &mut [Vec<f64>]) {
    for j in 1..centers.len() {
        let duplicate = centers[..j].iter().any(|c| *c == centers[j]);
        if !duplicate {
            continue;
        }
        let replacement = points
            .iter()
            .filter(|p| !centers.iter().any(|c| c == *p))
            .map(|p| {
                let d = centers
                    .iter()
                    .map(|c| sq_dist(p, c))
                    .fold(f64::INFINITY, f64::min);
                (p, d)
            })
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(p, _)| p.clone());
        if let Some(p) = replacement {
            centers[j] = p;
        }
    }
}

/// Trains an RBF network on a sample set.
///
/// Centers come from `kmeans_centers` with `k = min(max_centers, distinct
/// points)`; the shared width is `σ = d_max / sqrt(2k)` with `d_max` the
/// maximum pairwise center distance (`σ = 1` if `k = 1` or all centers
/// coincide). The output layer solves
///
/// ```text
/// min_{w, b}  ‖Φ w + b·1 − y‖²  +  ridge · ‖w‖²
/// ```
///
/// via the centered normal equations and a Cholesky factorization; the
/// intercept is not penalized, so constant targets are reproduced exactly.
pub fn train_rbf(
    samples: &SampleSet,
    cfg: &RbfConfig,
    rng: &mut impl Rng,
) -> Result<RbfModel, RbfError> {
    cfg.validate()?;
    let n = samples.len();
    if n < 2 {
        return Err(RbfError::TooFewSamples(n));
    }

    let distinct = count_distinct(samples.xs());
    let k = cfg.max_centers.min(distinct);
    let centers = kmeans_centers(samples.xs(), k, cfg.kmeans_iters, rng)?;

    let mut d_max = 0.0f64;
    for i in 0..k {
        for j in (i + 1)..k {
            d_max = d_max.max(sq_dist(&centers[i], &centers[j]).sqrt());
        }
    }
    let width = if k == 1 || d_max == 0.0 {
        1.0
    } else {
        d_max / (2.0 * k as f64).sqrt()
    };

    let inv_two_sigma_sq = 1.0 / (2.0 * width * width);
    let phi = DMatrix::from_fn(n, k, |i, j| {
        (-sq_dist(&samples.xs()[i], &centers[j]) * inv_two_sigma_sq).exp()
    });

    let y = DVector::from_column_slice(samples.ys());
    let y_mean = y.mean();
    let phi_mean = phi.row_mean();

    let mut phi_centered = phi.clone();
    for mut row in phi_centered.row_iter_mut() {
        row -= &phi_mean;
    }

    let mut gram = phi_centered.transpose() * &phi_centered;
    for j in 0..k {
        gram[(j, j)] += cfg.ridge;
    }
    let rhs = phi_centered.transpose() * (&y - DVector::from_element(n, y_mean));
    let chol = Cholesky::new(gram).ok_or(RbfError::SingularSystem)?;
    let weights = chol.solve(&rhs);
    let bias = y_mean - phi_mean.transpose().dot(&weights);

    RbfModel::new(centers, width, weights.as_slice().to_vec(), bias)
}

/// Root-mean-square prediction error over an evaluation set.
pub fn rmse(model: &RbfModel, eval: &SampleSet) -> Result<f64, RbfError> {
    if eval.is_empty() {
        return Err(RbfError::EmptyEvalSet);
    }
    let mut acc = 0.0;
    for (x, &y) in eval.xs().iter().zip(eval.ys()) {
        let r = model.predict(x)? - y;
        acc += r * r;
    }
    Ok((acc / eval.len() as f64).sqrt())
}
