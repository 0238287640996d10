//! Inverse-RMSE weighted ensembles of RBF base models, one model per
//! environment seen so far.
//!
//! On each new chunk `D_t` the ensemble is rebuilt: the current model trains
//! on `D_t` alone, and every historical chunk contributes a model trained on
//! its rescaled data concatenated with `D_t`. Weights are
//!
//! ```text
//! w_i = 1 / (RMSE_i + RMSE_t + eps)   for historical models,
//! w_t = 1 / (RMSE_t + eps)            for the current model,
//! ```
//!
//! so the current model always carries the largest weight. By default every
//! RMSE is measured on the current chunk, making the weights an estimate of
//! current-environment reliability; [`RmseEval::Transferred`] instead scores
//! each historical model on its own transferred data.

use crate::data::DataChunk;
use crate::rbf::{rmse, train_rbf, RbfConfig, RbfError, RbfModel};
use crate::transfer::{build_training_set, rescale_objectives, TransferError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

/// Guards the weight formulas against division by zero when a model
/// interpolates its evaluation set exactly.
pub const WEIGHT_EPSILON: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum EnsembleError {
    #[error("RMSE values must be non-negative, got {0}")]
    NegativeRmse(f64),
    #[error("ensemble must contain at least one model")]
    Empty,
    #[error("models, rmses and weights must have equal lengths")]
    LengthMismatch,
    #[error("weights must be finite and positive")]
    InvalidWeights,
    #[error("current-model weight must dominate historical weights")]
    DominanceViolated,
    #[error("input has dimension {got}, ensemble expects {expected}")]
    DimensionMismatch { got: usize, expected: usize },
    #[error(transparent)]
    Rbf(#[from] RbfError),
    #[error(transparent)]
    Transfer(#[from] TransferError),
}

/// Which evaluation set the per-model RMSEs are measured on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RmseEval {
    /// Score every model on the current chunk.
    Current,
    /// Score each historical model on its own transferred chunk; the current
    /// model is still scored on the current chunk.
    Transferred,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleConfig {
    pub rbf: RbfConfig,
    pub rmse_eval: RmseEval,
    /// Keep only the most recent chunks when set; unbounded otherwise.
    pub max_history: Option<usize>,
}

impl EnsembleConfig {
    pub fn for_dim(dim: usize) -> Self {
        Self {
            rbf: RbfConfig::for_dim(dim),
            rmse_eval: RmseEval::Current,
            max_history: None,
        }
    }
}

/// The weighted surrogate `f(x) = Σ w_i h_i(x) / Σ w_i`, with the current
/// environment's model stored last.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleSurrogate {
    env_index: usize,
    models: Vec<RbfModel>,
    rmses: Vec<f64>,
    weights: Vec<f64>,
}

impl EnsembleSurrogate {
    pub fn from_parts(
        env_index: usize,
        models: Vec<RbfModel>,
        rmses: Vec<f64>,
        weights: Vec<f64>,
    ) -> Result<Self, EnsembleError> {
        if models.is_empty() {
            return Err(EnsembleError::Empty);
        }
        if models.len() != rmses.len() || models.len() != weights.len() {
            return Err(EnsembleError::LengthMismatch);
        }
        if let Some(&r) = rmses.iter().find(|r| !r.is_finite() || **r < 0.0) {
            return Err(EnsembleError::NegativeRmse(r));
        }
        if weights.iter().any(|w| !w.is_finite() || *w <= 0.0) {
            return Err(EnsembleError::InvalidWeights);
        }
        let current = *weights.last().expect("non-empty");
        if weights.iter().any(|&w| w > current) {
            return Err(EnsembleError::DominanceViolated);
        }
        Ok(Self {
            env_index,
            models,
            rmses,
            weights,
        })
    }

    pub fn env_index(&self) -> usize {
        self.env_index
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    pub fn models(&self) -> &[RbfModel] {
        &self.models
    }

    pub fn rmses(&self) -> &[f64] {
        &self.rmses
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn dim(&self) -> usize {
        self.models[0].dim()
    }

    /// Weighted mean of the base model predictions. A single-model ensemble
    /// delegates directly, so it is bit-identical to its base learner.
    pub fn predict(&self, x: &[f64]) -> Result<f64, EnsembleError> {
        if x.len() != self.dim() {
            return Err(EnsembleError::DimensionMismatch {
                got: x.len(),
                expected: self.dim(),
            });
        }
        if self.models.len() == 1 {
            return Ok(self.models[0].predict(x)?);
        }
        let mut num = 0.0;
        let mut den = 0.0;
        for (model, &w) in self.models.iter().zip(&self.weights) {
            num += w * model.predict(x)?;
            den += w;
        }
        Ok(num / den)
    }

    /// Per-model dump (centers, width, output weights, rmse, ensemble
    /// weight) as pretty JSON, for debugging and golden tests.
    pub fn to_debug_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("ensemble serialization cannot fail")
    }
}

/// Inverse-RMSE weights with the current model's RMSE last.
pub fn ensemble_weights(rmses: &[f64]) -> Result<Vec<f64>, EnsembleError> {
    let (&current, hist) = rmses.split_last().ok_or(EnsembleError::Empty)?;
    if let Some(&r) = rmses.iter().find(|r| !r.is_finite() || **r < 0.0) {
        return Err(EnsembleError::NegativeRmse(r));
    }
    let mut weights: Vec<f64> = hist
        .iter()
        .map(|&r| 1.0 / (r + current + WEIGHT_EPSILON))
        .collect();
    weights.push(1.0 / (current + WEIGHT_EPSILON));
    Ok(weights)
}

/// Rebuilds the ensemble for the current chunk.
///
/// The current model trains on the chunk alone; each historical chunk is
/// rescaled into the current objective range and its model trains on the
/// rescaled rows plus the current rows. Per-model training uses an
/// independent rng substream seeded from `rng`, so the result is
/// deterministic and the trainings could run in any order.
pub fn update_ensemble(
    history: &[DataChunk],
    current: &DataChunk,
    cfg: &EnsembleConfig,
    rng: &mut impl Rng,
) -> Result<EnsembleSurrogate, EnsembleError> {
    current.validate().map_err(|_| {
        EnsembleError::Rbf(RbfError::InvalidModel("current chunk failed validation"))
    })?;

    let hist = match cfg.max_history {
        Some(cap) if history.len() > cap => &history[history.len() - cap..],
        _ => history,
    };

    let model_seeds: Vec<u64> = (0..=hist.len()).map(|_| rng.next_u64()).collect();

    let target_stats = current.stats();
    let current_samples = current.samples();

    let mut models = Vec::with_capacity(hist.len() + 1);
    let mut rmses = Vec::with_capacity(hist.len() + 1);
    for (chunk, &seed) in hist.iter().zip(&model_seeds) {
        let transferred = rescale_objectives(chunk, &target_stats);
        let train_set = build_training_set(&transferred, current)?;
        let mut model_rng = ChaCha8Rng::seed_from_u64(seed);
        let model = train_rbf(&train_set, &cfg.rbf, &mut model_rng)?;
        let model_rmse = match cfg.rmse_eval {
            RmseEval::Current => rmse(&model, &current_samples)?,
            RmseEval::Transferred => rmse(&model, &transferred.samples())?,
        };
        rmses.push(model_rmse);
        models.push(model);
    }

    let mut current_rng =
        ChaCha8Rng::seed_from_u64(*model_seeds.last().expect("one seed per model"));
    let current_model = train_rbf(&current_samples, &cfg.rbf, &mut current_rng)?;
    rmses.push(rmse(&current_model, &current_samples)?);
    models.push(current_model);

    let weights = ensemble_weights(&rmses)?;
    EnsembleSurrogate::from_parts(current.env_index(), models, rmses, weights)
}
