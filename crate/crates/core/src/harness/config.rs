//! Experiment configuration: JSON sections for problems, variants, DE, RBF,
//! ensemble, sampling and the run protocol.
//!
//! Every numeric default here is a repo decision, not something implied by
//! the data; the shipped example config spells all of them out so they are
//! visible and overridable.

use crate::bench::{DynamicProblem, ProblemId, SamplingMethod, SamplingPlan};
use crate::de::{BoundHandling, DeParams};
use crate::ensemble::{EnsembleConfig, RmseEval};
use crate::harness::{HarnessError, VariantId};
use crate::rbf::RbfConfig;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot parse config: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// One benchmark problem entry. Severities are absolute; when omitted they
/// default to 10% of the bound width per shift and 5.0 per value-offset
/// step.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemConfig {
    pub id: ProblemId,
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(default)]
    pub shift_severity: Option<f64>,
    #[serde(default)]
    pub offset_severity: Option<f64>,
}

impl ProblemConfig {
    pub fn new(id: ProblemId, dim: usize) -> Self {
        Self {
            id,
            dim,
            shift_severity: None,
            offset_severity: None,
        }
    }

    /// Instantiates the first environment, drawing initial state from `rng`.
    pub fn build(&self, rng: &mut impl Rng) -> Result<DynamicProblem, HarnessError> {
        let shift = self
            .shift_severity
            .unwrap_or(crate::bench::DEFAULT_SHIFT_FRACTION * 2.0 * self.id.half_width());
        let offset = self
            .offset_severity
            .unwrap_or(crate::bench::DEFAULT_OFFSET_SEVERITY);
        Ok(DynamicProblem::init_with(
            self.id, self.dim, shift, offset, rng,
        )?)
    }
}

fn default_dim() -> usize {
    10
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ProtocolConfig {
    #[serde(default = "default_envs")]
    pub envs: usize,
    #[serde(default = "default_runs")]
    pub runs: usize,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self { envs: 50, runs: 20 }
    }
}

fn default_envs() -> usize {
    50
}

fn default_runs() -> usize {
    20
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DeSection {
    #[serde(default = "default_np")]
    pub np: usize,
    #[serde(default = "default_f")]
    pub f: f64,
    #[serde(default = "default_cr")]
    pub cr: f64,
    #[serde(default = "default_generations")]
    pub generations: usize,
}

impl Default for DeSection {
    fn default() -> Self {
        Self {
            np: 50,
            f: 0.5,
            cr: 0.9,
            generations: 100,
        }
    }
}

fn default_np() -> usize {
    50
}

fn default_f() -> f64 {
    0.5
}

fn default_cr() -> f64 {
    0.9
}

fn default_generations() -> usize {
    100
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RbfSection {
    /// Cap on RBF centers; `null` means `2 * dim` per problem.
    #[serde(default)]
    pub max_centers: Option<usize>,
    #[serde(default = "default_ridge")]
    pub ridge: f64,
    #[serde(default = "default_kmeans_iters")]
    pub kmeans_iters: usize,
}

impl Default for RbfSection {
    fn default() -> Self {
        Self {
            max_centers: None,
            ridge: 1e-8,
            kmeans_iters: 20,
        }
    }
}

fn default_ridge() -> f64 {
    1e-8
}

fn default_kmeans_iters() -> usize {
    20
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EnsembleSection {
    #[serde(default = "default_rmse_eval")]
    pub rmse_eval: RmseEval,
    /// Keep only the most recent chunks when set.
    #[serde(default)]
    pub max_history: Option<usize>,
}

impl Default for EnsembleSection {
    fn default() -> Self {
        Self {
            rmse_eval: RmseEval::Current,
            max_history: None,
        }
    }
}

fn default_rmse_eval() -> RmseEval {
    RmseEval::Current
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SamplingSection {
    #[serde(default = "default_sampling_method")]
    pub method: SamplingMethod,
    /// Chunk size as a multiple of the problem dimension.
    #[serde(default = "default_points_factor")]
    pub points_factor: usize,
}

impl Default for SamplingSection {
    fn default() -> Self {
        Self {
            method: SamplingMethod::LatinHypercube,
            points_factor: 3,
        }
    }
}

fn default_sampling_method() -> SamplingMethod {
    SamplingMethod::LatinHypercube
}

fn default_points_factor() -> usize {
    3
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FinalSection {
    /// Elite fraction averaged by `ktspi_tba`.
    #[serde(default = "default_fraction")]
    pub fraction: f64,
}

impl Default for FinalSection {
    fn default() -> Self {
        Self { fraction: 0.1 }
    }
}

fn default_fraction() -> f64 {
    0.1
}

fn default_master_seed() -> u64 {
    42
}

fn default_variants() -> Vec<VariantId> {
    VariantId::ALL.to_vec()
}

/// The full experiment description.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default = "default_master_seed")]
    pub master_seed: u64,
    pub problems: Vec<ProblemConfig>,
    #[serde(default = "default_variants")]
    pub variants: Vec<VariantId>,
    #[serde(default)]
    pub protocol: ProtocolConfig,
    #[serde(default)]
    pub de: DeSection,
    #[serde(default)]
    pub rbf: RbfSection,
    #[serde(default)]
    pub ensemble: EnsembleSection,
    #[serde(default)]
    pub sampling: SamplingSection,
    #[serde(default, rename = "final")]
    pub final_solution: FinalSection,
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)?;
        let cfg: ExperimentConfig = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.problems.is_empty() {
            return Err(ConfigError::Invalid("at least one problem required".into()));
        }
        if self.variants.is_empty() {
            return Err(ConfigError::Invalid("at least one variant required".into()));
        }
        if self.protocol.envs < 1 || self.protocol.runs < 1 {
            return Err(ConfigError::Invalid(
                "protocol.envs and protocol.runs must be at least 1".into(),
            ));
        }
        for p in &self.problems {
            if p.dim == 0 {
                return Err(ConfigError::Invalid(format!(
                    "problem {} has zero dimension",
                    p.id
                )));
            }
            if self.sampling.points_factor * p.dim < 2 {
                return Err(ConfigError::Invalid(format!(
                    "problem {}: points_factor * dim must be at least 2",
                    p.id
                )));
            }
        }
        DeParams::new(self.de.np, self.de.f, self.de.cr, self.de.generations)
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if !(self.final_solution.fraction > 0.0 && self.final_solution.fraction <= 1.0) {
            return Err(ConfigError::Invalid("final.fraction must lie in (0, 1]".into()));
        }
        if !(self.rbf.ridge >= 0.0) {
            return Err(ConfigError::Invalid("rbf.ridge must be non-negative".into()));
        }
        if self.rbf.kmeans_iters < 1 {
            return Err(ConfigError::Invalid("rbf.kmeans_iters must be at least 1".into()));
        }
        Ok(())
    }

    /// Resolves the per-problem parameter bundle.
    pub fn pipeline_for(&self, problem: &ProblemConfig) -> PipelineParams {
        PipelineParams {
            de: DeParams {
                np: self.de.np,
                f: self.de.f,
                cr: self.de.cr,
                generations: self.de.generations,
                bound_handling: BoundHandling::Reflect,
            },
            ensemble: EnsembleConfig {
                rbf: RbfConfig {
                    max_centers: self.rbf.max_centers.unwrap_or(2 * problem.dim).max(1),
                    ridge: self.rbf.ridge,
                    kmeans_iters: self.rbf.kmeans_iters,
                },
                rmse_eval: self.ensemble.rmse_eval,
                max_history: self.ensemble.max_history,
            },
            sampling: SamplingPlan {
                points_per_env: self.sampling.points_factor * problem.dim,
                method: self.sampling.method,
            },
            final_fraction: self.final_solution.fraction,
        }
    }
}

/// Everything one run needs besides the problem and seeds.
#[derive(Debug, Clone)]
pub struct PipelineParams {
    pub de: DeParams,
    pub ensemble: EnsembleConfig,
    pub sampling: SamplingPlan,
    pub final_fraction: f64,
}

impl PipelineParams {
    /// Library defaults for a given problem dimension.
    pub fn for_dim(dim: usize) -> Self {
        Self {
            de: DeParams::default(),
            ensemble: EnsembleConfig::for_dim(dim),
            sampling: SamplingPlan::for_dim(dim),
            final_fraction: 0.1,
        }
    }
}
