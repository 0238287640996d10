//! Experiment harness: drives algorithm variants over environment streams,
//! aggregates statistics, and reproduces the four-variant ablation layout.
//!
//! The four variants form an ablation ladder: `ss` trains one surrogate per
//! chunk, `kts` adds the knowledge-transfer ensemble, `ktspi` adds
//! population carryover between environments, and `ktspi_tba` adds top-10%
//! solution averaging. True-objective evaluations happen exactly when
//! sampling a chunk and when scoring the one deployed solution per
//! environment — never during search.

pub mod config;
pub mod report;
mod seeds;

pub use config::{ExperimentConfig, PipelineParams, ProblemConfig};
pub use seeds::{derive_seed, env_stream_seed, run_seeds, splitmix64, RunSeeds};

use crate::bench::{sample_chunk, BenchError, ProblemId};
use crate::data::{DataChunk, DataError};
use crate::de::{init_population, optimize, DeError, InitStrategy, Population};
use crate::ensemble::{update_ensemble, EnsembleError, EnsembleSurrogate};
use crate::rbf::{train_rbf, RbfError, RbfModel};
use crate::solution::{produce_final, FinalMode, SolutionError};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

/// The four ablation variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariantId {
    /// Single-chunk surrogate, random init, best member deployed.
    Ss,
    /// Knowledge-transfer ensemble surrogate, random init, best member.
    Kts,
    /// Ensemble surrogate, carryover init, best member.
    Ktspi,
    /// Ensemble surrogate, carryover init, top-fraction average deployed.
    KtspiTba,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SurrogateKind {
    Single,
    Ensemble,
}

impl VariantId {
    pub const ALL: [VariantId; 4] = [
        VariantId::Ss,
        VariantId::Kts,
        VariantId::Ktspi,
        VariantId::KtspiTba,
    ];

    pub fn surrogate(&self) -> SurrogateKind {
        match self {
            VariantId::Ss => SurrogateKind::Single,
            _ => SurrogateKind::Ensemble,
        }
    }

    pub fn init(&self) -> InitStrategy {
        match self {
            VariantId::Ss | VariantId::Kts => InitStrategy::Random,
            VariantId::Ktspi | VariantId::KtspiTba => InitStrategy::Carryover,
        }
    }

    pub fn final_mode(&self) -> FinalMode {
        match self {
            VariantId::KtspiTba => FinalMode::TopKAverage,
            _ => FinalMode::Best,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            VariantId::Ss => "ss",
            VariantId::Kts => "kts",
            VariantId::Ktspi => "ktspi",
            VariantId::KtspiTba => "ktspi_tba",
        }
    }

    /// Stable numeric tag used in seed derivation.
    pub fn tag(&self) -> u64 {
        match self {
            VariantId::Ss => 1,
            VariantId::Kts => 2,
            VariantId::Ktspi => 3,
            VariantId::KtspiTba => 4,
        }
    }
}

impl fmt::Display for VariantId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for VariantId {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, HarnessError> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "ss" => Ok(VariantId::Ss),
            "kts" => Ok(VariantId::Kts),
            "ktspi" => Ok(VariantId::Ktspi),
            "ktspi_tba" => Ok(VariantId::KtspiTba),
            other => Err(HarnessError::UnknownVariant(other.to_string())),
        }
    }
}

#[derive(Debug, Error)]
pub enum StepError {
    #[error(transparent)]
    Rbf(#[from] RbfError),
    #[error(transparent)]
    Ensemble(#[from] EnsembleError),
    #[error(transparent)]
    De(#[from] DeError),
    #[error(transparent)]
    Solution(#[from] SolutionError),
    #[error(transparent)]
    Bench(#[from] BenchError),
    #[error(transparent)]
    Data(#[from] DataError),
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("environment {env}: {source}")]
    AtEnv {
        env: usize,
        #[source]
        source: StepError,
    },
    #[error("unknown variant {0:?} (expected ss, kts, ktspi or ktspi_tba)")]
    UnknownVariant(String),
    #[error("no run records to summarize")]
    NoRecords,
    #[error(transparent)]
    Bench(#[from] BenchError),
}

/// A surrogate ready for search: either the single current-chunk model or
/// the knowledge-transfer ensemble.
#[derive(Debug, Clone)]
pub enum SurrogateModel {
    Single(RbfModel),
    Ensemble(EnsembleSurrogate),
}

impl SurrogateModel {
    pub fn value(&self, x: &[f64]) -> f64 {
        let consistent = "pipeline keeps surrogate and search dimensions consistent";
        match self {
            SurrogateModel::Single(model) => model.predict(x).expect(consistent),
            SurrogateModel::Ensemble(ensemble) => ensemble.predict(x).expect(consistent),
        }
    }
}

/// One environment's outcome within a run.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvResult {
    pub env_index: usize,
    pub final_x: Vec<f64>,
    pub surrogate_value: f64,
    pub true_value: f64,
    /// True-objective evaluations spent in this environment (chunk sampling
    /// plus the single final-solution score).
    pub true_evals: u64,
}

/// One (variant, problem, run) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub variant: VariantId,
    pub problem_id: ProblemId,
    pub run_index: usize,
    pub seeds: RunSeeds,
    pub per_env: Vec<EnvResult>,
    pub mean_true_value: f64,
}

/// Replay outcome: no ground truth is available, only the deployed
/// solutions and their surrogate values.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplayEnv {
    pub env_index: usize,
    pub final_x: Vec<f64>,
    pub surrogate_value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayRecord {
    pub variant: VariantId,
    pub alg_seed: u64,
    pub per_env: Vec<ReplayEnv>,
}

/// The surrogate-build / init / search / deploy step shared by live runs
/// and replays. The deployed vector is clamped into bounds to absorb
/// worst-case floating-point drift in the elite average.
fn env_step(
    variant: VariantId,
    chunk: &DataChunk,
    history: &[DataChunk],
    prev_pop: Option<&Population>,
    params: &PipelineParams,
    alg_rng: &mut ChaCha8Rng,
) -> Result<(Vec<f64>, f64, Population), StepError> {
    let surrogate = match variant.surrogate() {
        SurrogateKind::Single => {
            let seed = alg_rng.next_u64();
            let model = train_rbf(
                &chunk.samples(),
                &params.ensemble.rbf,
                &mut ChaCha8Rng::seed_from_u64(seed),
            )?;
            SurrogateModel::Single(model)
        }
        SurrogateKind::Ensemble => {
            SurrogateModel::Ensemble(update_ensemble(history, chunk, &params.ensemble, alg_rng)?)
        }
    };

    // the very first environment has no history to carry over
    let strategy = if prev_pop.is_some() {
        variant.init()
    } else {
        InitStrategy::Random
    };
    let init = init_population(strategy, chunk.bounds(), params.de.np, prev_pop, alg_rng)?;

    let objective = |x: &[f64]| surrogate.value(x);
    let pop = optimize(objective, init, &params.de, chunk.bounds(), alg_rng)?;
    let solution = produce_final(
        &pop,
        variant.final_mode(),
        params.final_fraction,
        Some(&objective),
    )?;

    let mut final_x = solution.x;
    chunk.bounds().clamp(&mut final_x);
    Ok((final_x, solution.surrogate_value, pop))
}

fn at_env<E: Into<StepError>>(env: usize) -> impl FnOnce(E) -> HarnessError {
    move |source| HarnessError::AtEnv {
        env,
        source: source.into(),
    }
}

/// Runs one variant over a generated environment stream.
///
/// `seeds.env` drives the problem trajectory and chunk sampling; `seeds.alg`
/// drives everything the algorithm does. The two never mix, so variants
/// sharing `seeds.env` face identical environments.
pub fn run_variant(
    variant: VariantId,
    problem: &ProblemConfig,
    envs: usize,
    params: &PipelineParams,
    seeds: RunSeeds,
) -> Result<RunRecord, HarnessError> {
    run_variant_traced(variant, problem, envs, params, seeds).map(|(record, _)| record)
}

/// As [`run_variant`], additionally returning each environment's final
/// population (useful for isolation and carryover checks).
pub fn run_variant_traced(
    variant: VariantId,
    problem: &ProblemConfig,
    envs: usize,
    params: &PipelineParams,
    seeds: RunSeeds,
) -> Result<(RunRecord, Vec<Population>), HarnessError> {
    let mut env_rng = ChaCha8Rng::seed_from_u64(seeds.env);
    let mut alg_rng = ChaCha8Rng::seed_from_u64(seeds.alg);
    let mut problem_state = problem.build(&mut env_rng)?;

    let mut history: Vec<DataChunk> = Vec::new();
    let mut prev_pop: Option<Population> = None;
    let mut per_env = Vec::with_capacity(envs);
    let mut populations = Vec::with_capacity(envs);

    for step in 0..envs {
        let evals_before = problem_state.true_evaluations();
        let chunk =
            sample_chunk(&problem_state, &params.sampling, &mut env_rng).map_err(at_env(step))?;
        let (final_x, surrogate_value, pop) = env_step(
            variant,
            &chunk,
            &history,
            prev_pop.as_ref(),
            params,
            &mut alg_rng,
        )
        .map_err(at_env(step))?;
        let true_value = problem_state
            .evaluate_true(&final_x)
            .map_err(at_env(step))?;

        per_env.push(EnvResult {
            env_index: chunk.env_index(),
            final_x,
            surrogate_value,
            true_value,
            true_evals: problem_state.true_evaluations() - evals_before,
        });
        populations.push(pop.clone());
        prev_pop = Some(pop);
        history.push(chunk);
        problem_state = problem_state.advance_environment(&mut env_rng);
    }

    let mean_true_value =
        per_env.iter().map(|e| e.true_value).sum::<f64>() / per_env.len().max(1) as f64;
    Ok((
        RunRecord {
            variant,
            problem_id: problem.id,
            run_index: 0,
            seeds,
            per_env,
            mean_true_value,
        },
        populations,
    ))
}

/// Runs one variant over a pre-recorded chunk stream instead of the
/// generator. With the algorithm seed of a live run and that run's dumped
/// chunks, the deployed solutions reproduce the live run exactly.
pub fn replay_variant(
    variant: VariantId,
    chunks: &[DataChunk],
    params: &PipelineParams,
    alg_seed: u64,
) -> Result<ReplayRecord, HarnessError> {
    let mut alg_rng = ChaCha8Rng::seed_from_u64(alg_seed);
    let mut prev_pop: Option<Population> = None;
    let mut per_env = Vec::with_capacity(chunks.len());

    for (step, chunk) in chunks.iter().enumerate() {
        chunk.validate().map_err(at_env(step))?;
        let history = &chunks[..step];
        let (final_x, surrogate_value, pop) = env_step(
            variant,
            chunk,
            history,
            prev_pop.as_ref(),
            params,
            &mut alg_rng,
        )
        .map_err(at_env(step))?;
        per_env.push(ReplayEnv {
            env_index: chunk.env_index(),
            final_x,
            surrogate_value,
        });
        prev_pop = Some(pop);
    }

    Ok(ReplayRecord {
        variant,
        alg_seed,
        per_env,
    })
}

/// Generates the chunk stream a live run would see, without running any
/// algorithm: the environment substream is isolated by construction, so the
/// dumped chunks match every variant's view of (problem, run index).
pub fn dump_chunks(
    problem: &ProblemConfig,
    envs: usize,
    params: &PipelineParams,
    env_seed: u64,
) -> Result<Vec<DataChunk>, HarnessError> {
    let mut env_rng = ChaCha8Rng::seed_from_u64(env_seed);
    let mut problem_state = problem.build(&mut env_rng)?;
    let mut chunks = Vec::with_capacity(envs);
    for step in 0..envs {
        let chunk =
            sample_chunk(&problem_state, &params.sampling, &mut env_rng).map_err(at_env(step))?;
        chunks.push(chunk);
        problem_state = problem_state.advance_environment(&mut env_rng);
    }
    Ok(chunks)
}

/// One aggregated table cell plus pairwise win counts within its problem.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub problem: ProblemId,
    pub variant: VariantId,
    /// Mean over runs of the per-run mean true value.
    pub mean: f64,
    /// Sample standard deviation over runs (0 when a single run).
    pub sd: f64,
    pub runs: usize,
    /// Number of other variants on the same problem with a strictly larger
    /// mean.
    pub wins: usize,
}

/// Aggregates run records into per-(problem, variant) rows, preserving
/// first-seen order.
pub fn summarize(records: &[RunRecord]) -> Result<Vec<SummaryRow>, HarnessError> {
    if records.is_empty() {
        return Err(HarnessError::NoRecords);
    }

    let mut keys: Vec<(ProblemId, VariantId)> = Vec::new();
    let mut values: Vec<Vec<f64>> = Vec::new();
    for record in records {
        let key = (record.problem_id, record.variant);
        match keys.iter().position(|&k| k == key) {
            Some(i) => values[i].push(record.mean_true_value),
            None => {
                keys.push(key);
                values.push(vec![record.mean_true_value]);
            }
        }
    }

    let mut rows: Vec<SummaryRow> = keys
        .iter()
        .zip(&values)
        .map(|(&(problem, variant), vals)| {
            let n = vals.len();
            let mean = vals.iter().sum::<f64>() / n as f64;
            let sd = if n > 1 {
                (vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64).sqrt()
            } else {
                0.0
            };
            SummaryRow {
                problem,
                variant,
                mean,
                sd,
                runs: n,
                wins: 0,
            }
        })
        .collect();

    for i in 0..rows.len() {
        rows[i].wins = rows
            .iter()
            .filter(|other| other.problem == rows[i].problem && other.variant != rows[i].variant)
            .filter(|other| rows[i].mean < other.mean)
            .count();
    }
    Ok(rows)
}

/// A failed (problem, variant, run) cell.
#[derive(Debug, Clone)]
pub struct RunFailure {
    pub problem: ProblemId,
    pub variant: VariantId,
    pub run_index: usize,
    pub error: String,
}

/// Full experiment outcome: every completed run record, the aggregated
/// summary, and any per-cell failures.
#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub records: Vec<RunRecord>,
    pub summary: Vec<SummaryRow>,
    pub failures: Vec<RunFailure>,
}

/// Executes the full (problem x variant x run) grid. Per-run seeds derive
/// from grid position, so any execution order — including parallel execution
/// on `parallelism` workers — produces identical results.
pub fn run_experiment(cfg: &ExperimentConfig, parallelism: usize) -> ExperimentReport {
    let mut jobs = Vec::new();
    for pi in 0..cfg.problems.len() {
        for &variant in &cfg.variants {
            for run_index in 0..cfg.protocol.runs {
                jobs.push((pi, variant, run_index));
            }
        }
    }

    let execute = |&(pi, variant, run_index): &(usize, VariantId, usize)| {
        let problem = &cfg.problems[pi];
        let params = cfg.pipeline_for(problem);
        let seeds = run_seeds(cfg.master_seed, problem.id, variant, run_index);
        run_variant(variant, problem, cfg.protocol.envs, &params, seeds)
            .map(|mut record| {
                record.run_index = run_index;
                record
            })
            .map_err(|err| RunFailure {
                problem: problem.id,
                variant,
                run_index,
                error: err.to_string(),
            })
    };

    let outcomes: Vec<Result<RunRecord, RunFailure>> = if parallelism > 1 {
        match rayon::ThreadPoolBuilder::new()
            .num_threads(parallelism)
            .build()
        {
            Ok(pool) => pool.install(|| jobs.par_iter().map(execute).collect()),
            Err(_) => jobs.iter().map(execute).collect(),
        }
    } else {
        jobs.iter().map(execute).collect()
    };

    let mut records = Vec::new();
    let mut failures = Vec::new();
    for outcome in outcomes {
        match outcome {
            Ok(record) => records.push(record),
            Err(failure) => failures.push(failure),
        }
    }

    let summary = summarize(&records).unwrap_or_default();
    ExperimentReport {
        records,
        summary,
        failures,
    }
}
