//! Incremental offline data-driven optimization for drifting environments.
//!
//! The problem setting: a black-box system changes over time, and the only
//! information available about each environment is a small batch of offline
//! samples (a *data chunk*). No query to the true objective is allowed during
//! search. Per environment, the library
//!
//! 1. trains an RBF-network surrogate on the new chunk and, optionally, an
//!    inverse-RMSE-weighted ensemble that reuses rescaled historical chunks
//!    ([`ensemble`]),
//! 2. minimizes the surrogate with differential evolution (rand/1/bin),
//!    optionally warm-started from the previous environment's population
//!    ([`de`]),
//! 3. deploys either the best candidate or the mean of the top candidates
//!    ([`solution`]).
//!
//! [`bench`] provides seeded dynamic test landscapes and Latin hypercube
//! chunk sampling; [`harness`] drives the four algorithm variants
//! (`ss`, `kts`, `ktspi`, `ktspi_tba`) over environment streams and
//! aggregates results. Everything is deterministic given a master seed.
//!
//! ```
//! use driftopt::harness::{run_seeds, run_variant};
//! use driftopt::{DeParams, PipelineParams, ProblemConfig, ProblemId, VariantId};
//!
//! let problem = ProblemConfig::new(ProblemId::F1, 4);
//! let mut params = PipelineParams::for_dim(4);
//! params.de = DeParams::new(10, 0.5, 0.9, 5).unwrap();
//!
//! let seeds = run_seeds(42, ProblemId::F1, VariantId::Kts, 0);
//! let record = run_variant(VariantId::Kts, &problem, 3, &params, seeds).unwrap();
//! assert_eq!(record.per_env.len(), 3);
//! assert!(record.mean_true_value.is_finite());
//! ```

pub mod bench;
pub mod data;
pub mod de;
pub mod ensemble;
pub mod harness;
pub mod rbf;
pub mod solution;
pub mod transfer;

pub use bench::{latin_hypercube, sample_chunk, DynamicProblem, ProblemId, SamplingMethod, SamplingPlan};
pub use data::{Bounds, ChunkStats, DataChunk, DataError, SampleSet};
pub use de::{
    crossover_binomial, init_population, mutate_rand1, optimize, DeParams, Individual,
    InitStrategy, Population,
};
pub use ensemble::{
    ensemble_weights, update_ensemble, EnsembleConfig, EnsembleSurrogate, RmseEval,
};
pub use harness::{
    replay_variant, run_experiment, run_variant, summarize, ExperimentConfig, PipelineParams,
    ProblemConfig, RunRecord, RunSeeds, VariantId,
};
pub use rbf::{kmeans_centers, rmse, train_rbf, RbfConfig, RbfModel};
pub use solution::{produce_final, FinalMode, FinalSolution};
pub use transfer::{build_training_set, rescale_objectives, TransferredChunk};
