//! `driftopt` — run, replay and report incremental offline optimization
//! experiments.

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use driftopt::data::{read_chunk_stream, write_chunk_stream};
use driftopt::harness::report::{
    format_report_table, format_rows_table, read_results_csv, summarize_rows, write_replay_csv,
    write_results_csv, write_summary_csv,
};
use driftopt::harness::{env_stream_seed, replay_variant, run_experiment, run_seeds, VariantId};
use driftopt::{ExperimentConfig, ProblemConfig, ProblemId, SamplingMethod};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "driftopt",
    about = "Offline data-driven optimization under drift: surrogate ensembles, DE search, reproducible ablations",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonOpts {
    /// Experiment config (JSON).
    #[arg(long, value_name = "FILE")]
    config: PathBuf,

    /// Master seed; overrides the config value.
    #[arg(long, env = "DRIFTOPT_SEED")]
    seed: Option<u64>,

    /// Cap on ensemble history (most recent chunks kept).
    #[arg(long, value_name = "N")]
    max_history: Option<usize>,

    /// RMSE evaluation set for ensemble weights.
    #[arg(long, value_name = "current|transferred")]
    rmse_eval: Option<String>,

    /// Chunk sampling method.
    #[arg(long, value_name = "lhs|uniform")]
    sampling: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full (problem x variant x run) experiment grid.
    Run {
        #[command(flatten)]
        common: CommonOpts,

        /// Output directory for results.csv and summary.csv.
        #[arg(long, value_name = "DIR", default_value = "results")]
        out: PathBuf,

        /// Worker threads for the run grid.
        #[arg(long, value_name = "N")]
        parallelism: Option<usize>,
    },
    /// Re-run one variant against a dumped chunk stream.
    Replay {
        #[command(flatten)]
        common: CommonOpts,

        /// Chunk stream file (newline-delimited JSON).
        #[arg(long, value_name = "FILE")]
        chunks: PathBuf,

        /// Problem the chunks were dumped for (seed derivation).
        #[arg(long, value_name = "ID")]
        problem: String,

        /// Variant to replay.
        #[arg(long, value_name = "ss|kts|ktspi|ktspi_tba")]
        variant: String,

        /// Run index the chunks were dumped for.
        #[arg(long, value_name = "N", default_value_t = 0)]
        run_index: usize,

        /// Output directory for replay.csv.
        #[arg(long, value_name = "DIR", default_value = "results")]
        out: PathBuf,
    },
    /// Re-summarize an existing results CSV as the ablation table.
    Report {
        /// results.csv produced by `run`.
        results: PathBuf,
    },
    /// Write the chunk stream one (problem, run index) pair would see.
    DumpChunks {
        #[command(flatten)]
        common: CommonOpts,

        /// Problem to generate.
        #[arg(long, value_name = "ID")]
        problem: String,

        /// Run index (selects the environment substream).
        #[arg(long, value_name = "N", default_value_t = 0)]
        run_index: usize,

        /// Output file.
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
    },
}

fn load_config(common: &CommonOpts) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::from_path(&common.config)
        .with_context(|| format!("loading {}", common.config.display()))?;
    if let Some(seed) = common.seed {
        cfg.master_seed = seed;
    }
    if let Some(cap) = common.max_history {
        cfg.ensemble.max_history = Some(cap);
    }
    if let Some(mode) = &common.rmse_eval {
        cfg.ensemble.rmse_eval = match mode.as_str() {
            "current" => driftopt::RmseEval::Current,
            "transferred" => driftopt::RmseEval::Transferred,
            other => bail!("unknown --rmse-eval {other:?} (expected current or transferred)"),
        };
    }
    if let Some(method) = &common.sampling {
        cfg.sampling.method = match method.as_str() {
            "lhs" => SamplingMethod::LatinHypercube,
            "uniform" => SamplingMethod::Uniform,
            other => bail!("unknown --sampling {other:?} (expected lhs or uniform)"),
        };
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Finds the config entry for a problem id, or synthesizes one with the
/// given dimension (used when replaying chunks for a problem not listed).
fn problem_entry(cfg: &ExperimentConfig, id: ProblemId, fallback_dim: usize) -> ProblemConfig {
    cfg.problems
        .iter()
        .find(|p| p.id == id)
        .cloned()
        .unwrap_or_else(|| ProblemConfig::new(id, fallback_dim))
}

fn cmd_run(common: CommonOpts, out: &Path, parallelism: Option<usize>) -> Result<()> {
    let cfg = load_config(&common)?;
    let workers = parallelism
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if workers < 1 {
        bail!("--parallelism must be at least 1");
    }

    let report = run_experiment(&cfg, workers);

    std::fs::create_dir_all(out)
        .with_context(|| format!("creating output directory {}", out.display()))?;
    let results_path = out.join("results.csv");
    let summary_path = out.join("summary.csv");
    write_results_csv(&results_path, &report.records)?;
    write_summary_csv(&summary_path, &report.summary)?;

    print!("{}", format_report_table(&report.summary));
    println!(
        "\n{} runs -> {} and {}",
        report.records.len(),
        results_path.display(),
        summary_path.display()
    );

    if !report.failures.is_empty() {
        for failure in &report.failures {
            eprintln!(
                "failed: {} {} run {}: {}",
                failure.problem, failure.variant, failure.run_index, failure.error
            );
        }
        bail!("{} of {} runs failed", report.failures.len(), report.failures.len() + report.records.len());
    }
    Ok(())
}

fn cmd_replay(
    common: CommonOpts,
    chunks_path: &Path,
    problem: &str,
    variant: &str,
    run_index: usize,
    out: &Path,
) -> Result<()> {
    let cfg = load_config(&common)?;
    let problem_id: ProblemId = problem.parse()?;
    let variant: VariantId = variant.parse()?;

    let chunks = read_chunk_stream(chunks_path)
        .with_context(|| format!("reading {}", chunks_path.display()))?;
    if chunks.is_empty() {
        bail!("chunk stream {} is empty", chunks_path.display());
    }

    let entry = problem_entry(&cfg, problem_id, chunks[0].dim());
    let params = cfg.pipeline_for(&entry);
    let seeds = run_seeds(cfg.master_seed, problem_id, variant, run_index);
    let record = replay_variant(variant, &chunks, &params, seeds.alg)?;

    std::fs::create_dir_all(out)
        .with_context(|| format!("creating output directory {}", out.display()))?;
    let path = out.join("replay.csv");
    write_replay_csv(&path, &record)?;
    println!(
        "replayed {} environments of {} on {} -> {}",
        record.per_env.len(),
        variant,
        problem_id,
        path.display()
    );
    Ok(())
}

fn cmd_report(results: &Path) -> Result<()> {
    let rows = read_results_csv(results)
        .with_context(|| format!("reading {}", results.display()))?;
    if rows.is_empty() {
        bail!("no rows in {}", results.display());
    }
    let cells = summarize_rows(&rows);
    print!("{}", format_rows_table(&cells));
    Ok(())
}

fn cmd_dump_chunks(common: CommonOpts, problem: &str, run_index: usize, out: &Path) -> Result<()> {
    let cfg = load_config(&common)?;
    let problem_id: ProblemId = problem.parse()?;
    let entry = problem_entry(&cfg, problem_id, 10);
    let params = cfg.pipeline_for(&entry);
    let env_seed = env_stream_seed(cfg.master_seed, problem_id, run_index);
    let chunks = driftopt::harness::dump_chunks(&entry, cfg.protocol.envs, &params, env_seed)?;
    write_chunk_stream(out, &chunks)?;
    println!(
        "dumped {} chunks of {} (run {}) -> {}",
        chunks.len(),
        problem_id,
        run_index,
        out.display()
    );
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            common,
            out,
            parallelism,
        } => cmd_run(common, &out, parallelism),
        Command::Replay {
            common,
            chunks,
            problem,
            variant,
            run_index,
            out,
        } => cmd_replay(common, &chunks, &problem, &variant, run_index, &out),
        Command::Report { results } => cmd_report(&results),
        Command::DumpChunks {
            common,
            problem,
            run_index,
            out,
        } => cmd_dump_chunks(common, &problem, run_index, &out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
