//! Results persistence and the ablation summary table.
//!
//! Two CSV schemas: per-environment results
//! (`problem,variant,run,seed,env,true_value,final_x0..`) and the summary
//! (`problem,variant,mean,sd,runs`). Floats are written with Rust's
//! shortest-roundtrip formatting, so identical runs produce byte-identical
//! files and parsing recovers the exact values.

use crate::harness::{ReplayRecord, RunRecord, SummaryRow, VariantId};
use crate::bench::ProblemId;
use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("csv i/o: {0}")]
    Csv(#[from] csv::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("results row {row}: {message}")]
    Malformed { row: usize, message: String },
}

/// One parsed row of a results CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub problem: String,
    pub variant: String,
    pub run: usize,
    pub seed: u64,
    pub env: usize,
    pub true_value: f64,
    pub final_x: Vec<f64>,
}

fn max_dim(records: &[RunRecord]) -> usize {
    records
        .iter()
        .flat_map(|r| r.per_env.iter())
        .map(|e| e.final_x.len())
        .max()
        .unwrap_or(0)
}

/// Writes one row per (run, environment). The `seed` column carries the
/// run's algorithm-stream seed, which combined with a chunk dump is enough
/// to replay the run.
pub fn write_results_csv(path: &Path, records: &[RunRecord]) -> Result<(), ReportError> {
    let dim = max_dim(records);
    let mut writer = csv::Writer::from_path(path)?;

    let mut header = vec![
        "problem".to_string(),
        "variant".to_string(),
        "run".to_string(),
        "seed".to_string(),
        "env".to_string(),
        "true_value".to_string(),
    ];
    header.extend((0..dim).map(|d| format!("final_x{d}")));
    writer.write_record(&header)?;

    for record in records {
        for env in &record.per_env {
            let mut row = vec![
                record.problem_id.to_string(),
                record.variant.to_string(),
                record.run_index.to_string(),
                record.seeds.alg.to_string(),
                env.env_index.to_string(),
                env.true_value.to_string(),
            ];
            row.extend(env.final_x.iter().map(f64::to_string));
            row.resize(6 + dim, String::new());
            writer.write_record(&row)?;
        }
    }
    writer.flush()?;
    Ok(())
}

/// Reads a results CSV back; trailing empty coordinate columns are dropped.
pub fn read_results_csv(path: &Path) -> Result<Vec<ResultRow>, ReportError> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record?;
        let row_no = idx + 2; // header is row 1
        let field = |i: usize| -> Result<&str, ReportError> {
            record.get(i).ok_or(ReportError::Malformed {
                row: row_no,
                message: format!("missing column {i}"),
            })
        };
        let parse_err = |message: String| ReportError::Malformed {
            row: row_no,
            message,
        };

        let mut final_x = Vec::new();
        for i in 6..record.len() {
            let raw = field(i)?;
            if raw.is_empty() {
                continue;
            }
            final_x.push(
                f64::from_str(raw).map_err(|e| parse_err(format!("final_x: {e}")))?,
            );
        }
        rows.push(ResultRow {
            problem: field(0)?.to_string(),
            variant: field(1)?.to_string(),
            run: usize::from_str(field(2)?).map_err(|e| parse_err(format!("run: {e}")))?,
            seed: u64::from_str(field(3)?).map_err(|e| parse_err(format!("seed: {e}")))?,
            env: usize::from_str(field(4)?).map_err(|e| parse_err(format!("env: {e}")))?,
            true_value: f64::from_str(field(5)?)
                .map_err(|e| parse_err(format!("true_value: {e}")))?,
            final_x,
        });
    }
    Ok(rows)
}

/// Writes the per-(problem, variant) summary.
pub fn write_summary_csv(path: &Path, rows: &[SummaryRow]) -> Result<(), ReportError> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(["problem", "variant", "mean", "sd", "runs"])?;
    for row in rows {
        writer.write_record(&[
            row.problem.to_string(),
            row.variant.to_string(),
            row.mean.to_string(),
            row.sd.to_string(),
            row.runs.to_string(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

/// Replay output: no ground truth, so the value column is the surrogate's.
pub fn write_replay_csv(path: &Path, record: &ReplayRecord) -> Result<(), ReportError> {
    let dim = record
        .per_env
        .iter()
        .map(|e| e.final_x.len())
        .max()
        .unwrap_or(0);
    let mut writer = csv::Writer::from_path(path)?;
    let mut header = vec![
        "variant".to_string(),
        "seed".to_string(),
        "env".to_string(),
        "surrogate_value".to_string(),
    ];
    header.extend((0..dim).map(|d| format!("final_x{d}")));
    writer.write_record(&header)?;
    for env in &record.per_env {
        let mut row = vec![
            record.variant.to_string(),
            record.alg_seed.to_string(),
            env.env_index.to_string(),
            env.surrogate_value.to_string(),
        ];
        row.extend(env.final_x.iter().map(f64::to_string));
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}

/// Renders the summary as a problems-by-variants table (one mean per cell).
pub fn format_report_table(rows: &[SummaryRow]) -> String {
    let mut variants: Vec<VariantId> = Vec::new();
    let mut problems: Vec<ProblemId> = Vec::new();
    for row in rows {
        if !variants.contains(&row.variant) {
            variants.push(row.variant);
        }
        if !problems.contains(&row.problem) {
            problems.push(row.problem);
        }
    }

    let cell = |p: ProblemId, v: VariantId| -> String {
        rows.iter()
            .find(|r| r.problem == p && r.variant == v)
            .map(|r| format!("{:.4}", r.mean))
            .unwrap_or_else(|| "-".to_string())
    };

    let width = 14usize;
    let mut out = String::new();
    out.push_str(&format!("{:<10}", "problem"));
    for v in &variants {
        out.push_str(&format!("{:>width$}", v.to_string()));
    }
    out.push('\n');
    for p in &problems {
        out.push_str(&format!("{:<10}", p.to_string()));
        for v in &variants {
            out.push_str(&format!("{:>width$}", cell(*p, *v)));
        }
        out.push('\n');
    }
    out
}

/// Recomputes summary rows from parsed result rows (the `report` command's
/// path: per-run means first, then per-cell statistics over runs).
pub fn summarize_rows(rows: &[ResultRow]) -> Vec<(String, String, f64, f64, usize)> {
    // (problem, variant, run) -> per-run mean
    let mut run_values: BTreeMap<(String, String, usize), Vec<f64>> = BTreeMap::new();
    let mut order: Vec<(String, String)> = Vec::new();
    for row in rows {
        let key = (row.problem.clone(), row.variant.clone());
        if !order.contains(&key) {
            order.push(key);
        }
        run_values
            .entry((row.problem.clone(), row.variant.clone(), row.run))
            .or_default()
            .push(row.true_value);
    }

    let mut per_cell: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
    for ((problem, variant, _run), values) in run_values {
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        per_cell.entry((problem, variant)).or_default().push(mean);
    }

    order
        .into_iter()
        .map(|(problem, variant)| {
            let means = &per_cell[&(problem.clone(), variant.clone())];
            let n = means.len();
            let mean = means.iter().sum::<f64>() / n as f64;
            let sd = if n > 1 {
                (means.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64)
                    .sqrt()
            } else {
                0.0
            };
            (problem, variant, mean, sd, n)
        })
        .collect()
}

/// Renders recomputed summary rows in the same table layout.
pub fn format_rows_table(cells: &[(String, String, f64, f64, usize)]) -> String {
    let mut variants: Vec<String> = Vec::new();
    let mut problems: Vec<String> = Vec::new();
    for (p, v, ..) in cells {
        if !variants.contains(v) {
            variants.push(v.clone());
        }
        if !problems.contains(p) {
            problems.push(p.clone());
        }
    }
    let cell = |p: &str, v: &str| -> String {
        cells
            .iter()
            .find(|(cp, cv, ..)| cp == p && cv == v)
            .map(|(_, _, mean, ..)| format!("{mean:.4}"))
            .unwrap_or_else(|| "-".to_string())
    };
    let width = 14usize;
    let mut out = String::new();
    out.push_str(&format!("{:<10}", "problem"));
    for v in &variants {
        out.push_str(&format!("{v:>width$}"));
    }
    out.push('\n');
    for p in &problems {
        out.push_str(&format!("{p:<10}"));
        for v in &variants {
            out.push_str(&format!("{:>width$}", cell(p, v)));
        }
        out.push('\n');
    }
    out
}
