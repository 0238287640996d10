//! Objective-space transfer of historical chunks.
//!
//! Environments drift in the objective, not in where the samples live, so a
//! historical chunk is reused by mapping its objective values affinely onto
//! the current chunk's `[y_min, y_max]` range:
//!
//! ```text
//! y' = (y - y_min_src) / (y_max_src - y_min_src) * (y_max_tgt - y_min_tgt) + y_min_tgt
//! ```
//!
//! Decision vectors pass through untouched. A constant source chunk carries
//! no ordering information, so its values all map to the target midpoint.

use crate::data::{ChunkStats, DataChunk, SampleSet};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TransferError {
    #[error("historical chunk has dimension {hist}, current chunk has {current}")]
    DimensionMismatch { hist: usize, current: usize },
}

/// A historical chunk rescaled into the current objective range.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferredChunk {
    source_env: usize,
    xs: Vec<Vec<f64>>,
    ys: Vec<f64>,
}

impl TransferredChunk {
    pub fn source_env(&self) -> usize {
        self.source_env
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.xs.first().map_or(0, Vec::len)
    }

    pub fn xs(&self) -> &[Vec<f64>] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn samples(&self) -> SampleSet {
        SampleSet::new(self.xs.clone(), self.ys.clone())
            .expect("transferred chunk keeps xs/ys aligned")
    }
}

/// Rescales a source chunk's objective values into the target range.
///
/// Every output value lies in `[target.y_min(), target.y_max()]`; the map is
/// monotone and rank-preserving. A degenerate source range (constant chunk)
/// maps everything to the target midpoint.
pub fn rescale_objectives(source: &DataChunk, target: &ChunkStats) -> TransferredChunk {
    let src = source.stats();
    let (t_min, t_max) = (target.y_min(), target.y_max());
    let src_range = src.range();

    let ys = if src_range == 0.0 {
        vec![(t_min + t_max) / 2.0; source.len()]
    } else {
        let scale = (t_max - t_min) / src_range;
        source
            .ys()
            .iter()
            .map(|&y| ((y - src.y_min()) * scale + t_min).clamp(t_min, t_max))
            .collect()
    };

    TransferredChunk {
        source_env: source.env_index(),
        xs: source.xs().to_vec(),
        ys,
    }
}

/// Concatenates a transferred historical chunk with the current chunk into
/// one training set: historical rows first, current rows second.
pub fn build_training_set(
    hist: &TransferredChunk,
    current: &DataChunk,
) -> Result<SampleSet, TransferError> {
    if hist.dim() != current.dim() {
        return Err(TransferError::DimensionMismatch {
            hist: hist.dim(),
            current: current.dim(),
        });
    }
    let mut xs = hist.xs.clone();
    xs.extend(current.xs().iter().cloned());
    let mut ys = hist.ys.clone();
    ys.extend_from_slice(current.ys());
    Ok(SampleSet::new(xs, ys).expect("concatenation keeps xs/ys aligned"))
}
