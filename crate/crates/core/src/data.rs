//! Environment-indexed offline data chunks.
//!
//! A [`DataChunk`] is the batch of `(x, y)` samples observed in one
//! environment, together with the box bounds of the decision space. Chunks
//! are validated on construction and immutable afterwards, so they can be
//! shared freely across threads and replayed deterministically.
//!
//! Chunk streams are persisted as newline-delimited JSON, one document per
//! environment:
//!
//! ```json
//! {"env_index":0,"bounds":{"lower":[0.0],"upper":[1.0]},"points":[{"x":[0.2],"y":1.5}, ...]}
//! ```

use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("chunk has {xs} decision vectors but {ys} objective values")]
    LengthMismatch { xs: usize, ys: usize },
    #[error("chunk must contain at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("bounds must have at least one dimension")]
    EmptyBounds,
    #[error("bounds have {lower} lower entries but {upper} upper entries")]
    BoundsLengthMismatch { lower: usize, upper: usize },
    #[error("bounds dimension {dim}: lower {lower} is not strictly below upper {upper}")]
    DegenerateBounds { dim: usize, lower: f64, upper: f64 },
    #[error("point {index} has dimension {got}, expected {expected}")]
    DimensionMismatch {
        index: usize,
        got: usize,
        expected: usize,
    },
    #[error("point {index}, coordinate {dim}: {value} lies outside [{lower}, {upper}]")]
    OutOfBounds {
        index: usize,
        dim: usize,
        value: f64,
        lower: f64,
        upper: f64,
    },
    #[error("point {index} contains a non-finite value")]
    NonFinite { index: usize },
    #[error("chunk stream i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("chunk stream line {line}: {source}")]
    Parse {
        line: usize,
        source: serde_json::Error,
    },
}

/// Axis-aligned box bounds of the decision space.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, DataError> {
        if lower.is_empty() {
            return Err(DataError::EmptyBounds);
        }
        if lower.len() != upper.len() {
            return Err(DataError::BoundsLengthMismatch {
                lower: lower.len(),
                upper: upper.len(),
            });
        }
        for (dim, (&lo, &hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(DataError::DegenerateBounds {
                    dim,
                    lower: lo,
                    upper: hi,
                });
            }
        }
        Ok(Self { lower, upper })
    }

    /// `[-half_width, half_width]` in every dimension.
    pub fn symmetric(dim: usize, half_width: f64) -> Self {
        Self::new(vec![-half_width; dim], vec![half_width; dim])
            .expect("symmetric bounds with positive half width are valid")
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn width(&self, dim: usize) -> f64 {
        self.upper[dim] - self.lower[dim]
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(&self.lower)
                .zip(&self.upper)
                .all(|((&v, &lo), &hi)| v >= lo && v <= hi)
    }

    pub fn clamp(&self, x: &mut [f64]) {
        for ((v, &lo), &hi) in x.iter_mut().zip(&self.lower).zip(&self.upper) {
            *v = v.clamp(lo, hi);
        }
    }
}

/// One environment's offline sample batch.
#[derive(Debug, Clone, PartialEq)]
pub struct DataChunk {
    env_index: usize,
    xs: Vec<Vec<f64>>,
    ys: Vec<f64>,
    bounds: Bounds,
}

impl DataChunk {
    /// Validates and freezes a chunk. Every decision vector must match the
    /// bounds dimension and lie inside the box; at least two points are
    /// required.
    pub fn new(
        env_index: usize,
        xs: Vec<Vec<f64>>,
        ys: Vec<f64>,
        bounds: Bounds,
    ) -> Result<Self, DataError> {
        let chunk = Self {
            env_index,
            xs,
            ys,
            bounds,
        };
        chunk.validate()?;
        Ok(chunk)
    }

    /// Re-checks every construction invariant. Idempotent: validating a
    /// valid chunk returns it unchanged.
    pub fn validate(&self) -> Result<&Self, DataError> {
        if self.xs.len() != self.ys.len() {
            return Err(DataError::LengthMismatch {
                xs: self.xs.len(),
                ys: self.ys.len(),
            });
        }
        if self.xs.len() < 2 {
            return Err(DataError::TooFewPoints(self.xs.len()));
        }
        let dim = self.bounds.dim();
        for (index, x) in self.xs.iter().enumerate() {
            if x.len() != dim {
                return Err(DataError::DimensionMismatch {
                    index,
                    got: x.len(),
                    expected: dim,
                });
            }
            if x.iter().any(|v| !v.is_finite()) || !self.ys[index].is_finite() {
                return Err(DataError::NonFinite { index });
            }
            for (d, &v) in x.iter().enumerate() {
                let (lo, hi) = (self.bounds.lower[d], self.bounds.upper[d]);
                if v < lo || v > hi {
                    return Err(DataError::OutOfBounds {
                        index,
                        dim: d,
                        value: v,
                        lower: lo,
                        upper: hi,
                    });
                }
            }
        }
        Ok(self)
    }

    pub fn env_index(&self) -> usize {
        self.env_index
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.bounds.dim()
    }

    pub fn xs(&self) -> &[Vec<f64>] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    /// Exact min/max of the objective values.
    pub fn stats(&self) -> ChunkStats {
        let mut y_min = f64::INFINITY;
        let mut y_max = f64::NEG_INFINITY;
        for &y in &self.ys {
            y_min = y_min.min(y);
            y_max = y_max.max(y);
        }
        ChunkStats { y_min, y_max }
    }

    pub fn samples(&self) -> SampleSet {
        SampleSet {
            xs: self.xs.clone(),
            ys: self.ys.clone(),
        }
    }
}

/// Objective range of a chunk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChunkStats {
    y_min: f64,
    y_max: f64,
}

impl ChunkStats {
    pub fn new(y_min: f64, y_max: f64) -> Self {
        assert!(y_min <= y_max, "y_min {y_min} must not exceed y_max {y_max}");
        Self { y_min, y_max }
    }

    pub fn y_min(&self) -> f64 {
        self.y_min
    }

    pub fn y_max(&self) -> f64 {
        self.y_max
    }

    pub fn range(&self) -> f64 {
        self.y_max - self.y_min
    }
}

/// A plain regression sample set: decision vectors with target values.
/// Unlike [`DataChunk`] it carries no environment identity or bounds; it is
/// what surrogate training consumes.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    xs: Vec<Vec<f64>>,
    ys: Vec<f64>,
}

impl SampleSet {
    pub fn new(xs: Vec<Vec<f64>>, ys: Vec<f64>) -> Result<Self, DataError> {
        if xs.len() != ys.len() {
            return Err(DataError::LengthMismatch {
                xs: xs.len(),
                ys: ys.len(),
            });
        }
        Ok(Self { xs, ys })
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
}

#[derive(Serialize, Deserialize)]
struct ChunkDoc {
    env_index: usize,
    bounds: BoundsDoc,
    points: Vec<PointDoc>,
}

#[derive(Serialize, Deserialize)]
struct BoundsDoc {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct PointDoc {
    x: Vec<f64>,
    y: f64,
}

impl From<&DataChunk> for ChunkDoc {
    fn from(chunk: &DataChunk) -> Self {
        ChunkDoc {
            env_index: chunk.env_index,
            bounds: BoundsDoc {
                lower: chunk.bounds.lower.clone(),
                upper: chunk.bounds.upper.clone(),
            },
            points: chunk
                .xs
                .iter()
                .zip(&chunk.ys)
                .map(|(x, &y)| PointDoc { x: x.clone(), y })
                .collect(),
        }
    }
}

impl TryFrom<ChunkDoc> for DataChunk {
    type Error = DataError;

    fn try_from(doc: ChunkDoc) -> Result<Self, DataError> {
        let bounds = Bounds::new(doc.bounds.lower, doc.bounds.upper)?;
        let mut xs = Vec::with_capacity(doc.points.len());
        let mut ys = Vec::with_capacity(doc.points.len());
        for point in doc.points {
            xs.push(point.x);
            ys.push(point.y);
        }
        DataChunk::new(doc.env_index, xs, ys, bounds)
    }
}

/// Serializes one chunk as a single-line JSON document.
pub fn chunk_to_json(chunk: &DataChunk) -> String {
    serde_json::to_string(&ChunkDoc::from(chunk)).expect("chunk serialization cannot fail")
}

/// Parses a single-line JSON chunk document and validates it.
pub fn chunk_from_json(line: &str) -> Result<DataChunk, serde_json::Error> {
    let doc: ChunkDoc = serde_json::from_str(line)?;
    DataChunk::try_from(doc).map_err(serde::de::Error::custom)
}

/// Writes a newline-delimited chunk stream.
pub fn write_chunk_stream(path: &Path, chunks: &[DataChunk]) -> Result<(), DataError> {
    let mut out = BufWriter::new(File::create(path)?);
    for chunk in chunks {
        writeln!(out, "{}", chunk_to_json(chunk))?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a newline-delimited chunk stream, validating every document.
pub fn read_chunk_stream(path: &Path) -> Result<Vec<DataChunk>, DataError> {
    let reader = BufReader::new(File::open(path)?);
    let mut chunks = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let chunk = chunk_from_json(&line).map_err(|source| DataError::Parse {
            line: idx + 1,
            source,
        })?;
        chunks.push(chunk);
    }
    Ok(chunks)
}
