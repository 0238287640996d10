//! Seeded dynamic test landscapes and offline chunk sampling.
//!
//! Each problem is `base(R_t (x - o_t)) + h_t`: a classic test function
//! whose optimum location `o_t`, additive value offset `h_t`, and (for the
//! rotated families) orientation `R_t` change from environment to
//! environment. The base functions are all zero at the origin, so the true
//! minimum value of environment `t` is exactly `h_t` while identity-rotated.
//!
//! This suite is a self-contained stand-in, not a re-implementation of any
//! published benchmark generator; absolute objective values are only
//! meaningful relative to each other within one configuration.
//!
//! Every instance counts its true-objective evaluations, which lets callers
//! audit the offline budget: per environment, evaluations happen only when
//! sampling the chunk and when scoring the one deployed solution.

use crate::data::{Bounds, DataChunk, DataError};
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use std::cell::Cell;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("point {x:?} lies outside the problem bounds")]
    OutOfBounds { x: Vec<f64> },
    #[error("unknown problem id {0:?} (expected f1..f6)")]
    UnknownProblem(String),
    #[error("dimension must be at least 1")]
    ZeroDimension,
    #[error("initial optimum must lie within bounds")]
    OptimumOutOfBounds,
    #[error(transparent)]
    Data(#[from] DataError),
}

/// The six stand-in problem families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemId {
    /// Sphere, axis-aligned.
    F1,
    /// Rastrigin, axis-aligned.
    F2,
    /// Griewank, rotated, large additive offset (~1000).
    F3,
    /// Rosenbrock (shifted so its minimum sits at the origin), rotated.
    F4,
    /// Ackley, rotated, large additive offset (~2000).
    F5,
    /// Hybrid sphere/Rastrigin split across dimensions, rotated.
    F6,
}

impl ProblemId {
    pub const ALL: [ProblemId; 6] = [
        ProblemId::F1,
        ProblemId::F2,
        ProblemId::F3,
        ProblemId::F4,
        ProblemId::F5,
        ProblemId::F6,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ProblemId::F1 => "f1",
            ProblemId::F2 => "f2",
            ProblemId::F3 => "f3",
            ProblemId::F4 => "f4",
            ProblemId::F5 => "f5",
            ProblemId::F6 => "f6",
        }
    }

    /// Stable numeric tag used in seed derivation.
    pub fn tag(&self) -> u64 {
        match self {
            ProblemId::F1 => 1,
            ProblemId::F2 => 2,
            ProblemId::F3 => 3,
            ProblemId::F4 => 4,
            ProblemId::F5 => 5,
            ProblemId::F6 => 6,
        }
    }

    /// Half-width of the default symmetric decision box.
    pub fn half_width(&self) -> f64 {
        match self {
            ProblemId::F1 => 100.0,
            ProblemId::F2 => 5.12,
            ProblemId::F3 => 600.0,
            ProblemId::F4 => 2.048,
            ProblemId::F5 => 32.768,
            ProblemId::F6 => 5.12,
        }
    }

    fn rotated(&self) -> bool {
        matches!(
            self,
            ProblemId::F3 | ProblemId::F4 | ProblemId::F5 | ProblemId::F6
        )
    }

    fn initial_value_offset(&self) -> f64 {
        match self {
            ProblemId::F3 => 1000.0,
            ProblemId::F5 => 2000.0,
            _ => 0.0,
        }
    }

    fn base_value(&self, z: &[f64]) -> f64 {
        match self {
            ProblemId::F1 => sphere(z),
            ProblemId::F2 => rastrigin(z),
            ProblemId::F3 => griewank(z),
            ProblemId::F4 => rosenbrock_at_origin(z),
            ProblemId::F5 => ackley(z),
            ProblemId::F6 => hybrid_sphere_rastrigin(z),
        }
    }
}

impl fmt::Display for ProblemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProblemId {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, BenchError> {
        match s.to_ascii_lowercase().as_str() {
            "f1" => Ok(ProblemId::F1),
            "f2" => Ok(ProblemId::F2),
            "f3" => Ok(ProblemId::F3),
            "f4" => Ok(ProblemId::F4),
            "f5" => Ok(ProblemId::F5),
            "f6" => Ok(ProblemId::F6),
            other => Err(BenchError::UnknownProblem(other.to_string())),
        }
    }
}

fn sphere(z: &[f64]) -> f64 {
    z.iter().map(|v| v * v).sum()
}

fn rastrigin(z: &[f64]) -> f64 {
    10.0 * z.len() as f64
        + z.iter()
            .map(|v| v * v - 10.0 * (2.0 * PI * v).cos())
            .sum::<f64>()
}

fn griewank(z: &[f64]) -> f64 {
    let sum: f64 = z.iter().map(|v| v * v).sum::<f64>() / 4000.0;
    let prod: f64 = z
        .iter()
        .enumerate()
        .map(|(i, v)| (v / ((i + 1) as f64).sqrt()).cos())
        .product();
    1.0 + sum - prod
}

/// Rosenbrock with its minimum translated to the origin: evaluates the
/// classic function at `z + 1`, so `z = 0` gives 0.
fn rosenbrock_at_origin(z: &[f64]) -> f64 {
    let shifted: Vec<f64> = z.iter().map(|v| v + 1.0).collect();
    shifted
        .windows(2)
        .map(|w| {
            let a = w[1] - w[0] * w[0];
            let b = 1.0 - w[0];
            100.0 * a * a + b * b
        })
        .sum()
}

fn ackley(z: &[f64]) -> f64 {
    let n = z.len() as f64;
    let sum_sq: f64 = z.iter().map(|v| v * v).sum();
    let sum_cos: f64 = z.iter().map(|v| (2.0 * PI * v).cos()).sum();
    -20.0 * (-0.2 * (sum_sq / n).sqrt()).exp() - (sum_cos / n).exp() + 20.0 + std::f64::consts::E
}

/// Sphere on the first half of the coordinates, Rastrigin on the rest.
fn hybrid_sphere_rastrigin(z: &[f64]) -> f64 {
    let split = z.len().div_ceil(2);
    sphere(&z[..split]) + rastrigin(&z[split..])
}

/// One environment of a dynamic landscape. Advancing produces a new value;
/// instances are cheap to clone and own their trajectory.
#[derive(Debug, Clone)]
pub struct DynamicProblem {
    id: ProblemId,
    dim: usize,
    bounds: Bounds,
    env_index: usize,
    optimum: Vec<f64>,
    value_offset: f64,
    rotation: Option<DMatrix<f64>>,
    shift_severity: f64,
    offset_severity: f64,
    evals: Cell<u64>,
}

/// Fraction of the bound width the optimum moves per environment change.
pub const DEFAULT_SHIFT_FRACTION: f64 = 0.1;
/// Standard deviation of the per-change value-offset increment.
pub const DEFAULT_OFFSET_SEVERITY: f64 = 5.0;

impl DynamicProblem {
    /// Draws the initial environment: optimum uniform within bounds and, for
    /// rotated families, a Haar-random orientation. Severities default to
    /// [`DEFAULT_SHIFT_FRACTION`] of the bound width and
    /// [`DEFAULT_OFFSET_SEVERITY`].
    pub fn init(id: ProblemId, dim: usize, rng: &mut impl Rng) -> Result<Self, BenchError> {
        let half = id.half_width();
        Self::init_with(
            id,
            dim,
            DEFAULT_SHIFT_FRACTION * 2.0 * half,
            DEFAULT_OFFSET_SEVERITY,
            rng,
        )
    }

    /// As [`DynamicProblem::init`] with explicit severities. `shift_severity`
    /// is the absolute step length of the optimum per change;
    /// `offset_severity` scales the Gaussian value-offset increments.
    pub fn init_with(
        id: ProblemId,
        dim: usize,
        shift_severity: f64,
        offset_severity: f64,
        rng: &mut impl Rng,
    ) -> Result<Self, BenchError> {
        if dim == 0 {
            return Err(BenchError::ZeroDimension);
        }
        let bounds = Bounds::symmetric(dim, id.half_width());
        let optimum: Vec<f64> = (0..dim)
            .map(|d| rng.random_range(bounds.lower()[d]..=bounds.upper()[d]))
            .collect();
        let rotation = id.rotated().then(|| random_rotation(dim, rng));
        Ok(Self {
            id,
            dim,
            bounds,
            env_index: 0,
            optimum,
            value_offset: id.initial_value_offset(),
            rotation,
            shift_severity,
            offset_severity,
            evals: Cell::new(0),
        })
    }

    /// Diagnostic constructor pinning the optimum and value offset, with an
    /// identity orientation. Useful for tests and for reproducing single
    /// environments.
    pub fn with_initial_state(
        id: ProblemId,
        dim: usize,
        optimum: Vec<f64>,
        value_offset: f64,
    ) -> Result<Self, BenchError> {
        if dim == 0 {
            return Err(BenchError::ZeroDimension);
        }
        let bounds = Bounds::symmetric(dim, id.half_width());
        if !bounds.contains(&optimum) {
            return Err(BenchError::OptimumOutOfBounds);
        }
        Ok(Self {
            id,
            dim,
            bounds,
            env_index: 0,
            optimum,
            value_offset,
            rotation: None,
            shift_severity: DEFAULT_SHIFT_FRACTION * 2.0 * id.half_width(),
            offset_severity: DEFAULT_OFFSET_SEVERITY,
            evals: Cell::new(0),
        })
    }

    pub fn id(&self) -> ProblemId {
        self.id
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    pub fn env_index(&self) -> usize {
        self.env_index
    }

    pub fn optimum_shift(&self) -> &[f64] {
        &self.optimum
    }

    pub fn value_offset(&self) -> f64 {
        self.value_offset
    }

    /// Total number of true-objective evaluations performed by this instance
    /// and its ancestors (the counter carries across `advance_environment`).
    pub fn true_evaluations(&self) -> u64 {
        self.evals.get()
    }

    /// The ground-truth objective. Counts one evaluation per successful call.
    pub fn evaluate_true(&self, x: &[f64]) -> Result<f64, BenchError> {
        if !self.bounds.contains(x) {
            return Err(BenchError::OutOfBounds { x: x.to_vec() });
        }
        self.evals.set(self.evals.get() + 1);
        let centered: Vec<f64> = x.iter().zip(&self.optimum).map(|(&v, &o)| v - o).collect();
        let z = match &self.rotation {
            Some(rot) => {
                let v = rot * DMatrix::from_column_slice(self.dim, 1, &centered);
                v.as_slice().to_vec()
            }
            None => centered,
        };
        Ok(self.id.base_value(&z) + self.value_offset)
    }

    /// Produces the next environment: the optimum takes a random step of
    /// length `shift_severity` (clamped back into bounds), the value offset
    /// takes a Gaussian step, and rotated families draw a fresh orientation.
    /// The evaluation counter carries over.
    pub fn advance_environment(&self, rng: &mut impl Rng) -> Self {
        let direction = random_unit_vector(self.dim, rng);
        let mut optimum: Vec<f64> = self
            .optimum
            .iter()
            .zip(&direction)
            .map(|(&o, &u)| o + self.shift_severity * u)
            .collect();
        self.bounds.clamp(&mut optimum);

        let offset_step: f64 = StandardNormal.sample(rng);
        let value_offset = self.value_offset + self.offset_severity * offset_step;

        let rotation = self.id.rotated().then(|| random_rotation(self.dim, rng));

        Self {
            id: self.id,
            dim: self.dim,
            bounds: self.bounds.clone(),
            env_index: self.env_index + 1,
            optimum,
            value_offset,
            rotation,
            shift_severity: self.shift_severity,
            offset_severity: self.offset_severity,
            evals: self.evals.clone(),
        }
    }
}

fn random_unit_vector(dim: usize, rng: &mut impl Rng) -> Vec<f64> {
    let mut v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        for x in &mut v {
            *x /= norm;
        }
    } else {
        v[0] = 1.0;
    }
    v
}

/// Haar-distributed rotation: QR of a Gaussian matrix with the sign of the
/// R diagonal absorbed into Q.
fn random_rotation(dim: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    let mut entries: Vec<f64> = Vec::with_capacity(dim * dim);
    for _ in 0..dim * dim {
        entries.push(StandardNormal.sample(rng));
    }
    let m = DMatrix::from_row_slice(dim, dim, &entries);
    let qr = m.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..dim {
        if r[(j, j)] < 0.0 {
            for i in 0..dim {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    q
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum SamplingMethod {
    #[serde(rename = "lhs", alias = "latin_hypercube")]
    LatinHypercube,
    #[serde(rename = "uniform")]
    Uniform,
}

/// How many offline samples to draw per environment and how.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SamplingPlan {
    pub points_per_env: usize,
    pub method: SamplingMethod,
}

impl SamplingPlan {
    /// The standard budget: `3 * dim` Latin hypercube points.
    pub fn for_dim(dim: usize) -> Self {
        Self {
            points_per_env: 3 * dim,
            method: SamplingMethod::LatinHypercube,
        }
    }
}

/// Latin hypercube sample: per dimension the `n` points occupy the `n`
/// equal-width strata exactly once, with uniform jitter inside each stratum
/// and an independent stratum permutation per dimension.
pub fn latin_hypercube(n: usize, bounds: &Bounds, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    use rand::seq::SliceRandom;
    let dim = bounds.dim();
    let mut points = vec![vec![0.0f64; dim]; n];
    let mut strata: Vec<usize> = (0..n).collect();
    for d in 0..dim {
        strata.shuffle(rng);
        let (lo, hi) = (bounds.lower()[d], bounds.upper()[d]);
        let step = (hi - lo) / n as f64;
        for (i, point) in points.iter_mut().enumerate() {
            let jitter: f64 = rng.random();
            point[d] = lo + (strata[i] as f64 + jitter) * step;
        }
    }
    points
}

/// Uniform i.i.d. sample within bounds.
pub fn uniform_sample(n: usize, bounds: &Bounds, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            (0..bounds.dim())
                .map(|d| rng.random_range(bounds.lower()[d]..=bounds.upper()[d]))
                .collect()
        })
        .collect()
}

/// Draws one environment's offline chunk: sample locations per the plan,
/// each scored once by the true objective.
pub fn sample_chunk(
    problem: &DynamicProblem,
    plan: &SamplingPlan,
    rng: &mut impl Rng,
) -> Result<DataChunk, BenchError> {
    let xs = match plan.method {
        SamplingMethod::LatinHypercube => latin_hypercube(plan.points_per_env, problem.bounds(), rng),
        SamplingMethod::Uniform => uniform_sample(plan.points_per_env, problem.bounds(), rng),
    };
    let mut ys = Vec::with_capacity(xs.len());
    for x in &xs {
        ys.push(problem.evaluate_true(x)?);
    }
    Ok(DataChunk::new(
        problem.env_index(),
        xs,
        ys,
        problem.bounds().clone(),
    )?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn value_at_optimum_is_the_offset_for_every_family() {
        for id in ProblemId::ALL {
            let p = DynamicProblem::with_initial_state(id, 6, vec![0.5; 6], 3.25).unwrap();
            let v = p.evaluate_true(&vec![0.5; 6]).unwrap();
            assert_relative_eq!(v, 3.25, epsilon = 1e-9);
        }
    }

    #[test]
    fn sphere_hand_computed() {
        let p = DynamicProblem::with_initial_state(ProblemId::F1, 5, vec![0.0; 5], 0.0).unwrap();
        let v = p.evaluate_true(&[1.0, 1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(v, 2.0);
    }

    #[test]
    fn evaluation_is_deterministic() {
        let mut r = rng(5);
        let p = DynamicProblem::init(ProblemId::F5, 4, &mut r).unwrap();
        let x = vec![1.0, -2.0, 3.0, -4.0];
        assert_eq!(p.evaluate_true(&x).unwrap(), p.evaluate_true(&x).unwrap());
    }

    #[test]
    fn out_of_bounds_point_is_rejected() {
        let p = DynamicProblem::with_initial_state(ProblemId::F2, 2, vec![0.0, 0.0], 0.0).unwrap();
        assert!(matches!(
            p.evaluate_true(&[100.0, 0.0]),
            Err(BenchError::OutOfBounds { .. })
        ));
    }

    #[test]
    fn zero_severity_keeps_state_fixed() {
        let mut r = rng(11);
        let p = DynamicProblem::init_with(ProblemId::F1, 3, 0.0, 0.0, &mut r).unwrap();
        let next = p.advance_environment(&mut r);
        assert_eq!(next.env_index(), 1);
        assert_eq!(next.optimum_shift(), p.optimum_shift());
        assert_eq!(next.value_offset(), p.value_offset());
    }

    #[test]
    fn optimum_step_length_is_bounded_by_severity() {
        let mut r = rng(13);
        // pin the optimum at the center so clamping cannot shorten the step
        let mut p = DynamicProblem::with_initial_state(ProblemId::F1, 8, vec![0.0; 8], 0.0).unwrap();
        p.shift_severity = 7.0;
        let next = p.advance_environment(&mut r);
        let step: f64 = next
            .optimum_shift()
            .iter()
            .zip(p.optimum_shift())
            .map(|(&a, &b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        assert!(step <= 7.0 * (1.0 + 1e-12));
        assert_relative_eq!(step, 7.0, max_relative = 1e-9);
        assert!(next.bounds().contains(next.optimum_shift()));
    }

    #[test]
    fn trajectories_are_reproducible() {
        let run = |seed: u64| {
            let mut r = rng(seed);
            let mut p = DynamicProblem::init(ProblemId::F3, 5, &mut r).unwrap();
            let mut states = Vec::new();
            for _ in 0..50 {
                states.push((p.optimum_shift().to_vec(), p.value_offset()));
                p = p.advance_environment(&mut r);
            }
            states
        };
        assert_eq!(run(99), run(99));
    }

    #[test]
    fn rotation_is_orthogonal() {
        let rot = random_rotation(6, &mut rng(17));
        let should_be_identity = &rot * rot.transpose();
        for i in 0..6 {
            for j in 0..6 {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert_relative_eq!(should_be_identity[(i, j)], expected, epsilon = 1e-10);
            }
        }
        assert_relative_eq!(rot.determinant(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn rotation_preserves_value_at_optimum() {
        let mut r = rng(23);
        let p = DynamicProblem::init(ProblemId::F4, 5, &mut r).unwrap();
        let o = p.optimum_shift().to_vec();
        let v = p.evaluate_true(&o).unwrap();
        assert_relative_eq!(v, p.value_offset(), epsilon = 1e-9);
    }

    #[test]
    fn lhs_fills_each_stratum_once() {
        let bounds = Bounds::new(vec![0.0], vec![1.0]).unwrap();
        let points = latin_hypercube(4, &bounds, &mut rng(31));
        let mut sorted: Vec<f64> = points.iter().map(|p| p[0]).collect();
        sorted.sort_by(f64::total_cmp);
        for (i, v) in sorted.iter().enumerate() {
            let lo = i as f64 * 0.25;
            assert!(*v >= lo && *v < lo + 0.25, "sample {v} outside stratum {i}");
        }
    }

    #[test]
    fn lhs_single_point_is_in_bounds() {
        let bounds = Bounds::new(vec![-3.0], vec![5.0]).unwrap();
        let points = latin_hypercube(1, &bounds, &mut rng(37));
        assert_eq!(points.len(), 1);
        assert!(bounds.contains(&points[0]));
    }

    #[test]
    fn lhs_projections_are_stratum_permutations() {
        let bounds = Bounds::new(vec![0.0, -2.0], vec![10.0, 2.0]).unwrap();
        let n = 10;
        let points = latin_hypercube(n, &bounds, &mut rng(41));
        for d in 0..2 {
            let mut histogram = vec![0usize; n];
            let (lo, hi) = (bounds.lower()[d], bounds.upper()[d]);
            for p in &points {
                let stratum = (((p[d] - lo) / (hi - lo)) * n as f64).floor() as usize;
                histogram[stratum.min(n - 1)] += 1;
            }
            assert!(histogram.iter().all(|&c| c == 1), "axis {d}: {histogram:?}");
        }
    }

    #[test]
    fn chunk_has_three_d_points() {
        let mut r = rng(43);
        let p = DynamicProblem::init(ProblemId::F1, 10, &mut r).unwrap();
        let chunk = sample_chunk(&p, &SamplingPlan::for_dim(10), &mut r).unwrap();
        assert_eq!(chunk.len(), 30);
        assert!(chunk.ys().iter().all(|y| y.is_finite()));
        assert_eq!(chunk.env_index(), 0);
    }

    #[test]
    fn sampling_is_deterministic() {
        let sample = |seed| {
            let mut r = rng(seed);
            let p = DynamicProblem::init(ProblemId::F2, 4, &mut r).unwrap();
            sample_chunk(&p, &SamplingPlan::for_dim(4), &mut r).unwrap()
        };
        assert_eq!(sample(47), sample(47));
    }

    #[test]
    fn evaluation_counter_tracks_chunk_and_scoring() {
        let mut r = rng(53);
        let p = DynamicProblem::init(ProblemId::F1, 3, &mut r).unwrap();
        assert_eq!(p.true_evaluations(), 0);
        let _ = sample_chunk(&p, &SamplingPlan::for_dim(3), &mut r).unwrap();
        assert_eq!(p.true_evaluations(), 9);
        let _ = p.evaluate_true(&[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(p.true_evaluations(), 10);
        // counter carries across environment changes
        let next = p.advance_environment(&mut r);
        assert_eq!(next.true_evaluations(), 10);
    }

    #[test]
    fn problem_ids_round_trip_through_strings() {
        for id in ProblemId::ALL {
            assert_eq!(id.as_str().parse::<ProblemId>().unwrap(), id);
        }
        assert!("f9".parse::<ProblemId>().is_err());
    }
}
