//! Differential evolution (rand/1 mutation, binomial crossover, greedy
//! selection) over a fixed surrogate.
//!
//! Generations are synchronous: every trial in a generation is built and
//! evaluated against the generation-start population, then replacements are
//! applied in index order. Out-of-bounds trial coordinates are reflected
//! back into the box. Trials replace their targets on ties, which lets the
//! population drift across plateaus.

use crate::data::Bounds;
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DeError {
    #[error("population size must be at least 4 for rand/1, got {0}")]
    PopulationTooSmall(usize),
    #[error("invalid DE parameter: {0}")]
    InvalidParams(&'static str),
    #[error("carryover initialization requires a previous population")]
    MissingCarryover,
    #[error("carryover population has {got} members, expected {expected}")]
    CarryoverSizeMismatch { got: usize, expected: usize },
    #[error("vectors have dimensions {a} and {b}")]
    DimensionMismatch { a: usize, b: usize },
    #[error("surrogate returned non-finite value {value} at {x:?}")]
    NonFiniteFitness { value: f64, x: Vec<f64> },
}

/// A candidate solution with its surrogate fitness (minimization).
#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub x: Vec<f64>,
    pub fitness: f64,
}

/// DE population. `generation` counts optimizer steps since initialization.
#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    pub members: Vec<Individual>,
    pub generation: usize,
}

impl Population {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Index of the member with minimal fitness, lowest index on ties.
    pub fn best_index(&self) -> usize {
        let mut best = 0;
        for i in 1..self.members.len() {
            if self.members[i].fitness < self.members[best].fitness {
                best = i;
            }
        }
        best
    }

    pub fn best(&self) -> &Individual {
        &self.members[self.best_index()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundHandling {
    /// Fold violating coordinates back across the violated bound until they
    /// land inside the box.
    Reflect,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeParams {
    pub np: usize,
    pub f: f64,
    pub cr: f64,
    pub generations: usize,
    pub bound_handling: BoundHandling,
}

impl DeParams {
    pub fn new(np: usize, f: f64, cr: f64, generations: usize) -> Result<Self, DeError> {
        let params = Self {
            np,
            f,
            cr,
            generations,
            bound_handling: BoundHandling::Reflect,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<(), DeError> {
        if self.np < 4 {
            return Err(DeError::PopulationTooSmall(self.np));
        }
        if !(self.f > 0.0 && self.f <= 2.0) {
            return Err(DeError::InvalidParams("f must lie in (0, 2]"));
        }
        if !(0.0..=1.0).contains(&self.cr) {
            return Err(DeError::InvalidParams("cr must lie in [0, 1]"));
        }
        if self.generations < 1 {
            return Err(DeError::InvalidParams("generations must be >= 1"));
        }
        Ok(())
    }
}

impl Default for DeParams {
    /// np=50, f=0.5, cr=0.9, 100 generations.
    fn default() -> Self {
        Self {
            np: 50,
            f: 0.5,
            cr: 0.9,
            generations: 100,
            bound_handling: BoundHandling::Reflect,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitStrategy {
    Random,
    /// Reuse the previous environment's final population; fitness is marked
    /// stale and recomputed against the new surrogate before generation 0.
    Carryover,
}

/// Builds the starting population. Random draws are uniform i.i.d. per
/// dimension within bounds; carryover deep-copies the previous members with
/// generation reset to 0 and fitness invalidated.
pub fn init_population(
    strategy: InitStrategy,
    bounds: &Bounds,
    np: usize,
    prev_final: Option<&Population>,
    rng: &mut impl Rng,
) -> Result<Population, DeError> {
    if np < 4 {
        return Err(DeError::PopulationTooSmall(np));
    }
    let members = match strategy {
        InitStrategy::Random => (0..np)
            .map(|_| {
                let x = (0..bounds.dim())
                    .map(|d| rng.random_range(bounds.lower()[d]..=bounds.upper()[d]))
                    .collect();
                Individual {
                    x,
                    fitness: f64::NAN,
                }
            })
            .collect(),
        InitStrategy::Carryover => {
            let prev = prev_final.ok_or(DeError::MissingCarryover)?;
            if prev.len() != np {
                return Err(DeError::CarryoverSizeMismatch {
                    got: prev.len(),
                    expected: np,
                });
            }
            prev.members
                .iter()
                .map(|m| Individual {
                    x: m.x.clone(),
                    fitness: f64::NAN,
                })
                .collect()
        }
    };
    Ok(Population {
        members,
        generation: 0,
    })
}

/// The rand/1 donor formula `v = base + f * (a - b)`.
pub fn rand1_donor(base: &[f64], a: &[f64], b: &[f64], f: f64) -> Vec<f64> {
    base.iter()
        .zip(a)
        .zip(b)
        .map(|((&x1, &x2), &x3)| x1 + f * (x2 - x3))
        .collect()
}

/// Draws three distinct members (all different from `target_idx`) and forms
/// the rand/1 donor. No bound handling is applied here.
pub fn mutate_rand1(
    pop: &Population,
    target_idx: usize,
    f: f64,
    rng: &mut impl Rng,
) -> Result<Vec<f64>, DeError> {
    let n = pop.len();
    if n < 4 {
        return Err(DeError::PopulationTooSmall(n));
    }
    let mut picks = [usize::MAX; 3];
    let mut filled = 0;
    while filled < 3 {
        let idx = rng.random_range(0..n);
        if idx != target_idx && !picks[..filled].contains(&idx) {
            picks[filled] = idx;
            filled += 1;
        }
    }
    Ok(rand1_donor(
        &pop.members[picks[0]].x,
        &pop.members[picks[1]].x,
        &pop.members[picks[2]].x,
        f,
    ))
}

/// Binomial crossover: each coordinate takes the donor with probability
/// `cr`, except one uniformly chosen coordinate that always does.
pub fn crossover_binomial(
    target: &[f64],
    donor: &[f64],
    cr: f64,
    rng: &mut impl Rng,
) -> Result<Vec<f64>, DeError> {
    if target.len() != donor.len() {
        return Err(DeError::DimensionMismatch {
            a: target.len(),
            b: donor.len(),
        });
    }
    let dim = target.len();
    let j_rand = rng.random_range(0..dim);
    Ok((0..dim)
        .map(|j| {
            if j == j_rand || rng.random::<f64>() < cr {
                donor[j]
            } else {
                target[j]
            }
        })
        .collect())
}

/// Folds each out-of-range coordinate back across the violated bound until
/// it lands inside. Donor overshoot is bounded by `f * width <= 2 * width`,
/// so this terminates after at most a few folds.
pub fn reflect_into_bounds(x: &mut [f64], bounds: &Bounds) {
    for (j, v) in x.iter_mut().enumerate() {
        let (lo, hi) = (bounds.lower()[j], bounds.upper()[j]);
        while *v < lo || *v > hi {
            if *v < lo {
                *v = lo + (lo - *v);
            } else {
                *v = hi - (*v - hi);
            }
        }
    }
}

/// Runs differential evolution against a fixed surrogate and returns the
/// final population (member order preserved by index).
pub fn optimize<S>(
    surrogate: S,
    init: Population,
    params: &DeParams,
    bounds: &Bounds,
    rng: &mut impl Rng,
) -> Result<Population, DeError>
where
    S: Fn(&[f64]) -> f64,
{
    optimize_observed(surrogate, init, params, bounds, rng, |_, _| {})
}

/// Like [`optimize`], invoking `observer(generation, population)` after the
/// initial evaluation (generation 0) and after every completed generation.
pub fn optimize_observed<S, O>(
    surrogate: S,
    mut pop: Population,
    params: &DeParams,
    bounds: &Bounds,
    rng: &mut impl Rng,
    mut observer: O,
) -> Result<Population, DeError>
where
    S: Fn(&[f64]) -> f64,
    O: FnMut(usize, &Population),
{
    params.validate()?;
    if pop.len() < 4 {
        return Err(DeError::PopulationTooSmall(pop.len()));
    }

    let eval = |x: &[f64]| -> Result<f64, DeError> {
        let value = surrogate(x);
        if !value.is_finite() {
            return Err(DeError::NonFiniteFitness {
                value,
                x: x.to_vec(),
            });
        }
        Ok(value)
    };

    // (re)evaluate everything: carryover fitness is stale by contract
    for member in &mut pop.members {
        member.fitness = eval(&member.x)?;
    }
    pop.generation = 0;
    observer(0, &pop);

    let np = pop.len();
    let mut pending: Vec<(usize, Vec<f64>, f64)> = Vec::with_capacity(np);
    for gen in 1..=params.generations {
        pending.clear();
        for i in 0..np {
            let donor = mutate_rand1(&pop, i, params.f, rng)?;
            let mut trial = crossover_binomial(&pop.members[i].x, &donor, params.cr, rng)?;
            match params.bound_handling {
                BoundHandling::Reflect => reflect_into_bounds(&mut trial, bounds),
            }
            let trial_fitness = eval(&trial)?;
            if trial_fitness <= pop.members[i].fitness {
                pending.push((i, trial, trial_fitness));
            }
        }
        for (i, x, fitness) in pending.drain(..) {
            pop.members[i] = Individual { x, fitness };
        }
        pop.generation = gen;
        observer(gen, &pop);
    }
    Ok(pop)
}
