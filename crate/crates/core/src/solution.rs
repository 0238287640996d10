//! Final-solution production: the one decision vector deployed per
//! environment.
//!
//! `Best` returns the member with minimal surrogate fitness. `TopKAverage`
//! averages the decision vectors of the best `ceil(fraction * np)` members,
//! smoothing per-member surrogate error at the cost of possibly landing
//! between basins on strongly multimodal surrogates.

use crate::de::Population;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolutionError {
    #[error("population is empty")]
    EmptyPopulation,
    #[error("fraction must lie in (0, 1], got {0}")]
    FractionOutOfRange(f64),
    #[error("population fitness contains non-finite values; evaluate before producing a solution")]
    UnevaluatedPopulation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FinalMode {
    Best,
    TopKAverage,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FinalSolution {
    pub x: Vec<f64>,
    pub surrogate_value: f64,
    pub mode: FinalMode,
}

/// Number of elites selected by `TopKAverage`: `ceil(fraction * np)`, at
/// least 1. Products within 1e-9 of an integer snap to it first, so exact
/// fractions like `1/np` are immune to floating-point round-up.
pub fn top_fraction_count(np: usize, fraction: f64) -> usize {
    let product = fraction * np as f64;
    let nearest = product.round();
    let k = if (product - nearest).abs() < 1e-9 {
        nearest
    } else {
        product.ceil()
    };
    (k as usize).clamp(1, np)
}

/// Produces the environment's final solution from an evaluated population.
///
/// Ties in fitness resolve toward the lower member index. For
/// `TopKAverage`, `surrogate_value` is the supplied surrogate evaluated at
/// the averaged vector when available, otherwise the mean of the selected
/// members' fitness values.
pub fn produce_final(
    pop: &Population,
    mode: FinalMode,
    fraction: f64,
    surrogate: Option<&dyn Fn(&[f64]) -> f64>,
) -> Result<FinalSolution, SolutionError> {
    if pop.is_empty() {
        return Err(SolutionError::EmptyPopulation);
    }
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(SolutionError::FractionOutOfRange(fraction));
    }
    if pop.members.iter().any(|m| !m.fitness.is_finite()) {
        return Err(SolutionError::UnevaluatedPopulation);
    }

    match mode {
        FinalMode::Best => {
            let best = pop.best();
            Ok(FinalSolution {
                x: best.x.clone(),
                surrogate_value: best.fitness,
                mode,
            })
        }
        FinalMode::TopKAverage => {
            let k = top_fraction_count(pop.len(), fraction);
            let mut order: Vec<usize> = (0..pop.len()).collect();
            order.sort_by(|&a, &b| {
                pop.members[a]
                    .fitness
                    .total_cmp(&pop.members[b].fitness)
                    .then(a.cmp(&b))
            });
            let elite = &order[..k];

            let dim = pop.members[0].x.len();
            let mut mean_x = vec![0.0f64; dim];
            for &i in elite {
                for (acc, &v) in mean_x.iter_mut().zip(&pop.members[i].x) {
                    *acc += v;
                }
            }
            for v in &mut mean_x {
                *v /= k as f64;
            }

            let surrogate_value = match surrogate {
                Some(f) => f(&mean_x),
                None => elite.iter().map(|&i| pop.members[i].fitness).sum::<f64>() / k as f64,
            };
            Ok(FinalSolution {
                x: mean_x,
                surrogate_value,
                mode,
            })
        }
    }
}
