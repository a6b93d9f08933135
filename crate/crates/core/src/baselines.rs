//! Permutation sampling (ApproShapley): average marginal contributions along
//! uniformly random player orderings.

use crate::coalition::Coalition;
use crate::error::{Error, Result};
use crate::game::{BudgetedGame, Game, ShapleyVector};
use crate::sampling::{sample_permutation, seeded_rng, Rng};

/// Accumulated marginal contributions per player.
#[derive(Debug, Clone, PartialEq)]
pub struct PermutationEstimator {
    pub sums: Vec<f64>,
    pub counts: Vec<u64>,
}

impl PermutationEstimator {
    pub fn new(n: usize) -> Self {
        Self {
            sums: vec![0.0; n],
            counts: vec![0; n],
        }
    }

    /// Mean marginal per player; players never credited get 0.
    pub fn shapley(&self) -> Result<ShapleyVector> {
        ShapleyVector::new(
            self.sums
                .iter()
                .zip(&self.counts)
                .map(|(&s, &c)| if c == 0 { 0.0 } else { s / c as f64 })
                .collect(),
        )
    }
}

pub fn approshapley_min_budget(n: usize) -> u64 {
    n as u64 + 1
}

#[derive(Debug, Clone)]
pub struct ApproShapleyOutput {
    pub shapley: ShapleyVector,
    pub estimator: PermutationEstimator,
    pub complete_permutations: u64,
}

/// Walks the prefixes of random permutations, one evaluation per nonempty
/// prefix, until `budget` evaluations are spent. The last permutation may be
/// cut short; its completed marginals are kept.
pub fn approshapley<G: Game>(
    game: &mut BudgetedGame<G>,
    budget: u64,
    rng: &mut Rng,
) -> Result<ApproShapleyOutput> {
    let n = game.n();
    let minimum = approshapley_min_budget(n);
    if budget < minimum {
        return Err(Error::BudgetTooSmall { budget, minimum });
    }
    let mut est = PermutationEstimator::new(n);
    let mut t = 0u64;
    let mut complete = 0;
    'outer: while t < budget {
        let order = sample_permutation(rng, n);
        let mut prefix = Coalition::empty(n);
        let mut previous = 0.0;
        for &player in &order {
            if t == budget {
                break 'outer;
            }
            prefix = prefix.with(player);
            let v = game.evaluate(prefix)?;
            t += 1;
            est.sums[player] += v - previous;
            est.counts[player] += 1;
            previous = v;
        }
        complete += 1;
    }
    Ok(ApproShapleyOutput {
        shapley: est.shapley()?,
        estimator: est,
        complete_permutations: complete,
    })
}

pub fn approshapley_run<G: Game>(game: &G, budget: u64, seed: u64) -> Result<ShapleyVector> {
    let mut metered = BudgetedGame::with_limit(game, budget);
    Ok(approshapley(&mut metered, budget, &mut seeded_rng(seed))?.shapley)
}
