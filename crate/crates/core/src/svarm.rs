//! SVARM: estimates each player's positive and negative signed Shapley
//! values as plain sample means, sampling coalitions from `P⁺` and `P⁻` in
//! alternation so that one evaluation updates many players at once.

use crate::error::{Error, Result};
use crate::game::{BudgetedGame, Game, ShapleyVector};
use crate::sampling::{sample_pw, seeded_rng, Rng, SignedSampler};

/// Running means of `ν(S ∪ {i})` and `ν(S)` per player, with sample counts.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedEstimates {
    pub phi_plus: Vec<f64>,
    pub phi_minus: Vec<f64>,
    pub c_plus: Vec<u64>,
    pub c_minus: Vec<u64>,
}

impl SignedEstimates {
    pub fn new(n: usize) -> Self {
        Self {
            phi_plus: vec![0.0; n],
            phi_minus: vec![0.0; n],
            c_plus: vec![0; n],
            c_minus: vec![0; n],
        }
    }

    pub fn n(&self) -> usize {
        self.phi_plus.len()
    }

    #[inline]
    fn absorb(mean: &mut f64, count: &mut u64, value: f64) {
        *count += 1;
        *mean += (value - *mean) / *count as f64;
    }

    pub fn absorb_plus(&mut self, player: usize, value: f64) {
        Self::absorb(&mut self.phi_plus[player], &mut self.c_plus[player], value);
    }

    pub fn absorb_minus(&mut self, player: usize, value: f64) {
        Self::absorb(&mut self.phi_minus[player], &mut self.c_minus[player], value);
    }

    pub fn shapley(&self) -> Result<ShapleyVector> {
        ShapleyVector::new(
            self.phi_plus
                .iter()
                .zip(&self.phi_minus)
                .map(|(p, m)| p - m)
                .collect(),
        )
    }
}

/// Smallest budget SVARM accepts: the `2n` warm-up plus one sampled pair.
pub fn svarm_min_budget(n: usize) -> u64 {
    2 * n as u64 + 2
}

/// Gives every estimate one sample: for each player draw `A⁺, A⁻` from `P^w`
/// over the other players and record `ν(A⁺ ∪ {i})` and `ν(A⁻)`.
///
/// Charges at most `2n` evaluations (drawn empty sets are free).
pub fn svarm_warmup<G: Game>(
    game: &mut BudgetedGame<G>,
    rng: &mut Rng,
    est: &mut SignedEstimates,
) -> Result<()> {
    let n = game.n();
    for i in 0..n {
        let a_plus = sample_pw(rng, n, i)?;
        let a_minus = sample_pw(rng, n, i)?;
        est.phi_plus[i] = game.evaluate(a_plus.with(i))?;
        est.phi_minus[i] = game.evaluate(a_minus)?;
        est.c_plus[i] = 1;
        est.c_minus[i] = 1;
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct SvarmOutput {
    pub shapley: ShapleyVector,
    pub estimates: SignedEstimates,
    /// Main-loop iterations (sampled pairs).
    pub pairs: u64,
}

/// Runs warm-up and then samples pairs while `t + 2 <= budget`, where `t`
/// counts two tokens per pair regardless of free empty draws.
pub fn svarm<G: Game>(game: &mut BudgetedGame<G>, budget: u64, rng: &mut Rng) -> Result<SvarmOutput> {
    let n = game.n();
    let minimum = svarm_min_budget(n);
    if budget < minimum {
        return Err(Error::BudgetTooSmall { budget, minimum });
    }
    let sampler = SignedSampler::new(n)?;
    let mut est = SignedEstimates::new(n);
    svarm_warmup(game, rng, &mut est)?;

    let mut t = 2 * n as u64;
    let mut pairs = 0;
    while t + 2 <= budget {
        let a_plus = sampler.plus(rng);
        let a_minus = sampler.minus(rng);
        let v_plus = game.evaluate(a_plus)?;
        let v_minus = game.evaluate(a_minus)?;
        for i in a_plus.players() {
            est.absorb_plus(i, v_plus);
        }
        for i in a_minus.complement().players() {
            est.absorb_minus(i, v_minus);
        }
        t += 2;
        pairs += 1;
    }
    Ok(SvarmOutput {
        shapley: est.shapley()?,
        estimates: est,
        pairs,
    })
}

/// Convenience entry point: fresh budget meter and generator.
pub fn svarm_run<G: Game>(game: &G, budget: u64, seed: u64) -> Result<ShapleyVector> {
    let mut metered = BudgetedGame::with_limit(game, budget);
    let mut rng = seeded_rng(seed);
    Ok(svarm(&mut metered, budget, &mut rng)?.shapley)
}
