//! Stratified SVARM: the signed Shapley values are split into one stratum
//! per coalition size, so every sampled coalition updates exactly one
//! stratum mean of every player.
//!
//! Also home of the variant that samples coalitions without replacement and
//! skips the warm-up ([`stratified_svarm_plus`]).

use std::collections::HashSet;

use rand::Rng as _;

use crate::coalition::Coalition;
use crate::error::{Error, Result};
use crate::exact::exact_shapley_budgeted;
use crate::game::{binomial, binomial_u128, BudgetedGame, Game, ShapleyVector};
use crate::sampling::{
    build_ptilde, sample_permutation, sample_subset_of, seeded_rng, uniform_strata_sizes,
    uniform_subset, Rng, SizeDistribution,
};

/// Which law the sampled coalition sizes `2..=n-2` follow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SizeLaw {
    /// The tailored law that weights every stratum equally in the variance bound.
    #[default]
    Tailored,
    Uniform,
}

impl SizeLaw {
    pub fn build(self, n: usize) -> Result<SizeDistribution> {
        match self {
            SizeLaw::Tailored => build_ptilde(n),
            SizeLaw::Uniform => uniform_strata_sizes(n),
        }
    }
}

/// Per-player, per-size running means and counters. Stratum `(i, l)` on the
/// positive side holds coalitions `S ∪ {i}` with `|S| = l`; on the negative
/// side coalitions `S` with `|S| = l` and `i ∉ S`.
///
/// The negative stratum of size 0 only contains `∅`, so it starts out as
/// known with mean 0 and count 1.
#[derive(Debug, Clone, PartialEq)]
pub struct StratumTable {
    n: usize,
    phi_plus: Vec<f64>,
    phi_minus: Vec<f64>,
    c_plus: Vec<u64>,
    c_minus: Vec<u64>,
}

impl StratumTable {
    pub fn new(n: usize) -> Self {
        let mut c_minus = vec![0; n * n];
        for i in 0..n {
            c_minus[i * n] = 1;
        }
        Self {
            n,
            phi_plus: vec![0.0; n * n],
            phi_minus: vec![0.0; n * n],
            c_plus: vec![0; n * n],
            c_minus,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    fn idx(&self, player: usize, stratum: usize) -> usize {
        debug_assert!(player < self.n && stratum < self.n);
        player * self.n + stratum
    }

    pub fn phi_plus(&self, player: usize, stratum: usize) -> f64 {
        self.phi_plus[self.idx(player, stratum)]
    }

    pub fn phi_minus(&self, player: usize, stratum: usize) -> f64 {
        self.phi_minus[self.idx(player, stratum)]
    }

    pub fn c_plus(&self, player: usize, stratum: usize) -> u64 {
        self.c_plus[self.idx(player, stratum)]
    }

    pub fn c_minus(&self, player: usize, stratum: usize) -> u64 {
        self.c_minus[self.idx(player, stratum)]
    }

    /// Feeds `v = ν(A)` into stratum `(i, |A|-1)⁺` of every `i ∈ A` and
    /// stratum `(i, |A|)⁻` of every `i ∉ A`.
    pub fn update(&mut self, coalition: Coalition, value: f64) {
        let size = coalition.size();
        debug_assert!(size >= 1 && coalition.n() == self.n);
        for i in 0..self.n {
            let (mean, count) = if coalition.contains(i) {
                let k = self.idx(i, size - 1);
                (&mut self.phi_plus[k], &mut self.c_plus[k])
            } else {
                let k = self.idx(i, size);
                (&mut self.phi_minus[k], &mut self.c_minus[k])
            };
            *count += 1;
            *mean += (value - *mean) / *count as f64;
        }
    }

    fn seed_plus(&mut self, player: usize, stratum: usize, value: f64) {
        let k = self.idx(player, stratum);
        self.phi_plus[k] = value;
        self.c_plus[k] = 1;
    }

    fn seed_minus(&mut self, player: usize, stratum: usize, value: f64) {
        let k = self.idx(player, stratum);
        self.phi_minus[k] = value;
        self.c_minus[k] = 1;
    }

    /// `φ̂_i = (1/n) Σ_l (φ̂⁺_{i,l} - φ̂⁻_{i,l})`.
    pub fn shapley(&self) -> Result<ShapleyVector> {
        let n = self.n;
        ShapleyVector::new(
            (0..n)
                .map(|i| {
                    let row = i * n..(i + 1) * n;
                    let plus: f64 = self.phi_plus[row.clone()].iter().sum();
                    let minus: f64 = self.phi_minus[row].iter().sum();
                    (plus - minus) / n as f64
                })
                .collect(),
        )
    }

    /// Like [`shapley`](Self::shapley), but each signed sum is averaged only
    /// over the strata that received at least one sample.
    pub fn shapley_observed(&self) -> Result<ShapleyVector> {
        let n = self.n;
        let side = |means: &[f64], counts: &[u64]| -> f64 {
            let (sum, k) = means
                .iter()
                .zip(counts)
                .filter(|(_, &c)| c > 0)
                .fold((0.0, 0usize), |(s, k), (m, _)| (s + m, k + 1));
            if k == 0 {
                0.0
            } else {
                sum / k as f64
            }
        };
        ShapleyVector::new(
            (0..n)
                .map(|i| {
                    let row = i * n..(i + 1) * n;
                    side(&self.phi_plus[row.clone()], &self.c_plus[row.clone()])
                        - side(&self.phi_minus[row.clone()], &self.c_minus[row])
                })
                .collect(),
        )
    }
}

/// Evaluations made by one warm-up pass: `Σ_{s=2}^{n-2} ⌈n/s⌉`.
pub fn warmup_budget(n: usize) -> u64 {
    (2..n.saturating_sub(1)).map(|s| n.div_ceil(s) as u64).sum()
}

/// Evaluations made by [`exact_calculation`].
pub fn exact_calculation_budget(n: usize) -> u64 {
    border_sizes(n).iter().map(|&s| binomial_u128(n, s) as u64).sum()
}

/// Smallest budget accepted by [`stratified_svarm`]: border strata plus both
/// warm-ups for `n >= 4`, full enumeration below.
pub fn stratified_min_budget(n: usize) -> u64 {
    if n <= 3 {
        (1u64 << n) - 1
    } else {
        2 * n as u64 + 1 + 2 * warmup_budget(n)
    }
}

/// Smallest budget accepted by [`stratified_svarm_plus`].
pub fn stratified_plus_min_budget(n: usize) -> u64 {
    if n <= 3 {
        (1u64 << n) - 1
    } else {
        2 * n as u64 + 1
    }
}

fn border_sizes(n: usize) -> Vec<usize> {
    let mut sizes = vec![1, n.saturating_sub(1), n];
    sizes.retain(|&s| s >= 1);
    sizes.dedup();
    sizes
}

/// Evaluates every coalition of size `1`, `n-1` and `n` and feeds it through
/// [`StratumTable::update`]. Afterwards the strata `(i,0)⁺, (i,n-2)⁺,
/// (i,n-1)⁺, (i,1)⁻, (i,n-1)⁻` are exact. Costs `2n + 1` evaluations.
pub fn exact_calculation<G: Game>(game: &mut BudgetedGame<G>, table: &mut StratumTable) -> Result<()> {
    let n = game.n();
    for size in border_sizes(n) {
        for a in Coalition::all_of_size(n, size) {
            let v = game.evaluate(a)?;
            table.update(a, v);
        }
    }
    Ok(())
}

/// Slices a random permutation into blocks of size `s` for every `s` in
/// `2..=n-2`; a trailing short block is padded with uniformly drawn other
/// players. Calls `emit(s, players, coalition)` with the players whose
/// strata get seeded and the (possibly padded) coalition to evaluate.
fn warmup_blocks(
    n: usize,
    rng: &mut Rng,
    mut emit: impl FnMut(usize, &[usize], Coalition) -> Result<()>,
) -> Result<()> {
    for s in 2..n.saturating_sub(1) {
        let pi = sample_permutation(rng, n);
        let full = n / s;
        for k in 0..full {
            let block = &pi[k * s..(k + 1) * s];
            let a = Coalition::from_players(n, block.iter().copied())?;
            emit(s, block, a)?;
        }
        let rest = n % s;
        if rest != 0 {
            let leftover = &pi[n - rest..];
            let pool = &pi[..n - rest];
            let pad = sample_subset_of(rng, n, pool, s - rest)?;
            let a = Coalition::from_players(n, leftover.iter().copied())?.union(pad);
            emit(s, leftover, a)?;
        }
    }
    Ok(())
}

/// Seeds stratum `(i, s-1)⁺` of every player with one coalition of size `s`
/// containing it, for `s` in `2..=n-2`.
pub fn warmup_positive<G: Game>(
    game: &mut BudgetedGame<G>,
    rng: &mut Rng,
    table: &mut StratumTable,
) -> Result<()> {
    let n = game.n();
    warmup_blocks(n, rng, |s, players, a| {
        let v = game.evaluate(a)?;
        for &i in players {
            table.seed_plus(i, s - 1, v);
        }
        Ok(())
    })
}

/// Seeds stratum `(i, n-s)⁻` of every player with the complement of one
/// coalition of size `s` containing it, for `s` in `2..=n-2`.
pub fn warmup_negative<G: Game>(
    game: &mut BudgetedGame<G>,
    rng: &mut Rng,
    table: &mut StratumTable,
) -> Result<()> {
    let n = game.n();
    warmup_blocks(n, rng, |s, players, a| {
        let v = game.evaluate(a.complement())?;
        for &i in players {
            table.seed_minus(i, n - s, v);
        }
        Ok(())
    })
}

#[derive(Debug, Clone)]
pub struct StratifiedOutput {
    pub shapley: ShapleyVector,
    /// `None` when the game was small enough to be solved exactly.
    pub table: Option<StratumTable>,
    /// Coalitions sampled in the main loop.
    pub samples: u64,
    /// Budget left over because every coalition had already been evaluated.
    pub unspent: u64,
}

fn exact_fallback<G: Game>(game: &mut BudgetedGame<G>, budget: u64) -> Result<StratifiedOutput> {
    let shapley = exact_shapley_budgeted(game)?;
    Ok(StratifiedOutput {
        shapley,
        table: None,
        samples: 0,
        unspent: budget - game.spent(),
    })
}

fn check_budget(budget: u64, minimum: u64) -> Result<()> {
    if budget < minimum {
        return Err(Error::BudgetTooSmall { budget, minimum });
    }
    Ok(())
}

/// Border strata, both warm-ups, then `budget - W` coalitions drawn as
/// "size from `law`, then uniform coalition of that size".
pub fn stratified_svarm<G: Game>(
    game: &mut BudgetedGame<G>,
    budget: u64,
    rng: &mut Rng,
    law: SizeLaw,
) -> Result<StratifiedOutput> {
    let n = game.n();
    check_budget(budget, stratified_min_budget(n))?;
    if n <= 3 {
        return exact_fallback(game, budget);
    }
    let sizes = law.build(n)?;
    let mut table = StratumTable::new(n);
    exact_calculation(game, &mut table)?;
    warmup_positive(game, rng, &mut table)?;
    warmup_negative(game, rng, &mut table)?;

    let mut t = stratified_min_budget(n);
    let mut samples = 0;
    while t < budget {
        let s = sizes.sample(rng);
        let a = uniform_subset(rng, n, s);
        let v = game.evaluate(a)?;
        table.update(a, v);
        t += 1;
        samples += 1;
    }
    Ok(StratifiedOutput {
        shapley: table.shapley()?,
        table: Some(table),
        samples,
        unspent: 0,
    })
}

pub fn stratified_svarm_run<G: Game>(game: &G, budget: u64, seed: u64, law: SizeLaw) -> Result<ShapleyVector> {
    let mut metered = BudgetedGame::with_limit(game, budget);
    Ok(stratified_svarm(&mut metered, budget, &mut seeded_rng(seed), law)?.shapley)
}

/// Unseen coalitions of one size. Draws by rejection against the seen set
/// until half the coalitions are used up, then switches to an explicit list
/// of the unseen ones.
#[derive(Debug, Clone)]
struct SizeUrn {
    size: usize,
    total: u128,
    remaining: u128,
    seen: HashSet<u128>,
    unseen: Option<Vec<u128>>,
}

impl SizeUrn {
    fn new(n: usize, size: usize) -> Self {
        let total = binomial_u128(n, size);
        Self {
            size,
            total,
            remaining: total,
            seen: HashSet::new(),
            unseen: None,
        }
    }

    fn draw(&mut self, rng: &mut Rng, n: usize) -> Coalition {
        debug_assert!(self.remaining > 0);
        if self.unseen.is_none() && self.remaining * 2 <= self.total {
            let seen = std::mem::take(&mut self.seen);
            self.unseen = Some(
                Coalition::all_of_size(n, self.size)
                    .map(|c| c.bits())
                    .filter(|b| !seen.contains(b))
                    .collect(),
            );
        }
        let bits = match self.unseen.as_mut() {
            Some(list) => {
                let k = rng.random_range(0..list.len());
                list.swap_remove(k)
            }
            None => loop {
                let c = uniform_subset(rng, n, self.size);
                if self.seen.insert(c.bits()) {
                    break c.bits();
                }
            },
        };
        self.remaining -= 1;
        Coalition::from_bits(n, bits).expect("drawn within n")
    }
}

/// Bookkeeping for sampling coalitions of sizes `2..=n-2` without
/// replacement, each coalition of size `s` carrying weight `P(s) / C(n, s)`
/// under the size law `P`. The first draw therefore follows `P` exactly, and
/// later draws drift toward sizes with more unseen coalitions left.
#[derive(Debug, Clone)]
pub struct WithoutReplacementState {
    n: usize,
    weights: Vec<f64>,
    urns: Vec<SizeUrn>,
}

impl WithoutReplacementState {
    pub fn new(n: usize, law: SizeLaw) -> Result<Self> {
        let sizes = law.build(n)?;
        Ok(Self {
            n,
            weights: (2..=n - 2).map(|s| sizes.prob(s) / binomial(n, s)).collect(),
            urns: (2..=n - 2).map(|s| SizeUrn::new(n, s)).collect(),
        })
    }

    pub fn remaining(&self, size: usize) -> u128 {
        self.urns[size - 2].remaining
    }

    pub fn exhausted(&self) -> bool {
        self.urns.iter().all(|u| u.remaining == 0)
    }

    fn masses(&self) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.urns)
            .map(|(w, u)| w * u.remaining as f64)
            .collect()
    }

    /// Current law of the next size draw: proportional to the total weight
    /// of the unseen coalitions of each size.
    pub fn size_law(&self) -> Vec<(usize, f64)> {
        let masses = self.masses();
        let total: f64 = masses.iter().sum();
        masses
            .iter()
            .enumerate()
            .map(|(k, m)| (k + 2, if total > 0.0 { m / total } else { 0.0 }))
            .collect()
    }

    /// Draws an unseen coalition: size first, then uniformly among the
    /// unseen coalitions of that size. `None` once everything is drawn.
    pub fn draw(&mut self, rng: &mut Rng) -> Option<Coalition> {
        let masses = self.masses();
        let total: f64 = masses.iter().sum();
        if total <= 0.0 {
            // only zero-weight sizes left
            let urn = self.urns.iter_mut().find(|u| u.remaining > 0)?;
            return Some(urn.draw(rng, self.n));
        }
        let u = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut pick = None;
        for (k, m) in masses.iter().enumerate() {
            if *m <= 0.0 {
                continue;
            }
            pick = Some(k);
            acc += m;
            if u < acc {
                break;
            }
        }
        let k = pick?;
        Some(self.urns[k].draw(rng, self.n))
    }
}

/// Border strata, then coalitions of sizes `2..=n-2` drawn without
/// replacement until the budget or the coalitions run out. Each signed sum
/// is averaged over the strata that received samples.
pub fn stratified_svarm_plus<G: Game>(
    game: &mut BudgetedGame<G>,
    budget: u64,
    rng: &mut Rng,
    law: SizeLaw,
) -> Result<StratifiedOutput> {
    let n = game.n();
    check_budget(budget, stratified_plus_min_budget(n))?;
    if n <= 3 {
        return exact_fallback(game, budget);
    }
    let mut table = StratumTable::new(n);
    exact_calculation(game, &mut table)?;
    let mut urns = WithoutReplacementState::new(n, law)?;

    let mut t = stratified_plus_min_budget(n);
    let mut samples = 0;
    while t < budget {
        let Some(a) = urns.draw(rng) else { break };
        let v = game.evaluate(a)?;
        table.update(a, v);
        t += 1;
        samples += 1;
    }
    Ok(StratifiedOutput {
        shapley: table.shapley_observed()?,
        table: Some(table),
        samples,
        unspent: budget - t,
    })
}

pub fn stratified_svarm_plus_run<G: Game>(
    game: &G,
    budget: u64,
    seed: u64,
    law: SizeLaw,
) -> Result<ShapleyVector> {
    let mut metered = BudgetedGame::with_limit(game, budget);
    Ok(stratified_svarm_plus(&mut metered, budget, &mut seeded_rng(seed), law)?.shapley)
}
