//! Ground truth by full enumeration of the powerset.

use crate::coalition::Coalition;
use crate::error::{Error, Result};
use crate::game::{marginal_weight, BudgetedGame, Game, ShapleyVector};

/// Default cap on `n` for [`exact_shapley`]; `2^25` evaluations.
pub const SHAPLEY_ENUMERATION_LIMIT: usize = 25;

/// Cap on `n` for stratum-level enumeration.
pub const STRATA_ENUMERATION_LIMIT: usize = 20;

fn check_limit(n: usize, limit: usize) -> Result<()> {
    if n > limit {
        return Err(Error::TooLarge { n, limit });
    }
    Ok(())
}

/// Exact Shapley values with the default enumeration guard.
pub fn exact_shapley<G: Game + ?Sized>(game: &G) -> Result<ShapleyVector> {
    exact_shapley_with_limit(game, SHAPLEY_ENUMERATION_LIMIT)
}

pub fn exact_shapley_with_limit<G: Game + ?Sized>(game: &G, limit: usize) -> Result<ShapleyVector> {
    check_limit(game.n(), limit)?;
    let mut budgeted = BudgetedGame::unlimited(game);
    exact_shapley_budgeted(&mut budgeted)
}

/// One pass over all nonempty coalitions: `ν(S)` is added with weight
/// `w(|S|-1)` to every member and subtracted with weight `w(|S|)` from every
/// non-member. Spends exactly `2^n - 1` evaluations.
pub fn exact_shapley_budgeted<G: Game>(game: &mut BudgetedGame<G>) -> Result<ShapleyVector> {
    let n = game.n();
    check_limit(n, 63)?;
    if n == 0 {
        return ShapleyVector::new(Vec::new());
    }
    let weights: Vec<f64> = (0..n).map(|s| marginal_weight(n, s)).collect::<Result<_>>()?;
    let mut phi = vec![0.0; n];
    for bits in 1u128..(1u128 << n) {
        let s = Coalition::from_bits(n, bits)?;
        let v = game.evaluate(s)?;
        let size = s.size();
        let plus = weights[size - 1] * v;
        let minus = if size < n { weights[size] * v } else { 0.0 };
        for (i, p) in phi.iter_mut().enumerate() {
            if bits >> i & 1 == 1 {
                *p += plus;
            } else {
                *p -= minus;
            }
        }
    }
    ShapleyVector::new(phi)
}

/// Exact stratum means `φ⁺_{i,l}` (coalitions `S ∪ {i}`, `|S| = l`) and
/// `φ⁻_{i,l}` (coalitions `S`, `|S| = l`, `i ∉ S`), indexed `[i][l]` with
/// `l` in `0..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactStrata {
    pub plus: Vec<Vec<f64>>,
    pub minus: Vec<Vec<f64>>,
    /// Shapley values from the two-sum accumulation of the same pass.
    pub shapley: ShapleyVector,
}

impl ExactStrata {
    pub fn n(&self) -> usize {
        self.plus.len()
    }

    /// `(1/n) Σ_l (φ⁺_{i,l} - φ⁻_{i,l})`.
    pub fn reconstruct(&self) -> Vec<f64> {
        let n = self.n() as f64;
        self.plus
            .iter()
            .zip(&self.minus)
            .map(|(p, m)| p.iter().zip(m).map(|(a, b)| a - b).sum::<f64>() / n)
            .collect()
    }
}

struct StratumAccumulator {
    n: usize,
    plus_sum: Vec<f64>,
    minus_sum: Vec<f64>,
    counts: Vec<f64>,
}

/// Walks all `2^n` coalitions once, reporting `(coalition, value)`.
fn for_each_coalition<G: Game + ?Sized>(
    game: &G,
    mut f: impl FnMut(Coalition, f64),
) -> Result<()> {
    let n = game.n();
    for bits in 0u128..(1u128 << n) {
        let s = Coalition::from_bits(n, bits)?;
        let v = if bits == 0 { 0.0 } else { game.value(s)? };
        f(s, v);
    }
    Ok(())
}

impl StratumAccumulator {
    fn collect<G: Game + ?Sized>(game: &G) -> Result<Self> {
        let n = game.n();
        let mut acc = Self {
            n,
            plus_sum: vec![0.0; n * n],
            minus_sum: vec![0.0; n * n],
            counts: (0..n).map(|l| crate::game::binomial(n - 1, l)).collect(),
        };
        for_each_coalition(game, |s, v| {
            let size = s.size();
            for i in 0..n {
                if s.contains(i) {
                    acc.plus_sum[i * n + size - 1] += v;
                } else {
                    acc.minus_sum[i * n + size] += v;
                }
            }
        })?;
        Ok(acc)
    }

    fn means(&self, sums: &[f64]) -> Vec<Vec<f64>> {
        let n = self.n;
        (0..n)
            .map(|i| (0..n).map(|l| sums[i * n + l] / self.counts[l]).collect())
            .collect()
    }
}

/// Exact stratum means plus a consistency check of their reconstruction
/// against the two-sum Shapley values (`1e-9`, relative to the value scale).
pub fn exact_strata<G: Game + ?Sized>(game: &G) -> Result<ExactStrata> {
    let n = game.n();
    check_limit(n, STRATA_ENUMERATION_LIMIT)?;
    let acc = StratumAccumulator::collect(game)?;
    let shapley = exact_shapley(game)?;
    let strata = ExactStrata {
        plus: acc.means(&acc.plus_sum),
        minus: acc.means(&acc.minus_sum),
        shapley,
    };
    let scale = strata
        .plus
        .iter()
        .chain(&strata.minus)
        .flatten()
        .fold(1.0f64, |m, v| m.max(v.abs()));
    for (i, (r, phi)) in strata.reconstruct().iter().zip(strata.shapley.iter()).enumerate() {
        if (r - phi).abs() > 1e-9 * scale {
            return Err(Error::Numerical(format!(
                "stratum reconstruction {r} disagrees with Shapley value {phi} for player {i}"
            )));
        }
    }
    Ok(strata)
}

/// Population variances and ranges of coalition values, per stratum and
/// overall under the weight law `P^w`. Indexed `[i][l]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StrataDiagnostics {
    pub sigma_plus: Vec<Vec<f64>>,
    pub sigma_minus: Vec<Vec<f64>>,
    pub r_plus: Vec<Vec<f64>>,
    pub r_minus: Vec<Vec<f64>>,
    pub sigma_plus_total: Vec<f64>,
    pub sigma_minus_total: Vec<f64>,
    pub r_plus_total: Vec<f64>,
    pub r_minus_total: Vec<f64>,
}

impl StrataDiagnostics {
    /// Sum of stratum ranges over the sizes the stratified estimator samples:
    /// `Σ_{l=1}^{n-3} r⁺_{i,l} + r⁻_{i,l+1}`.
    pub fn sampled_range_sum(&self, player: usize) -> f64 {
        let n = self.r_plus.len();
        (1..n.saturating_sub(2))
            .map(|l| self.r_plus[player][l] + self.r_minus[player][l + 1])
            .sum()
    }

    /// `Σ_{l=1}^{n-3} σ⁺²_{i,l} + σ⁻²_{i,l+1}`.
    pub fn sampled_variance_sum(&self, player: usize) -> f64 {
        let n = self.sigma_plus.len();
        (1..n.saturating_sub(2))
            .map(|l| self.sigma_plus[player][l] + self.sigma_minus[player][l + 1])
            .sum()
    }
}

/// Exact variances (division by the population size) and ranges. Makes two
/// passes over the powerset.
pub fn diagnostics<G: Game + ?Sized>(game: &G) -> Result<StrataDiagnostics> {
    let n = game.n();
    check_limit(n, STRATA_ENUMERATION_LIMIT)?;
    let acc = StratumAccumulator::collect(game)?;
    let mean_plus = acc.means(&acc.plus_sum);
    let mean_minus = acc.means(&acc.minus_sum);
    let total_plus: Vec<f64> = mean_plus.iter().map(|m| m.iter().sum::<f64>() / n as f64).collect();
    let total_minus: Vec<f64> = mean_minus.iter().map(|m| m.iter().sum::<f64>() / n as f64).collect();

    let mut sq_plus = vec![vec![0.0; n]; n];
    let mut sq_minus = vec![vec![0.0; n]; n];
    let mut tot_sq_plus = vec![0.0; n];
    let mut tot_sq_minus = vec![0.0; n];
    let mut lo_plus = vec![vec![f64::INFINITY; n]; n];
    let mut hi_plus = vec![vec![f64::NEG_INFINITY; n]; n];
    let mut lo_minus = lo_plus.clone();
    let mut hi_minus = hi_plus.clone();
    let weights: Vec<f64> = (0..n).map(|s| marginal_weight(n, s)).collect::<Result<_>>()?;

    for_each_coalition(game, |s, v| {
        let size = s.size();
        for i in 0..n {
            if s.contains(i) {
                let l = size - 1;
                sq_plus[i][l] += (v - mean_plus[i][l]).powi(2);
                tot_sq_plus[i] += weights[l] * (v - total_plus[i]).powi(2);
                lo_plus[i][l] = lo_plus[i][l].min(v);
                hi_plus[i][l] = hi_plus[i][l].max(v);
            } else {
                let l = size;
                sq_minus[i][l] += (v - mean_minus[i][l]).powi(2);
                tot_sq_minus[i] += weights[l] * (v - total_minus[i]).powi(2);
                lo_minus[i][l] = lo_minus[i][l].min(v);
                hi_minus[i][l] = hi_minus[i][l].max(v);
            }
        }
    })?;

    let per_count = |sq: Vec<Vec<f64>>| -> Vec<Vec<f64>> {
        sq.into_iter()
            .map(|row| row.into_iter().zip(&acc.counts).map(|(s, c)| s / c).collect())
            .collect()
    };
    let ranges = |lo: &[Vec<f64>], hi: &[Vec<f64>]| -> Vec<Vec<f64>> {
        lo.iter()
            .zip(hi)
            .map(|(l, h)| l.iter().zip(h).map(|(a, b)| b - a).collect())
            .collect()
    };
    let overall = |lo: &[Vec<f64>], hi: &[Vec<f64>]| -> Vec<f64> {
        lo.iter()
            .zip(hi)
            .map(|(l, h)| {
                let min = l.iter().copied().fold(f64::INFINITY, f64::min);
                let max = h.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                max - min
            })
            .collect()
    };

    Ok(StrataDiagnostics {
        r_plus: ranges(&lo_plus, &hi_plus),
        r_minus: ranges(&lo_minus, &hi_minus),
        r_plus_total: overall(&lo_plus, &hi_plus),
        r_minus_total: overall(&lo_minus, &hi_minus),
        sigma_plus: per_count(sq_plus),
        sigma_minus: per_count(sq_minus),
        sigma_plus_total: tot_sq_plus,
        sigma_minus_total: tot_sq_minus,
    })
}
