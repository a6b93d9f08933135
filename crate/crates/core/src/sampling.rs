//! Random machinery: seeded generators, the coalition-size laws used by the
//! estimators, and uniform subsets and permutations.
//!
//! Every coalition law here assigns equal probability to coalitions of equal
//! size, so sampling factors into "draw a size, then a uniform subset of
//! that size".

use rand::seq::{index, SliceRandom};
use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::coalition::{Coalition, MAX_PLAYERS};
use crate::error::{domain, Result};
use crate::game::binomial;

/// The generator used throughout. ChaCha output is platform independent, so
/// a seed fixes the whole draw sequence.
pub type Rng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// splitmix64 finalizer.
#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from a master seed and a path of indices, e.g.
/// `(master, worker)` or `(master, game, algorithm, budget, repetition)`.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(master), |acc, &k| splitmix64(acc ^ splitmix64(k)))
}

/// `H_n = 1 + 1/2 + .. + 1/n`, summed smallest term first.
pub fn harmonic(n: usize) -> Result<f64> {
    if n < 1 {
        return Err(domain("harmonic number needs n >= 1"));
    }
    Ok((1..=n).rev().map(|k| 1.0 / k as f64).sum())
}

/// A categorical law over the contiguous sizes `first ..= first + probs.len() - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SizeDistribution {
    first: usize,
    probs: Vec<f64>,
    cumulative: Vec<f64>,
    renormalized: bool,
}

impl SizeDistribution {
    /// Builds a law from nonnegative masses. Masses whose total is off from 1
    /// by more than `1e-9` are rescaled and the law is flagged.
    pub fn new(first: usize, mut probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(domain("size distribution needs a nonempty support"));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(domain("size probabilities must be finite and nonnegative"));
        }
        let mass: f64 = probs.iter().sum();
        if mass <= 0.0 {
            return Err(domain("size distribution has zero mass"));
        }
        let renormalized = (mass - 1.0).abs() > 1e-9;
        if renormalized {
            probs.iter_mut().for_each(|p| *p /= mass);
        }
        let mut cumulative = Vec::with_capacity(probs.len());
        let mut acc = 0.0;
        for p in &probs {
            acc += p;
            cumulative.push(acc);
        }
        Ok(Self {
            first,
            probs,
            cumulative,
            renormalized,
        })
    }

    /// Uniform over `first ..= last`.
    pub fn uniform(first: usize, last: usize) -> Result<Self> {
        if last < first {
            return Err(domain(format!("empty size range {first}..={last}")));
        }
        let k = last - first + 1;
        Self::new(first, vec![1.0 / k as f64; k])
    }

    pub fn first(&self) -> usize {
        self.first
    }

    pub fn last(&self) -> usize {
        self.first + self.probs.len() - 1
    }

    pub fn support(&self) -> std::ops::RangeInclusive<usize> {
        self.first..=self.last()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    /// Whether the construction masses had to be rescaled.
    pub fn was_renormalized(&self) -> bool {
        self.renormalized
    }

    pub fn prob(&self, size: usize) -> f64 {
        size.checked_sub(self.first)
            .and_then(|k| self.probs.get(k))
            .copied()
            .unwrap_or(0.0)
    }

    /// Inverse-CDF draw.
    pub fn sample(&self, rng: &mut Rng) -> usize {
        let u: f64 = rng.random::<f64>() * self.cumulative[self.cumulative.len() - 1];
        // first index whose cumulative mass exceeds u; it always has positive mass
        let k = self.cumulative.partition_point(|&c| c <= u);
        if k < self.probs.len() {
            return self.first + k;
        }
        // u rounded up onto the total mass
        let k = self.probs.iter().rposition(|&p| p > 0.0).unwrap_or(0);
        self.first + k
    }
}

/// Size law of `P⁺`: `P(|S| = l) = 1 / (l · H_n)` for `l` in `1..=n`.
pub fn pplus_sizes(n: usize) -> Result<SizeDistribution> {
    check_players(n)?;
    let h = harmonic(n)?;
    SizeDistribution::new(1, (1..=n).map(|l| 1.0 / (l as f64 * h)).collect())
}

/// Size law of `P⁻`: `P(|S| = l) = 1 / ((n - l) · H_n)` for `l` in `0..n`.
pub fn pminus_sizes(n: usize) -> Result<SizeDistribution> {
    check_players(n)?;
    let h = harmonic(n)?;
    SizeDistribution::new(0, (0..n).map(|l| 1.0 / ((n - l) as f64 * h)).collect())
}

/// Probability `P⁺(S) = 1 / (|S| · C(n, |S|) · H_n)` of a single nonempty coalition.
pub fn pplus_probability(n: usize, coalition: &Coalition) -> Result<f64> {
    let sizes = pplus_sizes(n)?;
    Ok(sizes.prob(coalition.size()) / binomial(n, coalition.size()))
}

/// Probability `P⁻(S) = 1 / ((n - |S|) · C(n, |S|) · H_n)` of a single proper coalition.
pub fn pminus_probability(n: usize, coalition: &Coalition) -> Result<f64> {
    let sizes = pminus_sizes(n)?;
    Ok(sizes.prob(coalition.size()) / binomial(n, coalition.size()))
}

/// The size law over `2..=n-2` used by the stratified estimator. It gives
/// every stratum the same weight in the variance bound.
///
/// For `n = 4` the support is the single size 2.
pub fn build_ptilde(n: usize) -> Result<SizeDistribution> {
    if n < 4 {
        return Err(domain(format!("stratified size law needs n >= 4, got {n}")));
    }
    check_players(n)?;
    if n == 4 {
        return SizeDistribution::new(2, vec![1.0]);
    }
    let nf = n as f64;
    let probs = if n.is_multiple_of(2) {
        let half = n / 2;
        let nlogn = nf * nf.ln();
        let denom_base = harmonic(half - 1)? - 1.0;
        (2..=n - 2)
            .map(|s| {
                if s < half {
                    (nlogn - 1.0) / (2.0 * s as f64 * nlogn * denom_base)
                } else if s == half {
                    1.0 / nlogn
                } else {
                    (nlogn - 1.0) / (2.0 * (n - s) as f64 * nlogn * denom_base)
                }
            })
            .collect()
    } else {
        let denom_base = harmonic((n - 1) / 2)? - 1.0;
        (2..=n - 2)
            .map(|s| {
                if s <= (n - 1) / 2 {
                    1.0 / (2.0 * s as f64 * denom_base)
                } else {
                    1.0 / (2.0 * (n - s) as f64 * denom_base)
                }
            })
            .collect()
    };
    SizeDistribution::new(2, probs)
}

/// Uniform law over the stratified sizes `2..=n-2`.
pub fn uniform_strata_sizes(n: usize) -> Result<SizeDistribution> {
    if n < 4 {
        return Err(domain(format!("stratified size law needs n >= 4, got {n}")));
    }
    SizeDistribution::uniform(2, n - 2)
}

fn check_players(n: usize) -> Result<()> {
    if n == 0 || n > MAX_PLAYERS {
        return Err(domain(format!("player count {n} outside 1..={MAX_PLAYERS}")));
    }
    Ok(())
}

/// Uniformly random `size`-subset of `{0, .., n-1}`.
pub fn sample_uniform_subset(rng: &mut Rng, n: usize, size: usize) -> Result<Coalition> {
    check_players(n.max(1))?;
    if size > n {
        return Err(domain(format!("cannot draw {size} of {n} players")));
    }
    Ok(uniform_subset(rng, n, size))
}

pub(crate) fn uniform_subset(rng: &mut Rng, n: usize, size: usize) -> Coalition {
    if size == n {
        return Coalition::grand(n);
    }
    let mut bits = 0u128;
    for j in index::sample(rng, n, size) {
        bits |= 1u128 << j;
    }
    Coalition::from_bits(n, bits).expect("indices below n")
}

/// Uniformly random `size`-subset of `pool`, as a coalition over `n` players.
pub fn sample_subset_of(rng: &mut Rng, n: usize, pool: &[usize], size: usize) -> Result<Coalition> {
    if size > pool.len() {
        return Err(domain(format!("cannot draw {size} of {} players", pool.len())));
    }
    Coalition::from_players(n, index::sample(rng, pool.len(), size).into_iter().map(|k| pool[k]))
}

/// Uniformly random ordering of `{0, .., n-1}`.
pub fn sample_permutation(rng: &mut Rng, n: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    order
}

/// `S ⊆ N \ {player}` drawn with probability `1 / (n · C(n-1, |S|))`.
pub fn sample_pw(rng: &mut Rng, n: usize, player: usize) -> Result<Coalition> {
    check_players(n)?;
    if player >= n {
        return Err(domain(format!("player {player} out of range for n = {n}")));
    }
    let size = rng.random_range(0..n);
    Ok(uniform_subset_without(rng, n, player, size))
}

/// Uniform `size`-subset of `N \ {player}`.
fn uniform_subset_without(rng: &mut Rng, n: usize, player: usize, size: usize) -> Coalition {
    let mut bits = 0u128;
    for j in index::sample(rng, n - 1, size) {
        let p = if j < player { j } else { j + 1 };
        bits |= 1u128 << p;
    }
    Coalition::from_bits(n, bits).expect("indices below n")
}

/// Draws from the two coalition laws `P⁺` and `P⁻` with cached size tables.
#[derive(Debug, Clone)]
pub struct SignedSampler {
    n: usize,
    plus: SizeDistribution,
    minus: SizeDistribution,
}

impl SignedSampler {
    pub fn new(n: usize) -> Result<Self> {
        Ok(Self {
            n,
            plus: pplus_sizes(n)?,
            minus: pminus_sizes(n)?,
        })
    }

    /// A nonempty coalition distributed as `P⁺`.
    pub fn plus(&self, rng: &mut Rng) -> Coalition {
        let size = self.plus.sample(rng);
        uniform_subset(rng, self.n, size)
    }

    /// A proper (possibly empty) coalition distributed as `P⁻`.
    pub fn minus(&self, rng: &mut Rng) -> Coalition {
        let size = self.minus.sample(rng);
        uniform_subset(rng, self.n, size)
    }

    pub fn plus_sizes(&self) -> &SizeDistribution {
        &self.plus
    }

    pub fn minus_sizes(&self) -> &SizeDistribution {
        &self.minus
    }
}

pub fn sample_pplus(rng: &mut Rng, n: usize) -> Result<Coalition> {
    let sizes = pplus_sizes(n)?;
    let size = sizes.sample(rng);
    Ok(uniform_subset(rng, n, size))
}

pub fn sample_pminus(rng: &mut Rng, n: usize) -> Result<Coalition> {
    let sizes = pminus_sizes(n)?;
    let size = sizes.sample(rng);
    Ok(uniform_subset(rng, n, size))
}

#[cfg(test)]
mod tests {
    use std::collections::HashMap;

    use num_bigint::BigInt;
    use num_rational::BigRational;
    use num_traits::{One, ToPrimitive, Zero};
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    use super::*;

    fn rational_harmonic(n: usize) -> BigRational {
        (1..=n).fold(BigRational::zero(), |acc, k| {
            acc + BigRational::new(BigInt::one(), BigInt::from(k))
        })
    }

    fn rational_binomial(n: usize, k: usize) -> BigInt {
        (0..k).fold(BigInt::one(), |acc, j| acc * BigInt::from(n - j) / BigInt::from(j + 1))
    }

    fn chi_square_p(observed: &[u64], expected_probs: &[f64]) -> f64 {
        let total: u64 = observed.iter().sum();
        let stat: f64 = observed
            .iter()
            .zip(expected_probs)
            .map(|(&o, &p)| {
                let e = p * total as f64;
                (o as f64 - e).powi(2) / e
            })
            .sum();
        let dist = ChiSquared::new((observed.len() - 1) as f64).unwrap();
        1.0 - dist.cdf(stat)
    }

    #[test]
    fn harmonic_values() {
        assert_eq!(harmonic(1).unwrap(), 1.0);
        assert_eq!(harmonic(2).unwrap(), 1.5);
        assert_eq!(rational_harmonic(4), BigRational::new(25.into(), 12.into()));
        assert!((harmonic(4).unwrap() - 25.0 / 12.0).abs() < 1e-15);
        assert!(harmonic(0).is_err());
        for n in 1..=10_000 {
            let gap = harmonic(n).unwrap() - (n as f64).ln();
            assert!(gap > 0.5772 && gap <= 1.0, "n={n}: {gap}");
        }
    }

    #[test]
    fn signed_laws_match_rational_formulas() {
        // P⁺({1}) at n = 4 is 1 / (1 · 4 · 25/12) = 0.12.
        let s = Coalition::from_players(4, [0]).unwrap();
        assert!((pplus_probability(4, &s).unwrap() - 0.12).abs() < 1e-15);
        let s = Coalition::from_players(4, [0, 1, 2]).unwrap();
        assert!((pminus_probability(4, &s).unwrap() - 0.12).abs() < 1e-15);

        for n in 1..=10usize {
            let h = rational_harmonic(n);
            for size in 0..=n {
                let c = rational_binomial(n, size);
                let c_f = c.to_f64().unwrap();
                if size >= 1 {
                    let exact = BigRational::one() / (h.clone() * BigRational::from(c.clone() * size));
                    let got = pplus_sizes(n).unwrap().prob(size) / c_f;
                    assert!((got - exact.to_f64().unwrap()).abs() < 1e-15, "P+ n={n} s={size}");
                }
                if size < n {
                    let exact =
                        BigRational::one() / (h.clone() * BigRational::from(c.clone() * (n - size)));
                    let got = pminus_sizes(n).unwrap().prob(size) / c_f;
                    assert!((got - exact.to_f64().unwrap()).abs() < 1e-15, "P- n={n} s={size}");
                }
            }
        }
    }

    #[test]
    fn pminus_mirrors_pplus() {
        for n in 1..=8usize {
            for bits in 0u128..(1 << n) - 1 {
                let s = Coalition::from_bits(n, bits).unwrap();
                let a = pminus_probability(n, &s).unwrap();
                let b = pplus_probability(n, &s.complement()).unwrap();
                assert!((a - b).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn ptilde_small_cases() {
        let p5 = build_ptilde(5).unwrap();
        assert_eq!(p5.support(), 2..=3);
        assert!((p5.prob(2) - 0.5).abs() < 1e-15 && (p5.prob(3) - 0.5).abs() < 1e-15);

        let p6 = build_ptilde(6).unwrap();
        assert!((p6.prob(2) - p6.prob(4)).abs() < 1e-15);
        assert!((p6.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);

        let p4 = build_ptilde(4).unwrap();
        assert_eq!(p4.probs(), &[1.0]);
        assert!(build_ptilde(3).is_err());
    }

    #[test]
    fn ptilde_is_exactly_normalized() {
        for n in 4..=MAX_PLAYERS {
            let p = build_ptilde(n).unwrap();
            assert!(!p.was_renormalized(), "n = {n}");
            assert!((p.cumulative().last().unwrap() - 1.0).abs() < 1e-12);
            assert!(p.cumulative().windows(2).all(|w| w[0] <= w[1]));
            for s in 2..=n - 2 {
                assert!((p.prob(s) - p.prob(n - s)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn renormalization_flag() {
        let d = SizeDistribution::new(0, vec![1.0, 1.0]).unwrap();
        assert!(d.was_renormalized());
        assert_eq!(d.probs(), &[0.5, 0.5]);
        assert!(SizeDistribution::new(0, vec![]).is_err());
        assert!(SizeDistribution::new(0, vec![-0.5, 1.5]).is_err());
    }

    #[test]
    fn zero_mass_sizes_never_drawn() {
        let d = SizeDistribution::new(3, vec![0.0, 0.5, 0.0, 0.5, 0.0]).unwrap();
        let mut rng = seeded_rng(1);
        for _ in 0..10_000 {
            let s = d.sample(&mut rng);
            assert!(s == 4 || s == 6, "{s}");
        }
    }

    #[test]
    fn pw_trivial_cases() {
        let mut rng = seeded_rng(3);
        for _ in 0..100 {
            assert!(sample_pw(&mut rng, 1, 0).unwrap().is_empty());
            assert!(!sample_pw(&mut rng, 5, 2).unwrap().contains(2));
        }
        assert!(sample_pw(&mut rng, 3, 3).is_err());
    }

    #[test]
    fn pw_law_matches_weights() {
        // n = 3, player 0: sets {}, {1}, {2}, {1,2} with weights 1/3, 1/6, 1/6, 1/3.
        let mut rng = seeded_rng(11);
        let mut counts = [0u64; 4];
        for _ in 0..200_000 {
            let s = sample_pw(&mut rng, 3, 0).unwrap();
            counts[(s.bits() >> 1) as usize] += 1;
        }
        let p = chi_square_p(&counts, &[1.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 3.0]);
        assert!(p > 0.001, "p = {p}, counts = {counts:?}");
    }

    #[test]
    fn uniform_subset_edge_cases() {
        let mut rng = seeded_rng(5);
        assert!(sample_uniform_subset(&mut rng, 7, 0).unwrap().is_empty());
        assert!(sample_uniform_subset(&mut rng, 7, 7).unwrap().is_grand());
        assert!(sample_uniform_subset(&mut rng, 7, 8).is_err());
    }

    #[test]
    fn uniform_pairs_are_uniform() {
        let mut rng = seeded_rng(17);
        let mut freq: HashMap<u128, u64> = HashMap::new();
        let draws = 100_000;
        for _ in 0..draws {
            let s = sample_uniform_subset(&mut rng, 5, 2).unwrap();
            *freq.entry(s.bits()).or_default() += 1;
        }
        assert_eq!(freq.len(), 10);
        for (&bits, &c) in &freq {
            let f = c as f64 / draws as f64;
            assert!((f - 0.1).abs() < 0.01, "{bits:#b}: {f}");
        }
        let observed: Vec<u64> = freq.values().copied().collect();
        assert!(chi_square_p(&observed, &[0.1; 10]) > 0.001);
    }

    #[test]
    fn permutations_are_uniform() {
        let mut rng = seeded_rng(24);
        let mut freq: HashMap<Vec<usize>, u64> = HashMap::new();
        for _ in 0..60_000 {
            *freq.entry(sample_permutation(&mut rng, 4)).or_default() += 1;
        }
        assert_eq!(freq.len(), 24);
        let observed: Vec<u64> = freq.values().copied().collect();
        let p = chi_square_p(&observed, &[1.0 / 24.0; 24]);
        assert!(p > 0.001, "p={p} {freq:?}");
    }

    #[test]
    fn pplus_histogram_matches_law() {
        for n in 4..=8usize {
            let mut rng = seeded_rng(100 + n as u64);
            let mut counts = vec![0u64; 1 << n];
            for _ in 0..1_000_000 {
                counts[sample_pplus(&mut rng, n).unwrap().bits() as usize] += 1;
            }
            assert_eq!(counts[0], 0);
            let probs: Vec<f64> = (1u128..1 << n)
                .map(|b| pplus_probability(n, &Coalition::from_bits(n, b).unwrap()).unwrap())
                .collect();
            let p = chi_square_p(&counts[1..], &probs);
            assert!(p > 0.001, "n={n} p={p}");
        }
    }

    #[test]
    fn pminus_never_grand() {
        let mut rng = seeded_rng(9);
        for _ in 0..10_000 {
            assert!(!sample_pminus(&mut rng, 4).unwrap().is_grand());
        }
    }

    #[test]
    fn equal_seeds_equal_draws() {
        let mut a = seeded_rng(42);
        let mut b = seeded_rng(42);
        let sampler = SignedSampler::new(12).unwrap();
        for _ in 0..1000 {
            assert_eq!(sampler.plus(&mut a), sampler.plus(&mut b));
            assert_eq!(sampler.minus(&mut a), sampler.minus(&mut b));
        }
        assert_ne!(derive_seed(1, &[0]), derive_seed(1, &[1]));
        assert_ne!(derive_seed(1, &[0, 1]), derive_seed(1, &[1, 0]));
    }
}
