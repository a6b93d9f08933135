//! Fixed-width bitmask coalitions over a player set `{0, .., n-1}`.

use std::fmt;

use crate::error::{domain, Result};

/// Largest player count representable by [`Coalition`].
pub const MAX_PLAYERS: usize = 128;

/// A subset of the players `{0, .., n-1}`, stored as a bitmask where bit `i`
/// is set iff player `i` is a member.
///
/// No bit at an index `>= n` is ever set.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Coalition {
    bits: u128,
    n: u8,
}

#[inline]
fn full_mask(n: usize) -> u128 {
    if n == MAX_PLAYERS {
        u128::MAX
    } else {
        (1u128 << n) - 1
    }
}

impl Coalition {
    /// The empty coalition over `n` players.
    ///
    /// Panics if `n > MAX_PLAYERS`.
    pub fn empty(n: usize) -> Self {
        assert!(n <= MAX_PLAYERS, "at most {MAX_PLAYERS} players supported");
        Self { bits: 0, n: n as u8 }
    }

    /// The grand coalition containing all `n` players.
    pub fn grand(n: usize) -> Self {
        assert!(n <= MAX_PLAYERS, "at most {MAX_PLAYERS} players supported");
        Self {
            bits: full_mask(n),
            n: n as u8,
        }
    }

    pub fn singleton(n: usize, player: usize) -> Self {
        Self::empty(n).with(player)
    }

    /// Builds a coalition from a raw mask, rejecting bits outside the player range.
    pub fn from_bits(n: usize, bits: u128) -> Result<Self> {
        if n > MAX_PLAYERS {
            return Err(domain(format!("{n} players exceeds {MAX_PLAYERS}")));
        }
        if bits & !full_mask(n) != 0 {
            return Err(domain(format!("mask {bits:#x} has bits beyond player {n}")));
        }
        Ok(Self { bits, n: n as u8 })
    }

    pub fn from_players<I: IntoIterator<Item = usize>>(n: usize, players: I) -> Result<Self> {
        if n > MAX_PLAYERS {
            return Err(domain(format!("{n} players exceeds {MAX_PLAYERS}")));
        }
        let mut bits = 0u128;
        for p in players {
            if p >= n {
                return Err(domain(format!("player {p} out of range for n = {n}")));
            }
            bits |= 1u128 << p;
        }
        Ok(Self { bits, n: n as u8 })
    }

    #[inline]
    pub fn bits(&self) -> u128 {
        self.bits
    }

    /// Number of players in the game this coalition belongs to.
    #[inline]
    pub fn n(&self) -> usize {
        self.n as usize
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.bits.count_ones() as usize
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.bits == 0
    }

    #[inline]
    pub fn is_grand(&self) -> bool {
        self.bits == full_mask(self.n())
    }

    #[inline]
    pub fn contains(&self, player: usize) -> bool {
        player < self.n() && self.bits >> player & 1 == 1
    }

    /// Returns `self ∪ {player}`. Panics if `player >= n`.
    #[inline]
    pub fn with(self, player: usize) -> Self {
        assert!(player < self.n(), "player {player} out of range");
        Self {
            bits: self.bits | 1u128 << player,
            n: self.n,
        }
    }

    /// Returns `self \ {player}`.
    #[inline]
    pub fn without(self, player: usize) -> Self {
        if player >= self.n() {
            return self;
        }
        Self {
            bits: self.bits & !(1u128 << player),
            n: self.n,
        }
    }

    #[inline]
    pub fn union(self, other: Self) -> Self {
        debug_assert_eq!(self.n, other.n);
        Self {
            bits: self.bits | other.bits,
            n: self.n,
        }
    }

    #[inline]
    pub fn intersection(self, other: Self) -> Self {
        debug_assert_eq!(self.n, other.n);
        Self {
            bits: self.bits & other.bits,
            n: self.n,
        }
    }

    /// Complement within the full player set.
    #[inline]
    pub fn complement(self) -> Self {
        Self {
            bits: !self.bits & full_mask(self.n()),
            n: self.n,
        }
    }

    #[inline]
    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.bits & !other.bits == 0
    }

    /// Members in ascending order.
    pub fn players(&self) -> Players {
        Players { bits: self.bits }
    }

    /// Iterates every coalition of exactly `size` players out of `n`, in
    /// ascending bitmask order.
    pub fn all_of_size(n: usize, size: usize) -> OfSize {
        assert!(n <= MAX_PLAYERS);
        let next = if size > n {
            None
        } else if size == 0 {
            Some(0)
        } else {
            Some(full_mask(size))
        };
        OfSize {
            next,
            limit: full_mask(n),
            n: n as u8,
        }
    }
}

impl fmt::Debug for Coalition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.players()).finish()
    }
}

/// Ascending iterator over the members of a coalition.
pub struct Players {
    bits: u128,
}

impl Iterator for Players {
    type Item = usize;

    #[inline]
    fn next(&mut self) -> Option<usize> {
        if self.bits == 0 {
            return None;
        }
        let i = self.bits.trailing_zeros() as usize;
        self.bits &= self.bits - 1;
        Some(i)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let k = self.bits.count_ones() as usize;
        (k, Some(k))
    }
}

impl ExactSizeIterator for Players {}

/// Fixed-size subset enumeration (Gosper's hack).
pub struct OfSize {
    next: Option<u128>,
    limit: u128,
    n: u8,
}

impl Iterator for OfSize {
    type Item = Coalition;

    fn next(&mut self) -> Option<Coalition> {
        let cur = self.next?;
        self.next = if cur == 0 || cur == self.limit {
            None
        } else {
            let low = cur & cur.wrapping_neg();
            let (ripple, overflow) = cur.overflowing_add(low);
            if overflow {
                None
            } else {
                let ones = ((ripple ^ cur) >> 2) / low;
                let succ = ripple | ones;
                (succ & !self.limit == 0).then_some(succ)
            }
        };
        Some(Coalition {
            bits: cur,
            n: self.n,
        })
    }
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use proptest::prelude::*;

    use super::*;

    #[test]
    fn grand_and_complement() {
        let g = Coalition::grand(5);
        assert_eq!(g.size(), 5);
        assert!(g.is_grand());
        assert!(g.complement().is_empty());
        assert_eq!(Coalition::grand(128).size(), 128);
        assert_eq!(Coalition::grand(0).size(), 0);
    }

    #[test]
    fn rejects_out_of_range_players() {
        assert!(Coalition::from_players(4, [0, 4]).is_err());
        assert!(Coalition::from_bits(3, 0b1000).is_err());
        assert!(Coalition::from_bits(3, 0b111).is_ok());
    }

    #[test]
    fn enumerates_fixed_size_subsets() {
        for n in 0..=9usize {
            for s in 0..=n + 1 {
                let all: Vec<_> = Coalition::all_of_size(n, s).collect();
                let brute: Vec<_> = (0u128..1 << n)
                    .filter(|b| b.count_ones() as usize == s)
                    .collect();
                assert_eq!(all.iter().map(|c| c.bits()).collect::<Vec<_>>(), brute, "n={n} s={s}");
            }
        }
        assert_eq!(Coalition::all_of_size(128, 127).count(), 128);
        assert_eq!(Coalition::all_of_size(128, 128).count(), 1);
    }

    fn naive(c: &Coalition) -> BTreeSet<usize> {
        (0..c.n()).filter(|&i| c.contains(i)).collect()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn set_ops_agree_with_naive_sets(
            n in 1usize..=20,
            a in prop::collection::btree_set(0usize..20, 0..20),
            b in prop::collection::btree_set(0usize..20, 0..20),
            p in 0usize..20,
        ) {
            let a: BTreeSet<usize> = a.into_iter().filter(|&x| x < n).collect();
            let b: BTreeSet<usize> = b.into_iter().filter(|&x| x < n).collect();
            let ca = Coalition::from_players(n, a.iter().copied()).unwrap();
            let cb = Coalition::from_players(n, b.iter().copied()).unwrap();

            prop_assert_eq!(naive(&ca.union(cb)), a.union(&b).copied().collect::<BTreeSet<_>>());
            prop_assert_eq!(naive(&ca.intersection(cb)), a.intersection(&b).copied().collect::<BTreeSet<_>>());
            let all: BTreeSet<usize> = (0..n).collect();
            prop_assert_eq!(naive(&ca.complement()), all.difference(&a).copied().collect::<BTreeSet<_>>());
            prop_assert_eq!(ca.contains(p), a.contains(&p));
            prop_assert_eq!(ca.size(), a.len());
            prop_assert_eq!(ca.players().collect::<Vec<_>>(), a.iter().copied().collect::<Vec<_>>());
            prop_assert_eq!(ca.is_subset_of(&cb), a.is_subset(&b));
            prop_assert_eq!(ca.complement().bits() >> n, 0);
        }
    }
}
