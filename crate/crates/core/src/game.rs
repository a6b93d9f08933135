//! The cooperative game abstraction, budget metering, and result vectors.

use std::ops::Deref;
use std::sync::Arc;

use crate::coalition::{Coalition, MAX_PLAYERS};
use crate::error::{domain, Error, Result};

/// A cooperative game: a player count and a value function with `value(∅) = 0`.
///
/// `value` must be a pure function of the coalition. It is fallible only so
/// that games backed by external processes can report transport failures.
pub trait Game {
    fn n(&self) -> usize;

    fn value(&self, coalition: Coalition) -> Result<f64>;

    /// Shapley values in closed form, when the game admits one.
    fn closed_form_shapley(&self) -> Option<ShapleyVector> {
        None
    }
}

impl<G: Game + ?Sized> Game for &G {
    fn n(&self) -> usize {
        (**self).n()
    }
    fn value(&self, coalition: Coalition) -> Result<f64> {
        (**self).value(coalition)
    }
    fn closed_form_shapley(&self) -> Option<ShapleyVector> {
        (**self).closed_form_shapley()
    }
}

impl<G: Game + ?Sized> Game for Box<G> {
    fn n(&self) -> usize {
        (**self).n()
    }
    fn value(&self, coalition: Coalition) -> Result<f64> {
        (**self).value(coalition)
    }
    fn closed_form_shapley(&self) -> Option<ShapleyVector> {
        (**self).closed_form_shapley()
    }
}

impl<G: Game + ?Sized> Game for Arc<G> {
    fn n(&self) -> usize {
        (**self).n()
    }
    fn value(&self, coalition: Coalition) -> Result<f64> {
        (**self).value(coalition)
    }
    fn closed_form_shapley(&self) -> Option<ShapleyVector> {
        (**self).closed_form_shapley()
    }
}

/// Wraps a game and counts evaluations against an optional limit.
///
/// The empty coalition is answered with 0 without touching the inner game
/// and without spending budget.
pub struct BudgetedGame<G> {
    inner: G,
    spent: u64,
    free_calls: u64,
    limit: Option<u64>,
    trace: Option<Vec<(Coalition, f64)>>,
}

impl<G: Game> BudgetedGame<G> {
    pub fn new(inner: G, limit: Option<u64>) -> Self {
        Self {
            inner,
            spent: 0,
            free_calls: 0,
            limit,
            trace: None,
        }
    }

    pub fn unlimited(inner: G) -> Self {
        Self::new(inner, None)
    }

    pub fn with_limit(inner: G, limit: u64) -> Self {
        Self::new(inner, Some(limit))
    }

    /// Records every `evaluate` call, including free empty-set calls.
    pub fn traced(mut self) -> Self {
        self.trace = Some(Vec::new());
        self
    }

    pub fn n(&self) -> usize {
        self.inner.n()
    }

    pub fn inner(&self) -> &G {
        &self.inner
    }

    /// Evaluations charged so far.
    pub fn spent(&self) -> u64 {
        self.spent
    }

    /// Number of empty-coalition requests answered for free.
    pub fn free_calls(&self) -> u64 {
        self.free_calls
    }

    pub fn limit(&self) -> Option<u64> {
        self.limit
    }

    pub fn remaining(&self) -> Option<u64> {
        self.limit.map(|l| l.saturating_sub(self.spent))
    }

    pub fn trace(&self) -> Option<&[(Coalition, f64)]> {
        self.trace.as_deref()
    }

    pub fn take_trace(&mut self) -> Option<Vec<(Coalition, f64)>> {
        self.trace.as_mut().map(std::mem::take)
    }

    pub fn evaluate(&mut self, coalition: Coalition) -> Result<f64> {
        let n = self.inner.n();
        if coalition.n() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: coalition.n(),
            });
        }
        let value = if coalition.is_empty() {
            self.free_calls += 1;
            0.0
        } else {
            if let Some(limit) = self.limit {
                if self.spent >= limit {
                    return Err(Error::BudgetExhausted {
                        spent: self.spent,
                        limit,
                    });
                }
            }
            let v = self.inner.value(coalition)?;
            self.spent += 1;
            v
        };
        if let Some(trace) = self.trace.as_mut() {
            trace.push((coalition, value));
        }
        Ok(value)
    }
}

/// Per-player Shapley values (exact or estimated).
#[derive(Debug, Clone, PartialEq)]
pub struct ShapleyVector(Vec<f64>);

impl ShapleyVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!(
                "non-finite Shapley value {} for player {i}",
                values[i]
            )));
        }
        Ok(Self(values))
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Squared error averaged over players.
    pub fn mse(&self, reference: &ShapleyVector) -> f64 {
        assert_eq!(self.len(), reference.len());
        if self.is_empty() {
            return 0.0;
        }
        self.iter()
            .zip(reference.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            / self.len() as f64
    }

    pub fn max_abs_diff(&self, other: &ShapleyVector) -> f64 {
        self.iter()
            .zip(other.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl Deref for ShapleyVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// `C(n, k)` as a float, computed by the multiplicative formula.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for j in 0..k {
        acc = acc * (n - j) as f64 / (j + 1) as f64;
    }
    acc.round()
}

/// Exact `C(n, k)`; fits for every `n <= 128`.
pub fn binomial_u128(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc = 1u128;
    for j in 0..k as u128 {
        // acc * (n - j) is divisible by (j + 1) at every step; split the
        // product through the gcd so the intermediate stays in range.
        let num = n as u128 - j;
        let den = j + 1;
        let g = gcd(acc, den);
        acc = (acc / g) * (num / (den / g));
    }
    acc
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// The weight `1 / (n * C(n-1, s))` that a coalition `S ⊆ N \ {i}` of size
/// `s` carries in player `i`'s Shapley value.
pub fn marginal_weight(n: usize, s: usize) -> Result<f64> {
    if n == 0 || n > MAX_PLAYERS {
        return Err(domain(format!("player count {n} outside 1..={MAX_PLAYERS}")));
    }
    if s >= n {
        return Err(domain(format!("coalition size {s} outside 0..={}", n - 1)));
    }
    Ok(1.0 / (n as f64 * binomial(n - 1, s)))
}
