use rand::Rng as _;

use crate::coalition::{Coalition, MAX_PLAYERS};
use crate::error::{domain, Result};
use crate::game::{Game, ShapleyVector};
use crate::sampling::{uniform_subset, Rng};

/// Sum of unanimity games: `ν(S) = Σ_m c_m · [S_m ⊆ S]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SougGame {
    n: usize,
    sets: Vec<Coalition>,
    coefficients: Vec<f64>,
}

impl SougGame {
    pub fn new(n: usize, sets: Vec<Coalition>, coefficients: Vec<f64>) -> Result<Self> {
        if n == 0 || n > MAX_PLAYERS {
            return Err(domain(format!("player count {n} outside 1..={MAX_PLAYERS}")));
        }
        if sets.is_empty() || sets.len() != coefficients.len() {
            return Err(domain("need one coefficient per unanimity set, and at least one set"));
        }
        if sets.iter().any(|s| s.n() != n || s.is_empty()) {
            return Err(domain("unanimity sets must be nonempty coalitions over n players"));
        }
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(domain("coefficients must be finite"));
        }
        Ok(Self {
            n,
            sets,
            coefficients,
        })
    }

    /// `terms` unanimity sets, each with a size uniform on `1..=n` and then a
    /// uniform subset of that size, with coefficients uniform on `[0, 1)`.
    /// Sets may repeat.
    pub fn generate(rng: &mut Rng, n: usize, terms: usize) -> Result<Self> {
        if terms == 0 {
            return Err(domain("a SOUG needs at least one unanimity set"));
        }
        if n == 0 || n > MAX_PLAYERS {
            return Err(domain(format!("player count {n} outside 1..={MAX_PLAYERS}")));
        }
        let mut sets = Vec::with_capacity(terms);
        let mut coefficients = Vec::with_capacity(terms);
        for _ in 0..terms {
            let size = rng.random_range(1..=n);
            sets.push(uniform_subset(rng, n, size));
            coefficients.push(rng.random::<f64>());
        }
        Self::new(n, sets, coefficients)
    }

    pub fn sets(&self) -> &[Coalition] {
        &self.sets
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }
}

impl Game for SougGame {
    fn n(&self) -> usize {
        self.n
    }

    fn value(&self, coalition: Coalition) -> Result<f64> {
        Ok(self
            .sets
            .iter()
            .zip(&self.coefficients)
            .filter(|(s, _)| s.is_subset_of(&coalition))
            .map(|(_, c)| c)
            .sum())
    }

    /// Each unanimity coefficient is split evenly among its set's members.
    fn closed_form_shapley(&self) -> Option<ShapleyVector> {
        let mut phi = vec![0.0; self.n];
        for (s, c) in self.sets.iter().zip(&self.coefficients) {
            let share = c / s.size() as f64;
            for i in s.players() {
                phi[i] += share;
            }
        }
        ShapleyVector::new(phi).ok()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::seeded_rng;

    #[test]
    fn single_term() {
        let s = Coalition::from_players(3, [0, 1]).unwrap();
        let g = SougGame::new(3, vec![s], vec![1.0]).unwrap();
        assert_eq!(g.closed_form_shapley().unwrap().into_inner(), vec![0.5, 0.5, 0.0]);
        assert_eq!(g.value(Coalition::grand(3)).unwrap(), 1.0);
        assert_eq!(g.value(Coalition::from_players(3, [0, 2]).unwrap()).unwrap(), 0.0);
    }

    #[test]
    fn generation_is_seeded() {
        let a = SougGame::generate(&mut seeded_rng(7), 20, 50).unwrap();
        let b = SougGame::generate(&mut seeded_rng(7), 20, 50).unwrap();
        assert_eq!(a, b);
        assert!(a.coefficients().iter().all(|c| (0.0..1.0).contains(c)));
        assert!(a.sets().iter().all(|s| (1..=20).contains(&s.size())));
        assert!(SougGame::generate(&mut seeded_rng(7), 20, 0).is_err());
    }
}
