use crate::coalition::{Coalition, MAX_PLAYERS};
use crate::error::{domain, Result};
use crate::game::{Game, ShapleyVector};

/// The standard 100-player runway profile: `(weight, first, last)` with
/// 1-based inclusive player ranges.
pub const AIRPORT_BLOCKS: [(f64, usize, usize); 10] = [
    (1.0, 1, 8),
    (2.0, 9, 20),
    (3.0, 21, 26),
    (4.0, 27, 40),
    (5.0, 41, 48),
    (6.0, 49, 57),
    (7.0, 58, 70),
    (8.0, 71, 80),
    (9.0, 81, 90),
    (10.0, 91, 100),
];

/// Published Shapley values of the standard profile, one per weight block
/// (rounded to nine decimals).
pub const AIRPORT_SHAPLEY: [f64; 10] = [
    0.01,
    0.020869565,
    0.033369565,
    0.046883079,
    0.063549745,
    0.082780515,
    0.106036329,
    0.139369662,
    0.189369662,
    0.289369662,
];

/// A coalition is worth the largest weight among its members.
#[derive(Debug, Clone, PartialEq)]
pub struct AirportGame {
    weights: Vec<f64>,
}

impl AirportGame {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() || weights.len() > MAX_PLAYERS {
            return Err(domain(format!(
                "airport game needs 1..={MAX_PLAYERS} players, got {}",
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite() || *w <= 0.0) {
            return Err(domain("airport weights must be positive"));
        }
        Ok(Self { weights })
    }

    /// The 100-player profile of [`AIRPORT_BLOCKS`].
    pub fn standard() -> Self {
        let weights = AIRPORT_BLOCKS
            .iter()
            .flat_map(|&(w, first, last)| std::iter::repeat_n(w, last - first + 1))
            .collect();
        Self { weights }
    }

    /// Keeps only the first `k` players.
    pub fn truncated(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.weights.len() {
            return Err(domain(format!("cannot keep {k} of {} players", self.weights.len())));
        }
        Self::new(self.weights[..k].to_vec())
    }

    /// Keeps the listed players, in the given order.
    pub fn restricted_to(&self, players: &[usize]) -> Result<Self> {
        let weights = players
            .iter()
            .map(|&p| {
                self.weights
                    .get(p)
                    .copied()
                    .ok_or_else(|| domain(format!("player {p} out of range")))
            })
            .collect::<Result<_>>()?;
        Self::new(weights)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

impl Game for AirportGame {
    fn n(&self) -> usize {
        self.weights.len()
    }

    fn value(&self, coalition: Coalition) -> Result<f64> {
        Ok(coalition
            .players()
            .map(|i| self.weights[i])
            .fold(0.0, f64::max))
    }

    /// Each runway segment between consecutive distinct weights is shared
    /// equally by every player who needs it.
    fn closed_form_shapley(&self) -> Option<ShapleyVector> {
        let mut levels: Vec<f64> = self.weights.clone();
        levels.sort_by(f64::total_cmp);
        levels.dedup();
        let n = self.weights.len();
        let mut share_up_to = Vec::with_capacity(levels.len());
        let mut previous = 0.0;
        let mut acc = 0.0;
        for &level in &levels {
            let users = self.weights.iter().filter(|&&w| w >= level).count();
            acc += (level - previous) / users as f64;
            share_up_to.push(acc);
            previous = level;
        }
        let phi = (0..n)
            .map(|i| {
                let k = levels.partition_point(|&l| l < self.weights[i]);
                share_up_to[k]
            })
            .collect();
        ShapleyVector::new(phi).ok()
    }
}
