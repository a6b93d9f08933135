use crate::coalition::Coalition;
use crate::error::{domain, Result};
use crate::game::{Game, ShapleyVector};

/// Players `0..n/2` hold left shoes, the rest right shoes; a coalition is
/// worth the number of pairs it can form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShoeGame {
    n: usize,
    left: u128,
}

impl ShoeGame {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 || !n.is_multiple_of(2) || n > crate::coalition::MAX_PLAYERS {
            return Err(domain(format!("shoe game needs an even player count >= 2, got {n}")));
        }
        Ok(Self {
            n,
            left: (1u128 << (n / 2)) - 1,
        })
    }
}

impl Game for ShoeGame {
    fn n(&self) -> usize {
        self.n
    }

    fn value(&self, coalition: Coalition) -> Result<f64> {
        let left = (coalition.bits() & self.left).count_ones();
        let right = (coalition.bits() & !self.left).count_ones();
        Ok(left.min(right) as f64)
    }

    fn closed_form_shapley(&self) -> Option<ShapleyVector> {
        ShapleyVector::new(vec![0.5; self.n]).ok()
    }
}
