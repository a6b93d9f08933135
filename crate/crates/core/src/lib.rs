//! Shapley value approximation under a fixed budget of value-function
//! evaluations.
//!
//! The estimators here never form marginal contributions. They split each
//! Shapley value into a positive and a negative part, estimate both from
//! sampled coalitions and report the difference:
//!
//! * [`svarm`]: coalitions drawn from size-weighted laws `P⁺` and `P⁻`.
//! * [`stratified_svarm`]: the same parts split further by coalition size,
//!   with the smallest and largest sizes computed exactly.
//! * [`stratified_svarm_plus`]: the stratified estimator, drawing without
//!   replacement so that no coalition is paid for twice.
//! * [`approshapley`]: permutation sampling, as a baseline.
//!
//! ```
//! use svarm::{games::ShoeGame, stratified_svarm_run, SizeLaw};
//!
//! let game = ShoeGame::new(10).unwrap();
//! let phi = stratified_svarm_run(&game, 500, 42, SizeLaw::Tailored).unwrap();
//! assert!(phi.iter().all(|v| (v - 0.5).abs() < 0.2));
//! ```

mod baselines;
mod coalition;
mod error;
mod exact;
mod game;
pub mod games;
mod sampling;
mod stratified;
mod svarm;

use std::fmt;
use std::str::FromStr;

pub use crate::baselines::{
    approshapley, approshapley_min_budget, approshapley_run, ApproShapleyOutput, PermutationEstimator,
};
pub use crate::coalition::{Coalition, OfSize, Players, MAX_PLAYERS};
pub use crate::error::{Error, Result};
pub use crate::exact::{
    diagnostics, exact_shapley, exact_shapley_budgeted, exact_shapley_with_limit, exact_strata, ExactStrata,
    StrataDiagnostics, SHAPLEY_ENUMERATION_LIMIT, STRATA_ENUMERATION_LIMIT,
};
pub use crate::game::{binomial, binomial_u128, marginal_weight, BudgetedGame, Game, ShapleyVector};
pub use crate::sampling::{
    build_ptilde, derive_seed, harmonic, pminus_probability, pminus_sizes, pplus_probability, pplus_sizes,
    sample_permutation, sample_pminus, sample_pplus, sample_pw, sample_subset_of, sample_uniform_subset,
    seeded_rng, splitmix64, uniform_strata_sizes, Rng, SignedSampler, SizeDistribution,
};
pub use crate::stratified::{
    exact_calculation, exact_calculation_budget, stratified_min_budget, stratified_plus_min_budget,
    stratified_svarm, stratified_svarm_plus, stratified_svarm_plus_run, stratified_svarm_run, warmup_budget,
    warmup_negative, warmup_positive, SizeLaw, StratifiedOutput, StratumTable, WithoutReplacementState,
};
pub use crate::svarm::{svarm, svarm_min_budget, svarm_run, svarm_warmup, SignedEstimates, SvarmOutput};

/// Every estimator the crate offers, addressable by a stable name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Svarm,
    StratifiedSvarm,
    StratifiedSvarmUniform,
    StratifiedSvarmPlus,
    StratifiedSvarmPlusUniform,
    ApproShapley,
    Exact,
}

impl Algorithm {
    pub const ALL: [Algorithm; 7] = [
        Algorithm::Svarm,
        Algorithm::StratifiedSvarm,
        Algorithm::StratifiedSvarmUniform,
        Algorithm::StratifiedSvarmPlus,
        Algorithm::StratifiedSvarmPlusUniform,
        Algorithm::ApproShapley,
        Algorithm::Exact,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Svarm => "svarm",
            Algorithm::StratifiedSvarm => "s-svarm",
            Algorithm::StratifiedSvarmUniform => "s-svarm-uniform",
            Algorithm::StratifiedSvarmPlus => "s-svarm-plus",
            Algorithm::StratifiedSvarmPlusUniform => "s-svarm-plus-uniform",
            Algorithm::ApproShapley => "approshapley",
            Algorithm::Exact => "exact",
        }
    }

    /// Smallest budget the algorithm accepts for `n` players.
    pub fn min_budget(self, n: usize) -> u64 {
        match self {
            Algorithm::Svarm => svarm_min_budget(n),
            Algorithm::StratifiedSvarm | Algorithm::StratifiedSvarmUniform => stratified_min_budget(n),
            Algorithm::StratifiedSvarmPlus | Algorithm::StratifiedSvarmPlusUniform => stratified_plus_min_budget(n),
            Algorithm::ApproShapley => approshapley_min_budget(n),
            Algorithm::Exact => {
                if n >= 64 {
                    u64::MAX
                } else {
                    (1u64 << n) - 1
                }
            }
        }
    }

    /// Runs the estimator against a metered game. `budget` caps the
    /// evaluations the algorithm plans for; the meter enforces its own limit.
    pub fn run<G: Game>(self, game: &mut BudgetedGame<G>, budget: u64, rng: &mut Rng) -> Result<ShapleyVector> {
        match self {
            Algorithm::Svarm => Ok(svarm(game, budget, rng)?.shapley),
            Algorithm::StratifiedSvarm => Ok(stratified_svarm(game, budget, rng, SizeLaw::Tailored)?.shapley),
            Algorithm::StratifiedSvarmUniform => Ok(stratified_svarm(game, budget, rng, SizeLaw::Uniform)?.shapley),
            Algorithm::StratifiedSvarmPlus => {
                Ok(stratified_svarm_plus(game, budget, rng, SizeLaw::Tailored)?.shapley)
            }
            Algorithm::StratifiedSvarmPlusUniform => {
                Ok(stratified_svarm_plus(game, budget, rng, SizeLaw::Uniform)?.shapley)
            }
            Algorithm::ApproShapley => Ok(approshapley(game, budget, rng)?.shapley),
            Algorithm::Exact => {
                let minimum = self.min_budget(game.n());
                if budget < minimum {
                    return Err(Error::BudgetTooSmall { budget, minimum });
                }
                exact_shapley_budgeted(game)
            }
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase();
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == key)
            .ok_or_else(|| {
                let known: Vec<_> = Algorithm::ALL.iter().map(|a| a.name()).collect();
                Error::Domain(format!("unknown algorithm `{s}` (known: {})", known.join(", ")))
            })
    }
}
