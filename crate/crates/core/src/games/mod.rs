//! Synthetic games with closed-form Shapley values, table-backed games, and
//! games served by an external process.

mod airport;
mod bridge;
mod shoe;
mod soug;
mod table;

pub use airport::{AirportGame, AIRPORT_BLOCKS, AIRPORT_SHAPLEY};
pub use bridge::{BridgeGame, BridgeServer};
pub use shoe::ShoeGame;
pub use soug::SougGame;
pub use table::{load_table_game, save_table_game, TableGame, TABLE_MAX_PLAYERS};

use crate::error::{Error, Result};
use crate::game::{Game, ShapleyVector};

/// Exact Shapley values of a game that has a closed form.
pub fn closed_form_shapley<G: Game + ?Sized>(game: &G) -> Result<ShapleyVector> {
    game.closed_form_shapley()
        .ok_or_else(|| Error::Unsupported("game has no closed-form Shapley values".into()))
}
