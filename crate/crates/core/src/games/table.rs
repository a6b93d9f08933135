use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::coalition::Coalition;
use crate::error::{domain, Error, Result};
use crate::exact::SHAPLEY_ENUMERATION_LIMIT;
use crate::game::Game;

/// Largest player count a table file may describe.
pub const TABLE_MAX_PLAYERS: usize = SHAPLEY_ENUMERATION_LIMIT;

/// A game stored as a dense array of `2^n` values indexed by bitmask.
#[derive(Debug, Clone, PartialEq)]
pub struct TableGame {
    n: usize,
    values: Vec<f64>,
}

impl TableGame {
    pub fn new(n: usize, values: Vec<f64>) -> Result<Self> {
        if n == 0 || n > TABLE_MAX_PLAYERS {
            return Err(Error::TooLarge {
                n,
                limit: TABLE_MAX_PLAYERS,
            });
        }
        if values.len() != 1 << n {
            return Err(domain(format!(
                "a table over {n} players needs {} values, got {}",
                1u64 << n,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(domain("table values must be finite"));
        }
        if values[0] != 0.0 {
            return Err(Error::NonZeroEmptySet(values[0]));
        }
        Ok(Self { n, values })
    }

    /// Tabulates every coalition of `game`.
    pub fn from_game<G: Game + ?Sized>(game: &G) -> Result<Self> {
        let n = game.n();
        if n == 0 || n > TABLE_MAX_PLAYERS {
            return Err(Error::TooLarge {
                n,
                limit: TABLE_MAX_PLAYERS,
            });
        }
        let mut values = Vec::with_capacity(1 << n);
        values.push(0.0);
        for bits in 1..(1u128 << n) {
            values.push(game.value(Coalition::from_bits(n, bits)?)?);
        }
        Self::new(n, values)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Text form: `n=<n>` and then one `<hex mask> <value>` line per
    /// coalition in ascending mask order.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.values.len() * 24);
        let _ = writeln!(out, "n={}", self.n);
        for (mask, v) in self.values.iter().enumerate() {
            let _ = writeln!(out, "{mask:x} {v}");
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let parse_err = |line: usize, msg: String| Error::Parse { line, msg };
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

        let (line_no, header) = lines
            .next()
            .ok_or_else(|| parse_err(1, "missing `n=<int>` header".into()))?;
        let n: usize = header
            .strip_prefix("n=")
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| parse_err(line_no, format!("expected `n=<int>`, found `{header}`")))?;
        if n == 0 || n > TABLE_MAX_PLAYERS {
            return Err(Error::TooLarge {
                n,
                limit: TABLE_MAX_PLAYERS,
            });
        }

        let size = 1usize << n;
        let mut values = Vec::with_capacity(size);
        for (line_no, line) in lines {
            let mut fields = line.split_whitespace();
            let (Some(mask), Some(value), None) = (fields.next(), fields.next(), fields.next()) else {
                return Err(parse_err(line_no, format!("expected `<hex mask> <value>`, found `{line}`")));
            };
            let mask_digits = mask.strip_prefix("0x").unwrap_or(mask);
            let mask = usize::from_str_radix(mask_digits, 16)
                .map_err(|e| parse_err(line_no, format!("bad mask `{mask}`: {e}")))?;
            let value: f64 = value
                .parse()
                .map_err(|e| parse_err(line_no, format!("bad value `{value}`: {e}")))?;
            if !value.is_finite() {
                return Err(parse_err(line_no, format!("non-finite value {value}")));
            }
            if mask >= size {
                return Err(parse_err(line_no, format!("mask {mask:#x} out of range for n={n}")));
            }
            match mask.cmp(&values.len()) {
                std::cmp::Ordering::Equal => values.push(value),
                std::cmp::Ordering::Greater => {
                    return Err(Error::ValueMissing {
                        mask: values.len() as u128,
                    })
                }
                std::cmp::Ordering::Less => {
                    return Err(parse_err(line_no, format!("mask {mask:#x} out of ascending order")))
                }
            }
        }
        if values.len() < size {
            return Err(Error::ValueMissing {
                mask: values.len() as u128,
            });
        }
        Self::new(n, values)
    }
}

impl Game for TableGame {
    fn n(&self) -> usize {
        self.n
    }

    fn value(&self, coalition: Coalition) -> Result<f64> {
        Ok(self.values[coalition.bits() as usize])
    }
}

pub fn load_table_game(path: impl AsRef<Path>) -> Result<TableGame> {
    TableGame::parse(&fs::read_to_string(path)?)
}

pub fn save_table_game(game: &TableGame, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, game.to_text())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::exact_shapley;
    use crate::games::ShoeGame;
    use proptest::prelude::*;

    const GLOVE: &str = "\
# left gloves: players 0 and 1, right glove: player 2
n=3
0 0
1 0
2 0
3 0
4 0
5 1
6 1
7 1
";

    #[test]
    fn glove_table() {
        let g = TableGame::parse(GLOVE).unwrap();
        let phi = exact_shapley(&g).unwrap();
        for (got, want) in phi.iter().zip([1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn shoe_round_trip_through_file() {
        let shoe = ShoeGame::new(4).unwrap();
        let table = TableGame::from_game(&shoe).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("shoe.txt");
        save_table_game(&table, &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 17);
        assert_eq!(text.lines().filter(|l| !l.starts_with("n=")).count(), 16);
        let back = load_table_game(&path).unwrap();
        for bits in 0..16u128 {
            let c = Coalition::from_bits(4, bits).unwrap();
            assert_eq!(back.value(c).unwrap(), shoe.value(c).unwrap());
        }
    }

    #[test]
    fn nonzero_empty_set() {
        let text = GLOVE.replacen("\n0 0\n", "\n0 0.1\n", 1);
        assert!(matches!(TableGame::parse(&text), Err(Error::NonZeroEmptySet(v)) if v == 0.1));
    }

    #[test]
    fn missing_and_malformed_lines() {
        let missing = GLOVE.replace("4 0\n", "");
        assert!(matches!(TableGame::parse(&missing), Err(Error::ValueMissing { mask: 4 })));
        let truncated = GLOVE.replace("7 1\n", "");
        assert!(matches!(TableGame::parse(&truncated), Err(Error::ValueMissing { mask: 7 })));
        let garbage = GLOVE.replace("5 1", "5 one");
        assert!(matches!(TableGame::parse(&garbage), Err(Error::Parse { line: 8, .. })));
        let header = GLOVE.replace("n=3", "players=3");
        assert!(matches!(TableGame::parse(&header), Err(Error::Parse { line: 2, .. })));
        let repeated = GLOVE.replace("3 0\n", "2 0\n");
        assert!(matches!(TableGame::parse(&repeated), Err(Error::Parse { line: 6, .. })));
    }

    proptest! {
        #[test]
        fn text_round_trip_is_bit_exact(
            n in 1usize..7,
            raw in proptest::collection::vec(proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO, 64),
        ) {
            let mut values = raw[..1 << n].to_vec();
            values[0] = 0.0;
            let table = TableGame::new(n, values).unwrap();
            let back = TableGame::parse(&table.to_text()).unwrap();
            for (a, b) in table.values().iter().zip(back.values()) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }
}
