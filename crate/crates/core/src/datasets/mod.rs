//! Match datasets: synthetic generators, CSV ingestion and fold splits.

mod acg;
mod folds;
mod io;
mod rps;

pub use acg::{acg_effective_score, acg_enumerate_teams, acg_win_prob, gen_acg, AcgTeam, ACG_BONUS, ACG_POOL_SIZE};
pub use folds::{load_folds, make_folds, save_folds, FoldSplit, FOLD_HEADER};
pub use io::{convert_matches, load_matches, save_matches, save_player_names, ColumnMapping, MATCH_HEADER, PLAYER_HEADER};
pub(crate) use io::write_atomic as io_write_atomic;
pub use rps::{gen_rps, rps_outcome, RPS_NAMES};

use crate::error::{Error, Result};
use crate::rating::MatchRecord;

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub player_names: Vec<String>,
    pub matches: Vec<MatchRecord>,
}

impl Dataset {
    pub fn new(player_names: Vec<String>, matches: Vec<MatchRecord>) -> Result<Self> {
        let n = player_names.len();
        if let Some(bad) = matches.iter().find(|m| m.i.0 >= n || m.j.0 >= n) {
            return Err(Error::UnknownPlayer {
                id: bad.i.0.max(bad.j.0),
                n_players: n,
            });
        }
        Ok(Dataset { player_names, matches })
    }

    pub fn n_players(&self) -> usize {
        self.player_names.len()
    }

    pub fn len(&self) -> usize {
        self.matches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matches.is_empty()
    }
}

/// Built-in synthetic games.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Generator {
    Rps,
    Acg,
}

impl Generator {
    pub fn name(self) -> &'static str {
        match self {
            Generator::Rps => "rps",
            Generator::Acg => "acg",
        }
    }

    pub fn generate(self, n_matches: usize, seed: u64) -> Result<Dataset> {
        match self {
            Generator::Rps => gen_rps(n_matches, seed),
            Generator::Acg => gen_acg(n_matches, seed),
        }
    }
}

impl std::str::FromStr for Generator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rps" => Ok(Generator::Rps),
            "acg" => Ok(Generator::Acg),
            other => Err(Error::Config(format!("unknown generator {other:?} (expected rps or acg)"))),
        }
    }
}
