use rand::Rng;

use super::Dataset;
use crate::error::{Error, Result};
use crate::rating::{MatchRecord, Outcome};
use crate::rng::seeded;

pub const RPS_NAMES: [&str; 3] = ["rock", "paper", "scissors"];

/// Result for strategy `a` against `b`, with rock = 0, paper = 1, scissors = 2.
pub fn rps_outcome(a: usize, b: usize) -> Outcome {
    // Each strategy beats the one just below it, modulo 3.
    match (3 + a - b) % 3 {
        0 => Outcome::Draw,
        1 => Outcome::Win,
        _ => Outcome::Loss,
    }
}

pub fn gen_rps(n_matches: usize, seed: u64) -> Result<Dataset> {
    if n_matches == 0 {
        return Err(Error::Config("n_matches must be at least 1".into()));
    }
    let mut rng = seeded(seed);
    let matches = (0..n_matches)
        .map(|_| {
            let a = rng.gen_range(0..3);
            let b = rng.gen_range(0..3);
            MatchRecord::new(a, b, rps_outcome(a, b))
        })
        .collect();
    Dataset::new(RPS_NAMES.iter().map(|s| s.to_string()).collect(), matches)
}
