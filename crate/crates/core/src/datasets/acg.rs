//! Advanced Combination Game.
//!
//! A team is three distinct elements from the pool `1..=20`; its score is the
//! element sum and its category is `score mod 3` (rock 0, paper 1,
//! scissors 2). When sampling a result, a team whose category beats the
//! opponent's category plays with `ACG_BONUS` extra points, and the win
//! probability is `s_a^2 / (s_a^2 + s_b^2)` over those effective scores.

use rand::Rng;

use super::Dataset;
use crate::error::{Error, Result};
use crate::rating::{MatchRecord, Outcome};
use crate::rng::seeded;

pub const ACG_POOL_SIZE: u32 = 20;
pub const ACG_BONUS: u32 = 60;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub struct AcgTeam {
    pub elements: [u32; 3],
    pub score: u32,
    pub category: u32,
}

impl AcgTeam {
    pub fn new(mut elements: [u32; 3]) -> Result<Self> {
        elements.sort_unstable();
        if elements[0] < 1 || elements[2] > ACG_POOL_SIZE || elements[0] == elements[1] || elements[1] == elements[2] {
            return Err(Error::Domain(format!(
                "a team needs three distinct elements in 1..={ACG_POOL_SIZE}, got {elements:?}"
            )));
        }
        let score = elements.iter().sum::<u32>();
        Ok(AcgTeam {
            elements,
            score,
            category: score % 3,
        })
    }

    /// The category this team receives a bonus against.
    pub fn beats(&self) -> u32 {
        (self.category + 2) % 3
    }

    pub fn name(&self) -> String {
        let [a, b, c] = self.elements;
        format!("{a}-{b}-{c}")
    }
}

/// All `C(20, 3) = 1140` teams in lexicographic order.
pub fn acg_enumerate_teams() -> Vec<AcgTeam> {
    let mut teams = Vec::with_capacity(1140);
    for a in 1..=ACG_POOL_SIZE {
        for b in a + 1..=ACG_POOL_SIZE {
            for c in b + 1..=ACG_POOL_SIZE {
                teams.push(AcgTeam::new([a, b, c]).expect("distinct in-range elements"));
            }
        }
    }
    teams
}

pub fn acg_effective_score(team: &AcgTeam, opponent_category: u32) -> Result<u32> {
    if opponent_category > 2 {
        return Err(Error::Domain(format!("category must be 0, 1 or 2, got {opponent_category}")));
    }
    Ok(if opponent_category == team.beats() {
        team.score + ACG_BONUS
    } else {
        team.score
    })
}

pub fn acg_win_prob(a: &AcgTeam, b: &AcgTeam) -> f64 {
    let sa = if b.category == a.beats() { a.score + ACG_BONUS } else { a.score } as f64;
    let sb = if a.category == b.beats() { b.score + ACG_BONUS } else { b.score } as f64;
    let (sa2, sb2) = (sa * sa, sb * sb);
    sa2 / (sa2 + sb2)
}

/// One player per team; both teams of every match are drawn uniformly and
/// the winner is sampled from [`acg_win_prob`]. A team drawn against itself
/// is recorded as a draw.
pub fn gen_acg(n_matches: usize, seed: u64) -> Result<Dataset> {
    if n_matches == 0 {
        return Err(Error::Config("n_matches must be at least 1".into()));
    }
    let teams = acg_enumerate_teams();
    let n = teams.len();
    let mut rng = seeded(seed);
    let matches = (0..n_matches)
        .map(|_| {
            let i = rng.gen_range(0..n);
            let j = rng.gen_range(0..n);
            let p = acg_win_prob(&teams[i], &teams[j]);
            let u: f64 = rng.gen();
            let outcome = if i == j {
                Outcome::Draw
            } else if u < p {
                Outcome::Win
            } else {
                Outcome::Loss
            };
            MatchRecord::new(i, j, outcome)
        })
        .collect();
    Dataset::new(teams.iter().map(AcgTeam::name).collect(), matches)
}
