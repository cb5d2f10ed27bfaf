//! Bradley-Terry and Elo primitives shared by every rating model.
//!
//! Ratings live on the usual Elo scale: a 400 point gap corresponds to
//! ten-to-one odds. [`expected_score`] is the Bradley-Terry win probability
//! [`bt_win_prob`] after the reparameterisation `gamma = 10^(rating / 400)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense player index, `0..n_players`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PlayerId(pub usize);

impl PlayerId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl From<usize> for PlayerId {
    fn from(i: usize) -> Self {
        PlayerId(i)
    }
}

impl std::fmt::Display for PlayerId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Result of a match from the first-listed player's perspective.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Outcome {
    Loss,
    Draw,
    Win,
}

impl Outcome {
    #[inline]
    pub fn value(self) -> f64 {
        match self {
            Outcome::Loss => 0.0,
            Outcome::Draw => 0.5,
            Outcome::Win => 1.0,
        }
    }

    /// The same result seen from the other side.
    pub fn flipped(self) -> Self {
        match self {
            Outcome::Loss => Outcome::Win,
            Outcome::Draw => Outcome::Draw,
            Outcome::Win => Outcome::Loss,
        }
    }

    /// Accepts exactly 0, 0.5 and 1.
    pub fn from_value(value: f64) -> Option<Self> {
        if value == 0.0 {
            Some(Outcome::Loss)
        } else if value == 0.5 {
            Some(Outcome::Draw)
        } else if value == 1.0 {
            Some(Outcome::Win)
        } else {
            None
        }
    }

    /// Canonical text form used in match files.
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Loss => "0",
            Outcome::Draw => "0.5",
            Outcome::Win => "1",
        }
    }
}

impl TryFrom<f64> for Outcome {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Outcome::from_value(value)
            .ok_or_else(|| Error::Domain(format!("outcome must be 0, 0.5 or 1, got {value}")))
    }
}

/// One observed game between `i` and `j`; `outcome` is the result for `i`.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct MatchRecord {
    pub i: PlayerId,
    pub j: PlayerId,
    pub outcome: Outcome,
}

impl MatchRecord {
    pub fn new(i: impl Into<PlayerId>, j: impl Into<PlayerId>, outcome: Outcome) -> Self {
        MatchRecord {
            i: i.into(),
            j: j.into(),
            outcome,
        }
    }

    pub fn is_mirror(&self) -> bool {
        self.i == self.j
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EloConfig {
    pub initial_rating: f64,
    pub k_factor: f64,
}

impl Default for EloConfig {
    fn default() -> Self {
        EloConfig {
            initial_rating: 1000.0,
            k_factor: 16.0,
        }
    }
}

impl EloConfig {
    pub fn with_k(k_factor: f64) -> Self {
        EloConfig {
            k_factor,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k_factor > 0.0 && self.k_factor.is_finite()) {
            return Err(Error::Config(format!(
                "k_factor must be positive, got {}",
                self.k_factor
            )));
        }
        if !self.initial_rating.is_finite() {
            return Err(Error::Config("initial_rating must be finite".into()));
        }
        Ok(())
    }
}

/// Bradley-Terry probability that a player of strength `gamma_i` beats one of
/// strength `gamma_j`.
pub fn bt_win_prob(gamma_i: f64, gamma_j: f64) -> Result<f64> {
    if !(gamma_i > 0.0 && gamma_j > 0.0) || !gamma_i.is_finite() || !gamma_j.is_finite() {
        return Err(Error::Domain(format!(
            "strengths must be positive and finite, got ({gamma_i}, {gamma_j})"
        )));
    }
    Ok(gamma_i / (gamma_i + gamma_j))
}

/// Elo win expectation of a player rated `r_i` against one rated `r_j`.
#[inline]
pub fn expected_score(r_i: f64, r_j: f64) -> f64 {
    1.0 / (1.0 + 10f64.powf((r_j - r_i) / 400.0))
}

/// Quantities computed while applying one Elo step.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct EloStep {
    /// Pre-update expected score of `i`.
    pub expected: f64,
    /// `outcome - expected`.
    pub residual: f64,
}

/// Ratings for `N` players, in Elo points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RatingTable(Vec<f64>);

impl RatingTable {
    pub fn new(n_players: usize, initial_rating: f64) -> Self {
        RatingTable(vec![initial_rating; n_players])
    }

    pub fn from_vec(ratings: Vec<f64>) -> Result<Self> {
        if let Some(bad) = ratings.iter().find(|r| !r.is_finite()) {
            return Err(Error::Domain(format!("non-finite rating {bad}")));
        }
        Ok(RatingTable(ratings))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, p: PlayerId) -> Result<f64> {
        self.0.get(p.0).copied().ok_or(Error::UnknownPlayer {
            id: p.0,
            n_players: self.0.len(),
        })
    }

    /// Unchecked read; panics on an out-of-range id.
    #[inline]
    pub fn rating(&self, p: PlayerId) -> f64 {
        self.0[p.0]
    }

    #[inline]
    pub(crate) fn shift(&mut self, p: PlayerId, delta: f64) {
        self.0[p.0] += delta;
    }

    pub fn check(&self, p: PlayerId) -> Result<()> {
        self.get(p).map(|_| ())
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    /// Applies one Elo update in place.
    pub fn apply(&mut self, m: &MatchRecord, k: f64) -> Result<EloStep> {
        let r_i = self.get(m.i)?;
        let r_j = self.get(m.j)?;
        let expected = expected_score(r_i, r_j);
        let o = m.outcome.value();
        let residual = o - expected;
        self.0[m.i.0] = r_i + k * residual;
        // For a mirror match the second write lands on the same slot; with a
        // draw both steps are zero, which is the only case generators emit.
        self.0[m.j.0] += k * ((1.0 - o) - (1.0 - expected));
        Ok(EloStep { expected, residual })
    }
}

/// Pure form of [`RatingTable::apply`]: returns the updated table.
pub fn elo_update(ratings: &RatingTable, m: &MatchRecord, k: f64) -> Result<(RatingTable, EloStep)> {
    if !(k > 0.0) {
        return Err(Error::Domain(format!("k must be positive, got {k}")));
    }
    let mut next = ratings.clone();
    let step = next.apply(m, k)?;
    Ok((next, step))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn bt_examples() {
        assert_eq!(bt_win_prob(1.0, 1.0).unwrap(), 0.5);
        assert_eq!(bt_win_prob(3.0, 1.0).unwrap(), 0.75);
        assert_eq!(bt_win_prob(2.0, 6.0).unwrap(), 0.25);
        assert!(matches!(bt_win_prob(0.0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(bt_win_prob(1.0, -2.0), Err(Error::Domain(_))));
    }

    #[test]
    fn expected_score_examples() {
        assert_eq!(expected_score(1000.0, 1000.0), 0.5);
        let hi = 1.0 / (1.0 + 0.1);
        assert!((expected_score(1400.0, 1000.0) - hi).abs() < 1e-15);
        assert!((expected_score(1000.0, 1400.0) - (1.0 - hi)).abs() < 1e-15);
    }

    #[test]
    fn elo_update_examples() {
        let table = RatingTable::new(2, 1000.0);
        let (next, step) = elo_update(&table, &MatchRecord::new(0, 1, Outcome::Win), 16.0).unwrap();
        assert_eq!(next.as_slice(), &[1008.0, 992.0]);
        assert_eq!(step.expected, 0.5);
        assert_eq!(step.residual, 0.5);

        for k in [0.1, 16.0, 400.0] {
            let (next, _) = elo_update(&table, &MatchRecord::new(0, 1, Outcome::Draw), k).unwrap();
            assert_eq!(next, table);
        }

        let table = RatingTable::from_vec(vec![1400.0, 1000.0]).unwrap();
        let (next, _) = elo_update(&table, &MatchRecord::new(0, 1, Outcome::Win), 16.0).unwrap();
        let delta = 16.0 * (1.0 - 1.0 / 1.1);
        assert!((next.rating(PlayerId(0)) - 1400.0 - delta).abs() < 1e-12);
        assert!((delta - 1.4545).abs() < 1e-4);
    }

    #[test]
    fn unknown_player_is_rejected() {
        let table = RatingTable::new(2, 1000.0);
        let err = elo_update(&table, &MatchRecord::new(0, 5, Outcome::Win), 16.0).unwrap_err();
        assert!(matches!(err, Error::UnknownPlayer { id: 5, n_players: 2 }));
    }

    #[test]
    fn mirror_draw_is_a_no_op() {
        let mut table = RatingTable::from_vec(vec![1234.5]).unwrap();
        table.apply(&MatchRecord::new(0, 0, Outcome::Draw), 16.0).unwrap();
        assert_eq!(table.as_slice(), &[1234.5]);
    }

    #[test]
    fn outcome_parsing() {
        assert_eq!(Outcome::from_value(0.5), Some(Outcome::Draw));
        assert_eq!(Outcome::from_value(2.0), None);
        assert!(Outcome::try_from(0.25).is_err());
        assert_eq!(Outcome::Win.flipped(), Outcome::Loss);
    }

    proptest! {
        #[test]
        fn update_conserves_total(
            ratings in proptest::collection::vec(0.0f64..3000.0, 2..8),
            i in 0usize..8, j in 0usize..8, o in 0usize..3, k in 0.01f64..64.0,
        ) {
            let n = ratings.len();
            let (i, j) = (i % n, j % n);
            let outcome = [Outcome::Loss, Outcome::Draw, Outcome::Win][o];
            prop_assume!(i != j || outcome == Outcome::Draw);
            let table = RatingTable::from_vec(ratings).unwrap();
            let before = table.total();
            let m = MatchRecord::new(i, j, outcome);
            let (next, _) = elo_update(&table, &m, k).unwrap();
            prop_assert!((next.total() - before).abs() < 1e-9);

            let mut in_place = table.clone();
            in_place.apply(&m, k).unwrap();
            prop_assert_eq!(in_place, next);
        }

        #[test]
        fn expected_score_is_symmetric(a in -2000.0f64..6000.0, d in -4000.0f64..4000.0) {
            let b = a + d;
            prop_assert!((expected_score(a, b) + expected_score(b, a) - 1.0).abs() < 1e-12);
        }

        #[test]
        fn expected_score_is_monotone(a in 0.0f64..3000.0, gap in 0.01f64..1000.0, b in 0.0f64..3000.0) {
            prop_assert!(expected_score(a + gap, b) > expected_score(a, b));
        }

        #[test]
        fn elo_matches_bradley_terry(a in 0.0f64..3000.0, b in 0.0f64..3000.0) {
            let bt = bt_win_prob(10f64.powf(a / 400.0), 10f64.powf(b / 400.0)).unwrap();
            prop_assert!((expected_score(a, b) - bt).abs() < 1e-12);
        }
    }
}
