//! mElo2 baseline: Elo plus a two-dimensional cyclic vector per player.
//!
//! `p(i beats j) = sigmoid(ln(10)/400 * (r_i - r_j) + c_i' W c_j)` with
//! `W = [[0, 1], [-1, 0]]`. The rating term is scaled so that with zero
//! cyclic vectors the prediction is the ordinary Elo expectation.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rating::{MatchRecord, PlayerId, RatingTable};

const ELO_SCALE: f64 = std::f64::consts::LN_10 / 400.0;

/// Half-width of the uniform range the cyclic vectors start in.
pub const CYCLIC_INIT_RANGE: f64 = 0.1;

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MEloConfig {
    pub initial_rating: f64,
    /// Rating step in Elo points.
    pub k: f64,
    /// Cyclic vector step, in logistic units.
    pub k_c: f64,
}

impl Default for MEloConfig {
    fn default() -> Self {
        MEloConfig {
            initial_rating: 1000.0,
            k: 16.0,
            k_c: 0.1,
        }
    }
}

impl MEloConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.k > 0.0 && self.k.is_finite()) || !(self.k_c > 0.0 && self.k_c.is_finite()) {
            return Err(Error::Config(format!(
                "mElo2 rates must be positive, got k = {}, k_c = {}",
                self.k, self.k_c
            )));
        }
        if !self.initial_rating.is_finite() {
            return Err(Error::Config("initial_rating must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MEloState {
    pub config: MEloConfig,
    pub ratings: RatingTable,
    pub cyc: Vec<[f64; 2]>,
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// `a' W b` for `W = [[0, 1], [-1, 0]]`.
#[inline]
fn pairing(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

impl MEloState {
    /// Fresh state with cyclic vectors drawn uniformly from
    /// `[-CYCLIC_INIT_RANGE, CYCLIC_INIT_RANGE]`.
    pub fn new<R: Rng + ?Sized>(n_players: usize, config: MEloConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        if n_players == 0 {
            return Err(Error::Config("at least one player is required".into()));
        }
        let cyc = (0..n_players)
            .map(|_| {
                [
                    rng.gen_range(-CYCLIC_INIT_RANGE..=CYCLIC_INIT_RANGE),
                    rng.gen_range(-CYCLIC_INIT_RANGE..=CYCLIC_INIT_RANGE),
                ]
            })
            .collect();
        Ok(MEloState {
            config,
            ratings: RatingTable::new(n_players, config.initial_rating),
            cyc,
        })
    }

    pub fn from_parts(config: MEloConfig, ratings: RatingTable, cyc: Vec<[f64; 2]>) -> Result<Self> {
        config.validate()?;
        if cyc.len() != ratings.len() {
            return Err(Error::Format("one cyclic vector per player is required".into()));
        }
        if cyc.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Format("non-finite cyclic vector entry".into()));
        }
        Ok(MEloState { config, ratings, cyc })
    }

    pub fn n_players(&self) -> usize {
        self.ratings.len()
    }

    pub fn predict(&self, i: PlayerId, j: PlayerId) -> f64 {
        let logit = ELO_SCALE * (self.ratings.rating(i) - self.ratings.rating(j))
            + pairing(self.cyc[i.0], self.cyc[j.0]);
        sigmoid(logit)
    }

    /// One gradient step on the log-likelihood; returns `outcome - prediction`.
    pub fn update(&mut self, m: &MatchRecord) -> Result<f64> {
        self.ratings.check(m.i)?;
        self.ratings.check(m.j)?;
        let (i, j) = (m.i.0, m.j.0);
        let delta = m.outcome.value() - self.predict(m.i, m.j);
        let (k, k_c) = (self.config.k, self.config.k_c);

        self.ratings.shift(m.i, k * delta);
        self.ratings.shift(m.j, -k * delta);

        let (ci, cj) = (self.cyc[i], self.cyc[j]);
        // W c_j = (c_j[1], -c_j[0]); W' c_i = (-c_i[1], c_i[0]).
        self.cyc[i][0] += k_c * delta * cj[1];
        self.cyc[i][1] -= k_c * delta * cj[0];
        self.cyc[j][0] += k_c * delta * ci[1];
        self.cyc[j][1] -= k_c * delta * ci[0];
        Ok(delta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rating::{expected_score, Outcome};
    use crate::rng::seeded;
    use proptest::prelude::*;

    fn state(ratings: Vec<f64>, cyc: Vec<[f64; 2]>) -> MEloState {
        MEloState::from_parts(MEloConfig::default(), RatingTable::from_vec(ratings).unwrap(), cyc).unwrap()
    }

    #[test]
    fn predict_examples() {
        let s = state(vec![1000.0, 1000.0], vec![[0.3, -0.2], [0.3, -0.2]]);
        assert!((s.predict(PlayerId(0), PlayerId(1)) - 0.5).abs() < 1e-15);

        let s = state(vec![1000.0, 1000.0], vec![[1.0, 0.0], [0.0, 1.0]]);
        assert!((s.predict(PlayerId(0), PlayerId(1)) - 0.731_058_578_630_004_9).abs() < 1e-12);

        let s = state(vec![1400.0, 1000.0], vec![[0.0; 2]; 2]);
        let p = s.predict(PlayerId(0), PlayerId(1));
        assert!((p - expected_score(1400.0, 1000.0)).abs() < 1e-12);
        assert!((p - 0.9091).abs() < 1e-4);
    }

    #[test]
    fn update_examples() {
        let mut s = state(vec![1000.0, 1000.0], vec![[0.0; 2]; 2]);
        s.update(&MatchRecord::new(0, 1, Outcome::Win)).unwrap();
        assert_eq!(s.ratings.as_slice(), &[1008.0, 992.0]);
        assert_eq!(s.cyc, vec![[0.0; 2]; 2]);

        // A draw at even odds carries no error.
        let mut s = state(vec![1000.0, 1000.0], vec![[0.2, 0.1], [0.2, 0.1]]);
        let before = s.clone();
        let delta = s.update(&MatchRecord::new(0, 1, Outcome::Draw)).unwrap();
        assert_eq!(delta, 0.0);
        assert_eq!(s, before);

        assert!(s.update(&MatchRecord::new(0, 9, Outcome::Win)).is_err());
    }

    #[test]
    fn init_range() {
        let s = MEloState::new(50, MEloConfig::default(), &mut seeded(4)).unwrap();
        assert!(s.cyc.iter().flatten().all(|v| v.abs() <= CYCLIC_INIT_RANGE));
        assert!(s.cyc.iter().flatten().any(|&v| v != 0.0));
        assert_eq!(s, MEloState::new(50, MEloConfig::default(), &mut seeded(4)).unwrap());
    }

    #[test]
    fn zero_cyclic_vectors_reduce_to_elo() {
        let mut melo = state(vec![1000.0; 3], vec![[0.0; 2]; 3]);
        let mut elo = RatingTable::new(3, 1000.0);
        for t in 0..300usize {
            let m = MatchRecord::new(t % 3, (t + 1) % 3, if t % 5 < 2 { Outcome::Win } else { Outcome::Loss });
            melo.update(&m).unwrap();
            elo.apply(&m, 16.0).unwrap();
        }
        for i in 0..3 {
            for j in 0..3 {
                let e = expected_score(elo.rating(PlayerId(i)), elo.rating(PlayerId(j)));
                assert!((melo.predict(PlayerId(i), PlayerId(j)) - e).abs() < 1e-12);
            }
        }
    }

    proptest! {
        #[test]
        fn antisymmetric_and_conserving(
            seed in 0u64..1000,
            steps in proptest::collection::vec((0usize..5, 0usize..5, 0usize..3), 1..60),
        ) {
            let mut s = MEloState::new(5, MEloConfig::default(), &mut seeded(seed)).unwrap();
            let total = s.ratings.total();
            for (i, j, o) in steps {
                if i == j {
                    continue;
                }
                let m = MatchRecord::new(i, j, [Outcome::Loss, Outcome::Draw, Outcome::Win][o]);
                s.update(&m).unwrap();
                prop_assert!((s.ratings.total() - total).abs() < 1e-9);
                for a in 0..5 {
                    for b in 0..5 {
                        let sum = s.predict(PlayerId(a), PlayerId(b)) + s.predict(PlayerId(b), PlayerId(a));
                        prop_assert!((sum - 1.0).abs() < 1e-12);
                    }
                }
            }
        }
    }
}
