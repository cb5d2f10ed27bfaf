//! The three rating models behind one interface.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::evaluation::{predicted_relations, RelationMatrix};
use crate::melo::{MEloConfig, MEloState};
use crate::rating::{expected_score, EloConfig, MatchRecord, PlayerId, RatingTable};
use crate::rcc::{RccConfig, RccState};
use crate::rng::SeededRng;

/// A model type together with its hyperparameters.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum ModelSpec {
    Elo(EloConfig),
    EloRcc(RccConfig),
    #[serde(rename = "melo2")]
    MElo2(MEloConfig),
}

impl ModelSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::Elo(_) => "elo",
            ModelSpec::EloRcc(_) => "elo-rcc",
            ModelSpec::MElo2(_) => "melo2",
        }
    }

    /// Short hyperparameter label, e.g. `K=16` or `M=81`.
    pub fn param_label(&self) -> String {
        match self {
            ModelSpec::Elo(c) => format!("K={}", c.k_factor),
            ModelSpec::EloRcc(c) => format!("M={}", c.m),
            ModelSpec::MElo2(c) => format!("K={}", c.k),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ModelSpec::Elo(c) => c.validate(),
            ModelSpec::EloRcc(c) => c.validate(),
            ModelSpec::MElo2(c) => c.validate(),
        }
    }

    /// Fresh model for `n_players`; `rng` is only drawn from by models with
    /// random initialisation.
    pub fn build(&self, n_players: usize, rng: &mut SeededRng) -> Result<Model> {
        Ok(match *self {
            ModelSpec::Elo(config) => {
                config.validate()?;
                Model::Elo(EloModel {
                    config,
                    ratings: RatingTable::new(n_players, config.initial_rating),
                })
            }
            ModelSpec::EloRcc(config) => Model::EloRcc(RccState::new(n_players, config)?),
            ModelSpec::MElo2(config) => Model::MElo2(MEloState::new(n_players, config, rng)?),
        })
    }
}

/// Plain Elo with a fixed K-factor.
#[derive(Clone, Debug, PartialEq)]
pub struct EloModel {
    pub config: EloConfig,
    pub ratings: RatingTable,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Model {
    Elo(EloModel),
    EloRcc(RccState),
    MElo2(MEloState),
}

impl Model {
    pub fn n_players(&self) -> usize {
        match self {
            Model::Elo(m) => m.ratings.len(),
            Model::EloRcc(s) => s.n_players(),
            Model::MElo2(s) => s.n_players(),
        }
    }

    pub fn ratings(&self) -> &RatingTable {
        match self {
            Model::Elo(m) => &m.ratings,
            Model::EloRcc(s) => s.ratings(),
            Model::MElo2(s) => &s.ratings,
        }
    }

    pub fn observe(&mut self, m: &MatchRecord, rng: &mut SeededRng) -> Result<()> {
        match self {
            Model::Elo(e) => e.ratings.apply(m, e.config.k_factor).map(drop),
            Model::EloRcc(s) => s.process_match(m, rng).map(drop),
            Model::MElo2(s) => s.update(m).map(drop),
        }
    }

    pub fn predict(&self, i: PlayerId, j: PlayerId) -> f64 {
        match self {
            Model::Elo(e) => expected_score(e.ratings.rating(i), e.ratings.rating(j)),
            Model::EloRcc(s) => s.predict_win_prob(i, j),
            Model::MElo2(s) => s.predict(i, j),
        }
    }

    pub fn predicted_relations(&self) -> RelationMatrix {
        let n = self.n_players();
        match self {
            Model::EloRcc(s) => {
                let p = s.predictor();
                predicted_relations(n, |i, j| p.predict(i, j))
            }
            _ => predicted_relations(n, |i, j| self.predict(i, j)),
        }
    }
}
