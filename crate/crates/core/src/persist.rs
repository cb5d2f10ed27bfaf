//! Versioned JSON documents for trained model states.
//!
//! ```json
//! { "schema_version": 1, "player_names": [...], "state": { "model": "elo-rcc", ... } }
//! ```
//!
//! Floats are written in shortest round-trip form, so a save/load cycle
//! reproduces every value exactly.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::datasets::io_write_atomic;
use crate::error::{Error, Result};
use crate::melo::{MEloConfig, MEloState};
use crate::model::{EloModel, Model};
use crate::rating::{EloConfig, PlayerId, RatingTable};
use crate::rcc::{CategoryUpdate, CounterTable, RccConfig, RccState};

pub const SCHEMA_VERSION: u64 = 1;

#[derive(Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case", deny_unknown_fields)]
enum StateBody {
    Elo {
        config: EloConfig,
        ratings: Vec<f64>,
    },
    EloRcc {
        config: RccConfig,
        ratings: Vec<f64>,
        counter_table: Vec<Vec<f64>>,
        expected_residuals: Vec<Vec<f64>>,
        category_distributions: Vec<Vec<f64>>,
        /// Present for the softmax category update, which learns logits.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        category_logits: Option<Vec<Vec<f64>>>,
    },
    #[serde(rename = "melo2")]
    MElo2 {
        config: MEloConfig,
        ratings: Vec<f64>,
        cyclic: Vec<[f64; 2]>,
    },
}

#[derive(Serialize, Deserialize)]
struct Document {
    schema_version: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    player_names: Option<Vec<String>>,
    state: StateBody,
}

/// A model state plus the names of its players, if known.
#[derive(Clone, Debug, PartialEq)]
pub struct SavedModel {
    pub model: Model,
    pub player_names: Option<Vec<String>>,
}

fn body_of(model: &Model) -> StateBody {
    match model {
        Model::Elo(e) => StateBody::Elo {
            config: e.config,
            ratings: e.ratings.as_slice().to_vec(),
        },
        Model::EloRcc(s) => StateBody::EloRcc {
            config: *s.config(),
            ratings: s.ratings().as_slice().to_vec(),
            counter_table: s.table().rows(),
            expected_residuals: s.residual_rows(),
            category_distributions: s.distribution_rows(),
            category_logits: s.logits(PlayerId(0)).map(|_| s.category_rows()),
        },
        Model::MElo2(s) => StateBody::MElo2 {
            config: s.config,
            ratings: s.ratings.as_slice().to_vec(),
            cyclic: s.cyc.clone(),
        },
    }
}

fn model_of(body: StateBody) -> Result<Model> {
    let ratings = |r: Vec<f64>| RatingTable::from_vec(r).map_err(|e| Error::Format(e.to_string()));
    Ok(match body {
        StateBody::Elo { config, ratings: r } => {
            config.validate()?;
            Model::Elo(EloModel { config, ratings: ratings(r)? })
        }
        StateBody::EloRcc {
            config,
            ratings: r,
            counter_table,
            expected_residuals,
            category_distributions,
            category_logits,
        } => {
            let rows = match config.category_update {
                CategoryUpdate::Convex => category_distributions,
                CategoryUpdate::Softmax => category_logits
                    .ok_or_else(|| Error::Format("softmax category update needs category_logits".into()))?,
            };
            Model::EloRcc(RccState::from_parts(
                config,
                ratings(r)?,
                CounterTable::from_rows(&counter_table)?,
                &expected_residuals,
                &rows,
            )?)
        }
        StateBody::MElo2 { config, ratings: r, cyclic } => Model::MElo2(MEloState::from_parts(config, ratings(r)?, cyclic)?),
    })
}

pub fn model_to_json(model: &Model, player_names: Option<&[String]>) -> Result<String> {
    if let Some(names) = player_names {
        if names.len() != model.n_players() {
            return Err(Error::Format(format!(
                "{} player names for {} players",
                names.len(),
                model.n_players()
            )));
        }
    }
    let doc = Document {
        schema_version: SCHEMA_VERSION,
        player_names: player_names.map(<[String]>::to_vec),
        state: body_of(model),
    };
    serde_json::to_string_pretty(&doc).map_err(|e| Error::Format(e.to_string()))
}

pub fn model_from_json(text: &str) -> Result<SavedModel> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
    let version = value
        .get("schema_version")
        .and_then(serde_json::Value::as_u64)
        .ok_or_else(|| Error::Format("missing schema_version".into()))?;
    if version != SCHEMA_VERSION {
        return Err(Error::SchemaVersion {
            found: version,
            expected: SCHEMA_VERSION,
        });
    }
    let doc: Document = serde_json::from_value(value).map_err(|e| Error::Format(e.to_string()))?;
    let model = model_of(doc.state)?;
    if let Some(names) = &doc.player_names {
        if names.len() != model.n_players() {
            return Err(Error::Format("player_names does not match the number of players".into()));
        }
    }
    Ok(SavedModel {
        model,
        player_names: doc.player_names,
    })
}

pub fn save_model(model: &Model, player_names: Option<&[String]>, path: impl AsRef<Path>) -> Result<()> {
    let mut text = model_to_json(model, player_names)?;
    text.push('\n');
    io_write_atomic(path.as_ref(), text.as_bytes())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<SavedModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    model_from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::gen_rps;
    use crate::model::ModelSpec;
    use crate::rng::seeded;

    fn trained(spec: ModelSpec) -> Model {
        let d = gen_rps(3000, 1).unwrap();
        let mut rng = seeded(2);
        let mut model = spec.build(3, &mut rng).unwrap();
        for m in &d.matches {
            model.observe(m, &mut rng).unwrap();
        }
        model
    }

    #[test]
    fn round_trip_is_exact() {
        for spec in [
            ModelSpec::Elo(EloConfig::default()),
            ModelSpec::EloRcc(RccConfig { m: 5, eta_t: 0.01, ..Default::default() }),
            ModelSpec::EloRcc(RccConfig {
                m: 4,
                category_update: CategoryUpdate::Convex,
                ..Default::default()
            }),
            ModelSpec::MElo2(MEloConfig::default()),
        ] {
            let model = trained(spec);
            let names: Vec<String> = ["rock", "paper", "scissors"].map(String::from).to_vec();
            let text = model_to_json(&model, Some(&names)).unwrap();
            let back = model_from_json(&text).unwrap();
            assert_eq!(back.model, model, "{}", spec.name());
            assert_eq!(back.player_names.as_deref(), Some(&names[..]));
        }
    }

    #[test]
    fn rejects_other_versions_and_garbage() {
        let model = trained(ModelSpec::Elo(EloConfig::default()));
        let text = model_to_json(&model, None).unwrap().replace("\"schema_version\": 1", "\"schema_version\": 7");
        assert!(matches!(model_from_json(&text), Err(Error::SchemaVersion { found: 7, expected: 1 })));
        assert!(matches!(model_from_json("{ not json"), Err(Error::Format(_))));
        assert!(matches!(model_from_json("{}"), Err(Error::Format(_))));
    }

    #[test]
    fn rejects_broken_invariants() {
        let model = trained(ModelSpec::EloRcc(RccConfig::with_m(2)));
        let mut value: serde_json::Value = serde_json::from_str(&model_to_json(&model, None).unwrap()).unwrap();
        value["state"]["counter_table"][0][1] = serde_json::json!(0.3);
        value["state"]["counter_table"][1][0] = serde_json::json!(0.2);
        assert!(model_from_json(&value.to_string()).is_err());

        let mut value: serde_json::Value = serde_json::from_str(&model_to_json(&model, None).unwrap()).unwrap();
        value["state"].as_object_mut().unwrap().remove("category_logits");
        assert!(model_from_json(&value.to_string()).is_err());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("state.json");
        let model = trained(ModelSpec::EloRcc(RccConfig::with_m(3)));
        save_model(&model, None, &p).unwrap();
        assert_eq!(load_model(&p).unwrap().model, model);
        assert!(load_model(dir.path().join("missing.json")).unwrap_err().is_io());
    }
}
