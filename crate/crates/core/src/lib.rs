//! Rating systems for games with intransitive win relations.
//!
//! The crate provides plain Elo, the mElo2 baseline and Elo-RCC, an online
//! learner that adds an antisymmetric counter table over learned player
//! categories to Elo ratings. Around the models sit synthetic match
//! generators, CSV ingestion, fold management and the strength-relation
//! accuracy harness used to compare them.
//!
//! ```
//! use elo_rcc::{rng, MatchRecord, Outcome, RccConfig, RccState, PlayerId};
//!
//! let mut state = RccState::new(3, RccConfig::with_m(3)).unwrap();
//! let mut stream = rng::seeded(7);
//! state.process_match(&MatchRecord::new(0, 1, Outcome::Win), &mut stream).unwrap();
//! assert!(state.predict_win_prob(PlayerId(0), PlayerId(1)) > 0.5);
//! ```

pub mod datasets;
pub mod error;
pub mod evaluation;
pub mod melo;
pub mod model;
pub mod persist;
pub mod rating;
pub mod rcc;
pub mod rng;

pub use datasets::{Dataset, FoldSplit, Generator};
pub use error::{Error, Result};
pub use evaluation::{run_cv, AccuracyReport, Relation, RelationMatrix, ReportRow};
pub use melo::{MEloConfig, MEloState};
pub use model::{Model, ModelSpec};
pub use rating::{bt_win_prob, elo_update, expected_score, EloConfig, MatchRecord, Outcome, PlayerId, RatingTable};
pub use rcc::{CategoryUpdate, RccConfig, RccState};
