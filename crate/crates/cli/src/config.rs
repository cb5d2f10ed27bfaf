//! Run configuration: flags override the config file, which overrides the
//! defaults.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, ValueEnum};
use elo_rcc::{CategoryUpdate, EloConfig, Generator, MEloConfig, ModelSpec, RccConfig};
use serde::{Deserialize, Serialize};

pub const DEFAULT_EPOCHS: usize = 100;
pub const DEFAULT_FOLDS: usize = 5;
pub const DEFAULT_N: usize = 100_000;

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Elo,
    EloRcc,
    Melo2,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeneratorKind {
    Rps,
    Acg,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CategoryUpdateKind {
    Softmax,
    Convex,
}

impl From<CategoryUpdateKind> for CategoryUpdate {
    fn from(c: CategoryUpdateKind) -> Self {
        match c {
            CategoryUpdateKind::Softmax => CategoryUpdate::Softmax,
            CategoryUpdateKind::Convex => CategoryUpdate::Convex,
        }
    }
}

impl From<GeneratorKind> for Generator {
    fn from(g: GeneratorKind) -> Self {
        match g {
            GeneratorKind::Rps => Generator::Rps,
            GeneratorKind::Acg => Generator::Acg,
        }
    }
}

/// Every field is optional so that a config file and the command line can be
/// layered.
#[derive(Clone, Debug, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Rating model.
    #[arg(long, value_enum)]
    pub model: Option<ModelKind>,
    /// Elo / mElo2 K-factor.
    #[arg(long)]
    pub k: Option<f64>,
    /// Number of Elo-RCC counter categories.
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub eta_r: Option<f64>,
    #[arg(long)]
    pub eta_t: Option<f64>,
    #[arg(long)]
    pub eta_c: Option<f64>,
    /// Elo-RCC category distribution update.
    #[arg(long, value_enum)]
    pub category_update: Option<CategoryUpdateKind>,
    /// mElo2 cyclic-vector rate.
    #[arg(long)]
    pub k_c: Option<f64>,
    #[arg(long)]
    pub initial_rating: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Number of cross-validation folds when no fold file is given.
    #[arg(long = "n-folds")]
    pub folds: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Match CSV.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Player name map (`id,name`) for the match CSV.
    #[arg(long)]
    pub players: Option<PathBuf>,
    /// Fold CSV (`match_index,fold`).
    #[arg(long = "folds")]
    pub folds_file: Option<PathBuf>,
    /// Generate the dataset instead of loading one.
    #[arg(long, value_enum, conflicts_with = "dataset")]
    pub generator: Option<GeneratorKind>,
    /// Matches to generate.
    #[arg(long)]
    pub n: Option<usize>,
}

macro_rules! layer {
    ($hi:expr, $lo:expr, $($field:ident),*) => {
        RunConfig { $($field: $hi.$field.or($lo.$field)),* }
    };
}

impl RunConfig {
    pub fn from_file(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).map_err(|e| anyhow::anyhow!(ConfigError(format!("{}: {e}", path.display()))))
    }

    /// `self` wins over `lower` field by field.
    pub fn over(self, lower: RunConfig) -> RunConfig {
        layer!(
            self, lower, model, k, m, eta_r, eta_t, eta_c, category_update, k_c, initial_rating, epochs, folds, seed, dataset, players,
            folds_file, generator, n
        )
    }

    pub fn model_spec(&self) -> anyhow::Result<ModelSpec> {
        let kind = self.model.unwrap_or(ModelKind::EloRcc);
        let initial_rating = self.initial_rating.unwrap_or(1000.0);
        let spec = match kind {
            ModelKind::Elo => ModelSpec::Elo(EloConfig {
                initial_rating,
                k_factor: self.k.unwrap_or(EloConfig::default().k_factor),
            }),
            ModelKind::EloRcc => {
                let d = RccConfig::default();
                ModelSpec::EloRcc(RccConfig {
                    m: self.m.unwrap_or(d.m),
                    eta_r: self.eta_r.unwrap_or(d.eta_r),
                    eta_t: self.eta_t.unwrap_or(d.eta_t),
                    eta_c: self.eta_c.unwrap_or(d.eta_c),
                    initial_rating,
                    category_update: self.category_update.map_or(d.category_update, Into::into),
                })
            }
            ModelKind::Melo2 => {
                let d = MEloConfig::default();
                ModelSpec::MElo2(MEloConfig {
                    initial_rating,
                    k: self.k.unwrap_or(d.k),
                    k_c: self.k_c.unwrap_or(d.k_c),
                })
            }
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn epochs(&self) -> anyhow::Result<usize> {
        let e = self.epochs.unwrap_or(DEFAULT_EPOCHS);
        if e == 0 {
            bail!(ConfigError("epochs must be at least 1".into()));
        }
        Ok(e)
    }

    pub fn n_folds(&self) -> usize {
        self.folds.unwrap_or(DEFAULT_FOLDS)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }
}

/// A problem with flags or configuration that maps to exit code 1.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_reference_settings() {
        let spec = RunConfig::default().model_spec().unwrap();
        assert_eq!(
            spec,
            ModelSpec::EloRcc(RccConfig {
                m: 81,
                eta_r: 0.1,
                eta_t: 0.00025,
                eta_c: 0.01,
                initial_rating: 1000.0,
                category_update: CategoryUpdate::Softmax,
            })
        );
        let elo = RunConfig {
            model: Some(ModelKind::Elo),
            ..Default::default()
        };
        assert_eq!(elo.model_spec().unwrap(), ModelSpec::Elo(EloConfig { initial_rating: 1000.0, k_factor: 16.0 }));
        assert_eq!(RunConfig::default().epochs().unwrap(), 100);
        assert_eq!(RunConfig::default().n_folds(), 5);
    }

    #[test]
    fn flags_override_file() {
        let file: RunConfig = toml::from_str("model = \"elo\"\nk = 0.1\nepochs = 7\nseed = 3\n").unwrap();
        let flags = RunConfig {
            k: Some(32.0),
            ..Default::default()
        };
        let merged = flags.over(file);
        assert_eq!(merged.model, Some(ModelKind::Elo));
        assert_eq!(merged.k, Some(32.0));
        assert_eq!(merged.epochs, Some(7));
        assert_eq!(merged.seed(), 3);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(toml::from_str::<RunConfig>("modle = \"elo\"\n").is_err());
        let bad = RunConfig {
            model: Some(ModelKind::EloRcc),
            m: Some(0),
            ..Default::default()
        };
        assert!(bad.model_spec().is_err());
    }
}
