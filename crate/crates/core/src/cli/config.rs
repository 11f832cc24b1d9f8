use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::ColumnMap;
use crate::error::{Error, Result};
use crate::features::FeatureConfig;
use crate::models::{ModelVariant, TextMode, VariantTag};
use crate::training::TrainConfig;

/// Environment variable that overrides the configured cache directory.
pub const CACHE_DIR_ENV: &str = "AMBI_CACHE_DIR";

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub manifest: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSize {
    pub hidden: usize,
    pub head_hidden: usize,
}

impl Default for ModelSize {
    fn default() -> Self {
        Self {
            hidden: 64,
            head_hidden: 128,
        }
    }
}

/// Everything a featurize or train run needs, read from one TOML file.
///
/// ```toml
/// variant = "mha_a"
/// text_mode = "sparse"
///
/// [model]
/// hidden = 64
///
/// [features]
/// n_mels = 128
///
/// [train]
/// max_epochs = 100
///
/// [paths]
/// manifest = "data/manifest.tsv"
/// output_dir = "runs/mha_a"
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub variant: VariantTag,
    /// Defaults to none for audio-only variants and sparse otherwise.
    pub text_mode: Option<TextMode>,
    pub model: ModelSize,
    pub features: FeatureConfig,
    pub train: TrainConfig,
    pub paths: Paths,
    pub columns: ColumnMap,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            variant: VariantTag::MhaA,
            text_mode: None,
            model: ModelSize::default(),
            features: FeatureConfig::default(),
            train: TrainConfig::default(),
            paths: Paths::default(),
            columns: ColumnMap::default(),
        }
    }
}

impl RunConfig {
    /// Parses and validates.
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serialises")
    }

    pub fn model_variant(&self) -> Result<ModelVariant> {
        match self.text_mode {
            Some(mode) => ModelVariant::new(self.variant, mode),
            None => Ok(ModelVariant::with_default_text(self.variant)),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.model_variant()?;
        if v.text_mode() == TextMode::Dense && self.paths.embeddings.is_none() {
            return Err(Error::Config("dense text mode needs paths.embeddings".into()));
        }
        if self.model.hidden == 0 || self.model.head_hidden == 0 {
            return Err(Error::Config("model sizes must be positive".into()));
        }
        self.features.validate()?;
        self.train.validate()
    }

    /// The configured cache directory, unless the environment overrides it.
    pub fn cache_dir(&self) -> Option<PathBuf> {
        std::env::var_os(CACHE_DIR_ENV)
            .filter(|v| !v.is_empty())
            .map(PathBuf::from)
            .or_else(|| self.paths.cache_dir.clone())
    }
}
