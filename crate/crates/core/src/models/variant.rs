use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariantTag {
    AudioBre,
    AudioBreAtt,
    ParaBreAtt,
    MhaA,
    MhaAt,
    Ca,
}

impl VariantTag {
    pub const ALL: [VariantTag; 6] = [
        VariantTag::AudioBre,
        VariantTag::AudioBreAtt,
        VariantTag::ParaBreAtt,
        VariantTag::MhaA,
        VariantTag::MhaAt,
        VariantTag::Ca,
    ];

    pub fn name(self) -> &'static str {
        match self {
            VariantTag::AudioBre => "audio_bre",
            VariantTag::AudioBreAtt => "audio_bre_att",
            VariantTag::ParaBreAtt => "para_bre_att",
            VariantTag::MhaA => "mha_a",
            VariantTag::MhaAt => "mha_at",
            VariantTag::Ca => "ca",
        }
    }

    pub fn uses_text(self) -> bool {
        !matches!(self, VariantTag::AudioBre | VariantTag::AudioBreAtt)
    }
}

impl fmt::Display for VariantTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for VariantTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        Self::ALL
            .into_iter()
            .find(|v| v.name() == norm)
            .ok_or_else(|| Error::Config(format!("unknown model variant {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TextMode {
    #[default]
    None,
    Sparse,
    Dense,
}

impl TextMode {
    pub fn name(self) -> &'static str {
        match self {
            TextMode::None => "none",
            TextMode::Sparse => "sparse",
            TextMode::Dense => "dense",
        }
    }
}

impl fmt::Display for TextMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TextMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" => Ok(TextMode::None),
            "sparse" => Ok(TextMode::Sparse),
            "dense" => Ok(TextMode::Dense),
            _ => Err(Error::Config(format!("unknown text mode {s:?}"))),
        }
    }
}

/// A variant tag paired with a compatible text encoding.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawVariant", into = "RawVariant")]
pub struct ModelVariant {
    tag: VariantTag,
    text_mode: TextMode,
}

impl ModelVariant {
    pub fn new(tag: VariantTag, text_mode: TextMode) -> Result<Self> {
        match (tag.uses_text(), text_mode) {
            (false, TextMode::None) => {}
            (false, _) => {
                return Err(Error::Config(format!(
                    "{tag} is audio-only and needs text_mode none, got {text_mode}"
                )))
            }
            (true, TextMode::None) => return Err(Error::Config(format!("{tag} needs text_mode sparse or dense"))),
            (true, _) => {}
        }
        Ok(Self { tag, text_mode })
    }

    /// Audio-only variants get `none`, the rest `sparse`.
    pub fn with_default_text(tag: VariantTag) -> Self {
        let mode = if tag.uses_text() {
            TextMode::Sparse
        } else {
            TextMode::None
        };
        Self { tag, text_mode: mode }
    }

    pub fn tag(self) -> VariantTag {
        self.tag
    }

    pub fn text_mode(self) -> TextMode {
        self.text_mode
    }
}

#[derive(Serialize, Deserialize)]
struct RawVariant {
    tag: VariantTag,
    text_mode: TextMode,
}

impl TryFrom<RawVariant> for ModelVariant {
    type Error = Error;

    fn try_from(raw: RawVariant) -> Result<Self> {
        ModelVariant::new(raw.tag, raw.text_mode)
    }
}

impl From<ModelVariant> for RawVariant {
    fn from(v: ModelVariant) -> Self {
        RawVariant {
            tag: v.tag,
            text_mode: v.text_mode,
        }
    }
}
