use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::head::ClassifierHead;
use super::variant::{ModelVariant, VariantTag};
use crate::encoders::{Attention, Bre};
use crate::error::{Error, Result};
use crate::features::{CharVocab, FeatureConfig, FeatureSequence};
use crate::numerics::{Graph, ParamStore, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub audio_dim: usize,
    pub text_dim: usize,
    /// LSTM width per direction.
    pub hidden: usize,
    pub head_hidden: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            audio_dim: FeatureConfig::default().audio_dim(),
            text_dim: CharVocab::DIM,
            hidden: 64,
            head_hidden: 128,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("audio_dim", self.audio_dim),
            ("text_dim", self.text_dim),
            ("hidden", self.hidden),
            ("head_hidden", self.head_hidden),
        ] {
            if v == 0 {
                return Err(Error::Config(format!("model {name} must be positive")));
            }
        }
        Ok(())
    }
}

/// Where an attention distribution was computed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttentionSite {
    /// Audio states against a learned context.
    AudioSelf,
    /// Text states against a learned context.
    TextSelf,
    /// Text states against an audio summary.
    TextHop,
    /// Audio states against a text summary.
    AudioHop,
}

impl AttentionSite {
    pub fn name(self) -> &'static str {
        match self {
            AttentionSite::AudioSelf => "audio_self",
            AttentionSite::TextSelf => "text_self",
            AttentionSite::TextHop => "text_hop",
            AttentionSite::AudioHop => "audio_hop",
        }
    }

    pub fn is_audio(self) -> bool {
        matches!(self, AttentionSite::AudioSelf | AttentionSite::AudioHop)
    }
}

#[derive(Clone, Debug)]
pub struct ForwardOutput {
    pub logits: Var,
    pub probs: Var,
    pub attention: Vec<(AttentionSite, Var)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttentionDump {
    pub site: AttentionSite,
    /// Weights over the valid steps only, in time order.
    pub weights: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: usize,
    pub probs: Vec<f64>,
    pub logits: Vec<f64>,
    pub attention: Vec<AttentionDump>,
}

/// A classifier variant together with its parameters.
#[derive(Clone, Debug)]
pub struct Model {
    variant: ModelVariant,
    config: ModelConfig,
    store: ParamStore,
    audio: Bre,
    audio_self: Option<Attention>,
    text: Option<Bre>,
    text_att: Option<Attention>,
    audio_hop: Option<Attention>,
    head: ClassifierHead,
}

impl Model {
    /// Builds and initialises a model; parameters are a pure function of
    /// `(variant, config, seed)`.
    pub fn new(variant: ModelVariant, config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut store = ParamStore::new();
        let tag = variant.tag();
        let h = config.hidden;
        let state = 2 * h;
        let audio_p = format!("model.{tag}.audio");
        let text_p = format!("model.{tag}.text");

        let audio = Bre::new(&mut store, &audio_p, config.audio_dim, h, &mut rng);
        let audio_self = (tag != VariantTag::AudioBre)
            .then(|| Attention::self_attentive(&mut store, &audio_p, state, state, &mut rng));
        let text = tag
            .uses_text()
            .then(|| Bre::new(&mut store, &text_p, config.text_dim, h, &mut rng));
        let text_att = match tag {
            VariantTag::ParaBreAtt => Some(Attention::self_attentive(&mut store, &text_p, state, state, &mut rng)),
            VariantTag::MhaA | VariantTag::MhaAt | VariantTag::Ca => {
                Some(Attention::external(&mut store, &text_p, state, state, &mut rng))
            }
            _ => None,
        };
        let audio_hop = matches!(tag, VariantTag::MhaAt | VariantTag::Ca)
            .then(|| Attention::external(&mut store, &format!("model.{tag}.audio_hop"), state, state, &mut rng));
        let head_in = if tag.uses_text() { 2 * state } else { state };
        let head = ClassifierHead::new(
            &mut store,
            &format!("model.{tag}"),
            head_in,
            config.head_hidden,
            &mut rng,
        );
        Ok(Self {
            variant,
            config,
            store,
            audio,
            audio_self,
            text,
            text_att,
            audio_hop,
            head,
        })
    }

    pub fn variant(&self) -> ModelVariant {
        self.variant
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamStore {
        &self.store
    }

    pub fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.store
    }

    pub fn num_parameters(&self) -> usize {
        self.store.num_scalars()
    }

    pub fn head(&self) -> &ClassifierHead {
        &self.head
    }

    /// Records the forward pass on `g`. `p` must come from binding this
    /// model's parameter store to `g`.
    pub fn forward_graph(
        &self,
        g: &mut Graph,
        p: &[Var],
        audio: &FeatureSequence,
        text: Option<&FeatureSequence>,
    ) -> Result<ForwardOutput> {
        let tag = self.variant.tag();
        let a = self.audio.forward(g, p, audio)?;
        let mut attention = Vec::new();

        let features = match tag {
            VariantTag::AudioBre => a.final_state,
            VariantTag::AudioBreAtt => self.audio_self_pool(g, p, a.states, audio, &mut attention)?,
            _ => {
                let text = text.ok_or(Error::Modality {
                    variant: tag.name(),
                    needed: "a text sequence",
                })?;
                if text.dim() != self.config.text_dim {
                    return Err(Error::shape("text features", &[text.dim()], &[self.config.text_dim]));
                }
                let text_bre = self.text.as_ref().expect("text encoder exists for text variants");
                let text_att = self.text_att.as_ref().expect("text attention exists for text variants");
                let t = text_bre.forward(g, p, text)?;
                let r_a = self.audio_self_pool(g, p, a.states, audio, &mut attention)?;
                match tag {
                    VariantTag::ParaBreAtt => {
                        let r_t = text_att.self_attentive_pool(g, p, t.states, text.mask())?;
                        attention.push((AttentionSite::TextSelf, r_t.weights));
                        g.concat(&[r_a, r_t.pooled])?
                    }
                    VariantTag::MhaA => {
                        let r_t1 = text_att.attend(g, p, t.states, text.mask(), r_a)?;
                        attention.push((AttentionSite::TextHop, r_t1.weights));
                        g.concat(&[r_a, r_t1.pooled])?
                    }
                    VariantTag::MhaAt => {
                        let r_t1 = text_att.attend(g, p, t.states, text.mask(), r_a)?;
                        attention.push((AttentionSite::TextHop, r_t1.weights));
                        let hop = self.audio_hop.as_ref().expect("second hop exists");
                        let r_a2 = hop.attend(g, p, a.states, audio.mask(), r_t1.pooled)?;
                        attention.push((AttentionSite::AudioHop, r_a2.weights));
                        g.concat(&[r_t1.pooled, r_a2.pooled])?
                    }
                    VariantTag::Ca => {
                        let r_t = text_att.attend(g, p, t.states, text.mask(), r_a)?;
                        attention.push((AttentionSite::TextHop, r_t.weights));
                        let hop = self.audio_hop.as_ref().expect("cross attention exists");
                        let r_a2 = hop.attend(g, p, a.states, audio.mask(), t.final_state)?;
                        attention.push((AttentionSite::AudioHop, r_a2.weights));
                        g.concat(&[r_a2.pooled, r_t.pooled])?
                    }
                    VariantTag::AudioBre | VariantTag::AudioBreAtt => unreachable!(),
                }
            }
        };
        let logits = self.head.logits(g, p, features)?;
        let probs = g.softmax(logits)?;
        Ok(ForwardOutput {
            logits,
            probs,
            attention,
        })
    }

    fn audio_self_pool(
        &self,
        g: &mut Graph,
        p: &[Var],
        states: Var,
        audio: &FeatureSequence,
        attention: &mut Vec<(AttentionSite, Var)>,
    ) -> Result<Var> {
        let att = self.audio_self.as_ref().expect("audio self-attention exists");
        let out = att.self_attentive_pool(g, p, states, audio.mask())?;
        attention.push((AttentionSite::AudioSelf, out.weights));
        Ok(out.pooled)
    }

    pub fn predict(&self, audio: &FeatureSequence, text: Option<&FeatureSequence>) -> Result<Prediction> {
        let mut g = Graph::new();
        let p = self.store.bind(&mut g);
        let out = self.forward_graph(&mut g, &p, audio, text)?;
        let probs = g.value(out.probs).to_vec();
        let label = argmax(&probs);
        let attention = out
            .attention
            .iter()
            .map(|&(site, w)| {
                let seq = if site.is_audio() {
                    audio
                } else {
                    text.expect("text sites only exist with text")
                };
                let weights = g.value(w).data()[seq.first_valid()..].to_vec();
                AttentionDump { site, weights }
            })
            .collect();
        Ok(Prediction {
            label,
            probs,
            logits: g.value(out.logits).to_vec(),
            attention,
        })
    }
}

/// Index of the largest value; the first one wins ties.
pub fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

/// Metadata stored next to a parameter checkpoint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelCard {
    pub variant: ModelVariant,
    pub model: ModelConfig,
    pub features: FeatureConfig,
    /// Embedding table used for dense text, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embeddings: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epoch: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub train_ids: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub test_ids: Vec<String>,
}

impl ModelCard {
    pub fn new(model: &Model, features: FeatureConfig) -> Self {
        Self {
            variant: model.variant(),
            model: *model.config(),
            features,
            embeddings: None,
            seed: None,
            epoch: None,
            train_ids: Vec::new(),
            test_ids: Vec::new(),
        }
    }
}

/// `model.ckpt` → `model.ckpt.json`.
pub fn sidecar_path(checkpoint: &Path) -> PathBuf {
    let mut s = checkpoint.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

pub fn save_checkpoint(path: &Path, model: &Model, card: &ModelCard) -> Result<()> {
    if card.variant != model.variant() || card.model != *model.config() {
        return Err(Error::Checkpoint("model card does not describe this model".into()));
    }
    model.params().save(path)?;
    let side = sidecar_path(path);
    let json = serde_json::to_string_pretty(card).expect("card serialises");
    let tmp = side.with_extension("json.tmp");
    fs::write(&tmp, json).map_err(|e| Error::file(&tmp, e))?;
    fs::rename(&tmp, &side).map_err(|e| Error::file(&side, e))
}

pub fn load_checkpoint(path: &Path) -> Result<(Model, ModelCard)> {
    let side = sidecar_path(path);
    let text = fs::read_to_string(&side).map_err(|e| Error::file(&side, e))?;
    let card: ModelCard =
        serde_json::from_str(&text).map_err(|e| Error::Checkpoint(format!("{}: {e}", side.display())))?;
    let stored = ParamStore::load(path)?;
    let mut model = Model::new(card.variant, card.model, 0)?;
    model.params_mut().load_values_from(&stored)?;
    Ok((model, card))
}
