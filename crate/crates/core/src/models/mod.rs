//! The six classifier architectures. Every variant encodes audio with a
//! bidirectional LSTM; the text-aware ones add a text encoder and differ
//! in how the two modalities attend to each other before the shared
//! classifier head.
//!
//! | variant         | head input                                   |
//! |-----------------|----------------------------------------------|
//! | `audio_bre`     | final audio state                            |
//! | `audio_bre_att` | self-attended audio `r_a`                    |
//! | `para_bre_att`  | `r_a ; r_t` (both self-attended)             |
//! | `mha_a`         | `r_a ; attend(H_t, r_a)`                     |
//! | `mha_at`        | `r_t1 ; attend(H_a, r_t1)`                   |
//! | `ca`            | `attend(H_a, final_t) ; attend(H_t, r_a)`    |

mod head;
mod model;
mod variant;

pub use head::{ClassifierHead, NUM_CLASSES};
pub use model::{
    argmax, load_checkpoint, save_checkpoint, sidecar_path, AttentionDump, AttentionSite, ForwardOutput, Model,
    ModelCard, ModelConfig, Prediction,
};
pub use variant::{ModelVariant, TextMode, VariantTag};
