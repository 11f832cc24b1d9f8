//! Labels, manifests, embedding tables and the synthetic corpus.

mod dataset;
mod label;
mod manifest;
mod synth;

pub use dataset::{load_embedding_table, Featurizer};
pub use label::IntentLabel;
pub use manifest::{
    load_manifest, load_manifest_with, manifest_to_string, parse_manifest, write_manifest, ColumnMap, Manifest,
    UtteranceRecord,
};
pub use synth::{
    generate_synthetic, is_directive, label_contour, render_glide, synthesize, Contour, SyntheticCorpus, SyntheticSpec,
    DIRECTIVE_ENDER, HIGH_HZ, LOW_HZ, MID_HZ, RHETORICAL_TONE,
};
