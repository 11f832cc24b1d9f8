//! Audio-text co-attention classifiers for disambiguating the intention of
//! prosody-sensitive utterances.
//!
//! The crate is organised bottom-up:
//!
//! * [`numerics`]: tensors, reverse-mode gradients, checkpoints.
//! * [`features`]: mel spectrogram + RMS energy frames, Hangul multi-hot and
//!   dense character encodings, end-aligned padding.
//! * [`encoders`]: bidirectional LSTM encoder and additive attention pooling.
//! * [`models`]: the six classifier variants.
//! * [`training`]: loss, Adam, checkpoint selection, metrics.
//! * [`corpus`]: labels, manifests, embedding tables, synthetic corpora.
//! * [`cli`]: the `ambi` command-line surface.

pub mod cli;
pub mod corpus;
pub mod encoders;
pub mod error;
pub mod features;
pub mod models;
pub mod numerics;
pub mod training;

pub use error::{Error, Result};
