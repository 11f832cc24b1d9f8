//! Model inputs: acoustic frames from audio, character encodings from text.

mod audio;
pub mod cache;
mod hangul;
mod sequence;
mod text;
mod wav;

pub use audio::{
    audio_features, hz_to_mel, mel_band_centers, mel_filterbank, mel_spectrogram, mel_to_hz, rmse_frames, AudioSignal,
    FeatureConfig, MelScaling,
};
pub use cache::FeatureCache;
pub use hangul::{compose_hangul, decompose_hangul, CharClass, CharVocab, Decomposition};
pub use sequence::FeatureSequence;
pub use text::{encode_dense, encode_sparse, EmbeddingTable};
pub use wav::{decode_wav, read_wav, write_wav};
