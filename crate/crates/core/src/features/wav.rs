//! PCM16 WAV input/output. Multi-channel input is averaged to mono; any
//! other sample encoding is rejected.

use std::fs;
use std::io::Cursor;
use std::path::Path;

use super::audio::AudioSignal;
use crate::error::{Error, Result};

pub fn read_wav(path: &Path) -> Result<AudioSignal> {
    let bytes = fs::read(path).map_err(|e| Error::file(path, e))?;
    decode_wav(&bytes, path)
}

/// Decodes an in-memory WAV file; `path` is only used in error messages.
pub fn decode_wav(bytes: &[u8], path: &Path) -> Result<AudioSignal> {
    let audio_err = |message: String| Error::Audio {
        path: path.to_path_buf(),
        message,
    };
    let reader = hound::WavReader::new(Cursor::new(bytes)).map_err(|e| audio_err(e.to_string()))?;
    let spec = reader.spec();
    if spec.sample_format != hound::SampleFormat::Int || spec.bits_per_sample != 16 {
        return Err(audio_err(format!(
            "unsupported encoding: {:?} {}-bit (only PCM 16-bit)",
            spec.sample_format, spec.bits_per_sample
        )));
    }
    let channels = usize::from(spec.channels);
    let raw = reader
        .into_samples::<i16>()
        .collect::<std::result::Result<Vec<i16>, _>>()
        .map_err(|e| audio_err(e.to_string()))?;
    let samples: Vec<f64> = raw
        .chunks_exact(channels)
        .map(|frame| frame.iter().map(|&s| f64::from(s) / 32768.0).sum::<f64>() / channels as f64)
        .collect();
    AudioSignal::new(samples, spec.sample_rate).map_err(|e| audio_err(e.to_string()))
}

/// Writes mono PCM16, clamping to [-1, 1].
pub fn write_wav(path: &Path, signal: &AudioSignal) -> Result<()> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: signal.sample_rate(),
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let audio_err = |e: hound::Error| Error::Audio {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let mut w = hound::WavWriter::create(path, spec).map_err(audio_err)?;
    for &s in signal.samples() {
        let q = (s.clamp(-1.0, 1.0) * 32767.0).round() as i16;
        w.write_sample(q).map_err(audio_err)?;
    }
    w.finalize().map_err(audio_err)
}
