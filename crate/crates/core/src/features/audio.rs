//! Frame-level acoustic features: per-frame RMS energy and a power mel
//! spectrogram, concatenated frame-wise.
//!
//! Framing is non-centred: frame `t` covers samples `t·hop .. t·hop + n_fft`,
//! zero-padded past the end of the signal, and there are `ceil(len / hop)`
//! frames.

use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::sequence::FeatureSequence;
use crate::error::{Error, Result};
use crate::numerics::Tensor;

#[derive(Clone, Debug, PartialEq)]
pub struct AudioSignal {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl AudioSignal {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyInput("audio signal has no samples".into()));
        }
        if sample_rate == 0 {
            return Err(Error::Config("sample rate must be positive".into()));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::Config("audio samples must be finite".into()));
        }
        Ok(Self { samples, sample_rate })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / f64::from(self.sample_rate)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            samples: self.samples.iter().map(|s| s * factor).collect(),
            sample_rate: self.sample_rate,
        }
    }
}

/// How mel energies enter the model input.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MelScaling {
    /// Raw filterbank power.
    Power,
    /// `ln(1 + power)`: monotone, zero-preserving dynamic-range compression.
    #[default]
    Log1p,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    pub sample_rate: u32,
    pub n_fft: usize,
    pub hop: usize,
    pub n_mels: usize,
    pub mel_scaling: MelScaling,
    /// Fixed audio sequence length; `None` keeps every record at its own length.
    pub audio_t_max: Option<usize>,
    /// Fixed text sequence length; `None` keeps every record at its own length.
    pub text_t_max: Option<usize>,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            sample_rate: 16_000,
            n_fft: 1024,
            hop: 256,
            n_mels: 128,
            mel_scaling: MelScaling::Log1p,
            audio_t_max: None,
            text_t_max: None,
        }
    }
}

impl FeatureConfig {
    /// Width of an audio feature row: mel bins plus one RMS column.
    pub fn audio_dim(&self) -> usize {
        self.n_mels + 1
    }

    pub fn validate(&self) -> Result<()> {
        validate_stft(self.n_fft, self.hop, self.n_mels)?;
        if self.sample_rate == 0 {
            return Err(Error::Config("sample_rate must be positive".into()));
        }
        if self.audio_t_max == Some(0) || self.text_t_max == Some(0) {
            return Err(Error::Config("t_max must be positive".into()));
        }
        Ok(())
    }
}

fn validate_stft(n_fft: usize, hop: usize, n_mels: usize) -> Result<()> {
    if !n_fft.is_power_of_two() || n_fft < 2 {
        return Err(Error::Config(format!("n_fft must be a power of two, got {n_fft}")));
    }
    if hop == 0 || hop > n_fft {
        return Err(Error::Config(format!("hop must lie in 1..=n_fft, got {hop}")));
    }
    if n_mels == 0 {
        return Err(Error::Config("n_mels must be positive".into()));
    }
    Ok(())
}

fn frame_count(len: usize, hop: usize) -> usize {
    len.div_ceil(hop)
}

/// Root-mean-square amplitude per frame.
pub fn rmse_frames(signal: &AudioSignal, frame_length: usize, hop: usize) -> Result<Vec<f64>> {
    if hop == 0 || frame_length < hop {
        return Err(Error::Config(format!(
            "need frame_length >= hop >= 1, got frame_length={frame_length} hop={hop}"
        )));
    }
    let x = signal.samples();
    let frames = (0..frame_count(x.len(), hop))
        .map(|t| {
            let start = t * hop;
            let end = (start + frame_length).min(x.len());
            let energy: f64 = x[start..end].iter().map(|v| v * v).sum();
            (energy / frame_length as f64).sqrt()
        })
        .collect();
    Ok(frames)
}

pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Centre frequencies (Hz) of the `n_mels` triangular filters spanning
/// 0 Hz to Nyquist.
pub fn mel_band_centers(sample_rate: u32, n_mels: usize) -> Vec<f64> {
    mel_edges(sample_rate, n_mels)[1..=n_mels].to_vec()
}

fn mel_edges(sample_rate: u32, n_mels: usize) -> Vec<f64> {
    let top = hz_to_mel(f64::from(sample_rate) / 2.0);
    (0..n_mels + 2)
        .map(|i| mel_to_hz(top * i as f64 / (n_mels + 1) as f64))
        .collect()
}

/// Unnormalised triangular filters, `n_mels × (n_fft/2 + 1)` row-major.
pub fn mel_filterbank(sample_rate: u32, n_fft: usize, n_mels: usize) -> Vec<f64> {
    let n_bins = n_fft / 2 + 1;
    let edges = mel_edges(sample_rate, n_mels);
    let bin_hz = f64::from(sample_rate) / n_fft as f64;
    let mut fb = vec![0.0; n_mels * n_bins];
    for m in 0..n_mels {
        let (lo, center, hi) = (edges[m], edges[m + 1], edges[m + 2]);
        for k in 0..n_bins {
            let f = k as f64 * bin_hz;
            let rising = (f - lo) / (center - lo);
            let falling = (hi - f) / (hi - center);
            fb[m * n_bins + k] = rising.min(falling).max(0.0);
        }
    }
    fb
}

/// Periodic Hann window.
fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
        .collect()
}

/// Power mel spectrogram, `[frames, n_mels]`.
pub fn mel_spectrogram(signal: &AudioSignal, n_fft: usize, hop: usize, n_mels: usize) -> Result<Tensor> {
    validate_stft(n_fft, hop, n_mels)?;
    let x = signal.samples();
    let n_bins = n_fft / 2 + 1;
    let fb = mel_filterbank(signal.sample_rate(), n_fft, n_mels);
    let window = hann(n_fft);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n_fft);

    let frames = frame_count(x.len(), hop);
    let mut out = Vec::with_capacity(frames * n_mels);
    let mut buf = vec![Complex::new(0.0, 0.0); n_fft];
    let mut power = vec![0.0; n_bins];
    for t in 0..frames {
        let start = t * hop;
        for (i, slot) in buf.iter_mut().enumerate() {
            let s = x.get(start + i).copied().unwrap_or(0.0);
            *slot = Complex::new(s * window[i], 0.0);
        }
        fft.process(&mut buf);
        for (p, c) in power.iter_mut().zip(&buf) {
            *p = c.norm_sqr();
        }
        for m in 0..n_mels {
            let filt = &fb[m * n_bins..(m + 1) * n_bins];
            out.push(filt.iter().zip(&power).map(|(w, p)| w * p).sum());
        }
    }
    Tensor::matrix(frames, n_mels, out)
}

/// Mel rows followed by the frame's RMS energy, end-aligned into
/// `cfg.audio_t_max` rows.
pub fn audio_features(signal: &AudioSignal, cfg: &FeatureConfig) -> Result<FeatureSequence> {
    cfg.validate()?;
    if signal.sample_rate() != cfg.sample_rate {
        return Err(Error::Config(format!(
            "audio sampled at {} Hz but features configured for {} Hz",
            signal.sample_rate(),
            cfg.sample_rate
        )));
    }
    let mel = mel_spectrogram(signal, cfg.n_fft, cfg.hop, cfg.n_mels)?;
    let rmse = rmse_frames(signal, cfg.n_fft, cfg.hop)?;
    debug_assert_eq!(mel.rows(), rmse.len());
    let dim = cfg.audio_dim();
    let mut rows = Vec::with_capacity(rmse.len() * dim);
    for (t, energy) in rmse.iter().enumerate() {
        match cfg.mel_scaling {
            MelScaling::Power => rows.extend_from_slice(mel.row(t)),
            MelScaling::Log1p => rows.extend(mel.row(t).iter().map(|p| p.ln_1p())),
        }
        rows.push(*energy);
    }
    FeatureSequence::end_aligned(&rows, dim, cfg.audio_t_max)
}
