//! Content-addressed on-disk cache of audio feature sequences.
//!
//! Each entry is keyed by SHA-256 over the WAV bytes and the canonical JSON
//! of the feature configuration, and stored as
//!
//! ```text
//! b"AMBF1", u32 t_max, u32 dim, u32 valid_len,
//! t_max·dim × f64 (row-major), t_max × u8 mask
//! ```
//!
//! with little-endian integers and floats.

use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::audio::FeatureConfig;
use super::sequence::FeatureSequence;
use crate::error::{Error, Result};

pub const FEATURE_MAGIC: &[u8; 5] = b"AMBF1";

pub fn cache_key(wav_bytes: &[u8], cfg: &FeatureConfig) -> String {
    let mut h = Sha256::new();
    h.update(wav_bytes);
    h.update(serde_json::to_vec(cfg).expect("config serialises"));
    hex::encode(h.finalize())
}

pub fn encode_record(seq: &FeatureSequence) -> Vec<u8> {
    let mut out = Vec::with_capacity(17 + seq.matrix().len() * 8 + seq.t_max());
    out.extend_from_slice(FEATURE_MAGIC);
    for n in [seq.t_max(), seq.dim(), seq.valid_len()] {
        out.extend_from_slice(&(n as u32).to_le_bytes());
    }
    for v in seq.matrix() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend(seq.mask().iter().map(|&m| u8::from(m)));
    out
}

pub fn decode_record(bytes: &[u8]) -> Result<FeatureSequence> {
    let bad = |m: &str| Error::Checkpoint(format!("feature record: {m}"));
    if bytes.len() < 17 || &bytes[..5] != FEATURE_MAGIC {
        return Err(bad("bad header"));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[5 + 4 * i..9 + 4 * i].try_into().unwrap()) as usize;
    let (t_max, dim, valid_len) = (word(0), word(1), word(2));
    let n = t_max.checked_mul(dim).ok_or_else(|| bad("dimensions overflow"))?;
    let body = &bytes[17..];
    if body.len() != n * 8 + t_max {
        return Err(bad("truncated or oversized body"));
    }
    let matrix = body[..n * 8]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let mask: Vec<bool> = body[n * 8..].iter().map(|&b| b != 0).collect();
    let seq = FeatureSequence::from_parts(matrix, mask, dim).map_err(|_| bad("invariants violated"))?;
    if seq.valid_len() != valid_len {
        return Err(bad("valid_len disagrees with mask"));
    }
    Ok(seq)
}

#[derive(Clone, Debug)]
pub struct FeatureCache {
    dir: PathBuf,
}

impl FeatureCache {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| Error::file(&dir, e))?;
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.feat"))
    }

    pub fn get(&self, key: &str) -> Option<FeatureSequence> {
        let bytes = fs::read(self.path_for(key)).ok()?;
        decode_record(&bytes).ok()
    }

    pub fn put(&self, key: &str, seq: &FeatureSequence) -> Result<()> {
        let path = self.path_for(key);
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, encode_record(seq)).map_err(|e| Error::file(&tmp, e))?;
        fs::rename(&tmp, &path).map_err(|e| Error::file(&path, e))
    }
}
