use std::fs;
use std::path::Path;

use super::manifest::{Manifest, UtteranceRecord};
use crate::error::{Error, Result};
use crate::features::cache::cache_key;
use crate::features::{
    audio_features, decode_wav, encode_dense, encode_sparse, AudioSignal, CharVocab, EmbeddingTable, FeatureCache,
    FeatureConfig, FeatureSequence,
};
use crate::models::{ModelConfig, TextMode};
use crate::training::Example;

pub fn load_embedding_table(path: &Path) -> Result<EmbeddingTable> {
    EmbeddingTable::load(path)
}

/// Turns audio and transcripts into model inputs.
#[derive(Clone, Debug)]
pub struct Featurizer {
    features: FeatureConfig,
    text_mode: TextMode,
    embeddings: Option<EmbeddingTable>,
}

impl Featurizer {
    /// Dense text needs an embedding table; other modes ignore it.
    pub fn new(features: FeatureConfig, text_mode: TextMode, embeddings: Option<EmbeddingTable>) -> Result<Self> {
        features.validate()?;
        if text_mode == TextMode::Dense && embeddings.is_none() {
            return Err(Error::Config("dense text mode needs an embedding table".into()));
        }
        Ok(Self {
            features,
            text_mode,
            embeddings,
        })
    }

    pub fn features(&self) -> &FeatureConfig {
        &self.features
    }

    pub fn text_mode(&self) -> TextMode {
        self.text_mode
    }

    /// Width of text rows; the sparse width when text is unused.
    pub fn text_dim(&self) -> usize {
        match (&self.embeddings, self.text_mode) {
            (Some(t), TextMode::Dense) => t.dim(),
            _ => CharVocab::DIM,
        }
    }

    /// Model dimensions matching these features.
    pub fn model_config(&self, hidden: usize, head_hidden: usize) -> ModelConfig {
        ModelConfig {
            audio_dim: self.features.audio_dim(),
            text_dim: self.text_dim(),
            hidden,
            head_hidden,
        }
    }

    pub fn audio(&self, signal: &AudioSignal) -> Result<FeatureSequence> {
        audio_features(signal, &self.features)
    }

    /// Reads and featurises one WAV file, consulting `cache` first. The
    /// flag reports a cache hit.
    pub fn audio_file(&self, path: &Path, cache: Option<&FeatureCache>) -> Result<(FeatureSequence, bool)> {
        let bytes = fs::read(path).map_err(|e| Error::file(path, e))?;
        let key = cache.map(|_| cache_key(&bytes, &self.features));
        if let (Some(c), Some(k)) = (cache, &key) {
            if let Some(seq) = c.get(k) {
                return Ok((seq, true));
            }
        }
        let seq = self.audio(&decode_wav(&bytes, path)?)?;
        if let (Some(c), Some(k)) = (cache, &key) {
            c.put(k, &seq)?;
        }
        Ok((seq, false))
    }

    pub fn text(&self, transcript: &str) -> Result<Option<FeatureSequence>> {
        let t_max = self.features.text_t_max;
        match (self.text_mode, &self.embeddings) {
            (TextMode::None, _) => Ok(None),
            (TextMode::Sparse, _) => encode_sparse(transcript, t_max).map(Some),
            (TextMode::Dense, Some(table)) => encode_dense(transcript, table, t_max).map(Some),
            (TextMode::Dense, None) => unreachable!("checked in Featurizer::new"),
        }
    }

    pub fn example(&self, record: &UtteranceRecord, audio: FeatureSequence, use_alt: bool) -> Result<Example> {
        Ok(Example {
            id: record.id.clone(),
            audio,
            text: self.text(record.transcript_for(use_alt))?,
            label: record.label.ordinal(),
            speaker: record.speaker.clone(),
            script: record.transcript.clone(),
        })
    }

    /// Examples for in-memory signals, one per record.
    pub fn examples_from_signals(
        &self,
        records: &[UtteranceRecord],
        signals: &[AudioSignal],
        use_alt: bool,
    ) -> Result<Vec<Example>> {
        if records.len() != signals.len() {
            return Err(Error::shape("examples", &[records.len()], &[signals.len()]));
        }
        records
            .iter()
            .zip(signals)
            .map(|(r, s)| self.example(r, self.audio(s)?, use_alt))
            .collect()
    }

    /// Examples for every manifest record; the first failure aborts.
    pub fn examples_from_manifest(
        &self,
        manifest: &Manifest,
        cache: Option<&FeatureCache>,
        use_alt: bool,
    ) -> Result<Vec<Example>> {
        manifest
            .records
            .iter()
            .map(|r| {
                let (audio, _) = self.audio_file(&manifest.audio_path(r), cache)?;
                self.example(r, audio, use_alt)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{generate_synthetic, SyntheticSpec};

    #[test]
    fn embedding_table_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.txt");
        fs::write(&p, "2 3\n가 0.5 -1 2\n나 0 0 0.25\n").unwrap();
        let t = load_embedding_table(&p).unwrap();
        assert_eq!((t.len(), t.dim()), (2, 3));
        assert_eq!(t.get("가").unwrap(), &[0.5, -1.0, 2.0]);
        fs::write(&p, "2 3\n가 0.5 -1 2\n나 0 0\n").unwrap();
        assert!(matches!(load_embedding_table(&p), Err(Error::Parse { line: 3, .. })));
    }

    #[test]
    fn dense_needs_table() {
        assert!(Featurizer::new(FeatureConfig::default(), TextMode::Dense, None).is_err());
        let f = Featurizer::new(FeatureConfig::default(), TextMode::None, None).unwrap();
        assert_eq!(f.text("가").unwrap(), None);
    }

    #[test]
    fn manifest_examples_use_the_cache() {
        let dir = tempfile::tempdir().unwrap();
        let spec = SyntheticSpec {
            n_scripts: 3,
            ..SyntheticSpec::default()
        };
        let manifest = generate_synthetic(&spec, dir.path()).unwrap();
        let table = load_embedding_table(&dir.path().join("embeddings.txt")).unwrap();
        let cfg = FeatureConfig {
            n_fft: 512,
            n_mels: 32,
            ..FeatureConfig::default()
        };
        let f = Featurizer::new(cfg, TextMode::Dense, Some(table)).unwrap();
        assert_eq!(f.model_config(4, 8).text_dim, 8);
        let cache = FeatureCache::open(dir.path().join("cache")).unwrap();
        let first = f.examples_from_manifest(&manifest, Some(&cache), false).unwrap();
        let again = f.examples_from_manifest(&manifest, Some(&cache), false).unwrap();
        assert_eq!(first, again);
        let path = manifest.audio_path(&manifest.records[0]);
        assert!(f.audio_file(&path, Some(&cache)).unwrap().1);
        assert_eq!(first[0].audio.dim(), 33);
        assert_eq!(first[0].text.as_ref().unwrap().dim(), 8);
        assert_eq!(first[0].script, manifest.records[0].transcript);
    }
}
