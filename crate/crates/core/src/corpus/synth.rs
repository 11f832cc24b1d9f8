//! Synthetic ambiguous-utterance corpus.
//!
//! Each script is a short string from a toy syllabary, rendered as a chain
//! of harmonic tones, one per syllable. The label decides the pitch
//! pattern and, for directives, one extra sentence-final syllable:
//!
//! | label | transcript     | mid | final glide | tone  |
//! |-------|----------------|-----|-------------|-------|
//! | S     | plain          | M   | M→L         | ×1    |
//! | YN    | plain          | M   | M→H         | ×1    |
//! | WH    | plain          | H   | M→H         | ×1    |
//! | RQ    | plain          | M   | M→H         | ×0.75 |
//! | C     | plain + `라`   | M   | M→L         | ×1    |
//! | R     | plain + `라`   | M   | M→H         | ×1    |
//! | RC    | plain + `라`   | M   | M→L         | ×0.75 |
//!
//! with L = 120 Hz, M = 180 Hz, H = 240 Hz. Plain and directive
//! transcripts both have 3 to 5 syllables. YN and WH differ only in the
//! middle syllable, S and C only in their text, and the rhetorical labels
//! only in overall tone. Every variant of a script shares one transcript.

use std::collections::HashSet;
use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::label::IntentLabel;
use super::manifest::{write_manifest, Manifest, UtteranceRecord};
use crate::error::{Error, Result};
use crate::features::{write_wav, AudioSignal, EmbeddingTable};

pub const LOW_HZ: f64 = 120.0;
pub const MID_HZ: f64 = 180.0;
pub const HIGH_HZ: f64 = 240.0;
pub const RHETORICAL_TONE: f64 = 0.75;
pub const DIRECTIVE_ENDER: char = '라';

const SYLLABARY: &str = "가나다마바사아자차카타파하고노도모보소오";
const PLAIN: [IntentLabel; 4] = [IntentLabel::S, IntentLabel::YN, IntentLabel::WH, IntentLabel::RQ];
const DIRECTIVE: [IntentLabel; 3] = [IntentLabel::C, IntentLabel::R, IntentLabel::RC];
const HARMONICS: usize = 6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSpec {
    pub n_scripts: usize,
    /// Distinct labels rendered per script, 2 to 4. Directive scripts
    /// have only three labels available and use at most three.
    pub variants_per_script: usize,
    pub seed: u64,
    pub sample_rate: u32,
    pub syllable_secs: f64,
    pub speakers: usize,
    pub alt_transcripts: bool,
    pub embedding_dim: usize,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            n_scripts: 350,
            variants_per_script: 2,
            seed: 0,
            sample_rate: 16_000,
            syllable_secs: 0.12,
            speakers: 2,
            alt_transcripts: true,
            embedding_dim: 8,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_scripts == 0 {
            return Err(Error::Config("n_scripts must be positive".into()));
        }
        if !(2..=4).contains(&self.variants_per_script) {
            return Err(Error::Config(format!(
                "variants_per_script must be 2..=4, got {}",
                self.variants_per_script
            )));
        }
        if self.sample_rate < 8_000 {
            return Err(Error::Config("sample_rate must be at least 8000".into()));
        }
        if !(0.04..=1.0).contains(&self.syllable_secs) {
            return Err(Error::Config("syllable_secs must be within 0.04..=1.0".into()));
        }
        if self.speakers == 0 || self.embedding_dim == 0 {
            return Err(Error::Config("speakers and embedding_dim must be positive".into()));
        }
        Ok(())
    }

    /// Share of plain scripts that balances the seven labels.
    fn plain_share(&self) -> f64 {
        let v = self.variants_per_script as f64;
        let d = self.variants_per_script.min(3) as f64;
        (d / 3.0) / (v / 4.0 + d / 3.0)
    }
}

/// Pitch targets of one rendition, already scaled by the tone factor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Contour {
    pub base: f64,
    pub mid: f64,
    pub final_start: f64,
    pub final_end: f64,
}

pub fn label_contour(label: IntentLabel) -> Contour {
    use IntentLabel::*;
    let (mid, end, tone) = match label {
        S | C => (MID_HZ, LOW_HZ, 1.0),
        YN | R => (MID_HZ, HIGH_HZ, 1.0),
        WH => (HIGH_HZ, HIGH_HZ, 1.0),
        RQ => (MID_HZ, HIGH_HZ, RHETORICAL_TONE),
        RC => (MID_HZ, LOW_HZ, RHETORICAL_TONE),
    };
    Contour {
        base: MID_HZ * tone,
        mid: mid * tone,
        final_start: MID_HZ * tone,
        final_end: end * tone,
    }
}

pub fn is_directive(label: IntentLabel) -> bool {
    DIRECTIVE.contains(&label)
}

/// One harmonic tone whose fundamental glides linearly from `f0` to `f1`,
/// with raised-cosine edges.
pub fn render_glide(f0: f64, f1: f64, secs: f64, sample_rate: u32, amplitude: f64) -> Vec<f64> {
    let sr = f64::from(sample_rate);
    let n = (secs * sr).round().max(1.0) as usize;
    let edge = ((0.015 * sr) as usize).min(n / 2).max(1);
    let norm: f64 = (1..=HARMONICS).map(|k| 1.0 / k as f64).sum();
    let mut phase = 0.0;
    (0..n)
        .map(|i| {
            let f = f0 + (f1 - f0) * i as f64 / n as f64;
            phase += 2.0 * PI * f / sr;
            let env = if i < edge {
                0.5 - 0.5 * (PI * i as f64 / edge as f64).cos()
            } else if i >= n - edge {
                0.5 - 0.5 * (PI * (n - 1 - i) as f64 / edge as f64).cos()
            } else {
                1.0
            };
            let s: f64 = (1..=HARMONICS).map(|k| (k as f64 * phase).sin() / k as f64).sum();
            amplitude * env * s / norm
        })
        .collect()
}

/// Renders `syllables` syllables with `contour`; `rng` drives timing and
/// pitch jitter, `voice` is the speaker's pitch factor.
fn render(contour: Contour, syllables: usize, voice: f64, spec: &SyntheticSpec, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let sr = f64::from(spec.sample_rate);
    let silence = |secs: f64| vec![0.0; (secs * sr) as usize];
    let amplitude = 0.3 * rng.random_range(0.85..1.15);
    let mid = (syllables - 1) / 2;
    let mut out = silence(0.05);
    for s in 0..syllables {
        let jitter = voice * rng.random_range(0.97..1.03);
        let (f0, f1) = if s + 1 == syllables {
            (contour.final_start, contour.final_end)
        } else if s == mid {
            (contour.mid, contour.mid)
        } else {
            (contour.base, contour.base)
        };
        let secs = spec.syllable_secs * rng.random_range(0.85..1.15);
        out.extend(render_glide(
            f0 * jitter,
            f1 * jitter,
            secs,
            spec.sample_rate,
            amplitude,
        ));
        out.extend(silence(0.03));
    }
    out.extend(silence(0.02));
    out
}

#[derive(Clone, Debug)]
pub struct SyntheticCorpus {
    pub records: Vec<UtteranceRecord>,
    pub signals: Vec<AudioSignal>,
    pub embeddings: EmbeddingTable,
}

fn syllables_of(text: &str) -> usize {
    text.chars().filter(|c| !c.is_whitespace()).count()
}

fn corrupt(text: &str, directive: bool, rng: &mut ChaCha8Rng) -> String {
    let pool: Vec<char> = SYLLABARY.chars().collect();
    let mut chars: Vec<char> = text
        .chars()
        .map(|c| {
            if !c.is_whitespace() && c != DIRECTIVE_ENDER && rng.random_bool(0.15) {
                *pool.choose(rng).expect("non-empty syllabary")
            } else {
                c
            }
        })
        .collect();
    if directive && rng.random_bool(0.4) {
        chars.pop();
    } else if !directive && rng.random_bool(0.2) {
        chars.push(DIRECTIVE_ENDER);
    }
    chars.into_iter().collect()
}

/// Builds the corpus in memory. Deterministic in `spec`.
pub fn synthesize(spec: &SyntheticSpec) -> Result<SyntheticCorpus> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let pool: Vec<char> = SYLLABARY.chars().collect();

    let n_plain = (spec.n_scripts as f64 * spec.plain_share()).round() as usize;
    let mut kinds: Vec<bool> = (0..spec.n_scripts).map(|i| i < n_plain).collect();
    kinds.shuffle(&mut rng);

    let mut used = HashSet::new();
    let (mut plain_seen, mut directive_seen) = (0usize, 0usize);
    let mut records = Vec::new();
    let mut signals = Vec::new();
    for (script, &plain) in kinds.iter().enumerate() {
        // directives get one syllable fewer before the ender, so syllable
        // counts (and durations) have the same distribution in both families
        let core = loop {
            let n = if plain {
                rng.random_range(3..=5)
            } else {
                rng.random_range(2..=4)
            };
            let mut s: String = (0..n).map(|_| *pool.choose(&mut rng).expect("non-empty")).collect();
            if n >= 4 {
                s.insert(2 * '가'.len_utf8(), ' ');
            }
            if used.insert(s.clone()) {
                break s;
            }
        };
        let (family, counter): (&[IntentLabel], &mut usize) = if plain {
            (&PLAIN, &mut plain_seen)
        } else {
            (&DIRECTIVE, &mut directive_seen)
        };
        let variants = spec.variants_per_script.min(family.len());
        // rotate through the family so that labels stay balanced
        let labels: Vec<IntentLabel> = (0..variants)
            .map(|k| family[(*counter * variants + k) % family.len()])
            .collect();
        *counter += 1;
        let transcript = if plain {
            core
        } else {
            format!("{core}{DIRECTIVE_ENDER}")
        };
        for (v, label) in labels.into_iter().enumerate() {
            // drawn at random so that speaker carries no label information
            let speaker = rng.random_range(0..spec.speakers);
            let voice = 1.0 + 0.06 * speaker as f64;
            let samples = render(label_contour(label), syllables_of(&transcript), voice, spec, &mut rng);
            let id = format!("syn{script:04}_{v}");
            let alt = spec
                .alt_transcripts
                .then(|| corrupt(&transcript, !plain, &mut rng))
                .filter(|t| !t.trim().is_empty());
            records.push(UtteranceRecord {
                audio: PathBuf::from(format!("wav/{id}.wav")),
                id,
                transcript: transcript.clone(),
                label,
                speaker: format!("spk{speaker}"),
                alt_transcript: alt,
            });
            signals.push(AudioSignal::new(samples, spec.sample_rate)?);
        }
    }

    let mut embeddings = EmbeddingTable::new(spec.embedding_dim)?;
    for c in SYLLABARY.chars().chain([DIRECTIVE_ENDER]) {
        let v: Vec<f64> = (0..spec.embedding_dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        embeddings.insert(&c.to_string(), &v)?;
    }
    Ok(SyntheticCorpus {
        records,
        signals,
        embeddings,
    })
}

/// Writes `manifest.tsv`, `embeddings.txt` and `wav/*.wav` under `dir`.
pub fn generate_synthetic(spec: &SyntheticSpec, dir: &Path) -> Result<Manifest> {
    let corpus = synthesize(spec)?;
    let wav_dir = dir.join("wav");
    fs::create_dir_all(&wav_dir).map_err(|e| Error::file(&wav_dir, e))?;
    for (r, s) in corpus.records.iter().zip(&corpus.signals) {
        write_wav(&dir.join(&r.audio), s)?;
    }
    write_manifest(&dir.join("manifest.tsv"), &corpus.records)?;
    corpus.embeddings.save(&dir.join("embeddings.txt"))?;
    Ok(Manifest {
        base_dir: dir.to_path_buf(),
        records: corpus.records,
    })
}

#[cfg(test)]
mod tests {
    use std::collections::HashMap;

    use super::*;
    use crate::features::{mel_spectrogram, read_wav, rmse_frames};

    fn small(n_scripts: usize) -> SyntheticSpec {
        SyntheticSpec {
            n_scripts,
            ..SyntheticSpec::default()
        }
    }

    #[test]
    fn ten_scripts_two_variants() {
        let c = synthesize(&small(10)).unwrap();
        assert_eq!(c.records.len(), 20);
        let mut by_text: HashMap<&str, Vec<IntentLabel>> = HashMap::new();
        for r in &c.records {
            by_text.entry(&r.transcript).or_default().push(r.label);
        }
        assert_eq!(by_text.len(), 10);
        for labels in by_text.values() {
            assert_eq!(labels.len(), 2);
            assert_ne!(labels[0], labels[1]);
        }
    }

    #[test]
    fn labels_are_balanced() {
        for v in 2..=4 {
            let spec = SyntheticSpec {
                n_scripts: 84,
                variants_per_script: v,
                alt_transcripts: false,
                ..SyntheticSpec::default()
            };
            let c = synthesize(&spec).unwrap();
            let mut counts = [0usize; 7];
            for r in &c.records {
                counts[r.label.ordinal()] += 1;
            }
            let (lo, hi) = (counts.iter().min().unwrap(), counts.iter().max().unwrap());
            assert!(hi - lo <= 2, "v={v}: {counts:?}");
        }
    }

    #[test]
    fn directive_scripts_end_with_the_ender() {
        let c = synthesize(&small(30)).unwrap();
        for r in &c.records {
            assert_eq!(r.transcript.ends_with(DIRECTIVE_ENDER), is_directive(r.label), "{r:?}");
        }
    }

    #[test]
    fn spec_validation() {
        for bad in [
            SyntheticSpec {
                variants_per_script: 1,
                ..small(3)
            },
            SyntheticSpec {
                variants_per_script: 5,
                ..small(3)
            },
            small(0),
        ] {
            assert!(matches!(synthesize(&bad), Err(Error::Config(_))));
        }
    }

    #[test]
    fn same_seed_same_bytes() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let spec = small(4);
        let ma = generate_synthetic(&spec, a.path()).unwrap();
        generate_synthetic(&spec, b.path()).unwrap();
        for r in &ma.records {
            assert_eq!(
                fs::read(a.path().join(&r.audio)).unwrap(),
                fs::read(b.path().join(&r.audio)).unwrap()
            );
        }
        assert_eq!(
            fs::read(a.path().join("manifest.tsv")).unwrap(),
            fs::read(b.path().join("manifest.tsv")).unwrap()
        );
        let loaded = super::super::load_manifest(&a.path().join("manifest.tsv")).unwrap();
        assert_eq!(loaded.records, ma.records);
        assert!(read_wav(&a.path().join(&ma.records[0].audio)).is_ok());
    }

    #[test]
    fn rising_and_falling_finals_are_visible_in_features() {
        let sr = 16_000;
        let rise = AudioSignal::new(render_glide(LOW_HZ, HIGH_HZ, 0.5, sr, 0.3), sr).unwrap();
        let fall = AudioSignal::new(render_glide(HIGH_HZ, LOW_HZ, 0.5, sr, 0.3), sr).unwrap();
        let argmax_track = |s: &AudioSignal| {
            let m = mel_spectrogram(s, 512, 256, 32).unwrap();
            (2..m.rows() - 3)
                .map(|t| crate::models::argmax(m.row(t)))
                .collect::<Vec<_>>()
        };
        let (r, f) = (argmax_track(&rise), argmax_track(&fall));
        assert!(r.first() < r.last(), "{r:?}");
        assert!(f.first() > f.last(), "{f:?}");
        assert_ne!(r, f);
        let (er, ef) = (
            rmse_frames(&rise, 512, 256).unwrap(),
            rmse_frames(&fall, 512, 256).unwrap(),
        );
        assert!(er.iter().all(|e| e.is_finite()) && ef.iter().all(|e| e.is_finite()));
    }

    #[test]
    fn alt_transcripts_are_corrupted_copies() {
        let c = synthesize(&small(40)).unwrap();
        let changed = c
            .records
            .iter()
            .filter(|r| r.alt_transcript.as_deref() != Some(r.transcript.as_str()))
            .count();
        assert!(changed > c.records.len() / 4);
        let off = SyntheticSpec {
            alt_transcripts: false,
            ..small(5)
        };
        assert!(synthesize(&off)
            .unwrap()
            .records
            .iter()
            .all(|r| r.alt_transcript.is_none()));
    }
}
