//! Tab-separated manifests with a header row. The default columns are
//! `id audio transcript label speaker [alt_transcript]`; other layouts are
//! read through a [`ColumnMap`].

use std::collections::HashSet;
use std::fs;
use std::io::BufRead;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::label::IntentLabel;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UtteranceRecord {
    pub id: String,
    /// As written in the manifest; relative paths are resolved against the
    /// manifest's directory by [`Manifest::audio_path`].
    pub audio: PathBuf,
    pub transcript: String,
    pub label: IntentLabel,
    pub speaker: String,
    pub alt_transcript: Option<String>,
}

impl UtteranceRecord {
    /// The alternate transcript when requested and present, else the
    /// reference transcript.
    pub fn transcript_for(&self, use_alt: bool) -> &str {
        match (&self.alt_transcript, use_alt) {
            (Some(alt), true) => alt,
            _ => &self.transcript,
        }
    }
}

/// Header names of each field.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ColumnMap {
    pub id: String,
    pub audio: String,
    pub transcript: String,
    pub label: String,
    /// When the column is absent every record gets an empty speaker.
    pub speaker: String,
    pub alt_transcript: String,
}

impl Default for ColumnMap {
    fn default() -> Self {
        Self {
            id: "id".into(),
            audio: "audio".into(),
            transcript: "transcript".into(),
            label: "label".into(),
            speaker: "speaker".into(),
            alt_transcript: "alt_transcript".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Manifest {
    pub base_dir: PathBuf,
    pub records: Vec<UtteranceRecord>,
}

impl Manifest {
    pub fn audio_path(&self, record: &UtteranceRecord) -> PathBuf {
        if record.audio.is_absolute() {
            record.audio.clone()
        } else {
            self.base_dir.join(&record.audio)
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

pub fn load_manifest(path: &Path) -> Result<Manifest> {
    load_manifest_with(path, &ColumnMap::default())
}

pub fn load_manifest_with(path: &Path, columns: &ColumnMap) -> Result<Manifest> {
    let f = fs::File::open(path).map_err(|e| Error::file(path, e))?;
    let records = parse_manifest(std::io::BufReader::new(f), path, columns)?;
    let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(Manifest { base_dir, records })
}

pub fn parse_manifest(reader: impl BufRead, path: &Path, columns: &ColumnMap) -> Result<Vec<UtteranceRecord>> {
    let err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = reader.lines();
    let header = match lines.next() {
        Some(h) => h?,
        None => return Err(err(1, "empty manifest".into())),
    };
    let names: Vec<&str> = header.trim_end_matches('\r').split('\t').map(str::trim).collect();
    let find = |name: &str| names.iter().position(|n| *n == name);
    let required = |name: &str| find(name).ok_or_else(|| err(1, format!("missing column {name:?}")));
    let c_id = required(&columns.id)?;
    let c_audio = required(&columns.audio)?;
    let c_text = required(&columns.transcript)?;
    let c_label = required(&columns.label)?;
    let c_speaker = find(&columns.speaker);
    let c_alt = find(&columns.alt_transcript);

    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let field = |c: usize| fields.get(c).map(|s| s.trim()).unwrap_or("");
        let id = field(c_id);
        if id.is_empty() {
            return Err(err(line_no, "empty id".into()));
        }
        if !seen.insert(id.to_string()) {
            return Err(err(line_no, format!("duplicate id {id:?}")));
        }
        let audio = field(c_audio);
        if audio.is_empty() {
            return Err(err(line_no, format!("record {id:?} has no audio path")));
        }
        let transcript = field(c_text);
        if transcript.is_empty() {
            return Err(err(line_no, format!("record {id:?} has an empty transcript")));
        }
        let label = field(c_label)
            .parse::<IntentLabel>()
            .map_err(|e| err(line_no, e.to_string()))?;
        let alt = c_alt.map(field).filter(|s| !s.is_empty()).map(str::to_string);
        out.push(UtteranceRecord {
            id: id.to_string(),
            audio: PathBuf::from(audio),
            transcript: transcript.to_string(),
            label,
            speaker: c_speaker.map(field).unwrap_or("").to_string(),
            alt_transcript: alt,
        });
    }
    Ok(out)
}

/// Serialises with the default columns; `alt_transcript` is written only
/// when some record has one.
pub fn manifest_to_string(records: &[UtteranceRecord]) -> String {
    let with_alt = records.iter().any(|r| r.alt_transcript.is_some());
    let mut out = String::from("id\taudio\ttranscript\tlabel\tspeaker");
    if with_alt {
        out.push_str("\talt_transcript");
    }
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}",
            r.id,
            r.audio.display(),
            r.transcript,
            r.label,
            r.speaker
        ));
        if with_alt {
            out.push('\t');
            out.push_str(r.alt_transcript.as_deref().unwrap_or(""));
        }
        out.push('\n');
    }
    out
}

pub fn write_manifest(path: &Path, records: &[UtteranceRecord]) -> Result<()> {
    fs::write(path, manifest_to_string(records)).map_err(|e| Error::file(path, e))
}
