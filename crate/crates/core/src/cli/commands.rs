use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use super::config::RunConfig;
use crate::corpus::{
    generate_synthetic, load_embedding_table, load_manifest_with, ColumnMap, Featurizer, Manifest, SyntheticSpec,
};
use crate::error::{Error, Result};
use crate::features::{read_wav, EmbeddingTable, FeatureCache};
use crate::models::{argmax, load_checkpoint, save_checkpoint, AttentionDump, Model, ModelCard, TextMode};
use crate::training::{
    epoch_log_csv, evaluate, fit, select_checkpoint, split_dataset, DirectoryCheckpoints, EpochRecord, EvalReport,
    Example, CLASS_NAMES,
};

fn open_cache(dir: Option<PathBuf>) -> Result<Option<FeatureCache>> {
    dir.map(FeatureCache::open).transpose()
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::file(path, e))
}

/// Featurises every record in parallel; order follows the manifest.
pub fn load_examples(
    featurizer: &Featurizer,
    manifest: &Manifest,
    cache: Option<&FeatureCache>,
    use_alt: bool,
) -> Result<Vec<Example>> {
    manifest
        .records
        .par_iter()
        .map(|r| {
            let (audio, _) = featurizer.audio_file(&manifest.audio_path(r), cache)?;
            featurizer.example(r, audio, use_alt)
        })
        .collect()
}

fn featurizer_for(cfg: &RunConfig) -> Result<Featurizer> {
    let variant = cfg.model_variant()?;
    let table = match (variant.text_mode(), &cfg.paths.embeddings) {
        (TextMode::Dense, Some(p)) => Some(load_embedding_table(p)?),
        _ => None,
    };
    Featurizer::new(cfg.features.clone(), variant.text_mode(), table)
}

fn manifest_for(cfg: &RunConfig) -> Result<Manifest> {
    let path = cfg
        .paths
        .manifest
        .as_deref()
        .ok_or_else(|| Error::Config("no manifest given".into()))?;
    load_manifest_with(path, &cfg.columns)
}

pub fn synth(spec: &SyntheticSpec, dir: &Path) -> Result<Manifest> {
    spec.validate()?;
    generate_synthetic(spec, dir)
}

#[derive(Debug, Default)]
pub struct FeaturizeSummary {
    pub computed: usize,
    pub cached: usize,
    /// Record id and the reason it failed.
    pub failures: Vec<(String, Error)>,
}

/// Fills the feature cache for every record of the manifest. Failures are
/// collected per record rather than aborting the run.
pub fn featurize(cfg: &RunConfig) -> Result<FeaturizeSummary> {
    let dir = cfg
        .cache_dir()
        .ok_or_else(|| Error::Config("featurize needs a cache directory".into()))?;
    let cache = FeatureCache::open(dir)?;
    let manifest = manifest_for(cfg)?;
    let featurizer = Featurizer::new(cfg.features.clone(), TextMode::None, None)?;
    let results: Vec<(String, Result<bool>)> = manifest
        .records
        .par_iter()
        .map(|r| {
            let hit = featurizer
                .audio_file(&manifest.audio_path(r), Some(&cache))
                .map(|(_, hit)| hit);
            (r.id.clone(), hit)
        })
        .collect();
    let mut summary = FeaturizeSummary::default();
    for (id, res) in results {
        match res {
            Ok(true) => summary.cached += 1,
            Ok(false) => summary.computed += 1,
            Err(e) => summary.failures.push((id, e)),
        }
    }
    Ok(summary)
}

#[derive(Debug)]
pub struct TrainOutcome {
    pub records: Vec<EpochRecord>,
    pub selected: EpochRecord,
    /// Test-split report of the selected checkpoint.
    pub report: EvalReport,
    /// Copy of the selected checkpoint, `model.ckpt` in the output directory.
    pub checkpoint: PathBuf,
}

/// Trains, writes every epoch checkpoint under `checkpoints/`, then picks
/// one and writes `log.csv`, `metrics.txt`, `per_class_f1.csv`,
/// `confusion.csv` and `model.ckpt` into the output directory.
pub fn train(cfg: &RunConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    let out = cfg
        .paths
        .output_dir
        .clone()
        .ok_or_else(|| Error::Config("train needs an output directory".into()))?;
    fs::create_dir_all(&out).map_err(|e| Error::file(&out, e))?;
    let featurizer = featurizer_for(cfg)?;
    let manifest = manifest_for(cfg)?;
    let cache = open_cache(cfg.cache_dir())?;
    let data = load_examples(&featurizer, &manifest, cache.as_ref(), false)?;

    let split = split_dataset(&data, &cfg.train)?;
    let pick = |idx: &[usize]| idx.iter().map(|&i| data[i].clone()).collect::<Vec<_>>();
    let (train_set, test_set) = (pick(&split.train), pick(&split.test));

    let model_cfg = featurizer.model_config(cfg.model.hidden, cfg.model.head_hidden);
    let mut model = Model::new(cfg.model_variant()?, model_cfg, cfg.train.seed)?;
    let mut card = ModelCard::new(&model, cfg.features.clone());
    card.embeddings = cfg
        .paths
        .embeddings
        .clone()
        .filter(|_| featurizer.text_mode() == TextMode::Dense);
    card.seed = Some(cfg.train.seed);
    card.train_ids = train_set.iter().map(|e| e.id.clone()).collect();
    card.test_ids = test_set.iter().map(|e| e.id.clone()).collect();

    let mut sink = DirectoryCheckpoints {
        dir: out.join("checkpoints"),
        card,
    };
    let run = fit(&mut model, &train_set, &test_set, &cfg.train, &mut sink, &mut |_| {
        std::ops::ControlFlow::Continue(())
    })?;
    write(&out.join("log.csv"), &epoch_log_csv(&run.records))?;

    let selected = select_checkpoint(&run.records).expect("at least one epoch").clone();
    let (best, best_card) = load_checkpoint(&sink.path_for(selected.epoch))?;
    let report = evaluate(&best, &test_set)?;
    let checkpoint = out.join("model.ckpt");
    save_checkpoint(&checkpoint, &best, &best_card)?;
    write_report(&out, &report)?;
    Ok(TrainOutcome {
        records: run.records,
        selected,
        report,
        checkpoint,
    })
}

fn write_report(dir: &Path, report: &EvalReport) -> Result<()> {
    write(&dir.join("metrics.txt"), &report.metrics_text())?;
    write(&dir.join("per_class_f1.csv"), &report.per_class_csv())?;
    write(&dir.join("confusion.csv"), &report.confusion_csv())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, clap::ValueEnum)]
pub enum Subset {
    #[default]
    All,
    Train,
    Test,
}

#[derive(Clone, Debug, Default)]
pub struct EvalOptions {
    pub checkpoint: PathBuf,
    pub manifest: PathBuf,
    pub columns: ColumnMap,
    pub use_alt_transcript: bool,
    pub subset: Subset,
    /// Overrides the table recorded in the checkpoint card.
    pub embeddings: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
    /// Where to write the report files, if anywhere.
    pub output_dir: Option<PathBuf>,
}

fn embeddings_for(card: &ModelCard, override_path: Option<&Path>) -> Result<Option<EmbeddingTable>> {
    if card.variant.text_mode() != TextMode::Dense {
        return Ok(None);
    }
    let path = override_path
        .or(card.embeddings.as_deref())
        .ok_or_else(|| Error::Config("dense checkpoint needs an embedding table".into()))?;
    load_embedding_table(path).map(Some)
}

pub fn eval(opts: &EvalOptions) -> Result<EvalReport> {
    let (model, card) = load_checkpoint(&opts.checkpoint)?;
    let table = embeddings_for(&card, opts.embeddings.as_deref())?;
    let featurizer = Featurizer::new(card.features.clone(), card.variant.text_mode(), table)?;
    let mut manifest = load_manifest_with(&opts.manifest, &opts.columns)?;
    let keep: Option<HashSet<&String>> = match opts.subset {
        Subset::All => None,
        Subset::Train => Some(card.train_ids.iter().collect()),
        Subset::Test => Some(card.test_ids.iter().collect()),
    };
    if let Some(keep) = keep {
        if keep.is_empty() {
            return Err(Error::Config("checkpoint records no split to select from".into()));
        }
        manifest.records.retain(|r| keep.contains(&r.id));
    }
    let cache = open_cache(opts.cache_dir.clone())?;
    let data = load_examples(&featurizer, &manifest, cache.as_ref(), opts.use_alt_transcript)?;
    let report = evaluate(&model, &data)?;
    if let Some(dir) = &opts.output_dir {
        fs::create_dir_all(dir).map_err(|e| Error::file(dir, e))?;
        write_report(dir, &report)?;
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassProbability {
    pub label: &'static str,
    pub prob: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PredictOutput {
    pub label: &'static str,
    pub probabilities: Vec<ClassProbability>,
    pub logits: Vec<f64>,
    pub audio_valid_len: usize,
    pub text_valid_len: Option<usize>,
    pub attention: Vec<AttentionDump>,
}

pub fn predict(checkpoint: &Path, wav: &Path, transcript: &str, embeddings: Option<&Path>) -> Result<PredictOutput> {
    let (model, card) = load_checkpoint(checkpoint)?;
    let table = embeddings_for(&card, embeddings)?;
    let featurizer = Featurizer::new(card.features.clone(), card.variant.text_mode(), table)?;
    let audio = featurizer.audio(&read_wav(wav)?)?;
    let text = featurizer.text(transcript)?;
    let p = model.predict(&audio, text.as_ref())?;
    Ok(PredictOutput {
        label: CLASS_NAMES[argmax(&p.probs)],
        probabilities: CLASS_NAMES
            .iter()
            .zip(&p.probs)
            .map(|(&label, &prob)| ClassProbability { label, prob })
            .collect(),
        logits: p.logits,
        audio_valid_len: audio.valid_len(),
        text_valid_len: text.as_ref().map(|t| t.valid_len()),
        attention: p.attention,
    })
}
