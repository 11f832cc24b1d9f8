//! The `ambi` command line: `synth`, `featurize`, `train`, `eval` and
//! `predict`. Exit codes are 0 on success, 1 for data errors and 2 for
//! configuration errors.

mod commands;
mod config;

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::{
    eval, featurize, load_examples, predict, synth, train, ClassProbability, EvalOptions, FeaturizeSummary,
    PredictOutput, Subset, TrainOutcome,
};
pub use config::{ModelSize, Paths, RunConfig, CACHE_DIR_ENV};

use crate::corpus::{ColumnMap, SyntheticSpec};
use crate::error::Result;
use crate::models::{TextMode, VariantTag};

#[derive(Debug, Parser)]
#[command(
    name = "ambi",
    version,
    about = "Speech intention classifiers over audio and transcripts"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render a labelled synthetic corpus with manifest and embeddings.
    Synth(SynthArgs),
    /// Compute and cache audio features for every manifest record.
    Featurize(RunArgs),
    /// Train a variant and keep the selected checkpoint.
    Train(RunArgs),
    /// Score a checkpoint on a manifest.
    Eval(EvalArgs),
    /// Classify one recording and dump attention weights as JSON.
    Predict(PredictArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 350)]
    pub scripts: usize,
    #[arg(long, default_value_t = 2)]
    pub variants_per_script: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 2)]
    pub speakers: usize,
    #[arg(long, default_value_t = 8)]
    pub embedding_dim: usize,
}

/// A config file plus flag overrides.
#[derive(Debug, Default, Args)]
pub struct RunArgs {
    /// TOML run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub variant: Option<VariantTag>,
    #[arg(long)]
    pub text_mode: Option<TextMode>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub head_hidden: Option<usize>,
    #[arg(long)]
    pub n_fft: Option<usize>,
    #[arg(long)]
    pub n_mels: Option<usize>,
    /// Keep every rendition of a transcript on one side of the split.
    #[arg(long)]
    pub group_by_script: bool,
}

impl RunArgs {
    /// Reads the config file (or defaults), applies the flags, validates.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(v) = self.variant {
            cfg.variant = v;
            if self.text_mode.is_none() && cfg.text_mode.is_some_and(|m| (m == TextMode::None) == v.uses_text()) {
                cfg.text_mode = None;
            }
        }
        set(&mut cfg.text_mode, self.text_mode.map(Some));
        set(&mut cfg.paths.manifest, self.manifest.clone().map(Some));
        set(&mut cfg.paths.embeddings, self.embeddings.clone().map(Some));
        set(&mut cfg.paths.cache_dir, self.cache_dir.clone().map(Some));
        set(&mut cfg.paths.output_dir, self.out.clone().map(Some));
        set(&mut cfg.train.max_epochs, self.epochs);
        set(&mut cfg.train.batch_size, self.batch_size);
        set(&mut cfg.train.learning_rate, self.lr);
        set(&mut cfg.train.seed, self.seed);
        set(&mut cfg.model.hidden, self.hidden);
        set(&mut cfg.model.head_hidden, self.head_hidden);
        set(&mut cfg.features.n_fft, self.n_fft);
        set(&mut cfg.features.n_mels, self.n_mels);
        cfg.train.group_by_script |= self.group_by_script;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub manifest: PathBuf,
    /// Score on the alternate (e.g. recogniser) transcripts where present.
    #[arg(long)]
    pub use_alt_transcript: bool,
    #[arg(long, value_enum, default_value_t = Subset::All)]
    pub subset: Subset,
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    #[arg(long, env = CACHE_DIR_ENV)]
    pub cache_dir: Option<PathBuf>,
    /// Write metrics.txt, per_class_f1.csv and confusion.csv here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub wav: PathBuf,
    #[arg(long, default_value = "")]
    pub transcript: String,
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
}

/// Runs one command, writing human-readable output to `out`. Returns the
/// process exit code for outcomes that are not errors, such as per-record
/// featurisation failures.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<i32> {
    match cli.command {
        Command::Synth(a) => {
            let spec = SyntheticSpec {
                n_scripts: a.scripts,
                variants_per_script: a.variants_per_script,
                seed: a.seed,
                speakers: a.speakers,
                embedding_dim: a.embedding_dim,
                ..SyntheticSpec::default()
            };
            let m = synth(&spec, &a.out)?;
            writeln!(
                out,
                "wrote {} records to {}",
                m.len(),
                a.out.join("manifest.tsv").display()
            )?;
            Ok(0)
        }
        Command::Featurize(a) => {
            let s = featurize(&a.resolve()?)?;
            for (id, e) in &s.failures {
                writeln!(out, "failed {id}: {e}")?;
            }
            writeln!(
                out,
                "computed {}, cached {}, failed {}",
                s.computed,
                s.cached,
                s.failures.len()
            )?;
            Ok(if s.failures.is_empty() { 0 } else { 1 })
        }
        Command::Train(a) => {
            let cfg = a.resolve()?;
            let t = train(&cfg)?;
            writeln!(
                out,
                "selected epoch {} of {} (acc {:.4}, macro F1 {:.4})",
                t.selected.epoch,
                t.records.len(),
                t.selected.accuracy,
                t.selected.f1
            )?;
            write!(out, "{}", t.report.metrics_text())?;
            writeln!(out, "checkpoint {}", t.checkpoint.display())?;
            Ok(0)
        }
        Command::Eval(a) => {
            let opts = EvalOptions {
                checkpoint: a.checkpoint,
                manifest: a.manifest,
                columns: ColumnMap::default(),
                use_alt_transcript: a.use_alt_transcript,
                subset: a.subset,
                embeddings: a.embeddings,
                cache_dir: a.cache_dir,
                output_dir: a.out,
            };
            let r = eval(&opts)?;
            write!(out, "{}", r.metrics_text())?;
            Ok(0)
        }
        Command::Predict(a) => {
            let p = predict(&a.checkpoint, &a.wav, &a.transcript, a.embeddings.as_deref())?;
            let json = serde_json::to_string_pretty(&p).expect("prediction serialises");
            writeln!(out, "{json}")?;
            Ok(0)
        }
    }
}
