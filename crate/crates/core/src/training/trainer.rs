use std::fmt::Write as _;
use std::ops::ControlFlow;
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::metrics::EvalReport;
use super::split::{split_dataset, Split};
use crate::error::{Error, Result};
use crate::features::FeatureSequence;
use crate::models::{argmax, save_checkpoint, Model, ModelCard, Prediction, NUM_CLASSES};
use crate::numerics::{Graph, ParamStore};

/// Probabilities below this are clamped before taking the log.
pub const PROB_FLOOR: f64 = 1e-12;

const SHUFFLE_STREAM: u64 = 2;

/// `-ln(max(probs[label], 1e-12))`.
pub fn cross_entropy(probs: &[f64], label: usize) -> Result<f64> {
    if label >= NUM_CLASSES || label >= probs.len() {
        return Err(Error::Label(format!("class index {label} out of range")));
    }
    Ok(-probs[label].max(PROB_FLOOR).ln())
}

/// One featurised utterance.
#[derive(Clone, Debug, PartialEq)]
pub struct Example {
    pub id: String,
    pub audio: FeatureSequence,
    pub text: Option<FeatureSequence>,
    pub label: usize,
    pub speaker: String,
    /// Records with equal `script` are renditions of the same sentence.
    pub script: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub max_epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    /// Fraction of each speaker's records used for training.
    pub split_ratio: f64,
    pub group_by_script: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            max_epochs: 100,
            batch_size: 64,
            learning_rate: 5e-4,
            seed: 0,
            split_ratio: 0.9,
            group_by_script: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return Err(Error::Config(format!("split_ratio {} not in (0, 1)", self.split_ratio)));
        }
        if self.max_epochs == 0 {
            return Err(Error::Config("max_epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning_rate {} must be positive",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    pub accuracy: f64,
    pub f1: f64,
    /// Mean training loss over the epoch.
    pub loss: f64,
    pub checkpoint: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainRun {
    pub split: Split,
    pub records: Vec<EpochRecord>,
    /// Mean loss of the very first mini-batch, before any update.
    pub first_batch_loss: f64,
}

/// Receives the model after every epoch and returns a reference to
/// whatever it persisted.
pub trait CheckpointSink {
    fn save(&mut self, epoch: usize, model: &Model) -> Result<Option<String>>;
}

/// Keeps nothing.
#[derive(Debug, Default)]
pub struct NoCheckpoints;

impl CheckpointSink for NoCheckpoints {
    fn save(&mut self, _epoch: usize, _model: &Model) -> Result<Option<String>> {
        Ok(None)
    }
}

/// Keeps every epoch's parameters in memory.
#[derive(Debug, Default)]
pub struct MemoryCheckpoints {
    pub snapshots: Vec<(usize, ParamStore)>,
}

impl MemoryCheckpoints {
    pub fn get(&self, epoch: usize) -> Option<&ParamStore> {
        self.snapshots.iter().find(|(e, _)| *e == epoch).map(|(_, s)| s)
    }
}

impl CheckpointSink for MemoryCheckpoints {
    fn save(&mut self, epoch: usize, model: &Model) -> Result<Option<String>> {
        self.snapshots.push((epoch, model.params().clone()));
        Ok(Some(format!("memory:{epoch}")))
    }
}

/// Writes `epoch_NNN.ckpt` plus sidecar into a directory.
#[derive(Debug)]
pub struct DirectoryCheckpoints {
    pub dir: PathBuf,
    pub card: ModelCard,
}

impl DirectoryCheckpoints {
    pub fn path_for(&self, epoch: usize) -> PathBuf {
        self.dir.join(format!("epoch_{epoch:03}.ckpt"))
    }
}

impl CheckpointSink for DirectoryCheckpoints {
    fn save(&mut self, epoch: usize, model: &Model) -> Result<Option<String>> {
        std::fs::create_dir_all(&self.dir).map_err(|e| Error::file(&self.dir, e))?;
        let path = self.path_for(epoch);
        let mut card = self.card.clone();
        card.epoch = Some(epoch);
        save_checkpoint(&path, model, &card)?;
        Ok(Some(path.display().to_string()))
    }
}

/// Loss of one example and the gradient of every parameter, in store order.
pub fn loss_and_gradients(model: &Model, ex: &Example) -> Result<(f64, Vec<Vec<f64>>)> {
    let mut g = Graph::new();
    let p = model.params().bind(&mut g);
    let out = model.forward_graph(&mut g, &p, &ex.audio, ex.text.as_ref())?;
    if ex.label >= NUM_CLASSES {
        return Err(Error::Label(format!("class index {} out of range", ex.label)));
    }
    let loss = g.neg_log_pick(out.probs, ex.label, PROB_FLOOR)?;
    let value = g.value(loss).item();
    let mut grads = g.backward(loss)?;
    let per_param = p
        .iter()
        .map(|&v| grads.take(v).expect("parameters always receive gradients"))
        .collect();
    Ok((value, per_param))
}

pub fn predict_all(model: &Model, data: &[Example]) -> Result<Vec<Prediction>> {
    data.par_iter()
        .map(|ex| model.predict(&ex.audio, ex.text.as_ref()))
        .collect()
}

pub fn evaluate(model: &Model, data: &[Example]) -> Result<EvalReport> {
    if data.is_empty() {
        return Err(Error::Config("cannot evaluate an empty set".into()));
    }
    let preds = predict_all(model, data)?;
    let truth: Vec<usize> = data.iter().map(|e| e.label).collect();
    let labels: Vec<usize> = preds.iter().map(|p| argmax(&p.probs)).collect();
    EvalReport::from_predictions(&truth, &labels)
}

/// Splits `data`, then trains and evaluates every epoch.
pub fn train(
    model: &mut Model,
    data: &[Example],
    cfg: &TrainConfig,
    sink: &mut dyn CheckpointSink,
) -> Result<TrainRun> {
    let split = split_dataset(data, cfg)?;
    let pick = |idx: &[usize]| idx.iter().map(|&i| data[i].clone()).collect::<Vec<_>>();
    let (train_set, test_set) = (pick(&split.train), pick(&split.test));
    let mut run = fit(model, &train_set, &test_set, cfg, sink, &mut |_| {
        ControlFlow::Continue(())
    })?;
    run.split = split;
    Ok(run)
}

/// The optimisation loop proper. Every epoch shuffles `train_set` with the
/// seeded generator, takes Adam steps on batch-mean gradients, evaluates
/// on `test_set` and hands the model to `sink`. `observer` sees each
/// record and may end the run early.
pub fn fit(
    model: &mut Model,
    train_set: &[Example],
    test_set: &[Example],
    cfg: &TrainConfig,
    sink: &mut dyn CheckpointSink,
    observer: &mut dyn FnMut(&EpochRecord) -> ControlFlow<()>,
) -> Result<TrainRun> {
    cfg.validate()?;
    if train_set.is_empty() || test_set.is_empty() {
        return Err(Error::Config("training and test sets must be non-empty".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(SHUFFLE_STREAM);
    let mut opt = Adam::new(cfg.learning_rate);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut records = Vec::with_capacity(cfg.max_epochs);
    let mut first_batch_loss = None;

    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let mut sum: Option<Vec<Vec<f64>>> = None;
            let mut batch_loss = 0.0;
            for &i in batch {
                let (loss, grads) = loss_and_gradients(model, &train_set[i])?;
                batch_loss += loss;
                match sum.as_mut() {
                    None => sum = Some(grads),
                    Some(acc) => {
                        for (a, g) in acc.iter_mut().zip(&grads) {
                            for (x, y) in a.iter_mut().zip(g) {
                                *x += y;
                            }
                        }
                    }
                }
            }
            let scale = 1.0 / batch.len() as f64;
            let mut mean = sum.expect("batches are non-empty");
            mean.iter_mut().flatten().for_each(|x| *x *= scale);
            first_batch_loss.get_or_insert(batch_loss * scale);
            epoch_loss += batch_loss;
            opt.step(model.params_mut(), &mean)?;
        }
        let report = evaluate(model, test_set)?;
        let checkpoint = sink.save(epoch, model)?;
        let record = EpochRecord {
            epoch,
            accuracy: report.accuracy,
            f1: report.macro_f1,
            loss: epoch_loss / train_set.len() as f64,
            checkpoint,
        };
        let flow = observer(&record);
        records.push(record);
        if flow.is_break() {
            break;
        }
    }
    Ok(TrainRun {
        split: Split::default(),
        records,
        first_batch_loss: first_batch_loss.unwrap_or(f64::NAN),
    })
}

/// `epoch,acc,f1,loss` with one line per epoch.
pub fn epoch_log_csv(records: &[EpochRecord]) -> String {
    let mut out = String::from("epoch,acc,f1,loss\n");
    for r in records {
        writeln!(out, "{},{:.6},{:.6},{:.6}", r.epoch, r.accuracy, r.f1, r.loss).unwrap();
    }
    out
}

/// Inverse of [`epoch_log_csv`], up to the printed precision.
pub fn parse_epoch_log(text: &str) -> Result<Vec<EpochRecord>> {
    let path = PathBuf::from("<epoch log>");
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, "epoch,acc,f1,loss")) => {}
        _ => {
            return Err(Error::Parse {
                path,
                line: 1,
                message: "expected header epoch,acc,f1,loss".into(),
            })
        }
    }
    lines
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let bad = |message: String| Error::Parse {
                path: path.clone(),
                line: i + 1,
                message,
            };
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 4 {
                return Err(bad(format!("expected 4 fields, got {}", f.len())));
            }
            let num = |s: &str| s.trim().parse::<f64>().map_err(|e| bad(format!("{s:?}: {e}")));
            Ok(EpochRecord {
                epoch: f[0].trim().parse().map_err(|e| bad(format!("{:?}: {e}", f[0])))?,
                accuracy: num(f[1])?,
                f1: num(f[2])?,
                loss: num(f[3])?,
                checkpoint: None,
            })
        })
        .collect()
}
