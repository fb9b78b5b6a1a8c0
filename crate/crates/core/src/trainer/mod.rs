//! Fine-tuning: Adam over the trainable blocks with a step learning-rate
//! decay, per-epoch checkpoints and a loss history.

mod config;
mod plot;

use std::path::{Path, PathBuf};
use std::time::Instant;

use cxrlens_nn::{Adam, Pass};
use ndarray::{Array2, Array4};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use config::{lr_at, Optimizer, TrainConfig};
pub use plot::render_loss_curve;

use crate::dataset::LabelVocabulary;
use crate::error::{Error, Result};
use crate::loader::ImageSet;
use crate::losses::LossConfig;
use crate::models::{to_logits, Checkpoint, ClassifierModel};
use crate::profile::Arch;
use crate::seeds::{derive, stream};

pub const HISTORY_FILE: &str = "history.jsonl";
pub const LOSS_CURVE_FILE: &str = "loss_curve.png";
pub const TRAINER_STATE: &str = "trainer_state.json";
pub const CHECKPOINTS_DIR: &str = "checkpoints";
pub const FINAL_CHECKPOINT: &str = "final";

/// One line of the history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// Zero-based epoch index.
    pub epoch: usize,
    pub mean_train_loss: f64,
    pub lr: f64,
    pub steps: usize,
    /// Seconds spent in the epoch.
    pub wall_time: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub records: Vec<EpochRecord>,
    pub checkpoints: Vec<PathBuf>,
}

impl TrainHistory {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn losses(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.mean_train_loss).collect()
    }

    pub fn lrs(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.lr).collect()
    }
}

/// Stored next to each checkpoint so a run can be resumed.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct TrainerState {
    train_config: TrainConfig,
    history: Vec<EpochRecord>,
}

/// Where and how a run writes its artifacts.
#[derive(Debug, Clone, Default)]
pub struct RunOutput {
    /// Run directory; nothing is written when `None`.
    pub dir: Option<PathBuf>,
    /// Print one line per epoch to stderr.
    pub verbose: bool,
}

impl RunOutput {
    pub fn to_dir(dir: impl Into<PathBuf>) -> Self {
        Self {
            dir: Some(dir.into()),
            verbose: false,
        }
    }

    pub fn checkpoint_dir(&self, name: &str) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(CHECKPOINTS_DIR).join(name))
    }
}

pub fn epoch_checkpoint_name(epochs_done: usize) -> String {
    format!("epoch_{epochs_done:03}")
}

/// One optimization step on a batch. Returns the mean loss before the
/// update.
pub fn train_step(
    model: &mut ClassifierModel,
    adam: &mut Adam,
    x: &Array4<f32>,
    y: &Array2<f64>,
    lr: f64,
    loss: &LossConfig,
    seed: u64,
) -> Result<f64> {
    let net = model.network_mut();
    let from = net
        .first_trainable()
        .ok_or_else(|| Error::InvalidArgument("the model has no trainable parameters".into()))?;
    let pass = Pass {
        train: true,
        record_from: Some(from),
        capture: None,
        seed,
    };
    let logits = to_logits(net.forward(x, &pass).output).mapv(f64::from);
    if logits.iter().any(|v| !v.is_finite()) {
        net.clear();
        return Err(Error::NonFinite("non-finite logits".into()));
    }
    let (value, grad) = match loss.value_and_grad(logits.view(), y.view()) {
        Ok(v) => v,
        Err(e) => {
            net.clear();
            return Err(e);
        }
    };
    if !value.is_finite() {
        net.clear();
        return Err(Error::NonFinite(format!("loss is {value}")));
    }
    let (n, c) = grad.dim();
    let g = grad
        .mapv(|v| v as f32)
        .into_shape_with_order((n, c, 1, 1))
        .expect("contiguous gradient");
    net.backward(g, from, false, true);
    adam.step(net, lr as f32);
    Ok(value)
}

/// Trains `model` for `cfg.epochs` epochs from scratch.
pub fn train(
    model: &mut ClassifierModel,
    data: &mut ImageSet,
    vocabulary: &LabelVocabulary,
    cfg: &TrainConfig,
    out: &RunOutput,
) -> Result<TrainHistory> {
    let mut adam = Adam::new(cfg.adam.into());
    let mut history = TrainHistory::default();
    run_epochs(model, &mut adam, data, vocabulary, cfg, out, &mut history)?;
    Ok(history)
}

/// Continues a run from a checkpoint written by [`train`], up to
/// `cfg.epochs` total epochs. The checkpoint must agree with the data's
/// vocabulary, the expected architecture (when given) and every
/// trajectory-shaping field of `cfg`.
pub fn resume(
    checkpoint: &Path,
    data: &mut ImageSet,
    vocabulary: &LabelVocabulary,
    cfg: &TrainConfig,
    arch: Option<Arch>,
    out: &RunOutput,
) -> Result<(ClassifierModel, TrainHistory)> {
    let meta = Checkpoint::read_meta(checkpoint)?;
    let mismatch = |field: &str, expected: String, found: String| Error::CheckpointMismatch {
        field: field.into(),
        expected,
        found,
    };
    if let Some(a) = arch {
        if a != meta.arch {
            return Err(mismatch("arch", a.to_string(), meta.arch.to_string()));
        }
    }
    if meta.num_classes != vocabulary.len() {
        return Err(mismatch(
            "num_classes",
            vocabulary.len().to_string(),
            meta.num_classes.to_string(),
        ));
    }
    if meta.vocabulary != vocabulary.classes() {
        return Err(mismatch(
            "vocabulary",
            vocabulary.classes().join(","),
            meta.vocabulary.join(","),
        ));
    }
    let state_path = checkpoint.join(TRAINER_STATE);
    let text = std::fs::read_to_string(&state_path).map_err(|e| Error::io(&state_path, e))?;
    let state: TrainerState = serde_json::from_str(&text).map_err(|source| Error::Json {
        path: state_path.clone(),
        source,
    })?;
    if let Some((field, expected, found)) = config_difference(cfg, &state.train_config) {
        return Err(mismatch(&field, expected, found));
    }
    if state.history.len() != meta.epoch {
        return Err(mismatch(
            "epoch",
            state.history.len().to_string(),
            meta.epoch.to_string(),
        ));
    }
    let (mut model, meta) = Checkpoint::load(checkpoint)?;
    let mut adam = Checkpoint::load_optimizer(checkpoint, &meta)?
        .unwrap_or_else(|| Adam::new(cfg.adam.into()));
    let mut history = TrainHistory {
        records: state.history,
        checkpoints: Vec::new(),
    };
    run_epochs(&mut model, &mut adam, data, vocabulary, cfg, out, &mut history)?;
    Ok((model, history))
}

/// First trajectory-shaping field that differs, as `(field, expected, found)`.
fn config_difference(cfg: &TrainConfig, stored: &TrainConfig) -> Option<(String, String, String)> {
    let a = serde_json::to_value(cfg).expect("serializable");
    let b = serde_json::to_value(stored).expect("serializable");
    let (a, b) = (a.as_object()?, b.as_object()?);
    a.iter()
        .filter(|(k, _)| *k != "epochs")
        .find(|(k, v)| b.get(*k) != Some(v))
        .map(|(k, v)| {
            let found = b.get(k).map(|x| x.to_string()).unwrap_or_default();
            (format!("train_config.{k}"), v.to_string(), found)
        })
}

fn run_epochs(
    model: &mut ClassifierModel,
    adam: &mut Adam,
    data: &mut ImageSet,
    vocabulary: &LabelVocabulary,
    cfg: &TrainConfig,
    out: &RunOutput,
    history: &mut TrainHistory,
) -> Result<()> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::InvalidArgument("training split is empty".into()));
    }
    if data.num_classes() != model.num_classes() {
        return Err(Error::InvalidArgument(format!(
            "data has {} classes, model has {}",
            data.num_classes(),
            model.num_classes()
        )));
    }
    if let Some(dir) = &out.dir {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let config_hash = cfg.trajectory_hash();
    let seed = cfg.seed;
    for epoch in history.len()..cfg.epochs {
        let started = Instant::now();
        let lr = lr_at(epoch, cfg);
        let mut order: Vec<usize> = (0..data.len()).collect();
        let e = epoch as u64;
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(derive(seed, &[stream::SHUFFLE, e])));
        let mut total = 0.0;
        let mut steps = 0;
        for (step, chunk) in order.chunks(cfg.batch_train).enumerate() {
            let seed_of = |i: usize| derive(seed, &[stream::AUGMENT, e, i as u64]);
            let augment = cfg.augment.then_some((&cfg.augmentation, &seed_of as &dyn Fn(usize) -> u64));
            let (x, y) = data.batch(chunk, augment)?;
            let dropout_seed = derive(seed, &[stream::DROPOUT, e, step as u64]);
            let loss = train_step(model, adam, &x, &y, lr, &cfg.loss, dropout_seed).map_err(|err| {
                if err.is_numerical() {
                    Error::NonFiniteLoss {
                        epoch,
                        step,
                        ids: chunk.iter().map(|&i| data.ids()[i].clone()).collect(),
                    }
                } else {
                    err
                }
            })?;
            total += loss * chunk.len() as f64;
            steps += 1;
        }
        let record = EpochRecord {
            epoch,
            mean_train_loss: total / data.len() as f64,
            lr,
            steps,
            wall_time: started.elapsed().as_secs_f64(),
        };
        if out.verbose {
            eprintln!(
                "epoch {:>3}  loss {:.6}  lr {:e}  {:.1}s",
                epoch + 1,
                record.mean_train_loss,
                record.lr,
                record.wall_time
            );
        }
        history.records.push(record);
        if let Some(dir) = out.checkpoint_dir(&epoch_checkpoint_name(epoch + 1)) {
            save_checkpoint(&dir, model, adam, vocabulary, cfg, history, &config_hash)?;
            history.checkpoints.push(dir);
        }
        if let Some(dir) = &out.dir {
            write_history(&dir.join(HISTORY_FILE), &history.records)?;
        }
    }
    if let (Some(dir), Some(last)) = (&out.dir, out.checkpoint_dir(FINAL_CHECKPOINT)) {
        save_checkpoint(&last, model, adam, vocabulary, cfg, history, &config_hash)?;
        history.checkpoints.push(last);
        render_loss_curve(&history.losses(), &dir.join(LOSS_CURVE_FILE))?;
    }
    Ok(())
}

fn save_checkpoint(
    dir: &Path,
    model: &ClassifierModel,
    adam: &Adam,
    vocabulary: &LabelVocabulary,
    cfg: &TrainConfig,
    history: &TrainHistory,
    config_hash: &str,
) -> Result<()> {
    Checkpoint::save(
        dir,
        model,
        vocabulary,
        history.len(),
        config_hash,
        Some((adam, cfg.adam)),
    )?;
    let state = TrainerState {
        train_config: cfg.clone(),
        history: history.records.clone(),
    };
    crate::models::write_json(&dir.join(TRAINER_STATE), &state)
}

fn write_history(path: &Path, records: &[EpochRecord]) -> Result<()> {
    let mut text = String::new();
    for r in records {
        text.push_str(&serde_json::to_string(r).expect("serializable"));
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Reads a `history.jsonl` file.
pub fn read_history(path: &Path) -> Result<Vec<EpochRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            serde_json::from_str(l).map_err(|source| Error::Json {
                path: path.to_path_buf(),
                source,
            })
        })
        .collect()
}

/// Repeats one batch for `steps` updates at a constant learning rate and
/// returns the per-step losses.
pub fn fit_batch(
    model: &mut ClassifierModel,
    x: &Array4<f32>,
    y: &Array2<f64>,
    cfg: &TrainConfig,
    steps: usize,
) -> Result<Vec<f64>> {
    let mut adam = Adam::new(cfg.adam.into());
    (0..steps)
        .map(|s| {
            let seed = derive(cfg.seed, &[stream::DROPOUT, 0, s as u64]);
            train_step(model, &mut adam, x, y, cfg.base_lr, &cfg.loss, seed)
        })
        .collect()
}

#[cfg(test)]
mod tests;
