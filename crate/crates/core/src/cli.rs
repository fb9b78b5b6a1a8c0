//! The `cxrlens` command line: prepare, train, evaluate, explain, plus
//! helpers to pretrain backbones and generate a synthetic corpus.
//!
//! Exit codes: 0 success, 2 usage or validation error, 3 numerical failure.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::config::{require_file, RunConfig};
use crate::dataset::{
    build_splits, encode_rows, make_subset, parse_label_manifest, DatasetSplit, LabelVocabulary,
};
use crate::error::{Error, Result};
use crate::evaluate::evaluate;
use crate::gradcam::{layer_sweep, compute_cam, overlay, panel, CamSidecar, Heatmap};
use crate::loader::ImageSet;
use crate::losses::LossKind;
use crate::metrics::format_table;
use crate::models::{Checkpoint, ClassifierModel, ModelSpec, WeightStore};
use crate::preprocess::load_and_standardize;
use crate::profile::{Arch, LayerSelector};
use crate::synthetic::{pretrain, write_nih_fixture, PretrainConfig};
use crate::trainer::{resume, train, RunOutput, FINAL_CHECKPOINT};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const DIAGNOSTICS_FILE: &str = "diagnostics.json";

#[derive(Debug, Parser)]
#[command(name = "cxrlens", version, about = "Multi-label chest radiograph classification")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse the label manifest and write normalized train/test splits.
    Prepare(PrepareArgs),
    /// Fine-tune a classifier on a prepared split.
    Train(TrainArgs),
    /// Score a checkpoint on a prepared split.
    Evaluate(EvaluateArgs),
    /// Grad-CAM overlays for one or more images.
    Explain(ExplainArgs),
    /// Pretrain a backbone on the synthetic source task into the weight store.
    Pretrain(PretrainArgs),
    /// Write a synthetic NIH-style corpus.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct PrepareArgs {
    /// TOML run configuration; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub image_root: Option<PathBuf>,
    #[arg(long)]
    pub train_list: Option<PathBuf>,
    #[arg(long)]
    pub test_list: Option<PathBuf>,
    /// Class list file, one class per line.
    #[arg(long)]
    pub vocabulary: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write stratified subsets of this fraction.
    #[arg(long)]
    pub fraction: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Prepared training split (JSON).
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub arch: Option<String>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_train: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub lr_step_epochs: Option<usize>,
    #[arg(long)]
    pub lr_factor: Option<f64>,
    /// `bce` or `focal`.
    #[arg(long)]
    pub loss: Option<String>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    /// `none`, `backbone` or `up_to_boundary`.
    #[arg(long)]
    pub freeze: Option<String>,
    #[arg(long)]
    pub width_divisor: Option<usize>,
    #[arg(long)]
    pub input_size: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Pretrained weight directory.
    #[arg(long)]
    pub weights: Option<PathBuf>,
    /// Start from random weights instead of the weight store.
    #[arg(long)]
    pub from_scratch: bool,
    #[arg(long)]
    pub no_augment: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Continue from this checkpoint directory.
    #[arg(long)]
    pub resume: Option<PathBuf>,
    #[arg(long, short)]
    pub quiet: bool,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Prepared split (JSON) to score.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub batch_eval: Option<usize>,
    /// Also score a randomly initialized twin of the checkpoint's model.
    #[arg(long)]
    pub no_pretrained_baseline: bool,
    /// Row label in the table.
    #[arg(long)]
    pub name: Option<String>,
}

#[derive(Debug, Args)]
pub struct ExplainArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long = "class")]
    pub class: String,
    /// `early`, `middle`, `final` or a layer name.
    #[arg(long, default_value = "final")]
    pub layer: String,
    /// Maps at all three depths plus a side-by-side panel.
    #[arg(long)]
    pub sweep: bool,
    #[arg(long, default_value_t = 0.5)]
    pub opacity: f32,
    /// Side of each panel tile in pixels.
    #[arg(long, default_value_t = 224)]
    pub tile: u32,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(required = true)]
    pub images: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PretrainArgs {
    #[arg(long)]
    pub arch: String,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub width_divisor: Option<usize>,
    #[arg(long)]
    pub input_size: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Weight directory to write; defaults to the environment setting.
    #[arg(long)]
    pub weights: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 50)]
    pub n: usize,
    #[arg(long, default_value_t = 128)]
    pub size: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                EXIT_NUMERICAL
            } else {
                EXIT_USAGE
            }
        }
    }
}

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Prepare(a) => cmd_prepare(a),
        Command::Train(a) => cmd_train(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Explain(a) => cmd_explain(a),
        Command::Pretrain(a) => cmd_pretrain(a),
        Command::Synth(a) => cmd_synth(a),
    }
}

fn set<T>(slot: &mut T, flag: Option<T>) {
    if let Some(v) = flag {
        *slot = v;
    }
}

fn set_opt<T>(slot: &mut Option<T>, flag: Option<T>) {
    if flag.is_some() {
        *slot = flag;
    }
}

fn output_dir(cfg: &RunConfig) -> Result<PathBuf> {
    cfg.paths
        .output_dir
        .clone()
        .ok_or_else(|| Error::InvalidArgument("no output directory; pass --out".into()))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    crate::models::write_json(path, value)
}

fn load_vocabulary(cfg: &RunConfig) -> Result<LabelVocabulary> {
    match &cfg.paths.vocabulary {
        Some(p) => LabelVocabulary::from_file(require_file(Some(p), "vocabulary")?),
        None => Ok(LabelVocabulary::nih()),
    }
}

/// Positive counts per class with their share of the split.
pub fn class_frequency_table(splits: &[&DatasetSplit]) -> String {
    let vocab = &splits[0].vocabulary;
    let width = vocab.classes().iter().map(|c| c.len()).max().unwrap_or(5).max(5);
    let mut out = format!("{:<width$}", "Class");
    for s in splits {
        write!(out, " | {:>14}", format!("{} (n={})", s.name, s.len())).ok();
    }
    out.push('\n');
    out.push_str(&"-".repeat(width));
    for _ in splits {
        out.push_str("-|-");
        out.push_str(&"-".repeat(14));
    }
    out.push('\n');
    let counts: Vec<Vec<usize>> = splits.iter().map(|s| s.class_counts()).collect();
    for (c, class) in vocab.classes().iter().enumerate() {
        write!(out, "{class:<width$}").ok();
        for (s, k) in splits.iter().zip(&counts) {
            let pct = 100.0 * k[c] as f64 / s.len().max(1) as f64;
            write!(out, " | {:>14}", format!("{} ({pct:.1}%)", k[c])).ok();
        }
        out.push('\n');
    }
    out
}

fn cmd_prepare(a: PrepareArgs) -> Result<()> {
    let mut cfg = RunConfig::load(a.config.as_deref())?;
    set_opt(&mut cfg.paths.manifest, a.manifest);
    set_opt(&mut cfg.paths.image_root, a.image_root);
    set_opt(&mut cfg.paths.train_list, a.train_list);
    set_opt(&mut cfg.paths.test_list, a.test_list);
    set_opt(&mut cfg.paths.vocabulary, a.vocabulary);
    set_opt(&mut cfg.paths.output_dir, a.out);
    set_opt(&mut cfg.subset.fraction, a.fraction);
    set(&mut cfg.subset.seed, a.seed);

    let manifest = require_file(cfg.paths.manifest.as_deref(), "manifest")?;
    let image_root = require_file(cfg.paths.image_root.as_deref(), "image root")?;
    let train_list = require_file(cfg.paths.train_list.as_deref(), "train list")?;
    let test_list = require_file(cfg.paths.test_list.as_deref(), "test list")?;
    let out = output_dir(&cfg)?;
    let vocab = load_vocabulary(&cfg)?;
    if let Some(f) = cfg.subset.fraction {
        if !(f > 0.0 && f <= 1.0) {
            return Err(Error::InvalidArgument(format!("--fraction must be in (0, 1], got {f}")));
        }
    }

    let parsed = parse_label_manifest(&manifest, &image_root)?;
    for id in &parsed.missing_files {
        eprintln!("warning: image file for {id} is missing");
    }
    let records = encode_rows(parsed.rows, &vocab)?;
    let (train, test, report) = build_splits(records, &vocab, &train_list, &test_list)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    train.save(out.join("train.json"))?;
    test.save(out.join("test.json"))?;
    let mut shown = vec![train.clone(), test.clone()];
    if let Some(f) = cfg.subset.fraction {
        let tm = make_subset(&train, f, cfg.subset.seed)?;
        let sm = make_subset(&test, f, cfg.subset.seed)?;
        tm.save(out.join("train_mini.json"))?;
        sm.save(out.join("test_mini.json"))?;
        shown = vec![tm, sm];
    }
    write_json(&out.join("split_report.json"), &report)?;
    cfg.write_resolved(&out)?;
    let refs: Vec<&DatasetSplit> = shown.iter().collect();
    print!("{}", class_frequency_table(&refs));
    println!(
        "train {} / test {} records ({} unlisted, {} list entries unmatched) written to {}",
        report.train,
        report.test,
        report.unlisted,
        report.unmatched,
        out.display()
    );
    Ok(())
}

fn weight_store(cfg: &RunConfig) -> Option<WeightStore> {
    cfg.paths.weights.clone().map(WeightStore::new).or_else(WeightStore::from_env)
}

fn load_split(path: Option<&Path>, role: &str) -> Result<DatasetSplit> {
    DatasetSplit::load(require_file(path, role)?)
}

fn image_set(split: &DatasetSplit, model: &ClassifierModel) -> Result<ImageSet> {
    let (set, missing) = ImageSet::from_split_present(split, model.profile());
    for id in &missing {
        eprintln!("warning: skipping {id}: image file is missing");
    }
    if set.is_empty() {
        return Err(Error::InvalidArgument("no readable images in the split".into()));
    }
    Ok(set)
}

#[derive(Serialize)]
struct Diagnostics<'a> {
    error: String,
    epoch: Option<usize>,
    step: Option<usize>,
    batch_ids: &'a [String],
    train_config: &'a crate::trainer::TrainConfig,
}

fn cmd_train(a: TrainArgs) -> Result<()> {
    let mut cfg = RunConfig::load(a.config.as_deref())?;
    set_opt(&mut cfg.paths.train_split, a.data);
    set_opt(&mut cfg.paths.output_dir, a.out);
    set_opt(&mut cfg.paths.weights, a.weights);
    set_opt(&mut cfg.paths.checkpoint, a.resume);
    if let Some(arch) = a.arch {
        cfg.model.arch = arch.parse()?;
    }
    if let Some(f) = a.freeze {
        cfg.model.freeze_policy = f.parse()?;
    }
    set(&mut cfg.model.width_divisor, a.width_divisor);
    set_opt(&mut cfg.model.input_size, a.input_size);
    if a.from_scratch {
        cfg.model.pretrained = false;
    }
    let t = &mut cfg.train;
    set(&mut t.epochs, a.epochs);
    set(&mut t.batch_train, a.batch_train);
    set(&mut t.base_lr, a.lr);
    set(&mut t.lr_step_epochs, a.lr_step_epochs);
    set(&mut t.lr_factor, a.lr_factor);
    set(&mut t.seed, a.seed);
    set(&mut t.loss.alpha, a.alpha);
    set(&mut t.loss.gamma, a.gamma);
    if let Some(kind) = a.loss {
        t.loss.kind = match kind.as_str() {
            "bce" => LossKind::Bce,
            "focal" => LossKind::Focal,
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown loss `{other}`; valid: bce, focal"
                )))
            }
        };
    }
    if a.no_augment {
        t.augment = false;
    }
    cfg.train.validate()?;

    let split = load_split(cfg.paths.train_split.as_deref(), "training split")?;
    let out_dir = output_dir(&cfg)?;
    let resume_from = match &cfg.paths.checkpoint {
        Some(p) => Some(require_file(Some(p), "checkpoint")?),
        None => None,
    };
    let vocab = split.vocabulary.clone();
    let mut spec = ModelSpec::new(cfg.model.arch, vocab.len())
        .pretrained(cfg.model.pretrained)
        .freeze(cfg.model.freeze_policy)
        .width_divisor(cfg.model.width_divisor)
        .seed(cfg.train.seed);
    if let Some(s) = cfg.model.input_size {
        spec = spec.input_size(s);
    }
    spec.validate()?;
    cfg.model.input_size = Some(spec.profile.input_size);
    cfg.write_resolved(&out_dir)?;

    let output = RunOutput {
        dir: Some(out_dir.clone()),
        verbose: !a.quiet,
    };
    let result = match resume_from {
        Some(ck) => {
            let probe = ClassifierModel::build(&spec.clone().pretrained(false), None)?;
            let mut data = image_set(&split, &probe)?;
            resume(&ck, &mut data, &vocab, &cfg.train, Some(cfg.model.arch), &output).map(|(_, h)| h)
        }
        None => {
            let store = weight_store(&cfg);
            let mut model = ClassifierModel::build(&spec, store.as_ref())?;
            let mut data = image_set(&split, &model)?;
            train(&mut model, &mut data, &vocab, &cfg.train, &output)
        }
    };
    match result {
        Ok(history) => {
            let n = history.len();
            println!(
                "trained {n} epoch{}; final checkpoint {}",
                if n == 1 { "" } else { "s" },
                out_dir.join("checkpoints").join(FINAL_CHECKPOINT).display()
            );
            Ok(())
        }
        Err(e) => {
            if e.is_numerical() {
                let (epoch, step, ids) = match &e {
                    Error::NonFiniteLoss { epoch, step, ids } => (Some(*epoch), Some(*step), ids.clone()),
                    _ => (None, None, Vec::new()),
                };
                let diag = Diagnostics {
                    error: e.to_string(),
                    epoch,
                    step,
                    batch_ids: &ids,
                    train_config: &cfg.train,
                };
                let path = out_dir.join(DIAGNOSTICS_FILE);
                write_json(&path, &diag)?;
                eprintln!("diagnostics written to {}", path.display());
            }
            Err(e)
        }
    }
}

fn cmd_evaluate(a: EvaluateArgs) -> Result<()> {
    let mut cfg = RunConfig::load(a.config.as_deref())?;
    set_opt(&mut cfg.paths.checkpoint, a.checkpoint);
    set_opt(&mut cfg.paths.test_split, a.data);
    set_opt(&mut cfg.paths.output_dir, a.out);
    set(&mut cfg.eval.threshold, a.threshold);
    set(&mut cfg.eval.batch_eval, a.batch_eval);
    if !(0.0..=1.0).contains(&cfg.eval.threshold) {
        return Err(Error::InvalidArgument(format!(
            "threshold must be in [0, 1], got {}",
            cfg.eval.threshold
        )));
    }
    let ck = require_file(cfg.paths.checkpoint.as_deref(), "checkpoint")?;
    let split = load_split(cfg.paths.test_split.as_deref(), "evaluation split")?;
    let out = output_dir(&cfg)?;
    let meta = Checkpoint::read_meta(&ck)?;
    if meta.vocabulary != split.vocabulary.classes() {
        return Err(Error::CheckpointMismatch {
            field: "vocabulary".into(),
            expected: split.vocabulary.classes().join(","),
            found: meta.vocabulary.join(","),
        });
    }
    let (mut model, meta) = Checkpoint::load(&ck)?;
    let mut data = image_set(&split, &model)?;
    let vocab = &split.vocabulary;
    let name = a.name.unwrap_or_else(|| meta.arch.to_string());
    let mut reports = Vec::new();
    if a.no_pretrained_baseline {
        let mut twin = ClassifierModel::build(&meta.model_spec().pretrained(false), None)?;
        reports.push(evaluate(&mut twin, &mut data, vocab, &format!("{name} (random init)"), &cfg.eval)?);
    }
    reports.push(evaluate(&mut model, &mut data, vocab, &name, &cfg.eval)?);

    std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    let table = format_table(&reports);
    let main = reports.last().expect("at least one report");
    write_json(&out.join("report.json"), main)?;
    if a.no_pretrained_baseline {
        write_json(&out.join("baseline_report.json"), &reports[0])?;
    }
    let txt = out.join("report.txt");
    std::fs::write(&txt, &table).map_err(|e| Error::io(&txt, e))?;
    cfg.write_resolved(&out)?;
    print!("{table}");
    Ok(())
}

fn file_safe(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '.' { c } else { '_' })
        .collect()
}

fn cmd_explain(a: ExplainArgs) -> Result<()> {
    let mut cfg = RunConfig::load(a.config.as_deref())?;
    set_opt(&mut cfg.paths.checkpoint, a.checkpoint);
    set_opt(&mut cfg.paths.output_dir, a.out);
    let ck = require_file(cfg.paths.checkpoint.as_deref(), "checkpoint")?;
    let out = output_dir(&cfg)?;
    if !(0.0..=1.0).contains(&a.opacity) {
        return Err(Error::InvalidArgument(format!("opacity must be in [0, 1], got {}", a.opacity)));
    }
    let (mut model, meta) = Checkpoint::load(&ck)?;
    let vocab = meta.vocabulary()?;
    vocab.class_index(&a.class)?;
    let layer: LayerSelector = a.layer.parse().expect("infallible");
    let depths = if a.sweep {
        LayerSelector::DEPTHS.to_vec()
    } else {
        vec![layer.clone()]
    };
    for d in &depths {
        model.resolve_layer(d)?;
    }
    let images: Vec<PathBuf> = a
        .images
        .iter()
        .map(|p| require_file(Some(p), "image"))
        .collect::<Result<_>>()?;
    std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    let class_tag = file_safe(&a.class);
    for path in &images {
        let image_id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "image".into());
        let tensor = load_and_standardize(path, model.profile())?;
        let maps: Vec<(LayerSelector, Heatmap)> = if a.sweep {
            layer_sweep(&mut model, &vocab, &tensor, &a.class)?
        } else {
            vec![(layer.clone(), compute_cam(&mut model, &vocab, &tensor, &a.class, &layer)?)]
        };
        let mut tiles = Vec::new();
        for (depth, map) in &maps {
            let img = overlay(map, path, a.opacity)?;
            let stem = format!("{}_{}_{}", file_safe(&image_id), class_tag, file_safe(depth.tag()));
            let png = out.join(format!("{stem}.png"));
            img.save(&png).map_err(|source| Error::Image { path: png.clone(), source })?;
            let sidecar = CamSidecar {
                image_id: image_id.clone(),
                class: a.class.clone(),
                depth: depth.tag().to_string(),
                layer: map.source_layer.clone(),
                raw_max: map.raw_max,
                zero_map: map.zero_map,
                opacity: a.opacity,
                checkpoint_sha256: meta.weights_sha256.clone(),
            };
            write_json(&out.join(format!("{stem}.json")), &sidecar)?;
            println!("{}", png.display());
            tiles.push(img);
        }
        if a.sweep {
            let p = out.join(format!("panel_{}_{}.png", file_safe(&image_id), class_tag));
            panel(&tiles, a.tile)
                .save(&p)
                .map_err(|source| Error::Image { path: p.clone(), source })?;
            println!("{}", p.display());
        }
    }
    cfg.write_resolved(&out)?;
    Ok(())
}

fn cmd_pretrain(a: PretrainArgs) -> Result<()> {
    let arch: Arch = a.arch.parse()?;
    let mut cfg = PretrainConfig::desk(arch);
    set(&mut cfg.steps, a.steps);
    set(&mut cfg.batch, a.batch);
    set(&mut cfg.lr, a.lr);
    set(&mut cfg.width_divisor, a.width_divisor);
    set(&mut cfg.input_size, a.input_size);
    set(&mut cfg.seed, a.seed);
    let store = a
        .weights
        .map(WeightStore::new)
        .or_else(WeightStore::from_env)
        .ok_or_else(|| {
            Error::InvalidArgument(format!(
                "no weight directory; pass --weights or set {}",
                crate::models::WEIGHTS_ENV
            ))
        })?;
    let report = pretrain(&cfg, &store)?;
    println!(
        "source-task loss {:.4} -> {:.4}; wrote {}",
        report.first_loss,
        report.last_loss,
        report.path.display()
    );
    Ok(())
}

fn cmd_synth(a: SynthArgs) -> Result<()> {
    let fx = write_nih_fixture(&a.out, a.n, a.size, a.seed)?;
    println!("manifest   {}", fx.manifest.display());
    println!("images     {}", fx.image_root.display());
    println!("train list {}", fx.train_list.display());
    println!("test list  {}", fx.test_list.display());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn usage_errors_exit_with_two() {
        assert_eq!(run_from(["cxrlens", "frobnicate"]), EXIT_USAGE);
        assert_eq!(run_from(["cxrlens", "train", "--arch", "vgg"]), EXIT_USAGE);
    }

    #[test]
    fn freeze_policy_flag_parses() {
        use crate::models::FreezePolicy;
        assert_eq!("backbone".parse::<FreezePolicy>().unwrap(), FreezePolicy::Backbone);
    }
}
