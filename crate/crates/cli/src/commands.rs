use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use log::{info, warn};
use stconv_core::dataset::{
    class_name, ingest, load_split, FeatureSet, Split, SplitManifest, KEYWORDS,
};
use stconv_core::eval::{
    accuracy, auc, confidence_interval, roc_keyword, roc_overall, roc_thresholds, write_posteriors,
    PosteriorRecord,
};
use stconv_core::model::{load_weights, save_weights};
use stconv_core::trainer::{train as run_training, EpochLog, TrainConfig};
use stconv_core::{footprint as footprint_of, ModelConfig, StConvModel, Variant};

use crate::args::{DataArgs, EvalArgs, FootprintArgs, InferArgs, TrainArgs};

fn manifest(data: &DataArgs) -> Result<SplitManifest> {
    let m =
        ingest(&data.data).with_context(|| format!("reading dataset {}", data.data.display()))?;
    if data.words.is_empty() {
        return Ok(m);
    }
    let words: Vec<&str> = data.words.iter().map(String::as_str).collect();
    Ok(m.restrict_to_words(&words)?)
}

fn output_dir(path: &Path) -> Result<PathBuf> {
    fs::create_dir_all(path)
        .with_context(|| format!("creating output directory {}", path.display()))?;
    Ok(path.to_path_buf())
}

fn cache_dir(data: &DataArgs) -> Result<Option<PathBuf>> {
    data.cache.as_deref().map(output_dir).transpose()
}

pub fn train(args: &TrainArgs) -> Result<()> {
    let config = Variant::from(args.variant).config();
    let cfg = TrainConfig {
        lr_init: args.lr,
        max_epochs: args.epochs,
        batch_size: args.batch_size,
        seed: args.seed,
        ..TrainConfig::default()
    };
    cfg.validate()?;
    let out = output_dir(&args.out)?;
    let cache = cache_dir(&args.data)?;
    let m = manifest(&args.data)?;
    let (n_train, n_dev, n_test) = m.counts();
    info!("dataset: {n_train} train / {n_dev} dev / {n_test} test");

    let train_set = load_split(&m, Split::Train, cache.as_deref())?;
    let dev_set = load_split(&m, Split::Dev, cache.as_deref())?;
    let model = StConvModel::build(&config, args.seed)?;
    info!(
        "training {} model with {} parameters",
        Variant::from(args.variant),
        model.num_parameters()
    );
    let outcome = run_training(model, &train_set, &dev_set, &cfg)?;

    save_weights(&outcome.best, &out.join("best.stw"))?;
    save_weights(&outcome.last, &out.join("last.stw"))?;
    let mut log = format!("{}\n", EpochLog::HEADER);
    for row in &outcome.log {
        writeln!(log, "{row}")?;
    }
    fs::write(out.join("train_log.tsv"), log).context("writing train_log.tsv")?;
    println!(
        "best dev accuracy {:.4} at epoch {}; checkpoint {}",
        outcome.best_dev_accuracy,
        outcome.best_epoch,
        out.join("best.stw").display()
    );
    Ok(())
}

fn posteriors(model: &StConvModel, set: &FeatureSet) -> Result<Vec<PosteriorRecord>> {
    let indices: Vec<usize> = (0..set.len()).collect();
    let k = model.config().num_classes;
    let mut records = Vec::with_capacity(set.len());
    for chunk in indices.chunks(64) {
        let (x, labels) = set.batch(chunk)?;
        let p = model.infer_batch(&x)?;
        for ((&i, row), label) in chunk.iter().zip(p.data().chunks(k)).zip(labels) {
            records.push(PosteriorRecord::new(
                set.ids()[i].clone(),
                label,
                row.to_vec(),
            )?);
        }
    }
    Ok(records)
}

fn write_curves(records: &[PosteriorRecord], dir: &Path, split: Split) -> Result<()> {
    let thresholds = roc_thresholds();
    let mut curves = Vec::new();
    for k in 0..KEYWORDS.len() {
        match roc_keyword(records, k, &thresholds) {
            Ok(c) => curves.push(c),
            Err(e) => warn!("{split}: no curve for {}: {e}", class_name(k)),
        }
    }
    if curves.is_empty() {
        bail!("{split}: no keyword has both positive and negative examples");
    }
    let overall = roc_overall(&curves)?;
    let mut table = String::from("curve\tauc\n");
    for c in curves.iter().chain(std::iter::once(&overall)) {
        c.write_tsv(&dir.join(format!("roc_{split}_{}.tsv", c.label)))?;
        writeln!(table, "{}\t{:.6}", c.label, auc(c)?)?;
    }
    fs::write(dir.join(format!("auc_{split}.tsv")), &table)?;
    println!("{split} overall AUC {:.6}", auc(&overall)?);
    Ok(())
}

pub fn eval(args: &EvalArgs) -> Result<()> {
    let models = args
        .checkpoint
        .iter()
        .map(|p| load_weights(p).with_context(|| format!("loading checkpoint {}", p.display())))
        .collect::<Result<Vec<_>>>()?;
    let out = output_dir(&args.out)?;
    let cache = cache_dir(&args.data)?;
    let m = manifest(&args.data)?;

    for &split in &args.splits {
        let split = Split::from(split);
        let set = load_split(&m, split, cache.as_deref())?;
        let mut accuracies = Vec::new();
        for (run, model) in models.iter().enumerate() {
            let dir = if models.len() == 1 {
                out.clone()
            } else {
                output_dir(&out.join(format!("run{run}")))?
            };
            let records = posteriors(model, &set)?;
            let acc = accuracy(&records)?;
            accuracies.push(acc);
            write_posteriors(&dir.join(format!("posteriors_{split}.tsv")), &records)?;
            println!(
                "{split} accuracy {acc:.4} ({} clips) [{}]",
                records.len(),
                args.checkpoint[run].display()
            );
            if args.roc {
                write_curves(&records, &dir, split)?;
            }
        }
        if accuracies.len() >= 2 {
            let (mean, half) = confidence_interval(&accuracies)?;
            println!(
                "{split} accuracy over {} runs: {:.2}% ± {:.3}",
                accuracies.len(),
                100.0 * mean,
                100.0 * half
            );
        }
    }
    Ok(())
}

pub fn infer(args: &InferArgs) -> Result<()> {
    for w in &args.wavs {
        if !w.is_file() {
            bail!("{}: no such file", w.display());
        }
    }
    let model = load_weights(&args.checkpoint)
        .with_context(|| format!("loading checkpoint {}", args.checkpoint.display()))?;
    let classes = model.config().num_classes;
    let mut header = String::from("file\tprediction");
    for k in 0..classes {
        write!(header, "\t{}", class_name(k))?;
    }
    println!("{header}");
    for path in &args.wavs {
        let features = stconv_core::dataset::compute_features(path)?;
        let p = model.forward(features.tensor())?;
        let mut line = format!("{}\t{}", path.display(), class_name(p.argmax()));
        for v in p.data() {
            write!(line, "\t{v:.6}")?;
        }
        println!("{line}");
    }
    Ok(())
}

pub fn footprint(args: &FootprintArgs) -> Result<()> {
    let variant = Variant::from(args.variant);
    let config: ModelConfig = variant.config();
    let report = footprint_of(&config);
    if args.json {
        println!("{}", serde_json::to_string_pretty(&report)?);
        return Ok(());
    }
    println!(
        "variant {variant}: {} channels, BGRU hidden {}, {} blocks",
        config.channels, config.bgru_hidden, config.num_blocks
    );
    println!("{report}");
    Ok(())
}
