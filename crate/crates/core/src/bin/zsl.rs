//! Command-line surface tying the harness together. Exit codes: 0 success,
//! 2 data/validation error, 64 usage error.

use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use zsl_core::config::ConfigFile;
use zsl_core::curation::{self, ClassSet};
use zsl_core::encoder::{self, TrainConfig};
use zsl_core::error::{Result, ZslError};
use zsl_core::evaluate;
use zsl_core::experiments::{self, ExperimentPlan, ExperimentVariant};
use zsl_core::features::{self, FeatureStore, VideoFeatures};
use zsl_core::kenburns::{self, KenBurnsConfig};
use zsl_core::math::Matrix;
use zsl_core::wordvec::{self, ClassName, SemanticEmbedding, SubstitutionMap};
use zsl_core::{ClassSet32, LabeledDataset32};

const EXIT_DATA_ERROR: u8 = 2;
const EXIT_USAGE: u8 = 64;

#[derive(Parser)]
#[command(name = "zsl", version, about = "Zero-shot video classification harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Embed class names with pretrained word vectors
    Embed(EmbedArgs),
    /// Remove training classes too close to the test classes
    Filter(FilterArgs),
    /// Train the linear semantic encoder
    Train(TrainArgs),
    /// Evaluate a checkpoint with Protocol 1 or 2
    Eval(EvalArgs),
    /// Build a Ken Burns clip manifest from still images
    Kenburns(KenburnsArgs),
    /// Run a dataset-ablation experiment
    Experiment(ExperimentArgs),
    /// Render a JSON report as an aligned text table
    Report(ReportArgs),
}

#[derive(Args)]
struct EmbedArgs {
    /// Class list, one name per line
    #[arg(long)]
    classes: PathBuf,
    /// Word vectors in text format
    #[arg(long)]
    vectors: PathBuf,
    /// Substitution map for out-of-vocabulary tokens
    #[arg(long)]
    subs: Option<PathBuf>,
    /// Output embedding file (class\tfloats)
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FilterArgs {
    /// Training class list
    #[arg(long)]
    train: PathBuf,
    /// Test class list; repeat for a union of test sets
    #[arg(long, required = true)]
    test: Vec<PathBuf>,
    #[arg(long)]
    vectors: PathBuf,
    #[arg(long)]
    subs: Option<PathBuf>,
    /// Overlap threshold; classes at distance <= tau are removed
    #[arg(long, default_value_t = 0.05)]
    tau: f64,
    /// Output file for the kept class list
    #[arg(long)]
    out_kept: PathBuf,
    /// Optional JSON curation report
    #[arg(long)]
    report: Option<PathBuf>,
    /// Rows in the nearest-class text report
    #[arg(long, default_value_t = 20)]
    top_n: usize,
}

#[derive(Args, Clone)]
struct TrainFlags {
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    /// Comma-separated epochs at which the learning rate decays
    #[arg(long)]
    decay_epochs: Option<String>,
    #[arg(long)]
    decay_factor: Option<f64>,
    #[arg(long)]
    bias: bool,
    #[arg(long)]
    seed: Option<u64>,
    /// Config file with a [train] section; flags override file values
    #[arg(long)]
    config: Option<PathBuf>,
}

impl TrainFlags {
    fn resolve(&self) -> Result<TrainConfig> {
        let file = match &self.config {
            Some(p) => ConfigFile::load(p)?,
            None => ConfigFile::default(),
        };
        let mut c = TrainConfig::default();
        c.epochs = self
            .epochs
            .or(file.get_parsed("train", "epochs")?)
            .unwrap_or(c.epochs);
        c.batch_size = self
            .batch_size
            .or(file.get_parsed("train", "batch_size")?)
            .unwrap_or(c.batch_size);
        c.base_lr = self
            .lr
            .or(file.get_parsed("train", "base_lr")?)
            .unwrap_or(c.base_lr);
        c.lr_decay_factor = self
            .decay_factor
            .or(file.get_parsed("train", "lr_decay_factor")?)
            .unwrap_or(c.lr_decay_factor);
        c.seed = self
            .seed
            .or(file.get_parsed("train", "seed")?)
            .unwrap_or(c.seed);
        c.bias = self.bias || file.get_parsed("train", "bias")?.unwrap_or(false);
        let decay_spec = self
            .decay_epochs
            .clone()
            .or_else(|| file.get("train", "lr_decay_epochs").map(String::from));
        if let Some(spec) = decay_spec {
            c.lr_decay_epochs = if spec.trim().is_empty() {
                Vec::new()
            } else {
                spec.split(',')
                    .map(|e| {
                        e.trim().parse().map_err(|_| {
                            ZslError::InvalidConfig(format!("bad decay epoch '{e}'"))
                        })
                    })
                    .collect::<Result<_>>()?
            };
        }
        c.validate()?;
        Ok(c)
    }
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    features: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    /// Class embedding file produced by `zsl embed`
    #[arg(long)]
    embeddings: PathBuf,
    /// Output checkpoint
    #[arg(long)]
    out: PathBuf,
    /// Optional JSON training history
    #[arg(long)]
    history: Option<PathBuf>,
    #[command(flatten)]
    flags: TrainFlags,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    features: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    #[arg(long)]
    embeddings: PathBuf,
    /// 1 = random half-class splits, 2 = all classes
    #[arg(long, default_value_t = 2)]
    protocol: u8,
    #[arg(long, default_value_t = 25)]
    t_eval: usize,
    #[arg(long, default_value_t = 10)]
    repeats: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Add the generalization-vs-distance curve (needs --train-embeddings)
    #[arg(long)]
    curve: bool,
    #[arg(long)]
    train_embeddings: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    k_nn: usize,
    /// Include the confusion matrix in the report
    #[arg(long)]
    confusion: bool,
    #[arg(long)]
    out: PathBuf,
    /// Also print the text table to stdout
    #[arg(long)]
    text: bool,
}

#[derive(Args)]
struct KenburnsArgs {
    /// Directory with one subdirectory of PPM images per class
    #[arg(long)]
    images: PathBuf,
    /// Output manifest TSV
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    clips_per_image: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.5)]
    min_scale: f64,
    #[arg(long, default_value_t = 1.0)]
    max_scale: f64,
    /// Also render the clips into a raw-clip feature store
    #[arg(long)]
    dump_clips: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// by_videos | by_classes | diversity
    #[arg(long)]
    variant: String,
    #[arg(long)]
    fraction: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k_clusters: Option<usize>,
    #[arg(long, default_value_t = 50)]
    n_select: usize,
    #[arg(long, default_value_t = 10)]
    repeats: usize,
    #[arg(long, default_value_t = 0)]
    exp_seed: u64,
    #[arg(long)]
    features: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    #[arg(long)]
    embeddings: PathBuf,
    #[arg(long)]
    eval_features: PathBuf,
    #[arg(long)]
    eval_labels: PathBuf,
    #[arg(long)]
    eval_embeddings: PathBuf,
    #[arg(long, default_value_t = 25)]
    t_eval: usize,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    flags: TrainFlags,
}

#[derive(Args)]
struct ReportArgs {
    /// JSON report produced by `zsl eval` or `zsl experiment`
    #[arg(long)]
    input: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Embed(args) => cmd_embed(args),
        Command::Filter(args) => cmd_filter(args),
        Command::Train(args) => cmd_train(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Kenburns(args) => cmd_kenburns(args),
        Command::Experiment(args) => cmd_experiment(args),
        Command::Report(args) => cmd_report(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_DATA_ERROR)
        }
    }
}

/// Embed every class, aggregating out-of-vocabulary tokens across classes so
/// the user sees all of them at once.
fn embed_class_list(
    set_name: &str,
    names: &[ClassName],
    table: &wordvec::WordVectorTable<f32>,
    subs: &SubstitutionMap,
) -> Result<ClassSet32> {
    let mut classes = Vec::with_capacity(names.len());
    let mut missing: Vec<String> = Vec::new();
    for name in names {
        match wordvec::embed_class(name, table, subs) {
            Ok(e) => classes.push((name.clone(), e)),
            Err(ZslError::OutOfVocabulary { tokens }) => missing.extend(tokens),
            Err(e) => return Err(e),
        }
    }
    if !missing.is_empty() {
        missing.sort();
        missing.dedup();
        return Err(ZslError::OutOfVocabulary { tokens: missing });
    }
    ClassSet::new(set_name, classes)
}

fn load_subs(path: &Option<PathBuf>) -> Result<SubstitutionMap> {
    match path {
        Some(p) => SubstitutionMap::load(p),
        None => Ok(SubstitutionMap::new()),
    }
}

fn vocab_of(names: &[ClassName], subs: &SubstitutionMap) -> HashSet<String> {
    let mut vocab = HashSet::new();
    for n in names {
        for t in n.tokens() {
            match subs.get(t) {
                Some(reps) => vocab.extend(reps.iter().cloned()),
                None => {
                    vocab.insert(t.clone());
                }
            }
        }
    }
    vocab
}

fn cmd_embed(args: EmbedArgs) -> Result<()> {
    let names = curation::load_class_list(&args.classes)?;
    let subs = load_subs(&args.subs)?;
    let vocab = vocab_of(&names, &subs);
    let table = wordvec::load_word_vectors::<f32>(&args.vectors, Some(&vocab))?;
    let set = embed_class_list("classes", &names, &table, &subs)?;
    write_embedding_file(&args.out, &set)
}

fn write_embedding_file(path: &Path, set: &ClassSet32) -> Result<()> {
    let mut out = String::new();
    for (c, e) in set.classes() {
        out.push_str(c.raw());
        out.push('\t');
        let floats: Vec<String> = e.as_slice().iter().map(|v| v.to_string()).collect();
        out.push_str(&floats.join(" "));
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| ZslError::io(path, e))
}

fn load_embedding_file(path: &Path, set_name: &str) -> Result<ClassSet32> {
    let text = std::fs::read_to_string(path).map_err(|e| ZslError::io(path, e))?;
    let mut classes = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (raw, floats) = line
            .split_once('\t')
            .ok_or_else(|| ZslError::parse(path, idx + 1, "expected '<class>\\t<floats>'"))?;
        let vector: Vec<f32> = floats
            .split_whitespace()
            .map(|f| {
                f.parse()
                    .map_err(|_| ZslError::parse(path, idx + 1, format!("bad float '{f}'")))
            })
            .collect::<Result<_>>()?;
        classes.push((
            ClassName::parse(raw).map_err(|e| ZslError::parse(path, idx + 1, e.to_string()))?,
            SemanticEmbedding::new(vector)
                .map_err(|e| ZslError::parse(path, idx + 1, e.to_string()))?,
        ));
    }
    ClassSet::new(set_name, classes)
}

fn cmd_filter(args: FilterArgs) -> Result<()> {
    let subs = load_subs(&args.subs)?;
    let train_names = curation::load_class_list(&args.train)?;
    let mut test_name_lists = Vec::new();
    for p in &args.test {
        test_name_lists.push(curation::load_class_list(p)?);
    }
    let mut vocab = vocab_of(&train_names, &subs);
    for list in &test_name_lists {
        vocab.extend(vocab_of(list, &subs));
    }
    let table = wordvec::load_word_vectors::<f32>(&args.vectors, Some(&vocab))?;

    let train_set = embed_class_list("train", &train_names, &table, &subs)?;
    let mut test_union: Option<ClassSet32> = None;
    for (i, list) in test_name_lists.iter().enumerate() {
        let set = embed_class_list(&format!("test{i}"), list, &table, &subs)?;
        test_union = Some(match test_union {
            None => set,
            Some(u) => u.union(&set)?,
        });
    }
    let test_union = test_union.unwrap();

    let result = curation::filter_training_classes(&train_set, &test_union, args.tau)?;

    let mut kept = String::new();
    for (c, _) in result.kept.classes() {
        kept.push_str(c.raw());
        kept.push('\n');
    }
    std::fs::write(&args.out_kept, kept).map_err(|e| ZslError::io(&args.out_kept, e))?;

    if let Some(report_path) = &args.report {
        let report = json!({
            "config": {
                "tau": args.tau,
                "train": args.train.display().to_string(),
                "test": args.test.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
            },
            "kept": result.kept.len(),
            "removed": result.removed.iter().map(|r| json!({
                "train_class": r.train_class.raw(),
                "nearest_test_class": r.nearest_test_class.raw(),
                "distance": r.distance,
            })).collect::<Vec<_>>(),
        });
        write_json(report_path, &report)?;
    }

    println!(
        "kept {} of {} training classes at tau = {}",
        result.kept.len(),
        train_set.len(),
        args.tau
    );
    let report = curation::nearest_test_class_report(&train_set, &test_union, args.top_n)?;
    println!("{:<32} {:<32} {:>10}", "train class", "nearest test class", "distance");
    for r in &report {
        println!(
            "{:<32} {:<32} {:>10.6}",
            r.train_class.raw(),
            r.nearest_test_class.raw(),
            r.distance
        );
    }
    Ok(())
}

fn load_dataset(
    features: &Path,
    labels: &Path,
    embeddings: &Path,
    set_name: &str,
) -> Result<LabeledDataset32> {
    let classes = load_embedding_file(embeddings, set_name)?;
    features::load_feature_store(features, labels, classes)
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let config = args.flags.resolve()?;
    let dataset = load_dataset(&args.features, &args.labels, &args.embeddings, "train")?;
    let targets: Vec<SemanticEmbedding<f32>> = dataset
        .classes()
        .classes()
        .iter()
        .map(|(_, e)| e.clone())
        .collect();
    let (enc, history) = encoder::train(&dataset, &targets, &config)?;
    encoder::save_checkpoint(&args.out, &enc, &config)?;
    if let Some(hist_path) = &args.history {
        let doc = json!({
            "config": config_json(&config),
            "epoch_mean_loss": history.epoch_mean_loss,
            "epoch_lr": history.epoch_lr,
        });
        write_json(hist_path, &doc)?;
    }
    println!(
        "trained {} epochs, final mean loss {:.6e}, checkpoint {}",
        config.epochs,
        history.epoch_mean_loss.last().copied().unwrap_or(f64::NAN),
        args.out.display()
    );
    Ok(())
}

fn config_json(c: &TrainConfig) -> serde_json::Value {
    json!({
        "epochs": c.epochs,
        "batch_size": c.batch_size,
        "base_lr": c.base_lr,
        "lr_decay_epochs": c.lr_decay_epochs,
        "lr_decay_factor": c.lr_decay_factor,
        "bias": c.bias,
        "seed": c.seed,
    })
}

fn cmd_eval(args: EvalArgs) -> Result<()> {
    let (enc, _train_config) = encoder::load_checkpoint::<f32>(&args.checkpoint)?;
    let dataset = load_dataset(&args.features, &args.labels, &args.embeddings, "test")?;
    let report = match args.protocol {
        2 => evaluate::evaluate_full(&dataset, &enc, args.t_eval)?,
        1 => evaluate::evaluate_protocol1(&dataset, &enc, args.t_eval, args.repeats, args.seed)?,
        p => {
            return Err(ZslError::InvalidConfig(format!(
                "protocol must be 1 or 2, got {p}"
            )))
        }
    };

    let mut doc = json!({
        "config": {
            "protocol": args.protocol,
            "t_eval": args.t_eval,
            "repeats": args.repeats,
            "seed": args.seed,
            "checkpoint": args.checkpoint.display().to_string(),
            "k_nn": args.k_nn,
        },
        "report": report,
    });

    if args.confusion {
        let cm = evaluate::confusion_matrix(&dataset, &enc, args.t_eval)?;
        doc["confusion_matrix"] = serde_json::to_value(&cm).unwrap();
    }

    if args.curve {
        let train_path = args.train_embeddings.as_ref().ok_or_else(|| {
            ZslError::InvalidConfig("--curve requires --train-embeddings".into())
        })?;
        let train_classes = load_embedding_file(train_path, "train")?;
        let curve = evaluate::generalization_curve(
            &train_classes,
            &dataset,
            &enc,
            args.t_eval,
            args.k_nn,
        )?;
        doc["generalization_curve"] = serde_json::to_value(&curve).unwrap();
    }

    write_json(&args.out, &doc)?;
    if args.text {
        print!("{}", render_report(&doc));
    }
    Ok(())
}

fn cmd_kenburns(args: KenburnsArgs) -> Result<()> {
    let config = KenBurnsConfig {
        min_scale: args.min_scale,
        max_scale: args.max_scale,
    };
    let manifest = kenburns::build_pretraining_dataset(
        &args.images,
        None,
        args.clips_per_image,
        &config,
        args.seed,
    )?;
    manifest.write(&args.out)?;
    println!(
        "wrote {} manifest rows ({} classes skipped) to {}",
        manifest.entries.len(),
        manifest.skipped_classes.len(),
        args.out.display()
    );

    if let Some(dump) = &args.dump_clips {
        let dim = kenburns::FRAME_SIZE * kenburns::FRAME_SIZE * 3;
        let mut videos = Vec::with_capacity(manifest.entries.len());
        for (i, entry) in manifest.entries.iter().enumerate() {
            let image = kenburns::Image::load_ppm(&entry.image_path)?;
            let clip = kenburns::render_clip(&image, &entry.path)?;
            let rows = clip.frame_rows();
            videos.push(VideoFeatures::new(
                format!("clip{i:06}"),
                Matrix::from_rows(&rows),
            )?);
        }
        FeatureStore::with_flags(dim, videos, true)?.write(dump)?;
        println!("dumped rendered clips to {}", dump.display());
    }
    Ok(())
}

fn cmd_experiment(args: ExperimentArgs) -> Result<()> {
    let variant = match args.variant.as_str() {
        "by_videos" => ExperimentVariant::ByVideos {
            fraction: args.fraction.ok_or_else(|| {
                ZslError::InvalidConfig("by_videos requires --fraction".into())
            })?,
        },
        "by_classes" => ExperimentVariant::ByClasses {
            n: args
                .n
                .ok_or_else(|| ZslError::InvalidConfig("by_classes requires --n".into()))?,
        },
        "diversity" => ExperimentVariant::Diversity {
            k_clusters: args.k_clusters.ok_or_else(|| {
                ZslError::InvalidConfig("diversity requires --k-clusters".into())
            })?,
            n_select: args.n_select,
        },
        v => {
            return Err(ZslError::InvalidConfig(format!(
                "unknown variant '{v}' (expected by_videos, by_classes, or diversity)"
            )))
        }
    };
    let plan = ExperimentPlan {
        variant,
        repeats: args.repeats,
        seed: args.exp_seed,
    };
    let train_config = args.flags.resolve()?;
    let dataset = load_dataset(&args.features, &args.labels, &args.embeddings, "train")?;
    let eval_dataset = load_dataset(
        &args.eval_features,
        &args.eval_labels,
        &args.eval_embeddings,
        "eval",
    )?;
    let report =
        experiments::run_experiment(&dataset, &eval_dataset, &plan, &train_config, args.t_eval)?;
    let doc = json!({
        "config": {
            "train": config_json(&train_config),
            "t_eval": args.t_eval,
        },
        "report": report,
    });
    write_json(&args.out, &doc)?;
    println!(
        "{} repeats: mean top1 {:.4}, stddev {:.4}",
        report.repeats.len(),
        report.mean_top1,
        report.stddev_top1
    );
    Ok(())
}

fn cmd_report(args: ReportArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.input).map_err(|e| ZslError::io(&args.input, e))?;
    let doc: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| ZslError::format(&args.input, format!("not valid JSON: {e}")))?;
    print!("{}", render_report(&doc));
    Ok(())
}

fn render_report(doc: &serde_json::Value) -> String {
    let mut out = String::new();
    if let Some(report) = doc.get("report") {
        if let (Some(top1), Some(top5)) = (report.get("top1"), report.get("top5")) {
            out.push_str(&format!("{:<24} {:>10}\n", "metric", "value"));
            out.push_str(&format!(
                "{:<24} {:>10}\n",
                "protocol",
                report.get("protocol").and_then(|v| v.as_str()).unwrap_or("?")
            ));
            out.push_str(&format!(
                "{:<24} {:>10.4}\n",
                "top1",
                top1.as_f64().unwrap_or(f64::NAN)
            ));
            out.push_str(&format!(
                "{:<24} {:>10.4}\n",
                "top5",
                top5.as_f64().unwrap_or(f64::NAN)
            ));
            if let Some(n) = report.get("n_videos").and_then(|v| v.as_u64()) {
                out.push_str(&format!("{:<24} {:>10}\n", "videos", n));
            }
            if let Some(per_class) = report.get("per_class_accuracy").and_then(|v| v.as_object()) {
                out.push('\n');
                out.push_str(&format!("{:<32} {:>10}\n", "class", "accuracy"));
                for (c, a) in per_class {
                    out.push_str(&format!(
                        "{:<32} {:>10.4}\n",
                        c,
                        a.as_f64().unwrap_or(f64::NAN)
                    ));
                }
            }
            return out;
        }
        if let Some(mean) = report.get("mean_top1") {
            out.push_str(&format!("{:<24} {:>10}\n", "metric", "value"));
            out.push_str(&format!(
                "{:<24} {:>10.4}\n",
                "mean top1",
                mean.as_f64().unwrap_or(f64::NAN)
            ));
            out.push_str(&format!(
                "{:<24} {:>10.4}\n",
                "stddev top1",
                report
                    .get("stddev_top1")
                    .and_then(|v| v.as_f64())
                    .unwrap_or(f64::NAN)
            ));
            if let Some(reps) = report.get("repeats").and_then(|v| v.as_array()) {
                out.push('\n');
                out.push_str(&format!("{:<8} {:>10} {:>10}\n", "repeat", "top1", "top5"));
                for r in reps {
                    out.push_str(&format!(
                        "{:<8} {:>10.4} {:>10.4}\n",
                        r.get("repeat").and_then(|v| v.as_u64()).unwrap_or(0),
                        r.get("top1").and_then(|v| v.as_f64()).unwrap_or(f64::NAN),
                        r.get("top5").and_then(|v| v.as_f64()).unwrap_or(f64::NAN),
                    ));
                }
            }
            return out;
        }
    }
    // unknown shape: fall back to pretty JSON
    serde_json::to_string_pretty(doc).unwrap_or_default() + "\n"
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| ZslError::Invalid(format!("serialization failed: {e}")))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| ZslError::io(path, e))
}
