//! `nfbridge`: dataset preparation, mapper training, evaluation, and
//! ad-hoc retrieval queries over embedding files.
//!
//! Exit codes: 0 success, 2 usage/validation error, 3 protocol/data error,
//! 4 I/O error. Every run echoes its fully resolved configuration
//! (seed included); flags override a `--config` JSON file, which overrides
//! the built-in defaults.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use nfbridge::dataset::{
    generate_synthetic, load_dataset, read_embedding_blob, save_dataset, select_views, Dataset,
    Split, SynthSpec, ViewSource,
};
use nfbridge::eval::{
    eval_clip_baseline_zero_shot, eval_retrieval_images, eval_retrieval_text, eval_zero_shot,
    EvalReport,
};
use nfbridge::gallery::{
    build_gallery, label_gallery_from_anchors, load_gallery, multi_view_query, Gallery,
};
use nfbridge::mapper::{
    load_checkpoint, save_checkpoint, train_clip2nerf, train_nerf2clip, MapperConfig,
    MapperDirection,
};
use nfbridge::{Error, Result};

#[derive(Parser)]
#[command(
    name = "nfbridge",
    version,
    about = "Bridge NeRF weight-space embeddings and CLIP image/text embeddings: train mappers, search galleries, run evaluations"
)]
struct Cli {
    /// Cap the worker thread pool.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic embedding dataset.
    Synth(SynthArgs),
    /// Train a feature-mapping network.
    Train(TrainArgs),
    /// Run an evaluation protocol and write report files.
    Eval(EvalArgs),
    /// Ad-hoc top-k retrieval; results as JSON lines on stdout.
    Query(QueryArgs),
    /// Dump dataset/checkpoint/gallery/report headers.
    Inspect { path: PathBuf },
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    classes: Option<usize>,
    #[arg(long)]
    per_class: Option<usize>,
    #[arg(long)]
    views: Option<usize>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for manifest.json + embeddings.bin.
    #[arg(short, long)]
    out: PathBuf,
    /// JSON config file with the same fields as the echoed config.
    #[arg(long)]
    config: Option<PathBuf>,
}

/// Partial SynthSpec: same field names as the echoed config.
#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(default)]
struct SynthOverlay {
    num_classes: Option<usize>,
    objects_per_class: Option<usize>,
    views_per_object: Option<usize>,
    noise_sigma: Option<f64>,
    seed: Option<u64>,
}

#[derive(Args)]
struct TrainArgs {
    /// Dataset directory (manifest.json + embeddings.bin).
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, value_enum)]
    direction: DirectionArg,
    /// Checkpoint output path.
    #[arg(short, long)]
    out: PathBuf,
    /// Per-epoch loss trace CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    max_lr: Option<f64>,
    #[arg(long)]
    weight_decay: Option<f64>,
    #[arg(long)]
    batch: Option<usize>,
    /// Views per object entering training; omit to use all matching views.
    #[arg(long)]
    n_views: Option<usize>,
    /// Comma-separated view sources: gt,rendered,generated.
    #[arg(long, value_delimiter = ',')]
    view_sources: Option<Vec<SourceArg>>,
    #[arg(long)]
    multimodal: bool,
    #[arg(long)]
    caption_repeat: Option<usize>,
    /// Augmented composition "N_SYNTHETIC,N_GENERATED" per object.
    #[arg(long)]
    syn2real: Option<String>,
    #[arg(long)]
    pct_start: Option<f64>,
    #[arg(long)]
    div_factor: Option<f64>,
    #[arg(long)]
    final_div_factor: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// JSON config file in the MapperConfig schema.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum DirectionArg {
    Clip2nerf,
    Nerf2clip,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SourceArg {
    Gt,
    Rendered,
    Generated,
}

impl From<SourceArg> for ViewSource {
    fn from(s: SourceArg) -> Self {
        match s {
            SourceArg::Gt => ViewSource::GroundTruth,
            SourceArg::Rendered => ViewSource::Rendered,
            SourceArg::Generated => ViewSource::Generated,
        }
    }
}

#[derive(Args)]
struct EvalArgs {
    #[arg(value_enum)]
    protocol: ProtocolArg,
    #[arg(long)]
    dataset: PathBuf,
    /// Checkpoint (required except for zeroshot-baseline).
    #[arg(long)]
    ckpt: Option<PathBuf>,
    /// Output prefix; writes <prefix>.report.json and <prefix>.table.csv
    /// (one CSV row per evaluated view count).
    #[arg(short, long)]
    out: PathBuf,
    /// Query/selection view counts; repeated values sweep the protocol.
    #[arg(long, value_delimiter = ',')]
    views: Option<Vec<usize>>,
    /// Second dataset supplying the queries (cross-domain retrieval).
    #[arg(long)]
    query_dataset: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProtocolArg {
    Zeroshot,
    ZeroshotBaseline,
    RetrievalImages,
    RetrievalText,
}

#[derive(Args)]
struct QueryArgs {
    #[arg(long)]
    ckpt: PathBuf,
    /// Gallery directory (manifest.json + embeddings.bin written by the
    /// gallery exporter).
    #[arg(long, conflicts_with = "dataset")]
    gallery: Option<PathBuf>,
    /// Dataset directory; the gallery is built from its NeRF embeddings.
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Restrict a --dataset gallery to one split.
    #[arg(long, value_enum, default_value_t = SplitArg::All)]
    split: SplitArg,
    /// Embedding blob holding one or more query rows (averaged).
    #[arg(long, conflicts_with = "record_id")]
    input: Option<PathBuf>,
    /// Query with this record's ground-truth views instead of a blob.
    #[arg(long)]
    record_id: Option<String>,
    /// Number of views used with --record-id.
    #[arg(long, default_value_t = 1)]
    query_views: usize,
    #[arg(long, default_value_t = 5)]
    k: usize,
    /// Drop the queried record from the gallery (requires --record-id).
    #[arg(long)]
    exclude_self: bool,
    /// Drop this id from the gallery.
    #[arg(long)]
    exclude: Option<String>,
    /// Write the averaged predicted embedding to a blob.
    #[arg(long)]
    export_predicted: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum SplitArg {
    Train,
    Val,
    Test,
    All,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Io(_) => 4,
        Error::InsufficientViews { .. }
        | Error::MissingAnchor { .. }
        | Error::MissingCaption { .. }
        | Error::EmptyDataset
        | Error::EmptyInput(_) => 3,
        _ => 2,
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Synth(args) => cmd_synth(args),
        Command::Train(args) => cmd_train(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Query(args) => cmd_query(args),
        Command::Inspect { path } => cmd_inspect(&path),
    }
}

fn load_overlay<T: for<'de> Deserialize<'de> + Default>(path: &Option<PathBuf>) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => serde_json::from_slice(&std::fs::read(p)?)
            .map_err(|e| Error::Parse(format!("config file {}: {e}", p.display()))),
    }
}

fn dataset_paths(dir: &Path) -> (PathBuf, PathBuf) {
    (dir.join("manifest.json"), dir.join("embeddings.bin"))
}

fn load_dataset_dir(dir: &Path) -> Result<Dataset> {
    let (m, b) = dataset_paths(dir);
    load_dataset(m, b)
}

fn cmd_synth(args: SynthArgs) -> Result<()> {
    let overlay: SynthOverlay = load_overlay(&args.config)?;
    let spec = SynthSpec {
        num_classes: args.classes.or(overlay.num_classes).unwrap_or(10),
        objects_per_class: args.per_class.or(overlay.objects_per_class).unwrap_or(50),
        views_per_object: args.views.or(overlay.views_per_object).unwrap_or(8),
        noise_sigma: args.sigma.or(overlay.noise_sigma).unwrap_or(0.05),
        seed: args.seed.or(overlay.seed).unwrap_or(0),
    };
    let dataset = generate_synthetic(&spec)?;
    std::fs::create_dir_all(&args.out)?;
    let (m, b) = dataset_paths(&args.out);
    save_dataset(&dataset, &m, &b)?;

    let resolved = serde_json::json!({ "command": "synth", "spec": spec });
    std::fs::write(
        args.out.join("synth.config.json"),
        serde_json::to_string_pretty(&resolved).unwrap() + "\n",
    )?;
    println!("{resolved}");
    println!(
        "{}",
        serde_json::json!({
            "records": dataset.len(),
            "classes": dataset.anchors().len(),
            "out": args.out,
        })
    );
    Ok(())
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let seed = args.seed;
    let mut config: MapperConfig = match &args.config {
        Some(p) => serde_json::from_slice(&std::fs::read(p)?)
            .map_err(|e| Error::Parse(format!("config file {}: {e}", p.display())))?,
        None => match args.direction {
            DirectionArg::Clip2nerf => MapperConfig::clip2nerf(seed.unwrap_or(0)),
            DirectionArg::Nerf2clip => MapperConfig::nerf2clip(seed.unwrap_or(0)),
        },
    };
    let direction = match args.direction {
        DirectionArg::Clip2nerf => MapperDirection::Clip2Nerf,
        DirectionArg::Nerf2clip => MapperDirection::Nerf2Clip,
    };
    if config.direction != direction {
        return Err(Error::ConfigMismatch(
            "--direction disagrees with the config file".into(),
        ));
    }
    if let Some(v) = args.epochs {
        config.epochs = v;
    }
    if let Some(v) = args.max_lr {
        config.max_lr = v;
    }
    if let Some(v) = args.weight_decay {
        config.weight_decay = v;
    }
    if let Some(v) = args.batch {
        config.batch_size = v;
    }
    if let Some(v) = args.n_views {
        config.n_views = Some(v);
    }
    if let Some(sources) = args.view_sources {
        config.view_sources = sources.into_iter().map(Into::into).collect();
    }
    if args.multimodal {
        config.multimodal = true;
    }
    if let Some(v) = args.caption_repeat {
        config.caption_repeat = v;
    }
    if let Some(spec) = &args.syn2real {
        let (a, b) = spec
            .split_once(',')
            .ok_or_else(|| Error::Parse("--syn2real expects N_SYNTHETIC,N_GENERATED".into()))?;
        config.syn2real = Some((
            a.trim()
                .parse()
                .map_err(|_| Error::Parse("bad --syn2real".into()))?,
            b.trim()
                .parse()
                .map_err(|_| Error::Parse("bad --syn2real".into()))?,
        ));
    }
    if let Some(v) = args.pct_start {
        config.pct_start = v;
    }
    if let Some(v) = args.div_factor {
        config.div_factor = v;
    }
    if let Some(v) = args.final_div_factor {
        config.final_div_factor = v;
    }
    if let Some(v) = seed {
        config.seed = v;
    }

    println!(
        "{}",
        serde_json::json!({ "command": "train", "config": config })
    );

    let dataset = load_dataset_dir(&args.dataset)?;
    let outcome = match direction {
        MapperDirection::Clip2Nerf => train_clip2nerf(&dataset, &config)?,
        MapperDirection::Nerf2Clip => train_nerf2clip(&dataset, &config)?,
    };
    for e in &outcome.trace {
        eprintln!(
            "epoch {:>4}  train_loss {:.6}  val_loss {}",
            e.epoch,
            e.train_loss,
            e.val_loss
                .map(|v| format!("{v:.6}"))
                .unwrap_or_else(|| "-".into()),
        );
    }
    save_checkpoint(&outcome.checkpoint, &args.out)?;

    if let Some(trace_path) = &args.trace {
        let file = std::fs::File::create(trace_path)?;
        let mut w = csv::Writer::from_writer(file);
        w.write_record(["epoch", "train_loss", "val_loss", "steps", "samples"])
            .map_err(|e| Error::Parse(format!("csv: {e}")))?;
        for e in &outcome.trace {
            w.write_record([
                e.epoch.to_string(),
                format!("{}", e.train_loss),
                e.val_loss.map(|v| format!("{v}")).unwrap_or_default(),
                e.steps.to_string(),
                e.samples.to_string(),
            ])
            .map_err(|e| Error::Parse(format!("csv: {e}")))?;
        }
        w.flush()?;
    }
    println!(
        "{}",
        serde_json::json!({
            "checkpoint": args.out,
            "epochs_run": outcome.checkpoint.meta.epochs_run,
            "final_train_loss": outcome.checkpoint.meta.final_train_loss,
            "best_val_loss": outcome.checkpoint.meta.best_val_loss,
            "dataset_fingerprint": outcome.checkpoint.meta.dataset_fingerprint,
        })
    );
    Ok(())
}

fn anchors_gallery(dataset: &Dataset) -> Result<Gallery> {
    if dataset.anchors().is_empty() {
        return Err(Error::MissingAnchor {
            labels: dataset.class_vocabulary().into_iter().collect(),
        });
    }
    label_gallery_from_anchors(dataset.anchors())
}

fn cmd_eval(args: EvalArgs) -> Result<()> {
    let dataset = load_dataset_dir(&args.dataset)?;
    let views = args.views.clone().unwrap_or_else(|| vec![1]);
    let ckpt = args.ckpt.as_ref().map(load_checkpoint).transpose()?;
    let need_ckpt = || {
        ckpt.clone()
            .ok_or_else(|| Error::ConfigMismatch("--ckpt is required for this protocol".into()))
    };

    let csv_path = args.out.with_extension("table.csv");
    if csv_path.exists() {
        std::fs::remove_file(&csv_path)?;
    }

    let mut reports: Vec<(Option<usize>, EvalReport)> = Vec::new();
    match args.protocol {
        ProtocolArg::Zeroshot => {
            let anchors = anchors_gallery(&dataset)?;
            reports.push((None, eval_zero_shot(&dataset, &need_ckpt()?, &anchors)?));
        }
        ProtocolArg::ZeroshotBaseline => {
            let anchors = anchors_gallery(&dataset)?;
            for &n in &views {
                reports.push((
                    Some(n),
                    eval_clip_baseline_zero_shot(&dataset, &anchors, n, args.seed)?,
                ));
            }
        }
        ProtocolArg::RetrievalImages => {
            let checkpoint = need_ckpt()?;
            let query_dataset = match &args.query_dataset {
                Some(dir) => Some(load_dataset_dir(dir)?),
                None => None,
            };
            let queries = query_dataset.as_ref().unwrap_or(&dataset);
            for &n in &views {
                reports.push((
                    Some(n),
                    eval_retrieval_images(&dataset, queries, &checkpoint, n, args.seed)?,
                ));
            }
        }
        ProtocolArg::RetrievalText => {
            reports.push((None, eval_retrieval_text(&dataset, &need_ckpt()?)?));
        }
    }

    for (n, report) in &reports {
        let json_path = match (reports.len() > 1, n) {
            (true, Some(n)) => args.out.with_extension(format!("v{n}.report.json")),
            _ => args.out.with_extension("report.json"),
        };
        report.write_json(&json_path)?;
        report.append_csv(&csv_path)?;
        println!(
            "{}",
            serde_json::json!({
                "protocol": report.protocol,
                "method": report.method,
                "views": report.views,
                "metrics": report.metrics,
                "time_ms": report.timing_ms.total_ms(),
                "report": json_path,
            })
        );
    }
    Ok(())
}

fn cmd_query(args: QueryArgs) -> Result<()> {
    let checkpoint = load_checkpoint(&args.ckpt)?;
    let dataset = match &args.dataset {
        Some(dir) => Some(load_dataset_dir(dir)?),
        None => None,
    };

    let gallery = match (&args.gallery, &dataset) {
        (Some(dir), _) => load_gallery(dir.join("manifest.json"), dir.join("embeddings.bin"))?,
        (None, Some(ds)) => {
            let records: Vec<_> = ds
                .records()
                .iter()
                .filter(|r| match args.split {
                    SplitArg::All => true,
                    SplitArg::Train => r.split == Split::Train,
                    SplitArg::Val => r.split == Split::Val,
                    SplitArg::Test => r.split == Split::Test,
                })
                .map(|r| {
                    (
                        r.id.clone(),
                        r.class_label.clone(),
                        r.nerf_embedding.clone(),
                    )
                })
                .collect();
            build_gallery(records)?
        }
        (None, None) => {
            return Err(Error::ConfigMismatch(
                "provide --gallery or --dataset to search against".into(),
            ))
        }
    };

    let views: Vec<nfbridge::tensor::Vector> = match (&args.input, &args.record_id) {
        (Some(path), None) => read_embedding_blob(path, checkpoint.params.input_dim())?,
        (None, Some(id)) => {
            let ds = dataset
                .as_ref()
                .ok_or_else(|| Error::ConfigMismatch("--record-id needs --dataset".into()))?;
            let rec = ds.find(id).ok_or_else(|| Error::Validation {
                record: id.clone(),
                field: "id".into(),
                message: "not present in dataset".into(),
            })?;
            let idx = select_views(rec, args.query_views, &[ViewSource::GroundTruth], args.seed)?;
            idx.iter()
                .map(|&i| rec.view_embeddings[i].0.clone())
                .collect()
        }
        _ => {
            return Err(Error::ConfigMismatch(
                "provide exactly one of --input or --record-id".into(),
            ))
        }
    };

    let exclude: Option<&str> = if args.exclude_self {
        match &args.record_id {
            Some(id) => Some(id.as_str()),
            None => {
                return Err(Error::ConfigMismatch(
                    "--exclude-self needs --record-id".into(),
                ))
            }
        }
    } else {
        args.exclude.as_deref()
    };

    eprintln!(
        "{}",
        serde_json::json!({
            "command": "query",
            "ckpt": args.ckpt,
            "k": args.k,
            "views": views.len(),
            "exclude": exclude,
            "seed": args.seed,
        })
    );

    if let Some(path) = &args.export_predicted {
        let predicted: Vec<nfbridge::tensor::Vector> = views
            .iter()
            .map(|v| nfbridge::mapper::infer(&checkpoint, v))
            .collect::<Result<_>>()?;
        let refs: Vec<&nfbridge::tensor::Vector> = predicted.iter().collect();
        let mean = nfbridge::tensor::mean_rows(&nfbridge::tensor::Matrix::from_rows(&refs)?)?;
        nfbridge::dataset::write_embedding_blob(path, &[mean])?;
    }

    let result = multi_view_query(&checkpoint, &views, &gallery, args.k, exclude)?;
    for (rank, e) in result.entries.iter().enumerate() {
        println!(
            "{}",
            serde_json::json!({
                "rank": rank + 1,
                "id": e.id,
                "label": e.label,
                "score": e.score,
            })
        );
    }
    Ok(())
}

fn cmd_inspect(path: &Path) -> Result<()> {
    let summary = if path.is_dir() {
        let manifest_path = path.join("manifest.json");
        let manifest: serde_json::Value =
            serde_json::from_slice(&std::fs::read(&manifest_path)?)
                .map_err(|e| Error::Parse(format!("{}: {e}", manifest_path.display())))?;
        if manifest.get("kind").and_then(|k| k.as_str()) == Some("gallery") {
            serde_json::json!({
                "kind": "gallery",
                "dim": manifest["dim"],
                "entries": manifest["entries"].as_array().map(|a| a.len()),
            })
        } else {
            let dataset = load_dataset_dir(path)?;
            let count = |s: Split| dataset.split_records(s).len();
            serde_json::json!({
                "kind": "dataset",
                "records": dataset.len(),
                "classes": dataset.class_vocabulary().len(),
                "anchors": dataset.anchors().len(),
                "clip_dim": dataset.clip_dim(),
                "nerf_dim": dataset.nerf_dim(),
                "splits": {
                    "train": count(Split::Train),
                    "val": count(Split::Val),
                    "test": count(Split::Test),
                },
                "fingerprint": format!("{:016x}", dataset.fingerprint()),
            })
        }
    } else if path.extension().and_then(|e| e.to_str()) == Some("ckpt") {
        let cp = load_checkpoint(path)?;
        serde_json::json!({
            "kind": "checkpoint",
            "config": cp.config,
            "meta": cp.meta,
        })
    } else {
        let report = EvalReport::load_json(path)?;
        serde_json::json!({
            "kind": "report",
            "protocol": report.protocol,
            "method": report.method,
            "views": report.views,
            "metrics": report.metrics,
            "queries": report.per_query.len(),
        })
    };
    println!("{}", serde_json::to_string_pretty(&summary).unwrap());
    Ok(())
}
