//! Command front-end: train, eval, serve, simulate.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage error. Flags win
//! over the optional `key=value` config file; unset values fall back to
//! dataset-kind defaults.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use neuroprint::edf::{load_local_csv, load_run, load_subject_dir, read_sidecar, IMAGINED_RUNS};
use neuroprint::metrics::{confusion_matrix, decision_latency, prf1, roc_auc_ovr};
use neuroprint::net::container::{read_model, write_model};
use neuroprint::net::{predict_batch, train_model, TrainConfig};
use neuroprint::pipeline::{segment, split_and_batch, Epoch, SplitSpec};
use neuroprint::stream::{default_catalog, serve, simulate, ServeOptions};

#[derive(Parser)]
#[command(name = "neuroprint", version, about = "EEG motor-imagery decoding")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit normalization, spatial filters, and the classifier; write a
    /// model container and a JSON training history.
    Train(TrainArgs),
    /// Score a model on a dataset: confusion matrix, precision/recall/
    /// F1, ROC/AUC, and a latency probe.
    Eval(EvalArgs),
    /// Serve a model over TCP for streaming clients.
    Serve(ServeArgs),
    /// Replay a recording against a serving endpoint.
    Simulate(SimulateArgs),
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum DataKind {
    /// Directory of numbered runs in the biosignal file format.
    EdfDir,
    /// Single comma-separated samples file with a `.cfg` sidecar.
    Csv,
}

#[derive(clap::Args)]
struct TrainArgs {
    /// Dataset path (directory for edf-dir, file for csv).
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum)]
    kind: Option<DataKind>,
    /// Samples per analysis window (defaults: 64 for edf-dir, 16 for csv).
    #[arg(long)]
    window: Option<usize>,
    /// Fractional window overlap in [0, 1).
    #[arg(long)]
    overlap: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output model path.
    #[arg(long, default_value = "model.bin")]
    model: PathBuf,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    /// Conv filter count D.
    #[arg(long)]
    depth: Option<usize>,
    /// Hidden dense width D'.
    #[arg(long)]
    hidden: Option<usize>,
    /// key=value config file; explicit flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(clap::Args)]
struct EvalArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum)]
    kind: Option<DataKind>,
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    overlap: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// json prints one report to stdout; csv writes files alongside it.
    #[arg(long, default_value = "json")]
    format: String,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(clap::Args)]
struct ServeArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    port: Option<u16>,
    /// Catalog file of `class=object` lines (defaults to the demo set).
    #[arg(long)]
    catalog: Option<PathBuf>,
    /// Exit after serving this many sessions.
    #[arg(long)]
    max_sessions: Option<usize>,
    #[arg(long, default_value = "audit.ndjson")]
    audit: PathBuf,
    #[arg(long, default_value = "dispatch.ndjson")]
    dispatch: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(clap::Args)]
struct SimulateArgs {
    /// Recording to replay (.edf or csv).
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "127.0.0.1")]
    host: String,
    #[arg(long)]
    port: Option<u16>,
    /// Real-time multiple; 0 streams at full speed.
    #[arg(long)]
    speed: Option<f64>,
    #[arg(long)]
    config: Option<PathBuf>,
}

enum CliError {
    Usage(String),
    Runtime(neuroprint::Error),
}

impl From<neuroprint::Error> for CliError {
    fn from(e: neuroprint::Error) -> Self {
        CliError::Runtime(e)
    }
}

type CliResult<T> = Result<T, CliError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(args) => cmd_train(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Serve(args) => cmd_serve(args),
        Command::Simulate(args) => cmd_simulate(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

/// Loads the optional key=value config file.
fn load_config(path: &Option<PathBuf>) -> CliResult<BTreeMap<String, String>> {
    match path {
        None => Ok(BTreeMap::new()),
        Some(p) => {
            if !p.exists() {
                return Err(CliError::Usage(format!(
                    "config file not found: {}",
                    p.display()
                )));
            }
            Ok(read_sidecar(p)?)
        }
    }
}

/// Flag value if set, else config value, else default.
fn resolve<T: FromStr + Copy>(
    flag: Option<T>,
    cfg: &BTreeMap<String, String>,
    key: &str,
    default: T,
) -> CliResult<T> {
    if let Some(v) = flag {
        return Ok(v);
    }
    match cfg.get(key) {
        Some(raw) => raw
            .parse()
            .map_err(|_| CliError::Usage(format!("config key `{key}` has invalid value `{raw}`"))),
        None => Ok(default),
    }
}

fn infer_kind(data: &Path, kind: Option<DataKind>) -> CliResult<DataKind> {
    if let Some(k) = kind {
        return Ok(k);
    }
    if data.is_dir() {
        Ok(DataKind::EdfDir)
    } else {
        Ok(DataKind::Csv)
    }
}

fn check_exists(data: &Path) -> CliResult<()> {
    if !data.exists() {
        return Err(CliError::Usage(format!(
            "data path not found: {}",
            data.display()
        )));
    }
    Ok(())
}

fn load_epochs(
    data: &Path,
    kind: DataKind,
    window: usize,
    overlap: f64,
) -> CliResult<Vec<Epoch>> {
    if window < 2 {
        return Err(CliError::Usage(format!("window must be at least 2, got {window}")));
    }
    if !(0.0..1.0).contains(&overlap) {
        return Err(CliError::Usage(format!(
            "overlap must be in [0, 1), got {overlap}"
        )));
    }
    let recordings = match kind {
        DataKind::EdfDir => {
            if !data.is_dir() {
                return Err(CliError::Usage(format!(
                    "kind edf-dir needs a directory, got {}",
                    data.display()
                )));
            }
            load_subject_dir(data, &IMAGINED_RUNS)?
        }
        DataKind::Csv => vec![load_local_csv(data)?],
    };
    let tag = data
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let mut epochs = Vec::new();
    for rec in &recordings {
        for mut ep in segment(rec, window, overlap) {
            ep.subject_id = tag.clone();
            epochs.push(ep);
        }
    }
    Ok(epochs)
}

fn sampling_rate_of(data: &Path, kind: DataKind) -> CliResult<f64> {
    let rate = match kind {
        DataKind::EdfDir => load_subject_dir(data, &IMAGINED_RUNS)?
            .first()
            .map(|r| r.sampling_rate)
            .unwrap_or(128.0),
        DataKind::Csv => load_local_csv(data)?.sampling_rate,
    };
    Ok(rate)
}

fn cmd_train(args: TrainArgs) -> CliResult<()> {
    check_exists(&args.data)?;
    let cfg = load_config(&args.config)?;
    let kind = infer_kind(&args.data, args.kind)?;
    let default_window = if kind == DataKind::EdfDir { 64 } else { 16 };
    let window = resolve(args.window, &cfg, "window", default_window)?;
    let overlap = resolve(args.overlap, &cfg, "overlap", 0.5)?;
    let seed = resolve(args.seed, &cfg, "seed", 0)?;

    let defaults = TrainConfig::default();
    let train_config = TrainConfig {
        learning_rate: resolve(args.lr, &cfg, "lr", defaults.learning_rate)?,
        epochs: resolve(args.epochs, &cfg, "epochs", defaults.epochs)?,
        conv_depth: resolve(args.depth, &cfg, "depth", defaults.conv_depth)?,
        hidden: resolve(args.hidden, &cfg, "hidden", defaults.hidden)?,
        dropout_rate: resolve(None, &cfg, "dropout", defaults.dropout_rate)?,
        patience: resolve(None, &cfg, "patience", defaults.patience)?,
        seed,
        ..defaults
    };
    let split = SplitSpec {
        train_fraction: resolve(None, &cfg, "train_fraction", 0.8)?,
        num_batches: resolve(None, &cfg, "batches", 16)?,
        seed,
    };

    let epochs = load_epochs(&args.data, kind, window, overlap)?;
    eprintln!("segmented {} epochs of {}x{}", epochs.len(), epochs.first().map(|e| e.num_channels()).unwrap_or(0), window);
    let (batches, test) = split_and_batch(epochs, &split)?;
    let (model, history) = train_model(&batches, &test, &train_config)?;

    write_model(&args.model, &model)?;
    let history_path = args.model.with_extension("history.json");
    std::fs::write(
        &history_path,
        serde_json::to_string_pretty(&history).expect("history serializes"),
    )
    .map_err(neuroprint::Error::from)?;

    if let Some(last) = history.last() {
        println!(
            "final train loss {:.4}, test accuracy {:.4}",
            last.train_loss, last.test_accuracy
        );
    }
    println!(
        "model written to {} ({} classes), history to {}",
        args.model.display(),
        model.num_classes(),
        history_path.display()
    );
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> CliResult<()> {
    check_exists(&args.data)?;
    if !args.model.exists() {
        return Err(CliError::Usage(format!(
            "model file not found: {}",
            args.model.display()
        )));
    }
    let cfg = load_config(&args.config)?;
    let kind = infer_kind(&args.data, args.kind)?;
    let overlap = resolve(args.overlap, &cfg, "overlap", 0.5)?;
    let seed = resolve(args.seed, &cfg, "seed", 0)?;
    if args.format != "json" && args.format != "csv" {
        return Err(CliError::Usage(format!(
            "format must be json or csv, got {}",
            args.format
        )));
    }

    let model = read_model(&args.model)?;
    let epochs = load_epochs(&args.data, kind, model.window_len(), overlap)?;
    if epochs.is_empty() {
        return Err(CliError::Runtime(neuroprint::Error::NoSamples));
    }
    let labels: Vec<u32> = epochs.iter().map(|e| e.label).collect();
    let (preds, probs) = predict_batch(&model, &epochs)?;
    let k = model.num_classes();
    let cm = confusion_matrix(&preds, &labels, k)?;
    let prf = prf1(&cm);
    let roc = roc_auc_ovr(&probs, &labels, k)?;
    let rate = sampling_rate_of(&args.data, kind)?;
    let latency = decision_latency(&model, rate, 20, seed)?;

    println!("accuracy {:.4} over {} windows", prf.accuracy, cm.total());
    if args.format == "json" {
        let report = json!({
            "confusion": cm.counts(),
            "metrics": prf,
            "roc": roc,
            "latency": latency,
        });
        println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    } else {
        let cm_path = PathBuf::from("eval_confusion.csv");
        std::fs::write(&cm_path, cm.to_csv()).map_err(neuroprint::Error::from)?;
        println!("wrote {}", cm_path.display());
        for class_roc in &roc.per_class {
            if class_roc.auc.is_none() {
                continue;
            }
            let path = PathBuf::from(format!("eval_roc_class{}.csv", class_roc.class));
            std::fs::write(&path, class_roc.to_csv()).map_err(neuroprint::Error::from)?;
            println!("wrote {}", path.display());
        }
        let summary = json!({ "metrics": prf, "latency": latency });
        let path = PathBuf::from("eval_metrics.json");
        std::fs::write(
            &path,
            serde_json::to_string_pretty(&summary).expect("report serializes"),
        )
        .map_err(neuroprint::Error::from)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn load_catalog(path: &Option<PathBuf>) -> CliResult<BTreeMap<u32, String>> {
    match path {
        None => Ok(default_catalog()),
        Some(p) => {
            if !p.exists() {
                return Err(CliError::Usage(format!(
                    "catalog file not found: {}",
                    p.display()
                )));
            }
            let raw = read_sidecar(p)?;
            let mut catalog = BTreeMap::new();
            for (key, value) in raw {
                let class: u32 = key.parse().map_err(|_| {
                    CliError::Usage(format!("catalog key `{key}` is not a class id"))
                })?;
                catalog.insert(class, value);
            }
            if catalog.is_empty() {
                return Err(CliError::Usage(format!(
                    "catalog {} has no entries",
                    p.display()
                )));
            }
            Ok(catalog)
        }
    }
}

fn cmd_serve(args: ServeArgs) -> CliResult<()> {
    if !args.model.exists() {
        return Err(CliError::Usage(format!(
            "model file not found: {}",
            args.model.display()
        )));
    }
    let cfg = load_config(&args.config)?;
    let port = resolve(args.port, &cfg, "port", 7071)?;
    let catalog = load_catalog(&args.catalog)?;
    let model = read_model(&args.model)?;

    let opts = ServeOptions {
        step: resolve(None, &cfg, "step", 0)?,
        max_sessions: args.max_sessions,
        audit_log: Some(args.audit.clone()),
        dispatch_log: Some(args.dispatch.clone()),
        catalog,
        model_path: args.model.display().to_string(),
    };
    let handle = serve(&format!("127.0.0.1:{port}"), model, opts)?;
    println!("listening on {}", handle.addr());
    use std::io::Write as _;
    std::io::stdout().flush().ok();
    handle.wait();
    Ok(())
}

fn cmd_simulate(args: SimulateArgs) -> CliResult<()> {
    check_exists(&args.data)?;
    let cfg = load_config(&args.config)?;
    let port = resolve(args.port, &cfg, "port", 7071)?;
    let speed = resolve(args.speed, &cfg, "speed", 0.0)?;

    let is_edf = args
        .data
        .extension()
        .map(|e| e.eq_ignore_ascii_case("edf"))
        .unwrap_or(false);
    let recording = if is_edf {
        load_run(&args.data)?
    } else {
        load_local_csv(&args.data)?
    };

    let decisions = simulate(&format!("{}:{port}", args.host), &recording, speed)?;
    for d in &decisions {
        println!("{}", serde_json::to_string(d).expect("record serializes"));
    }
    eprintln!(
        "streamed {} samples, received {} decisions",
        recording.num_samples(),
        decisions.len()
    );
    Ok(())
}
