//! `hdx`: train, evaluate and sweep hyperdimensional one-class detectors on
//! NSL-KDD formatted connection records.
//!
//! Exit codes: 0 success, 1 other failure, 2 usage or configuration error,
//! 3 I/O error, 4 parse error (data or model file), 5 schema mismatch,
//! 6 no normal records to train on.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand};
use hdx_core::dataset::load_nslkdd;
use hdx_core::pipeline::{parse_config_file, train_from_table};
use hdx_core::{DecisionMode, Error, GridSpec, ModelFile, RecordSchema, RunConfig, Split};
use log::info;

const SEED_ENV: &str = "HDX_SEED";
const MODEL_FILE_NAME: &str = "model.json";

#[derive(Debug, Parser)]
#[command(
    name = "hdx",
    version,
    about = "Hyperdimensional one-class intrusion detection"
)]
struct Cli {
    /// More log output on stderr (-v info, -vv debug).
    #[arg(short, long, action = ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a model on the normal records of a training file.
    Train(TrainArgs),
    /// Evaluate a saved model on a labeled split and write report files.
    Eval(EvalArgs),
    /// Sweep absolute thresholds on a labeled split and write the sweep table.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// `key=value` file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Training file (KDDTrain+ format).
    #[arg(long)]
    train: Option<PathBuf>,
    /// Splits to evaluate after training; may be repeated.
    #[arg(long)]
    test: Vec<PathBuf>,
    /// Output directory for the model and any reports [default: .]
    #[arg(long)]
    out: Option<PathBuf>,
    /// Hypervector dimension [default: 10000]
    #[arg(long)]
    dim: Option<usize>,
    /// Number of quantization levels [default: 10]
    #[arg(long)]
    levels: Option<usize>,
    /// Update rate [default: 0.02]
    #[arg(long)]
    alpha: Option<f64>,
    /// Passes over the normal records [default: 10]
    #[arg(long)]
    epochs: Option<usize>,
    /// Seed for every random draw; falls back to the config file, then HDX_SEED.
    #[arg(long)]
    seed: Option<u64>,
    /// Decision rule: comparative or absolute [default: comparative]
    #[arg(long)]
    mode: Option<DecisionMode>,
    /// Threshold on the normal-class similarity for absolute mode.
    #[arg(long, allow_negative_numbers = true)]
    threshold: Option<f64>,
    /// Train on at most N normal records (seeded uniform sample).
    #[arg(long, value_name = "N")]
    normal_sample: Option<usize>,
    /// Also update on synthetic negatives that look normal.
    #[arg(long)]
    symmetric_updates: bool,
    /// Threshold grid for post-training reports: default, midpoints, a:b:n or a list.
    #[arg(long, default_value = "default", allow_hyphen_values = true)]
    grid: GridSpec,
}

#[derive(Debug, Args)]
struct EvalTarget {
    /// Saved model file.
    #[arg(long)]
    model: PathBuf,
    /// Labeled split to evaluate.
    #[arg(long, alias = "data")]
    test: PathBuf,
    /// Split name used for file names and target rows; inferred from the file name if omitted.
    #[arg(long)]
    split: Option<String>,
    /// Output directory [default: .]
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Threshold grid: default (101 points over the score range), midpoints, a:b:n or a list.
    #[arg(long, default_value = "default", allow_hyphen_values = true)]
    grid: GridSpec,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[command(flatten)]
    target: EvalTarget,
    /// Override the model's decision rule.
    #[arg(long)]
    mode: Option<DecisionMode>,
    /// Override the model's absolute threshold.
    #[arg(long, allow_negative_numbers = true)]
    threshold: Option<f64>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    target: EvalTarget,
}

fn exit_code(err: &Error) -> u8 {
    match err.root() {
        Error::InvalidConfig(_) | Error::InvalidDimension(_) => 2,
        Error::Io { .. } => 3,
        Error::Parse { .. } | Error::NonFinite(_) | Error::Model(_) => 4,
        Error::Schema { .. } | Error::Arity { .. } | Error::DimensionMismatch { .. } => 5,
        Error::EmptyNormalSubset => 6,
        _ => 1,
    }
}

fn resolve_config(args: &TrainArgs) -> hdx_core::Result<RunConfig> {
    let mut cfg = RunConfig::new(0);
    let mut seed_set = false;
    if let Some(path) = &args.config {
        let text = fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.clone(),
            source: e,
        })?;
        for (key, value) in parse_config_file(&text)? {
            seed_set |= key == "seed";
            cfg.set(&key, &value)?;
        }
    }
    if !seed_set && args.seed.is_none() {
        match std::env::var(SEED_ENV) {
            Ok(v) => cfg.set("seed", &v).map_err(|_| {
                Error::InvalidConfig(format!(
                    "{SEED_ENV}={v:?} is not an unsigned 64-bit integer"
                ))
            })?,
            Err(_) => {
                return Err(Error::InvalidConfig(format!(
                    "no seed given: pass --seed, set seed in the config file, or set {SEED_ENV}"
                )))
            }
        }
    }
    macro_rules! apply {
        ($($field:ident),*) => {$(
            if let Some(v) = args.$field {
                cfg.$field = v;
            }
        )*};
    }
    apply!(dim, levels, alpha, epochs, seed, mode);
    if args.threshold.is_some() {
        cfg.threshold = args.threshold;
    }
    if args.normal_sample.is_some() {
        cfg.normal_sample = args.normal_sample;
    }
    if args.symmetric_updates {
        cfg.symmetric_updates = true;
    }
    if args.train.is_some() {
        cfg.train = args.train.clone();
    }
    if args.out.is_some() {
        cfg.out = args.out.clone();
    }
    Ok(cfg)
}

fn infer_split(path: &Path, name: Option<&str>) -> Split {
    match name {
        Some(n) => Split::from(n),
        None => Split::from(
            path.file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "data".into()),
        ),
    }
}

fn cmd_train(args: TrainArgs) -> hdx_core::Result<()> {
    let cfg = resolve_config(&args)?;
    let schema = RecordSchema::nsl_kdd();
    cfg.validate(schema.n_features())?;
    let train_path = cfg.train.clone().ok_or_else(|| {
        Error::InvalidConfig(
            "no training file: pass --train or set train in the config file".into(),
        )
    })?;
    let mut tests = args.test.clone();
    if tests.is_empty() {
        tests.extend(cfg.test.clone());
    }
    let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from("."));

    info!("loading {}", train_path.display());
    let table = load_nslkdd(&train_path, &schema)?;
    let trained = train_from_table(&cfg, &table, &schema)?;
    let s = &trained.summary;
    println!(
        "records: {}  normal: {}  shuffled: {}",
        s.n_records, s.n_normal, s.n_shuffled
    );
    for (epoch, updates) in s.epoch_updates.iter().enumerate() {
        println!("epoch {:>3}: {updates} updates", epoch + 1);
    }

    fs::create_dir_all(&out).map_err(|e| Error::Io {
        path: out.clone(),
        source: e,
    })?;
    let model_path = out.join(MODEL_FILE_NAME);
    trained.model_file.save(&model_path)?;
    println!("model: {}", model_path.display());

    for path in tests {
        let table = load_nslkdd(&path, &schema)?;
        let outcome = trained
            .detector
            .evaluate(&table, infer_split(&path, None), &args.grid)?;
        print_accuracy(&outcome.report);
        for p in outcome.write(&out)? {
            println!("wrote {}", p.display());
        }
    }
    Ok(())
}

fn print_accuracy(report: &hdx_core::pipeline::EvalReport) {
    println!(
        "{}: accuracy {:.2}% ({} records, best sweep {:.2}% at {})",
        report.split,
        100.0 * report.metrics.accuracy,
        report.n_records,
        100.0 * report.best_sweep_metrics.accuracy,
        report.best_sweep_threshold
    );
}

fn cmd_eval(args: EvalArgs) -> hdx_core::Result<()> {
    let t = &args.target;
    let mut detector = ModelFile::load(&t.model)?.detector()?;
    if args.mode.is_some() || args.threshold.is_some() {
        let mode = args.mode.unwrap_or(detector.config.mode);
        let threshold = args.threshold.or(detector.config.threshold);
        detector = detector.with_decision(mode, threshold)?;
    }
    let table = load_nslkdd(&t.test, &RecordSchema::nsl_kdd())?;
    let outcome = detector.evaluate(&table, infer_split(&t.test, t.split.as_deref()), &t.grid)?;
    print_accuracy(&outcome.report);
    for p in outcome.write(&t.out)? {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> hdx_core::Result<()> {
    let t = &args.target;
    let detector = ModelFile::load(&t.model)?.detector()?;
    let table = load_nslkdd(&t.test, &RecordSchema::nsl_kdd())?;
    let split = infer_split(&t.test, t.split.as_deref());
    let outcome = detector.evaluate(&table, split.clone(), &t.grid)?;
    fs::create_dir_all(&t.out).map_err(|e| Error::Io {
        path: t.out.clone(),
        source: e,
    })?;
    let path = t.out.join(format!("{}_sweep.csv", split.stem()));
    fs::write(&path, outcome.sweep.to_csv()).map_err(|e| Error::Io {
        path: path.clone(),
        source: e,
    })?;
    let best = outcome.sweep.best_point();
    println!("thresholds: {}", outcome.sweep.points.len());
    println!("best threshold: {}", best.threshold);
    println!("best accuracy: {:.4}", best.metrics.accuracy);
    println!("wrote {}", path.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .init();

    let result = match cli.command {
        Command::Train(a) => cmd_train(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Sweep(a) => cmd_sweep(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
