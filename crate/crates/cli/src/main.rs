//! `fcnn`: generate datasets, preview their fuzzification, render them to image Datamarts, train and
//! apply classifiers, and run the full benchmark.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand};

use fcnn_core::checkpoint::Checkpoint;
use fcnn_core::config::RunConfig;
use fcnn_core::datasets::{generate_with, load_csv, parse_feature_rows, save_csv, DatasetKind};
use fcnn_core::eval::{run_benchmark, write_outputs, BenchmarkOptions};
use fcnn_core::fuzzy::{fit_partitions, fuzzify, Family, TERM_NAMES};
use fcnn_core::pipeline::{
    render_to_datamart, train_fcnn_from_datamart, train_model, ModelKind, RenderManifest, TrainedModel,
};
use fcnn_core::seed::derive_seed;
use fcnn_core::Error;

const OUT_DIR_ENV: &str = "FCNN_OUT_DIR";

#[derive(Parser, Debug)]
#[command(name = "fcnn", version, about = "Fuzzy-image CNN classifier and baseline benchmark")]
struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Log progress to standard error (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a synthetic two-class dataset as CSV.
    Generate(GenerateArgs),
    /// Print fitted term partitions and the memberships of the first rows.
    Fuzzify(FuzzifyArgs),
    /// Fuzzify a CSV dataset and export it as a Datamart of PNG images.
    Render(RenderArgs),
    /// Train a classifier and save a checkpoint.
    Train(TrainArgs),
    /// Print one predicted label per input row.
    Predict(PredictArgs),
    /// Run every selected (dataset, classifier) cell and write the report.
    Benchmark(BenchmarkArgs),
    /// Inspect configuration files.
    #[command(subcommand)]
    Config(ConfigCommand),
}

#[derive(Args, Debug)]
struct GenerateArgs {
    /// Dataset kind: half-kernel, two-spirals, cluster-in-cluster,
    /// crescent-moon, corners or outliers.
    #[arg(long)]
    kind: DatasetKind,
    /// Samples per class [default: data.n_per_class from config, 200].
    #[arg(long)]
    n: Option<usize>,
    /// Gaussian noise standard deviation [default: per-kind value from config].
    #[arg(long)]
    noise: Option<f64>,
    /// Generator seed [default: derived from the master seed].
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV [default: <output dir>/<kind>.csv].
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct FuzzifyArgs {
    /// Input CSV (`f1,...,fn,label` rows).
    #[arg(long)]
    data: PathBuf,
    /// Membership family [default: models.fcnn.family from config, trapezoid].
    #[arg(long)]
    family: Option<Family>,
    /// Number of rows to show.
    #[arg(long, default_value_t = 5)]
    rows: usize,
}

#[derive(Args, Debug)]
struct RenderArgs {
    /// Input CSV (`f1,...,fn,label` rows).
    #[arg(long)]
    data: PathBuf,
    /// Datamart directory to create or replace [default: <output dir>/datamart].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Membership family: trapezoid, pi, s, triangle or gaussian
    /// [default: models.fcnn.family from config, trapezoid].
    #[arg(long)]
    family: Option<Family>,
    /// Image side in pixels [default: models.fcnn.layout.image_side, 64].
    #[arg(long)]
    image_side: Option<usize>,
    /// Grid rows per feature [default: models.fcnn.layout.repetition, 2].
    #[arg(long)]
    repetition: Option<usize>,
}

#[derive(Args, Debug)]
#[command(group(ArgGroup::new("input").required(true).args(["data", "datamart"])))]
struct TrainArgs {
    /// Training CSV.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Datamart written by `render` (fcnn only).
    #[arg(long)]
    datamart: Option<PathBuf>,
    /// Classifier: fcnn, tree, forest, bayes, svm or fnn.
    #[arg(long, default_value = "fcnn")]
    model: ModelKind,
    /// Checkpoint path [default: <output dir>/<model>.json].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Training seed [default: derived from the master seed].
    #[arg(long)]
    seed: Option<u64>,
    /// Epochs for fcnn and fnn [default: from config, 30 and 300].
    #[arg(long)]
    epochs: Option<usize>,
}

#[derive(Args, Debug)]
struct PredictArgs {
    /// Checkpoint written by `train`.
    #[arg(long)]
    model: PathBuf,
    /// CSV of feature rows; a trailing label column is ignored.
    #[arg(long)]
    input: PathBuf,
}

#[derive(Args, Debug)]
struct BenchmarkArgs {
    /// Comma-separated dataset kinds [default: benchmark.datasets, all six].
    #[arg(long, value_delimiter = ',')]
    only: Vec<DatasetKind>,
    /// Comma-separated classifiers [default: benchmark.models, all six].
    #[arg(long, value_delimiter = ',')]
    models: Vec<ModelKind>,
    /// Master seed [default: master_seed from config, 2024].
    #[arg(long)]
    seed: Option<u64>,
    /// Report directory [default: <output dir>/benchmark].
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum ConfigCommand {
    /// Parse and check a configuration file.
    Validate {
        /// TOML file to check.
        file: PathBuf,
    },
    /// Print the default configuration as TOML.
    Default,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e.root() {
        Error::Io { .. } => 3,
        Error::Training { .. } => 1,
        _ => 2,
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    let cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    match cli.command {
        Command::Generate(a) => cmd_generate(&cfg, a),
        Command::Fuzzify(a) => cmd_fuzzify(&cfg, a),
        Command::Render(a) => cmd_render(&cfg, a),
        Command::Train(a) => cmd_train(&cfg, a),
        Command::Predict(a) => cmd_predict(a),
        Command::Benchmark(a) => cmd_benchmark(cfg, a),
        Command::Config(ConfigCommand::Validate { file }) => {
            RunConfig::load(&file)?;
            println!("{}: ok", file.display());
            Ok(())
        }
        Command::Config(ConfigCommand::Default) => {
            print!("{}", RunConfig::default().to_toml()?);
            Ok(())
        }
    }
}

/// Config value, then the environment variable, then the working directory.
fn output_dir(cfg: &RunConfig) -> PathBuf {
    cfg.output_dir
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn ensure_parent(path: &Path) -> Result<(), Error> {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => fs::create_dir_all(p).map_err(|e| Error::io(p, e)),
        _ => Ok(()),
    }
}

fn cmd_generate(cfg: &RunConfig, a: GenerateArgs) -> Result<(), Error> {
    let n = a.n.unwrap_or(cfg.data.n_per_class);
    let noise = a.noise.unwrap_or_else(|| cfg.data.generators.noise(a.kind));
    let seed = a
        .seed
        .unwrap_or_else(|| derive_seed(cfg.master_seed, &format!("dataset/{}", a.kind)));
    let out = a
        .out
        .unwrap_or_else(|| output_dir(cfg).join(format!("{}.csv", a.kind.slug())));
    let ds = generate_with(a.kind, n, noise, seed, &cfg.data.generators)?;
    ensure_parent(&out)?;
    save_csv(&ds, &out)?;
    println!("wrote {} samples to {}", ds.len(), out.display());
    Ok(())
}

fn cmd_fuzzify(cfg: &RunConfig, a: FuzzifyArgs) -> Result<(), Error> {
    let ds = load_csv(&a.data).map_err(|e| e.context(a.data.display().to_string()))?;
    let rows: Vec<Vec<f64>> = ds.samples().iter().map(|s| s.features.clone()).collect();
    let parts = fit_partitions(&rows, a.family.unwrap_or(cfg.models.fcnn.family))?;
    for (f, p) in parts.iter().enumerate() {
        let centers: Vec<String> = p.centers().iter().map(|c| format!("{c:.4}")).collect();
        println!(
            "x{} {} on [{:.4}, {:.4}], centers {}",
            f + 1,
            p.family(),
            p.lo(),
            p.hi(),
            centers.join(" ")
        );
    }
    println!("row,feature,{}", TERM_NAMES.join(","));
    for (i, row) in rows.iter().take(a.rows).enumerate() {
        let m = fuzzify(row, &parts)?;
        for f in 0..m.n_features() {
            let mu: Vec<String> = m.row(f).iter().map(|v| format!("{v:.4}")).collect();
            println!("{i},x{},{}", f + 1, mu.join(","));
        }
    }
    Ok(())
}

fn cmd_render(cfg: &RunConfig, a: RenderArgs) -> Result<(), Error> {
    let ds = load_csv(&a.data).map_err(|e| e.context(a.data.display().to_string()))?;
    let family = a.family.unwrap_or(cfg.models.fcnn.family);
    let mut layout = cfg.models.fcnn.layout.clone();
    if let Some(side) = a.image_side {
        layout.image_side = side;
    }
    if let Some(rep) = a.repetition {
        layout.repetition = rep;
    }
    let out = a.out.unwrap_or_else(|| output_dir(cfg).join("datamart"));
    ensure_parent(&out)?;
    let manifest = render_to_datamart(&ds, family, &layout, &out)?;
    let counts = ds.class_counts();
    println!("wrote {} images to {}", ds.len(), out.display());
    for (name, count) in manifest.class_names.iter().zip(counts) {
        println!("  {name}/  {count} images");
    }
    Ok(())
}

fn cmd_train(cfg: &RunConfig, a: TrainArgs) -> Result<(), Error> {
    let mut models = cfg.models.clone();
    if let Some(epochs) = a.epochs {
        models.fcnn.train.epochs = epochs;
        models.fnn.train.epochs = epochs;
    }
    let seed = a
        .seed
        .unwrap_or_else(|| derive_seed(cfg.master_seed, &format!("model/{}", a.model)));
    let out = a
        .out
        .unwrap_or_else(|| output_dir(cfg).join(format!("{}.json", a.model.slug())));

    let (model, class_names, feature_count) = match (&a.data, &a.datamart) {
        (Some(data), _) => {
            let ds = load_csv(data).map_err(|e| e.context(data.display().to_string()))?;
            let (model, _) = train_model(a.model, &ds, &models, seed, None)?;
            (model, ds.class_names().to_vec(), ds.feature_count())
        }
        (None, Some(root)) => {
            if a.model != ModelKind::Fcnn {
                return Err(Error::Unsupported(format!(
                    "a Datamart holds images, which only the fcnn model reads (got {})",
                    a.model
                )));
            }
            let (fcnn, _) = train_fcnn_from_datamart(root, &models.fcnn, seed)?;
            let names = RenderManifest::load(root)?.class_names;
            let nf = fcnn.partitions.len();
            (TrainedModel::Fcnn(fcnn), names, nf)
        }
        (None, None) => unreachable!("clap requires one input"),
    };
    ensure_parent(&out)?;
    Checkpoint::new(model, class_names, feature_count).save(&out)?;
    println!("saved {} model to {}", a.model, out.display());
    Ok(())
}

fn cmd_predict(a: PredictArgs) -> Result<(), Error> {
    let ckpt = Checkpoint::load(&a.model).map_err(|e| e.context(a.model.display().to_string()))?;
    let text = fs::read_to_string(&a.input).map_err(|e| Error::io(&a.input, e))?;
    let rows = parse_feature_rows(&text, ckpt.feature_count).map_err(|e| e.context(a.input.display().to_string()))?;
    let mut out = String::new();
    for row in &rows {
        out.push_str(&format!("{}\n", ckpt.model.predict(row)?));
    }
    print!("{out}");
    Ok(())
}

fn cmd_benchmark(mut cfg: RunConfig, a: BenchmarkArgs) -> Result<(), Error> {
    if !a.only.is_empty() {
        cfg.benchmark.datasets = a.only;
    }
    if !a.models.is_empty() {
        cfg.benchmark.models = a.models;
    }
    if let Some(seed) = a.seed {
        cfg.master_seed = seed;
    }
    let out = a.out.unwrap_or_else(|| output_dir(&cfg).join("benchmark"));
    let opts = BenchmarkOptions {
        config: cfg,
        work_dir: out.clone(),
    };
    let result = run_benchmark(&opts)?;
    write_outputs(&result, &out)?;
    print!("{}", result.report.table_text());
    println!("report written to {}", out.display());
    Ok(())
}
