//! `dsmc`: train, predict, evaluate and inspect doubly-sampled multi-class
//! models from the command line.
//!
//! Exit codes: 0 success, 2 usage or configuration error, 3 input/output
//! error, 4 numeric failure.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "dsmc", version, about = "Extreme multi-class text classification by doubly-sampled binary reduction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample dyadic pairs from a training file, fit the scorer and write a model bundle.
    Train(TrainArgs),
    /// Predict one class id per document of a test file.
    Predict(PredictArgs),
    /// Score predictions against the true labels.
    Evaluate(EvaluateArgs),
    /// Dump joint feature vectors or dyadic pairs as text.
    TransformDump(DumpArgs),
    /// Build the dependency graph of a pair set and verify its canonical fractional cover.
    VerifyCover(CoverArgs),
    /// Generate a synthetic long-tailed corpus.
    SynthGen(SynthArgs),
}

#[derive(Debug, Args)]
struct SamplingArgs {
    /// Adversarial classes per retained document [default: min(10, K-1)]
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    kappa: Option<u64>,
    /// Expected retained documents per class; pi_k = min(1, avg / n_k)
    #[arg(long, default_value_t = 2.0)]
    avg_per_class: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum LossArg {
    Hinge,
    Logistic,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    model_dir: PathBuf,
    #[command(flatten)]
    sampling: SamplingArgs,
    #[arg(long, value_enum, default_value = "hinge")]
    loss: LossArg,
    #[arg(long, default_value_t = 1e-4)]
    lambda: f64,
    /// Initial SGD step size
    #[arg(long, default_value_t = 0.1)]
    lr: f64,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    epochs: u64,
    /// Train on raw features instead of standardized ones
    #[arg(long)]
    no_scale: bool,
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[arg(long)]
    model_dir: PathBuf,
    /// Test file; labels are optional and ignored
    #[arg(long)]
    test: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Candidate classes per document (clamped to K)
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    q: u64,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    /// File whose first column holds the true labels (a LibSVM file or one id per line)
    #[arg(long, visible_alias = "truth")]
    test: PathBuf,
    /// Predicted class ids, one per line
    #[arg(long)]
    pred: PathBuf,
    /// Bundle providing K and the sampling constants alpha and beta
    #[arg(long)]
    model_dir: Option<PathBuf>,
    /// Number of classes when no bundle is given [default: largest id seen]
    #[arg(long)]
    classes: Option<u32>,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DumpFormat {
    /// `source_doc adversarial_class label f1..f10(first) f1..f10(second)`
    Pairs,
    /// `doc_id class_id f1..f10` for every document and class
    Joint,
}

#[derive(Debug, Args)]
struct DumpArgs {
    #[arg(long)]
    train: PathBuf,
    /// Documents to dump in joint format [default: the training documents]
    #[arg(long)]
    test: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "pairs")]
    format: DumpFormat,
    /// Double-sample instead of the full transform (pairs format)
    #[arg(long)]
    sample: bool,
    #[command(flatten)]
    sampling: SamplingArgs,
}

#[derive(Debug, Args)]
struct CoverArgs {
    #[arg(long)]
    train: PathBuf,
    /// Verify a double-sampled pair set instead of the full transform
    #[arg(long)]
    sample: bool,
    #[command(flatten)]
    sampling: SamplingArgs,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 50)]
    classes: usize,
    #[arg(long, default_value_t = 5000)]
    docs: usize,
    #[arg(long, default_value_t = 20_000)]
    vocab: usize,
    /// Class-size skew exponent
    #[arg(long, default_value_t = 1.2)]
    zipf: f64,
    /// Exclusive signal terms per class
    #[arg(long, default_value_t = 5)]
    signal: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = 20)]
    min_terms: usize,
    #[arg(long, default_value_t = 80)]
    max_terms: usize,
    #[arg(long)]
    out: PathBuf,
    /// Hold out this many documents into --test-out
    #[arg(long, requires = "test_out")]
    holdout: Option<usize>,
    #[arg(long, requires = "holdout")]
    test_out: Option<PathBuf>,
}

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(raw) = std::env::var("DSMC_THREADS") {
        let n: usize = raw
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| commands::usage(format!("DSMC_THREADS must be a positive integer, got {raw:?}")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| commands::usage(format!("cannot configure thread pool: {e}")))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match cli.command {
        Command::Train(a) => commands::train(a),
        Command::Predict(a) => commands::predict(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::TransformDump(a) => commands::transform_dump(a),
        Command::VerifyCover(a) => commands::verify_cover(a),
        Command::SynthGen(a) => commands::synth_gen(a),
    });
    match result {
        Ok(code) => code,
        Err(err) => {
            let code = commands::exit_code(&err);
            let reason = format!("{err:#}").replace('\n', " ");
            eprintln!("error: code={code} {reason}");
            ExitCode::from(code)
        }
    }
}
